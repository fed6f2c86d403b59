#include "catwalk/oracle.hpp"

#include "catwalk/error.hpp"

#include <algorithm>
#include <functional>
#include <queue>
#include <sstream>

namespace catwalk {

std::vector<std::vector<TruncatedSeries>>
oracle_profile(const StepTable& table, int s, int k1, int floor, int nmax) {
    if (k1 < floor || floor < 0 || nmax < 0)
        fail(ErrorKind::validation, "invalid path query");
    int d = table.d();
    int cap = k1 + nmax * std::max(1, table.max_rise());
    int width = cap - floor + 1;

    // dp[n][(v-floor)*d + (t-1)]
    std::vector<std::vector<Rational>> dp(
        static_cast<size_t>(nmax) + 1,
        std::vector<Rational>(static_cast<size_t>(width) * static_cast<size_t>(d)));
    dp[0][static_cast<size_t>(k1 - floor) * static_cast<size_t>(d) + static_cast<size_t>(s - 1)] =
        Rational(1);

    for (int n = 0; n < nmax; ++n) {
        for (int v = floor; v <= cap; ++v) {
            for (int tau = 1; tau <= d; ++tau) {
                const Rational& w0 =
                    dp[static_cast<size_t>(n)]
                      [static_cast<size_t>(v - floor) * static_cast<size_t>(d) + static_cast<size_t>(tau - 1)];
                if (w0.is_zero()) continue;
                for (int t2 = 1; t2 <= d; ++t2) {
                    for (const Step& st : table.steps(tau, t2, v)) {
                        int v2 = v + st.rise;
                        int n2 = n + st.width;
                        if (v2 < floor || v2 > cap || n2 > nmax) continue;
                        dp[static_cast<size_t>(n2)]
                          [static_cast<size_t>(v2 - floor) * static_cast<size_t>(d) +
                           static_cast<size_t>(t2 - 1)] += w0 * st.weight;
                    }
                }
            }
        }
    }

    std::vector<std::vector<TruncatedSeries>> out(
        static_cast<size_t>(d),
        std::vector<TruncatedSeries>(static_cast<size_t>(cap) + 1, TruncatedSeries(nmax)));
    for (int t = 1; t <= d; ++t)
        for (int v = floor; v <= cap; ++v)
            for (int n = 0; n <= nmax; ++n)
                out[static_cast<size_t>(t - 1)][static_cast<size_t>(v)].coeff(n) =
                    dp[static_cast<size_t>(n)]
                      [static_cast<size_t>(v - floor) * static_cast<size_t>(d) + static_cast<size_t>(t - 1)];
    return out;
}

TruncatedSeries oracle_count(const StepTable& table, const PathQuery& q) {
    if (q.floor > std::min(q.start_level, q.end_level))
        fail(ErrorKind::validation, "floor above an endpoint");
    auto profile = oracle_profile(table, q.start_type, q.start_level, q.floor, q.max_length);
    TruncatedSeries out(q.max_length);
    int cap = static_cast<int>(profile[0].size()) - 1;
    if (q.end_level <= cap) {
        if (q.end_type == 0) {
            for (int t = 1; t <= table.d(); ++t)
                out = series_add(out, profile[static_cast<size_t>(t - 1)][static_cast<size_t>(q.end_level)]);
        } else {
            out = profile[static_cast<size_t>(q.end_type - 1)][static_cast<size_t>(q.end_level)];
        }
    }
    out.coeff(0) = (q.start_level == q.end_level) ? Rational(1) : Rational(0);
    return out;
}

std::vector<std::vector<TruncatedSeries>>
naive_profile(const StepTable& table, int s, int k1, int floor, int nmax) {
    int d = table.d();
    int cap = k1 + nmax * std::max(1, table.max_rise());
    std::vector<std::vector<TruncatedSeries>> out(
        static_cast<size_t>(d),
        std::vector<TruncatedSeries>(static_cast<size_t>(cap) + 1, TruncatedSeries(nmax)));
    out[static_cast<size_t>(s - 1)][static_cast<size_t>(k1)].coeff(0) = Rational(1);

    std::function<void(int, int, int, const Rational&)> walk = [&](int tau, int v, int n,
                                                                   const Rational& w) {
        for (int t2 = 1; t2 <= d; ++t2) {
            for (const Step& st : table.steps(tau, t2, v)) {
                int v2 = v + st.rise;
                int n2 = n + st.width;
                if (v2 < floor || n2 > nmax) continue;
                Rational w2 = w * st.weight;
                out[static_cast<size_t>(t2 - 1)][static_cast<size_t>(v2)].coeff(n2) += w2;
                walk(t2, v2, n2, w2);
            }
        }
    };
    walk(s, k1, 0, Rational(1));
    return out;
}

TruncatedSeries prime_walk_oracle(const StepTable& table, int s, int t, int k, int i,
                                  bool reverse, int nmax) {
    if (k < 0 || i < 0 || (reverse && i > k))
        fail(ErrorKind::validation, "invalid prime walk query");
    int d = table.d();
    int target = reverse ? k - i : k + i;
    int interior_floor = reverse ? k + 1 : k + i + 1;
    TruncatedSeries out(nmax);

    // single-step walks
    for (const Step& st : table.steps(s, t, k)) {
        if (k + st.rise != target) continue;
        if (st.width <= nmax) out.coeff(st.width) += st.weight;
    }

    // first step up, interior staying >= interior_floor, final descent
    for (int t0 = 1; t0 <= d; ++t0) {
        for (const Step& first : table.steps(s, t0, k)) {
            int v1 = k + first.rise;
            if (v1 < interior_floor || first.width >= nmax) continue;
            auto interior = oracle_profile(table, t0, v1, interior_floor, nmax - first.width);
            int cap = static_cast<int>(interior[0].size()) - 1;
            for (int t1 = 1; t1 <= d; ++t1) {
                for (int v2 = interior_floor; v2 <= cap; ++v2) {
                    const TruncatedSeries& mid = interior[static_cast<size_t>(t1 - 1)][static_cast<size_t>(v2)];
                    if (mid.is_zero()) continue;
                    for (const Step& last : table.steps(t1, t, v2)) {
                        if (v2 + last.rise != target) continue;
                        int fixed = first.width + last.width;
                        for (int n = 0; n + fixed <= nmax; ++n) {
                            if (mid.coeff(n).is_zero()) continue;
                            out.coeff(n + fixed) += first.weight * mid.coeff(n) * last.weight;
                        }
                    }
                }
            }
        }
    }
    return out;
}

int WalkWitness::end_level() const {
    int v = start_level;
    for (const Step& st : steps) v += st.rise;
    return v;
}

bool replay_witness(const StepTable& table, const WalkWitness& witness) {
    int v = witness.start_level;
    int tau = witness.start_type;
    for (const Step& st : witness.steps) {
        if (st.s != tau) return false;
        bool found = false;
        for (const Step& avail : table.steps(tau, st.t, v))
            if (avail.l == st.l && avail.j == st.j && avail.r == st.r) found = true;
        if (!found) return false;
        v += st.rise;
        if (v < 0) return false;
        tau = st.t;
    }
    return true;
}

namespace {

struct LevelGraph {
    int d, cap;
    std::vector<std::vector<int>> adj; // node = (v)*d + (tau-1)

    int node(int tau, int v) const { return v * d + (tau - 1); }
};

LevelGraph build_graph(const StepTable& table, int cap) {
    LevelGraph g;
    g.d = table.d();
    g.cap = cap;
    g.adj.assign(static_cast<size_t>((cap + 1) * g.d), {});
    for (int v = 0; v <= cap; ++v)
        for (int tau = 1; tau <= g.d; ++tau)
            for (int t2 = 1; t2 <= g.d; ++t2)
                for (const Step& st : table.steps(tau, t2, v)) {
                    int v2 = v + st.rise;
                    if (v2 < 0 || v2 > cap) continue;
                    g.adj[static_cast<size_t>(g.node(tau, v))].push_back(g.node(t2, v2));
                }
    return g;
}

// iterative Tarjan
std::vector<int> scc_ids(const std::vector<std::vector<int>>& adj) {
    int n = static_cast<int>(adj.size());
    std::vector<int> ids(static_cast<size_t>(n), -1), low(static_cast<size_t>(n)),
        num(static_cast<size_t>(n), -1);
    std::vector<int> stack;
    std::vector<char> on_stack(static_cast<size_t>(n), 0);
    int counter = 0, comp = 0;
    struct Frame {
        int v;
        size_t edge;
    };
    for (int root = 0; root < n; ++root) {
        if (num[static_cast<size_t>(root)] != -1) continue;
        std::vector<Frame> frames{{root, 0}};
        num[static_cast<size_t>(root)] = low[static_cast<size_t>(root)] = counter++;
        stack.push_back(root);
        on_stack[static_cast<size_t>(root)] = 1;
        while (!frames.empty()) {
            Frame& f = frames.back();
            if (f.edge < adj[static_cast<size_t>(f.v)].size()) {
                int w = adj[static_cast<size_t>(f.v)][f.edge++];
                if (num[static_cast<size_t>(w)] == -1) {
                    num[static_cast<size_t>(w)] = low[static_cast<size_t>(w)] = counter++;
                    stack.push_back(w);
                    on_stack[static_cast<size_t>(w)] = 1;
                    frames.push_back({w, 0});
                } else if (on_stack[static_cast<size_t>(w)]) {
                    low[static_cast<size_t>(f.v)] =
                        std::min(low[static_cast<size_t>(f.v)], num[static_cast<size_t>(w)]);
                }
            } else {
                if (low[static_cast<size_t>(f.v)] == num[static_cast<size_t>(f.v)]) {
                    while (true) {
                        int w = stack.back();
                        stack.pop_back();
                        on_stack[static_cast<size_t>(w)] = 0;
                        ids[static_cast<size_t>(w)] = comp;
                        if (w == f.v) break;
                    }
                    ++comp;
                }
                int v = f.v;
                frames.pop_back();
                if (!frames.empty())
                    low[static_cast<size_t>(frames.back().v)] =
                        std::min(low[static_cast<size_t>(frames.back().v)], low[static_cast<size_t>(v)]);
            }
        }
    }
    return ids;
}

std::optional<std::vector<Step>> bfs_path(const StepTable& table, int cap, int tau0, int v0,
                                          int tau1, int v1) {
    int d = table.d();
    auto node = [&](int tau, int v) { return v * d + (tau - 1); };
    int n = (cap + 1) * d;
    std::vector<int> prev(static_cast<size_t>(n), -2);
    std::vector<Step> via(static_cast<size_t>(n));
    std::queue<int> q;
    prev[static_cast<size_t>(node(tau0, v0))] = -1;
    q.push(node(tau0, v0));
    while (!q.empty()) {
        int u = q.front();
        q.pop();
        int v = u / d, tau = u % d + 1;
        for (int t2 = 1; t2 <= d; ++t2)
            for (const Step& st : table.steps(tau, t2, v)) {
                int w = v + st.rise;
                if (w < 0 || w > cap) continue;
                int id = node(t2, w);
                if (prev[static_cast<size_t>(id)] != -2) continue;
                prev[static_cast<size_t>(id)] = u;
                via[static_cast<size_t>(id)] = st;
                q.push(id);
            }
    }
    int goal = node(tau1, v1);
    if (prev[static_cast<size_t>(goal)] == -2) return std::nullopt;
    std::vector<Step> path;
    for (int cur = goal; prev[static_cast<size_t>(cur)] != -1; cur = prev[static_cast<size_t>(cur)])
        path.push_back(via[static_cast<size_t>(cur)]);
    std::reverse(path.begin(), path.end());
    return path;
}

// like bfs_path but rejects the empty path; equal endpoints force a cycle
std::optional<std::vector<Step>> nonempty_path(const StepTable& table, int cap, int tau0, int v0,
                                               int tau1, int v1) {
    if (tau0 != tau1 || v0 != v1) return bfs_path(table, cap, tau0, v0, tau1, v1);
    for (int t2 = 1; t2 <= table.d(); ++t2)
        for (const Step& st : table.steps(tau0, t2, v0)) {
            int w = v0 + st.rise;
            if (w < 0 || w > cap) continue;
            auto rest = bfs_path(table, cap, t2, w, tau1, v1);
            if (rest) {
                std::vector<Step> path{st};
                path.insert(path.end(), rest->begin(), rest->end());
                return path;
            }
        }
    return std::nullopt;
}

std::string node_name(int tau, int v) {
    return "(type " + std::to_string(tau) + ", level " + std::to_string(v) + ")";
}

} // namespace

ConnectivityReport check_strong_connectivity(const StepTable& table) {
    ConnectivityReport report;
    int d = table.d();
    int window = table.max_u_degree() + table.order(); // J + L
    int cap = std::max(2 * std::max(window, 1), window + 1);

    std::vector<int> prev_partition;
    std::vector<int> partition;
    for (int round = 0;; ++round) {
        LevelGraph g = build_graph(table, cap);
        auto ids = scc_ids(g.adj);
        partition.clear();
        for (int v = 0; v <= window; ++v)
            for (int tau = 1; tau <= d; ++tau)
                partition.push_back(ids[static_cast<size_t>(g.node(tau, v))]);
        // canonical renumbering so caps compare
        std::map<int, int> renum;
        for (int& p : partition) {
            auto it = renum.find(p);
            if (it == renum.end()) it = renum.emplace(p, static_cast<int>(renum.size())).first;
            p = it->second;
        }
        if (round > 0 && partition == prev_partition) break;
        prev_partition = partition;
        cap += std::max(window, 1);
        if (round > 64) fail(ErrorKind::internal, "connectivity cap did not stabilize");
    }
    report.cap_used = cap;

    bool one_class = std::all_of(partition.begin(), partition.end(),
                                 [&](int p) { return p == partition[0]; });
    if (!one_class) {
        // name one separated pair
        for (size_t a = 0; a < partition.size(); ++a)
            for (size_t b = 0; b < partition.size(); ++b)
                if (partition[a] != partition[b]) {
                    int va = static_cast<int>(a) / d, ta = static_cast<int>(a) % d + 1;
                    int vb = static_cast<int>(b) / d, tb = static_cast<int>(b) % d + 1;
                    report.counterexample = {node_name(ta, va), node_name(tb, vb)};
                    report.strongly_connected = false;
                    return report;
                }
    }

    // witnesses: round trip through every window node from (1,0)
    bool all_witnessed = true;
    for (int v = 0; v <= window && all_witnessed; ++v) {
        for (int tau = 1; tau <= d && all_witnessed; ++tau) {
            auto fwd = nonempty_path(table, cap, 1, 0, tau, v);
            auto back = nonempty_path(table, cap, tau, v, 1, 0);
            if (!fwd || !back) {
                all_witnessed = false;
                report.counterexample = {node_name(1, 0), node_name(tau, v)};
                break;
            }
            WalkWitness w;
            w.start_type = 1;
            w.start_level = 0;
            w.steps = *fwd;
            w.steps.insert(w.steps.end(), back->begin(), back->end());
            report.witnesses.push_back(std::move(w));
        }
    }
    report.strongly_connected = all_witnessed;
    return report;
}

} // namespace catwalk
