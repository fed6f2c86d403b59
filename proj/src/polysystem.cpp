#include "catwalk/polysystem.hpp"

#include "catwalk/error.hpp"

#include <algorithm>
#include <functional>
#include <sstream>

namespace catwalk {

VarId PolySystem::add_variable(const std::string& name) {
    if (index_.count(name))
        fail(ErrorKind::internal, "duplicate variable '" + name + "'");
    VarId v = static_cast<VarId>(names_.size());
    names_.push_back(name);
    index_[name] = v;
    rhs_.emplace_back();
    return v;
}

VarId PolySystem::ensure_variable(const std::string& name) {
    auto it = index_.find(name);
    if (it != index_.end()) return it->second;
    return add_variable(name);
}

std::optional<VarId> PolySystem::find(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

void PolySystem::canonicalize(std::vector<Monomial>& monomials) {
    for (auto& m : monomials) std::sort(m.vars.begin(), m.vars.end());
    std::sort(monomials.begin(), monomials.end(), [](const Monomial& a, const Monomial& b) {
        if (a.xexp != b.xexp) return a.xexp < b.xexp;
        return a.vars < b.vars;
    });
    std::vector<Monomial> merged;
    for (auto& m : monomials) {
        if (m.coef.is_zero()) continue;
        if (!merged.empty() && merged.back().xexp == m.xexp && merged.back().vars == m.vars)
            merged.back().coef += m.coef;
        else
            merged.push_back(std::move(m));
    }
    merged.erase(std::remove_if(merged.begin(), merged.end(),
                                [](const Monomial& m) { return m.coef.is_zero(); }),
                 merged.end());
    monomials = std::move(merged);
}

void PolySystem::set_rhs(VarId v, std::vector<Monomial> monomials) {
    canonicalize(monomials);
    rhs_[static_cast<size_t>(v)] = std::move(monomials);
}

void PolySystem::add_to_rhs(VarId v, std::vector<Monomial> monomials) {
    auto& dst = rhs_[static_cast<size_t>(v)];
    dst.insert(dst.end(), monomials.begin(), monomials.end());
    canonicalize(dst);
}

void PolySystem::validate() const {
    for (VarId v = 0; v < size(); ++v) {
        for (const auto& m : rhs(v)) {
            if (m.coef.is_negative() || m.coef.is_zero())
                fail(ErrorKind::validation, "non-positive coefficient in rhs of " + name(v));
            if (m.xexp < 0) fail(ErrorKind::validation, "negative x exponent in " + name(v));
            for (VarId w : m.vars)
                if (w < 0 || w >= size())
                    fail(ErrorKind::validation, "undeclared variable in rhs of " + name(v));
        }
    }
}

std::vector<std::vector<VarId>> PolySystem::dependency_graph() const {
    std::vector<std::vector<VarId>> g(static_cast<size_t>(size()));
    for (VarId v = 0; v < size(); ++v) {
        std::vector<char> seen(static_cast<size_t>(size()), 0);
        for (const auto& m : rhs(v))
            for (VarId w : m.vars)
                if (!seen[static_cast<size_t>(w)]) {
                    seen[static_cast<size_t>(w)] = 1;
                    g[static_cast<size_t>(v)].push_back(w);
                }
    }
    return g;
}

bool PolySystem::all_variable_monomials_carry_x() const {
    for (VarId v = 0; v < size(); ++v)
        for (const auto& m : rhs(v))
            if (!m.vars.empty() && m.xexp == 0) return false;
    return true;
}

namespace {

std::string cycle_message(const PolySystem& sys, const std::vector<std::vector<VarId>>& edges) {
    // any cycle in the x-free coupling graph; DFS with colors
    int n = sys.size();
    std::vector<int> color(static_cast<size_t>(n), 0);
    std::vector<VarId> stack;
    std::vector<VarId> cycle;
    std::function<bool(VarId)> dfs = [&](VarId u) {
        color[static_cast<size_t>(u)] = 1;
        stack.push_back(u);
        for (VarId w : edges[static_cast<size_t>(u)]) {
            if (color[static_cast<size_t>(w)] == 1) {
                auto it = std::find(stack.begin(), stack.end(), w);
                cycle.assign(it, stack.end());
                return true;
            }
            if (color[static_cast<size_t>(w)] == 0 && dfs(w)) return true;
        }
        color[static_cast<size_t>(u)] = 2;
        stack.pop_back();
        return false;
    };
    for (VarId v = 0; v < n && cycle.empty(); ++v)
        if (color[static_cast<size_t>(v)] == 0) dfs(v);
    std::ostringstream os;
    os << "divergent x-free cycle:";
    for (VarId v : cycle) os << " " << sys.name(v);
    return os.str();
}

// [x^k] of the product of the given series, with every factor restricted to
// orders < cap (cap = k+1 means unrestricted)
Rational product_coeff(const std::vector<const std::vector<Rational>*>& factors, int k, int cap) {
    if (factors.empty()) return k == 0 ? Rational(1) : Rational();
    std::function<Rational(size_t, int)> rec = [&](size_t idx, int rem) -> Rational {
        const auto& f = *factors[idx];
        if (idx + 1 == factors.size()) {
            if (rem >= cap || rem >= static_cast<int>(f.size())) return Rational();
            return f[static_cast<size_t>(rem)];
        }
        Rational acc;
        int hi = std::min(rem, cap - 1);
        for (int k1 = 0; k1 <= hi; ++k1) {
            if (k1 >= static_cast<int>(f.size())) break;
            if (f[static_cast<size_t>(k1)].is_zero()) continue;
            Rational tail = rec(idx + 1, rem - k1);
            if (!tail.is_zero()) acc += f[static_cast<size_t>(k1)] * tail;
        }
        return acc;
    };
    return rec(0, k);
}

} // namespace

SeriesSolution fixed_point_solve(const PolySystem& sys, int N) {
    if (N < 0) fail(ErrorKind::validation, "negative truncation order");
    sys.validate();
    int n = sys.size();
    std::vector<std::vector<Rational>> a(static_cast<size_t>(n),
                                         std::vector<Rational>(static_cast<size_t>(N) + 1));

    // constant terms: iterate the x-free part of Phi from zero
    std::vector<Rational> c(static_cast<size_t>(n));
    int limit = n + N + 2;
    bool stable = false;
    for (int round = 0; round < limit && !stable; ++round) {
        std::vector<Rational> next(static_cast<size_t>(n));
        for (VarId v = 0; v < n; ++v) {
            Rational acc;
            for (const auto& m : sys.rhs(v)) {
                if (m.xexp != 0) continue;
                Rational term = m.coef;
                for (VarId w : m.vars) {
                    term *= c[static_cast<size_t>(w)];
                    if (term.is_zero()) break;
                }
                acc += term;
            }
            next[static_cast<size_t>(v)] = acc;
        }
        stable = (next == c);
        c = std::move(next);
    }
    if (!stable) {
        std::vector<std::vector<VarId>> edges(static_cast<size_t>(n));
        for (VarId v = 0; v < n; ++v)
            for (const auto& m : sys.rhs(v))
                if (m.xexp == 0)
                    for (VarId w : m.vars) edges[static_cast<size_t>(v)].push_back(w);
        fail(ErrorKind::divergence, cycle_message(sys, edges));
    }
    for (VarId v = 0; v < n; ++v) a[static_cast<size_t>(v)][0] = c[static_cast<size_t>(v)];

    // same-order coupling matrix from x-free monomials: u = K + C u per order
    struct Coupling {
        VarId from, to;
        Rational weight;
    };
    std::vector<Coupling> couplings;
    for (VarId v = 0; v < n; ++v) {
        for (const auto& m : sys.rhs(v)) {
            if (m.xexp != 0 || m.vars.empty()) continue;
            for (size_t pick = 0; pick < m.vars.size(); ++pick) {
                Rational w = m.coef;
                for (size_t other = 0; other < m.vars.size(); ++other) {
                    if (other == pick) continue;
                    w *= c[static_cast<size_t>(m.vars[other])];
                    if (w.is_zero()) break;
                }
                if (!w.is_zero()) couplings.push_back({v, m.vars[pick], w});
            }
        }
    }
    std::vector<VarId> topo;
    if (!couplings.empty()) {
        std::vector<std::vector<VarId>> edges(static_cast<size_t>(n));
        std::vector<int> indeg(static_cast<size_t>(n), 0);
        for (const auto& cp : couplings) edges[static_cast<size_t>(cp.from)].push_back(cp.to);
        for (const auto& cp : couplings) indeg[static_cast<size_t>(cp.from)]++;
        // topo over reversed edges (dependencies first): Kahn on "to -> from"
        std::vector<std::vector<VarId>> rev(static_cast<size_t>(n));
        for (const auto& cp : couplings) rev[static_cast<size_t>(cp.to)].push_back(cp.from);
        std::vector<int> deps(static_cast<size_t>(n), 0);
        for (const auto& cp : couplings) deps[static_cast<size_t>(cp.from)]++;
        std::vector<VarId> queue;
        for (VarId v = 0; v < n; ++v)
            if (deps[static_cast<size_t>(v)] == 0) queue.push_back(v);
        for (size_t qi = 0; qi < queue.size(); ++qi) {
            VarId u = queue[qi];
            topo.push_back(u);
            for (VarId w : rev[static_cast<size_t>(u)])
                if (--deps[static_cast<size_t>(w)] == 0) queue.push_back(w);
        }
        if (static_cast<int>(topo.size()) != n)
            fail(ErrorKind::divergence, cycle_message(sys, edges));
    } else {
        for (VarId v = 0; v < n; ++v) topo.push_back(v);
    }

    for (int k = 1; k <= N; ++k) {
        std::vector<Rational> known(static_cast<size_t>(n));
        for (VarId v = 0; v < n; ++v) {
            Rational acc;
            for (const auto& m : sys.rhs(v)) {
                int rem = k - m.xexp;
                if (rem < 0) continue;
                if (m.vars.empty()) {
                    if (rem == 0) acc += m.coef;
                    continue;
                }
                std::vector<const std::vector<Rational>*> factors;
                factors.reserve(m.vars.size());
                for (VarId w : m.vars) factors.push_back(&a[static_cast<size_t>(w)]);
                // for x-free monomials the order-k parts are handled by the
                // coupling pass below
                int cap = (m.xexp == 0) ? k : k + 1;
                Rational p = product_coeff(factors, rem, cap);
                if (!p.is_zero()) acc += m.coef * p;
            }
            known[static_cast<size_t>(v)] = acc;
        }
        for (VarId v : topo) {
            Rational u = known[static_cast<size_t>(v)];
            for (const auto& cp : couplings)
                if (cp.from == v) u += cp.weight * a[static_cast<size_t>(cp.to)][static_cast<size_t>(k)];
            a[static_cast<size_t>(v)][static_cast<size_t>(k)] = u;
        }
    }

    SeriesSolution sol;
    sol.order = N;
    sol.series.reserve(static_cast<size_t>(n));
    for (VarId v = 0; v < n; ++v) sol.series.emplace_back(N, a[static_cast<size_t>(v)]);
    return sol;
}

std::vector<SeriesSolution> iterate_system(const PolySystem& sys, int N, int steps) {
    sys.validate();
    int n = sys.size();
    std::vector<SeriesSolution> iterates;
    SeriesSolution cur;
    cur.order = N;
    cur.series.assign(static_cast<size_t>(n), TruncatedSeries(N));
    iterates.push_back(cur);
    for (int s = 0; s < steps; ++s) {
        SeriesSolution next;
        next.order = N;
        next.series.assign(static_cast<size_t>(n), TruncatedSeries(N));
        for (VarId v = 0; v < n; ++v) {
            TruncatedSeries acc(N);
            for (const auto& m : sys.rhs(v)) {
                TruncatedSeries term(N);
                if (m.xexp <= N) term.coeff(m.xexp) = m.coef;
                for (VarId w : m.vars) term = series_mul(term, cur.of(w));
                acc = series_add(acc, term);
            }
            next.series[static_cast<size_t>(v)] = acc;
        }
        iterates.push_back(next);
        cur = std::move(next);
    }
    return iterates;
}

std::vector<std::vector<double>> expand_scaled(const PolySystem& sys, double sigma, int N) {
    sys.validate();
    if (!sys.all_variable_monomials_carry_x())
        fail(ErrorKind::internal, "scaled expansion requires x-weighted variable monomials");
    int n = sys.size();
    std::vector<std::vector<double>> b(static_cast<size_t>(n),
                                       std::vector<double>(static_cast<size_t>(N) + 1, 0.0));
    std::vector<double> sig_pow(static_cast<size_t>(N) + 1, 1.0);
    for (int e = 1; e <= N; ++e) sig_pow[static_cast<size_t>(e)] = sig_pow[static_cast<size_t>(e - 1)] * sigma;

    for (int k = 0; k <= N; ++k) {
        for (VarId v = 0; v < n; ++v) {
            double acc = 0.0;
            for (const auto& m : sys.rhs(v)) {
                int rem = k - m.xexp;
                if (rem < 0) continue;
                double term;
                if (m.vars.empty()) {
                    term = (rem == 0) ? 1.0 : 0.0;
                } else if (m.vars.size() == 1) {
                    term = b[static_cast<size_t>(m.vars[0])][static_cast<size_t>(rem)];
                } else if (m.vars.size() == 2) {
                    const auto& f = b[static_cast<size_t>(m.vars[0])];
                    const auto& g = b[static_cast<size_t>(m.vars[1])];
                    double s = 0.0;
                    for (int i = 0; i <= rem; ++i) s += f[static_cast<size_t>(i)] * g[static_cast<size_t>(rem - i)];
                    term = s;
                } else {
                    std::function<double(size_t, int)> rec = [&](size_t idx, int r) -> double {
                        const auto& f = b[static_cast<size_t>(m.vars[idx])];
                        if (idx + 1 == m.vars.size()) return f[static_cast<size_t>(r)];
                        double s = 0.0;
                        for (int i = 0; i <= r; ++i)
                            if (f[static_cast<size_t>(i)] != 0.0) s += f[static_cast<size_t>(i)] * rec(idx + 1, r - i);
                        return s;
                    };
                    term = rec(0, rem);
                }
                if (term != 0.0) acc += m.coef.to_double() * sig_pow[static_cast<size_t>(m.xexp)] * term;
            }
            b[static_cast<size_t>(v)][static_cast<size_t>(k)] = acc;
        }
    }
    return b;
}

} // namespace catwalk
