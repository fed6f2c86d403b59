#include "catwalk/catalytic.hpp"

#include "catwalk/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <set>
#include <sstream>

namespace catwalk {

using nlohmann::ordered_json;

const UniPolynomial& CatalyticSystem::q(int s, int t, int l, int j) const {
    static const UniPolynomial zero;
    auto it = Q.find(QKey{s, t, l, j});
    return it == Q.end() ? zero : it->second;
}

UniPolynomial CatalyticSystem::p(int s, int m) const {
    auto it = P.find({s, m});
    return it == P.end() ? UniPolynomial() : it->second;
}

int CatalyticSystem::max_p_degree() const {
    int deg = 0;
    for (const auto& [key, poly] : P)
        if (!poly.is_zero()) deg = std::max(deg, key.second);
    return deg;
}

namespace {

std::vector<Rational> parse_poly_array(const ordered_json& arr, const std::string& where) {
    if (!arr.is_array()) fail(ErrorKind::validation, where + ": poly must be an array");
    std::vector<Rational> coeffs;
    for (const auto& item : arr) {
        if (!item.is_string())
            fail(ErrorKind::validation, where + ": poly entries must be rational strings");
        Rational c = Rational::parse(item.get<std::string>());
        if (c.is_negative())
            fail(ErrorKind::validation, where + ": negative coefficient '" + c.str() + "'");
        coeffs.push_back(c);
    }
    return coeffs;
}

void reject_unknown_fields(const ordered_json& obj, const std::set<std::string>& allowed,
                           const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key()))
            fail(ErrorKind::validation, where + ": unknown field '" + it.key() + "'");
}

int require_int(const ordered_json& obj, const std::string& key, const std::string& where) {
    if (!obj.contains(key)) fail(ErrorKind::validation, where + ": missing field '" + key + "'");
    if (!obj[key].is_number_integer())
        fail(ErrorKind::validation, where + ": field '" + key + "' must be an integer");
    return obj[key].get<int>();
}

} // namespace

CatalyticSystem parse_catalytic_system(const std::string& document) {
    ordered_json doc;
    try {
        doc = ordered_json::parse(document);
    } catch (const std::exception& e) {
        fail(ErrorKind::validation, std::string("malformed JSON: ") + e.what());
    }
    if (!doc.is_object()) fail(ErrorKind::validation, "document must be a JSON object");
    reject_unknown_fields(doc, {"d", "L", "J", "Q", "P"}, "document");

    CatalyticSystem sys;
    sys.d = require_int(doc, "d", "document");
    sys.L = require_int(doc, "L", "document");
    sys.J = require_int(doc, "J", "document");
    if (sys.d < 1) fail(ErrorKind::validation, "d must be >= 1");
    if (sys.L < 1) fail(ErrorKind::validation, "L must be >= 1");
    if (sys.J < 0) fail(ErrorKind::validation, "J must be >= 0");

    if (!doc.contains("Q") || !doc["Q"].is_array())
        fail(ErrorKind::validation, "document: missing Q array");
    int qi = 0;
    for (const auto& entry : doc["Q"]) {
        std::string where = "Q[" + std::to_string(qi++) + "]";
        if (!entry.is_object()) fail(ErrorKind::validation, where + ": must be an object");
        reject_unknown_fields(entry, {"s", "t", "l", "j", "poly"}, where);
        QKey key{require_int(entry, "s", where), require_int(entry, "t", where),
                 require_int(entry, "l", where), require_int(entry, "j", where)};
        if (key.s < 1 || key.s > sys.d || key.t < 1 || key.t > sys.d)
            fail(ErrorKind::validation, where + ": type index out of range");
        if (key.l < 0 || key.l > sys.L)
            fail(ErrorKind::validation, where + ": l out of range");
        if (key.j < 0 || key.j > sys.J)
            fail(ErrorKind::validation, where + ": j out of range");
        if (!entry.contains("poly")) fail(ErrorKind::validation, where + ": missing poly");
        UniPolynomial poly(parse_poly_array(entry["poly"], where));
        if (sys.Q.count(key))
            fail(ErrorKind::validation, where + ": duplicate entry (s=" + std::to_string(key.s) +
                                            ",t=" + std::to_string(key.t) + ",l=" + std::to_string(key.l) +
                                            ",j=" + std::to_string(key.j) + ")");
        if (!poly.is_zero()) sys.Q.emplace(key, std::move(poly));
    }

    if (doc.contains("P")) {
        if (!doc["P"].is_array()) fail(ErrorKind::validation, "P must be an array");
        int pi = 0;
        for (const auto& entry : doc["P"]) {
            std::string where = "P[" + std::to_string(pi++) + "]";
            if (!entry.is_object()) fail(ErrorKind::validation, where + ": must be an object");
            reject_unknown_fields(entry, {"s", "m", "poly"}, where);
            int s = require_int(entry, "s", where);
            int m = require_int(entry, "m", where);
            if (s < 1 || s > sys.d) fail(ErrorKind::validation, where + ": type index out of range");
            if (m < 0) fail(ErrorKind::validation, where + ": m must be >= 0");
            if (!entry.contains("poly")) fail(ErrorKind::validation, where + ": missing poly");
            UniPolynomial poly(parse_poly_array(entry["poly"], where));
            if (sys.P.count({s, m}))
                fail(ErrorKind::validation, where + ": duplicate entry");
            if (!poly.is_zero()) sys.P.emplace(std::make_pair(s, m), std::move(poly));
        }
    } else {
        for (int s = 1; s <= sys.d; ++s)
            sys.P.emplace(std::make_pair(s, 0), UniPolynomial::constant(Rational(1)));
    }
    return sys;
}

std::string serialize_catalytic_system(const CatalyticSystem& sys) {
    ordered_json doc;
    doc["d"] = sys.d;
    doc["L"] = sys.L;
    doc["J"] = sys.J;
    doc["Q"] = ordered_json::array();
    for (const auto& [key, poly] : sys.Q) { // map order = lexicographic by (s,t,l,j)
        ordered_json e;
        e["s"] = key.s;
        e["t"] = key.t;
        e["l"] = key.l;
        e["j"] = key.j;
        ordered_json coeffs = ordered_json::array();
        for (const auto& c : poly.coeffs()) coeffs.push_back(c.str());
        e["poly"] = coeffs;
        doc["Q"].push_back(e);
    }
    doc["P"] = ordered_json::array();
    for (const auto& [key, poly] : sys.P) {
        ordered_json e;
        e["s"] = key.first;
        e["m"] = key.second;
        ordered_json coeffs = ordered_json::array();
        for (const auto& c : poly.coeffs()) coeffs.push_back(c.str());
        e["poly"] = coeffs;
        doc["P"].push_back(e);
    }
    return doc.dump(2) + "\n";
}

CatalyticSystem canonicalize_and_validate(const CatalyticSystem& sys, Diagnostics* diag) {
    if (sys.q_all_zero())
        fail(ErrorKind::validation, "trivial system: all Q are zero, F = P");
    CatalyticSystem out = sys;
    int max_l = 0, max_j = 0;
    for (const auto& [key, poly] : sys.Q) {
        max_l = std::max(max_l, key.l);
        max_j = std::max(max_j, key.j);
    }
    int tight_l = std::max(1, max_l);
    if (tight_l != sys.L) {
        if (diag) diag->notes.push_back("L tightened from " + std::to_string(sys.L) + " to " +
                                        std::to_string(tight_l));
        out.L = tight_l;
    }
    if (max_j != sys.J) {
        if (diag) diag->notes.push_back("J tightened from " + std::to_string(sys.J) + " to " +
                                        std::to_string(max_j));
        out.J = max_j;
    }
    for (int s = 1; s <= sys.d; ++s) {
        bool used = false;
        for (const auto& [key, poly] : sys.Q)
            if (key.s == s || key.t == s) used = true;
        if (!used && diag) diag->notes.push_back("type " + std::to_string(s) + " unused in Q");
        bool has_row = false;
        for (const auto& [key, poly] : sys.Q)
            if (key.s == s) has_row = true;
        for (const auto& [key, poly] : sys.P)
            if (key.first == s && !poly.is_zero()) has_row = true;
        if (!has_row && diag)
            diag->notes.push_back("equation " + std::to_string(s) + " is identically zero");
    }
    return out;
}

StepTable::StepTable(int d, int L, int J) : d_(d), L_(L), J_(J) {
    levels_.assign(static_cast<size_t>(J) + 1,
                   std::vector<std::vector<Step>>(static_cast<size_t>(d) * static_cast<size_t>(d)));
}

const std::vector<Step>& StepTable::steps(int s, int t, int level) const {
    int k = std::min(level, J_);
    return levels_[static_cast<size_t>(k)]
                  [static_cast<size_t>(s - 1) * static_cast<size_t>(d_) + static_cast<size_t>(t - 1)];
}

void StepTable::add_step(int level, Step step) {
    levels_[static_cast<size_t>(level)]
           [static_cast<size_t>(step.s - 1) * static_cast<size_t>(d_) + static_cast<size_t>(step.t - 1)]
        .push_back(step);
}

int StepTable::max_rise() const {
    int r = 0;
    for (const auto& lvl : levels_)
        for (const auto& cell : lvl)
            for (const auto& st : cell) r = std::max(r, st.rise);
    return r;
}

int StepTable::max_drop() const {
    int r = 0;
    for (const auto& lvl : levels_)
        for (const auto& cell : lvl)
            for (const auto& st : cell) r = std::max(r, -st.rise);
    return r;
}

int StepTable::stable_floor() const {
    int sf = 0;
    for (const auto& cell : levels_.back())
        for (const auto& st : cell) sf = std::max(sf, std::min(st.l, st.j));
    return sf;
}

bool StepTable::monotone_and_stable() const {
    auto key = [](const Step& st) { return std::tie(st.s, st.t, st.l, st.j, st.r); };
    for (int k = 0; k + 1 <= J_; ++k) {
        for (size_t cell = 0; cell < levels_[static_cast<size_t>(k)].size(); ++cell) {
            for (const auto& st : levels_[static_cast<size_t>(k)][cell]) {
                bool found = false;
                for (const auto& up : levels_[static_cast<size_t>(k) + 1][cell])
                    if (key(up) == key(st) && up.weight == st.weight) found = true;
                if (!found) return false;
            }
        }
    }
    return true;
}

StepTable build_step_table(const CatalyticSystem& sys) {
    StepTable table(sys.d, sys.L, sys.J);
    for (int k = 0; k <= sys.J; ++k) {
        for (const auto& [key, poly] : sys.Q) {
            if (key.j > k) continue;
            for (int r = 0; r <= poly.degree(); ++r) {
                Rational w = poly.coeff(r);
                if (w.is_zero()) continue;
                table.add_step(k, Step{1 + r, key.l - key.j, w, key.s, key.t, key.l, key.j, r});
            }
        }
    }
    return table;
}

CatalyticSystem reverse_system(const CatalyticSystem& sys) {
    CatalyticSystem out;
    out.d = sys.d;
    out.L = std::max(1, sys.J);
    out.J = sys.L;
    for (const auto& [key, poly] : sys.Q)
        out.Q.emplace(QKey{key.t, key.s, key.j, key.l}, poly);
    out.P = sys.P;
    return out;
}

std::vector<InfiniteRow> expand_infinite_system(const CatalyticSystem& sys, int kmax) {
    std::vector<InfiniteRow> rows;
    for (int s = 1; s <= sys.d; ++s) {
        for (int k = 0; k <= kmax; ++k) {
            InfiniteRow row;
            row.s = s;
            row.k = k;
            row.constant = sys.p(s, k);
            for (const auto& [key, poly] : sys.Q) {
                if (key.s != s) continue;
                if (key.j > std::min(k, sys.J)) continue;
                UniPolynomial xq = UniPolynomial::monomial(Rational(1), 1) * poly;
                row.terms.emplace_back(key.t, k + key.l - key.j, xq);
            }
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

std::map<std::pair<int, int>, TruncatedSeries>
solve_infinite_system(const CatalyticSystem& sys, int kmax, int N) {
    auto rows = expand_infinite_system(sys, kmax);
    PolySystem ps;
    auto var_name = [&](int s, int k) {
        return "F" + std::to_string(s) + "_" + std::to_string(k);
    };
    for (int s = 1; s <= sys.d; ++s)
        for (int k = 0; k <= kmax + sys.L; ++k) ps.add_variable(var_name(s, k));
    for (const auto& row : rows) {
        std::vector<Monomial> monos;
        for (int e = 0; e <= row.constant.degree(); ++e)
            if (!row.constant.coeff(e).is_zero())
                monos.push_back(Monomial{row.constant.coeff(e), e, {}});
        for (const auto& [t, level, xq] : row.terms) {
            VarId v = *ps.find(var_name(t, level));
            for (int e = 0; e <= xq.degree(); ++e)
                if (!xq.coeff(e).is_zero()) monos.push_back(Monomial{xq.coeff(e), e, {v}});
        }
        ps.set_rhs(*ps.find(var_name(row.s, row.k)), std::move(monos));
    }
    // boundary unknowns above kmax keep rhs = 0
    auto sol = fixed_point_solve(ps, N);
    std::map<std::pair<int, int>, TruncatedSeries> out;
    for (int s = 1; s <= sys.d; ++s)
        for (int k = 0; k <= kmax; ++k)
            out.emplace(std::make_pair(s, k), sol.of(*ps.find(var_name(s, k))));
    return out;
}

UniPolynomial RecombinationPlan::constant(const CatalyticSystem& sys, int s, int k) const {
    return sys.p(s, k);
}

RecombinationPlan build_recombination_plan(const CatalyticSystem& sys) {
    RecombinationPlan plan;
    plan.d = sys.d;
    plan.per_type.assign(static_cast<size_t>(sys.d), {});
    for (int s = 1; s <= sys.d; ++s) {
        for (const auto& [key, poly] : sys.P) {
            if (poly.is_zero()) continue;
            plan.per_type[static_cast<size_t>(s - 1)].push_back(
                RecombinationTerm{key.first, key.second, poly});
        }
    }
    return plan;
}

} // namespace catwalk
