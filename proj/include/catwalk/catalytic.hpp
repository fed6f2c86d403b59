#ifndef CATWALK_CATALYTIC_HPP
#define CATWALK_CATALYTIC_HPP

#include "catwalk/polynomial.hpp"
#include "catwalk/polysystem.hpp"

#include <map>
#include <string>
#include <tuple>
#include <vector>

namespace catwalk {

// index of one coefficient polynomial Q_{s,t,l,j}(x); s,t are 1-based
struct QKey {
    int s, t, l, j;
    friend bool operator<(const QKey& a, const QKey& b) {
        return std::tie(a.s, a.t, a.l, a.j) < std::tie(b.s, b.t, b.l, b.j);
    }
    friend bool operator==(const QKey& a, const QKey& b) {
        return std::tie(a.s, a.t, a.l, a.j) == std::tie(b.s, b.t, b.l, b.j);
    }
};

// F_s(x,u) = P_s(x,u) + x sum_t sum_l Q_{s,t,l}(x,u) Delta^l F_t(x,u),
// all coefficients nonnegative. Only nonzero Q and P entries are stored.
struct CatalyticSystem {
    int d = 1;
    int L = 1;
    int J = 0;
    std::map<QKey, UniPolynomial> Q;
    std::map<std::pair<int, int>, UniPolynomial> P; // (s, u-power m) -> P_{s,m}(x)

    const UniPolynomial& q(int s, int t, int l, int j) const;
    UniPolynomial p(int s, int m) const;
    int max_p_degree() const; // max u-degree over P_s
    bool q_all_zero() const { return Q.empty(); }
};

CatalyticSystem parse_catalytic_system(const std::string& document);
std::string serialize_catalytic_system(const CatalyticSystem& sys);

struct Diagnostics {
    std::vector<std::string> notes;
};

// recompute tight L and J, report tightenings and unused types;
// all-zero Q is rejected here
CatalyticSystem canonicalize_and_validate(const CatalyticSystem& sys, Diagnostics* diag = nullptr);

// one weighted allowed step: advances `width` in x, changes level by `rise`,
// transitions source type s -> target type t; (l, j, r) remembers which
// coefficient generated it (multiplicity tag)
struct Step {
    int width;
    int rise;
    Rational weight;
    int s, t;
    int l, j, r;
};

class StepTable {
  public:
    StepTable(int d, int L, int J);

    int d() const { return d_; }
    int order() const { return L_; }
    int max_u_degree() const { return J_; }

    // steps usable from `level` with source type s and target type t;
    // levels above J share the stable set S_J
    const std::vector<Step>& steps(int s, int t, int level) const;
    void add_step(int level, Step step);

    int max_rise() const;
    int max_drop() const; // largest j - l over steps, 0 if none descends

    // smallest floor the shift identity F^{[>=k]}_{k1,k2} = F^{[>=k-1]}_{k1-1,k2-1}
    // stabilizes at: max over steps of min(l, j)
    int stable_floor() const;

    bool monotone_and_stable() const;

  private:
    int d_, L_, J_;
    // levels_[k][ (s-1)*d + (t-1) ], k = 0..J
    std::vector<std::vector<std::vector<Step>>> levels_;
};

StepTable build_step_table(const CatalyticSystem& sys);

// d=1 reversal: Q'_{l,j} = Q_{j,l} (types transposed for d>1); reversing every
// path gives a weight-preserving bijection k1->k2 onto k2->k1
CatalyticSystem reverse_system(const CatalyticSystem& sys);

// one row F_{s;k} = P_{s,k} + sum of x Q_{s,t,l,j} F_{t;k+l-j}
struct InfiniteRow {
    int s, k;
    UniPolynomial constant;
    std::vector<std::tuple<int, int, UniPolynomial>> terms; // (t, level, x*Q)
};

std::vector<InfiniteRow> expand_infinite_system(const CatalyticSystem& sys, int kmax);

// truncated solve of the infinite system; boundary unknowns above kmax are
// zeroed, which is exact for coefficients up to order N when kmax >= k + N*L
std::map<std::pair<int, int>, TruncatedSeries>
solve_infinite_system(const CatalyticSystem& sys, int kmax, int N);

// F_{s;k} = P_{s,k} + sum_t sum_m (F^{[>=0]}_{s,t;k,m} - delta_{k,m}) P_{t,m}
struct RecombinationTerm {
    int source_type;  // t
    int u_power;      // m
    UniPolynomial multiplier;
};

struct RecombinationPlan {
    int d = 1;
    std::vector<std::vector<RecombinationTerm>> per_type; // indexed by s-1
    UniPolynomial constant(const CatalyticSystem& sys, int s, int k) const; // P_{s,k}
};

RecombinationPlan build_recombination_plan(const CatalyticSystem& sys);

} // namespace catwalk

#endif
