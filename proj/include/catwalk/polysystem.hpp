#ifndef CATWALK_POLYSYSTEM_HPP
#define CATWALK_POLYSYSTEM_HPP

#include "catwalk/rational.hpp"
#include "catwalk/series.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace catwalk {

using VarId = int;

// coef * x^xexp * product of variables (commutative multiset, kept sorted)
struct Monomial {
    Rational coef;
    int xexp = 0;
    std::vector<VarId> vars;
};

// y_i = R_i(x, y_1..y_m) with nonnegative coefficients. Right-hand sides are
// stored as canonicalized monomial lists (zero terms dropped, like terms
// merged, deterministic order).
class PolySystem {
  public:
    VarId add_variable(const std::string& name);
    VarId ensure_variable(const std::string& name);
    std::optional<VarId> find(const std::string& name) const;

    void set_rhs(VarId v, std::vector<Monomial> monomials);
    void add_to_rhs(VarId v, std::vector<Monomial> monomials);

    int size() const { return static_cast<int>(names_.size()); }
    const std::string& name(VarId v) const { return names_[static_cast<size_t>(v)]; }
    const std::vector<std::string>& names() const { return names_; }
    const std::vector<Monomial>& rhs(VarId v) const { return rhs_[static_cast<size_t>(v)]; }

    void set_designated(VarId v) { designated_ = v; }
    std::optional<VarId> designated() const { return designated_; }

    // referenced variables declared, every coefficient > 0, canonical order
    void validate() const;

    // dependency edges u -> v iff v appears in rhs(u)
    std::vector<std::vector<VarId>> dependency_graph() const;

    bool all_variable_monomials_carry_x() const;

  private:
    static void canonicalize(std::vector<Monomial>& monomials);

    std::vector<std::string> names_;
    std::map<std::string, VarId> index_;
    std::vector<std::vector<Monomial>> rhs_;
    std::optional<VarId> designated_;
};

struct SeriesSolution {
    int order = 0;
    std::vector<TruncatedSeries> series;

    const TruncatedSeries& of(VarId v) const { return series[static_cast<size_t>(v)]; }
};

// Unique power-series solution of y = Phi(x,y) up to order N, the limit of
// iterating from the zero vector. Computed order-by-order, which reproduces
// the iteration exactly: after m sweeps all coefficients up to order m are
// final because variable-bearing monomials advance in x.  Same-order coupling
// through x-free monomials is resolved by substitution when acyclic and
// reported as divergence (with the offending cycle) otherwise.
SeriesSolution fixed_point_solve(const PolySystem& sys, int N);

// literal truncated iterates y^(0)=0, y^(k+1)=Phi(y^(k)); used by the
// monotone-convergence checks
std::vector<SeriesSolution> iterate_system(const PolySystem& sys, int N, int steps);

// Double-precision coefficients of the rescaled solution y(sigma*z), order by
// order; requires every variable-bearing monomial to carry x^>=1.
std::vector<std::vector<double>> expand_scaled(const PolySystem& sys, double sigma, int N);

} // namespace catwalk

#endif
