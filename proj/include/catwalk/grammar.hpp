#ifndef CATWALK_GRAMMAR_HPP
#define CATWALK_GRAMMAR_HPP

#include "catwalk/catalytic.hpp"
#include "catwalk/oracle.hpp"
#include "catwalk/polysystem.hpp"

#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

namespace catwalk {

// F^{[>=fl]}_{s,t;k1,k2}
struct FIndex {
    int s, t, k1, k2, fl;
    friend bool operator<(const FIndex& a, const FIndex& b) {
        return std::tie(a.s, a.t, a.k1, a.k2, a.fl) < std::tie(b.s, b.t, b.k1, b.k2, b.fl);
    }
    friend bool operator==(const FIndex& a, const FIndex& b) {
        return std::tie(a.s, a.t, a.k1, a.k2, a.fl) == std::tie(b.s, b.t, b.k1, b.k2, b.fl);
    }
};

// A_{s,t;k,i} (reverse=false) or Abar_{s,t;k,i} (reverse=true)
struct PrimeIndex {
    int s, t, k, i;
    bool rev;
    friend bool operator<(const PrimeIndex& a, const PrimeIndex& b) {
        return std::tie(a.s, a.t, a.k, a.i, a.rev) < std::tie(b.s, b.t, b.k, b.i, b.rev);
    }
    friend bool operator==(const PrimeIndex& a, const PrimeIndex& b) {
        return std::tie(a.s, a.t, a.k, a.i, a.rev) == std::tie(b.s, b.t, b.k, b.i, b.rev);
    }
};

// one multiplicative slot in an equation right-hand side
struct GrammarRef {
    enum class Kind { F, NF, Prime }; // NF = F minus its empty-path unit (diagonal)
    Kind kind;
    FIndex f{};      // F / NF
    PrimeIndex p{};  // Prime

    friend bool operator<(const GrammarRef& a, const GrammarRef& b) {
        if (a.kind != b.kind) return a.kind < b.kind;
        if (a.kind == Kind::Prime) return a.p < b.p;
        return a.f < b.f;
    }
    friend bool operator==(const GrammarRef& a, const GrammarRef& b) {
        if (a.kind != b.kind) return false;
        if (a.kind == Kind::Prime) return a.p == b.p;
        return a.f == b.f;
    }
};

struct GTerm {
    UniPolynomial xpoly;
    std::vector<GrammarRef> refs; // structural order kept (prime first, continuation second)
    friend bool operator==(const GTerm& a, const GTerm& b) {
        return a.xpoly == b.xpoly && a.refs == b.refs;
    }
};

// slot keys identify structurally corresponding terms across adjacent levels
struct SlottedEquation {
    UniPolynomial constant;
    std::map<std::string, GTerm> slots;
    friend bool operator==(const SlottedEquation& a, const SlottedEquation& b) {
        return a.constant == b.constant && a.slots == b.slots;
    }
};

// d-bar / d-underbar of the paper, per type pair and level; nullopt when the
// defining set is empty
struct PrimeWalkBounds {
    int d = 1, J = 0;
    std::vector<std::optional<int>> dbar; // [(s-1)*d+(t-1)][k] flattened
    std::vector<std::optional<int>> dlow;
    std::optional<int> get_dbar(int s, int t, int k) const;
    std::optional<int> get_dlow(int s, int t, int k) const;
};

enum class PrimeStatus { zero, explicit_poly, unknown };

struct PrimeClassEntry {
    PrimeIndex index;      // queried index
    PrimeIndex rep;        // representative after level identification
    PrimeStatus status;
    UniPolynomial poly;    // explicit value when status == explicit_poly
};

class PrimeWalkClassification {
  public:
    PrimeClassEntry lookup(const PrimeIndex& idx) const;
    const std::vector<PrimeIndex>& unknown_set() const { return unknown_; }
    std::vector<std::string> unknown_names(int d) const;

  private:
    friend class GrammarCompiler;
    std::map<PrimeIndex, PrimeClassEntry> entries_; // keyed by representative-domain index
    std::vector<PrimeIndex> unknown_;
    int max_rise_ = 0, max_drop_ = 0, J_ = 0;
};

enum class FSplit { prime_first, prime_last };

struct VarMeta {
    enum class Kind { F, NF, Prime, Diff, DiffNF, DiffPrime } kind;
    FIndex f{};     // F / NF / Diff / DiffNF (the higher chain member)
    PrimeIndex p{}; // Prime / DiffPrime (the higher chain member)
};

struct FiniteSystem {
    PolySystem system;
    std::vector<VarMeta> meta; // parallel to system variables
    int achieved_k1 = 0, achieved_k2 = 0, achieved_floor = 0;
};

struct DifferenceSystem {
    PolySystem system;
    std::vector<VarMeta> meta;
    VarId designated = 0;
    std::vector<VarId> core; // strongly connected component of the designated variable
    bool core_strongly_connected = false;
};

std::string grammar_var_name(int d, const VarMeta& meta);

class GrammarCompiler {
  public:
    explicit GrammarCompiler(const CatalyticSystem& canonical);

    const CatalyticSystem& system() const { return sys_; }
    const StepTable& table() const { return table_; }
    int stable_floor() const { return sf_; }

    PrimeWalkBounds compute_prime_walk_bounds() const;

    // conservative, equation-driven classification with level identification;
    // when confirm_with_oracle is set, zero/explicit entries are replayed
    // against the path oracle up to order 2(L+J)
    const PrimeWalkClassification& classify(bool confirm_with_oracle = true);

    FIndex normalize(FIndex idx) const;
    PrimeIndex prime_rep(PrimeIndex idx) const;

    SlottedEquation prime_equation(const PrimeIndex& idx) const;
    SlottedEquation f_equation(const FIndex& idx, FSplit split) const;
    SlottedEquation nf_equation(const FIndex& diag, FSplit split) const;

    FiniteSystem build_finite_system(FSplit split = FSplit::prime_first);

    DifferenceSystem build_difference_system(const FiniteSystem& finite);

  private:
    friend class Extender;
    void ensure_classified();
    PrimeClassEntry prime_status(const PrimeIndex& idx) const;

    CatalyticSystem sys_;
    StepTable table_;
    int sf_;
    bool classified_ = false;
    PrimeWalkClassification cls_;
    // per-family tail-merge level: key (s,t,i,rev) -> kappa
    std::map<std::tuple<int, int, int, bool>, int> kappa_;
};

// Series extension beyond the finite index ranges, by induction on k1+k2 with
// excursion-matrix prefactors; never introduces new equations.
class Extender {
  public:
    Extender(GrammarCompiler& compiler, const FiniteSystem& finite, const SeriesSolution& solution);

    TruncatedSeries f_series(FIndex idx, int N);
    TruncatedSeries prime_series(const PrimeIndex& idx, int N);

  private:
    // d x d excursion matrix E = (I - A0)^{-1} at a given level/floor
    const std::vector<TruncatedSeries>& excursion_matrix(int level, int N);
    TruncatedSeries f_value(FIndex idx, int N);       // includes the empty-path unit
    TruncatedSeries chain_value(FIndex idx, int N, int source_type); // delta-aware continuation

    GrammarCompiler& compiler_;
    const FiniteSystem& finite_;
    const SeriesSolution& solution_;
    std::map<FIndex, TruncatedSeries> memo_;
    std::map<int, std::vector<TruncatedSeries>> emat_; // keyed by min(level, stable)
    int emat_order_ = -1;
    int memo_order_ = -1;
};

// deterministic serializations; both re-parse to an identical system
std::string emit_grammar_text(const PolySystem& system);
std::string emit_grammar_json(const PolySystem& system);
PolySystem parse_grammar_text(const std::string& text);
PolySystem parse_grammar_json(const std::string& text);

} // namespace catwalk

#endif
