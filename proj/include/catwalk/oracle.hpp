#ifndef CATWALK_ORACLE_HPP
#define CATWALK_ORACLE_HPP

#include "catwalk/catalytic.hpp"
#include "catwalk/series.hpp"

#include <optional>
#include <vector>

namespace catwalk {

struct PathQuery {
    int start_type = 1; // s, 1-based
    int end_type = 0;   // t, 1-based; 0 aggregates over end types
    int start_level = 0;
    int end_level = 0;
    int floor = 0;
    int max_length = 14;
};

// Raw weighted chain counts: profile[t-1][k2].coeff(n) is the total weight of
// nonempty allowed paths (0,k1) -> (n,k2) staying >= floor whose type chain
// starts at s and whose last step targets t; the n=0 entry seeds the chain
// (1 at (s,k1) only).  This is the composable object; oracle_count applies
// the empty-path convention on top of it.
std::vector<std::vector<TruncatedSeries>>
oracle_profile(const StepTable& table, int s, int k1, int floor, int nmax);

// Exact weighted path count per the paper's conventions: empty path counts 1
// at n=0 iff k1 == k2 (for every type pair when both endpoints are typed).
TruncatedSeries oracle_count(const StepTable& table, const PathQuery& query);

// brute-force enumeration cross-check (exponential; keep nmax small)
std::vector<std::vector<TruncatedSeries>>
naive_profile(const StepTable& table, int s, int k1, int floor, int nmax);

// Prime walk weights: A_{s,t;k,i} (paths k -> k+i, interior strictly above k+i)
// or, with reverse=true, Abar_{s,t;k,i} (paths k -> k-i, interior strictly
// above k).  Nonempty by definition.
TruncatedSeries prime_walk_oracle(const StepTable& table, int s, int t, int k, int i,
                                  bool reverse, int nmax);

struct WalkWitness {
    int start_type;
    int start_level;
    std::vector<Step> steps;
    int end_type() const { return steps.empty() ? start_type : steps.back().t; }
    int end_level() const;
};

// checks availability at each visited level and the floor >= 0 constraint
bool replay_witness(const StepTable& table, const WalkWitness& witness);

struct ConnectivityReport {
    bool strongly_connected = false;
    int cap_used = 0;
    // witnesses: round trips (1,0) -> node -> (1,0) for every window node
    std::vector<WalkWitness> witnesses;
    std::optional<std::pair<std::string, std::string>> counterexample;
};

// Decides strong connectivity of the infinite system by cap-stabilized SCC
// computation on the (type, level) digraph; window is levels 0..J+L.
ConnectivityReport check_strong_connectivity(const StepTable& table);

} // namespace catwalk

#endif
