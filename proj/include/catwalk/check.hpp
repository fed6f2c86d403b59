#ifndef CATWALK_CHECK_HPP
#define CATWALK_CHECK_HPP

#include "catwalk/grammar.hpp"
#include "catwalk/oracle.hpp"

#include <string>
#include <vector>

namespace catwalk {

// independent expected value of one grammar variable, straight from the path
// oracle (difference variables via oracle differences)
TruncatedSeries variable_oracle(const StepTable& table, const VarMeta& meta, int depth);

struct CheckReport {
    int variables_checked = 0;
    std::vector<std::string> mismatches;
    bool ok() const { return mismatches.empty(); }
};

CheckReport check_against_oracle(const StepTable& table, const PolySystem& system,
                                 const std::vector<VarMeta>& meta, const SeriesSolution& solution);

} // namespace catwalk

#endif
