#pragma once

#include <string>
#include <vector>

#include "eft/scenario.hpp"

namespace eft {

inline constexpr const char* kVersion = "0.1.0";

/// Result record of one scenario run. `results` is the deterministic numeric
/// payload; `timestamp` is provenance only and excluded from reproducibility
/// comparisons.
struct RunReport {
    nlohmann::json scenario;
    nlohmann::json results;
    std::uint64_t seed = 0;
    std::string version = kVersion;
    std::string timestamp;

    nlohmann::json to_json() const;
};

RunReport run_scenario(const ExperimentScenario& sc);

RunReport run_three_peak(const ExperimentScenario& sc);
RunReport run_envelope_scan(const ExperimentScenario& sc);
RunReport run_bfe_sweep(const ExperimentScenario& sc);
RunReport run_lock_scenario(const ExperimentScenario& sc);
RunReport run_chsh_scenario(const ExperimentScenario& sc);

struct CheckOutcome {
    bool passed = true;
    std::vector<std::string> failures;
};

/// Consistency checks behind the CLI's --check flag: sampled statistics
/// against their analytic counterparts, plus the per-kind protocol
/// expectations (rejection, lock suppression, CHSH violation).
CheckOutcome check_report(const ExperimentScenario& sc, const RunReport& report);

}  // namespace eft
