#pragma once

#include <filesystem>

#include "eft/runner.hpp"

namespace eft {

enum class OutputFormat { Csv, Json };

/// Writes `<out_root>/<scenario-name>/report.json` plus the scenario's
/// tabular data (`histogram.csv` or `histogram.json`, and per-trace files for
/// lock runs) and optional SVG charts. Returns the scenario directory.
std::filesystem::path write_outputs(const ExperimentScenario& sc, const RunReport& report,
                                    const std::filesystem::path& out_root,
                                    OutputFormat format, bool svg);

}  // namespace eft
