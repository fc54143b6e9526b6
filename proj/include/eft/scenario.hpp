#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "eft/entanglement.hpp"
#include "eft/feedback.hpp"

namespace eft {

/// Raised on malformed scenario files; `issues` lists one message per
/// offending field, with its path.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<std::string> issues);
    const std::vector<std::string>& issues() const { return issues_; }

private:
    std::vector<std::string> issues_;
};

enum class ScenarioKind { ThreePeak, EnvelopeScan, BfeSweep, LockRun, Chsh };

std::string to_string(ScenarioKind kind);
ScenarioKind scenario_kind_from_string(const std::string& s);

/// Interferometer timing and photon parameters shared by every scenario.
struct ProtocolConfig {
    double T_ns = 2.5;
    double T_prime_ns = 2.5;
    double window_ns = 2.0;
    double static_phase_offset_rad = 0.0;
    double wavelength_nm = 810.0;
    double filter_bandwidth_nm = 4.0;
    double flight_time_ns = 0.0;

    CoherenceModel coherence() const;
    ProtocolParams to_params(double drift_dt = 0.0) const;
    double window_s() const { return window_ns * 1e-9; }
    double flight_time_s() const { return flight_time_ns * 1e-9; }
};

struct DriftConfig {
    std::string kind = "random_walk";  // or "ornstein_uhlenbeck"
    double step_sigma = 0.1;           // rad/sqrt(s)
    double reversion_rate = 0.0;       // 1/s, OU only

    DriftParams to_params() const;
};

struct ControllerConfig {
    double gain = 1.6;
    double dither_rad = 0.1;
    double update_interval_s = 1.0;
    double actuator_limit_rad = 1.0;
    std::string lock_target = "zero";  // or "pi"

    Controller to_controller() const;
};

struct ProbeConfig {
    double visibility = 0.99;
    double shot_noise_sigma = 0.005;
    double phase_scale = 810.0 / 633.0;

    ProbeModel to_model() const;
};

struct ThreePeakConfig {
    std::uint64_t photons = 100000;
    std::vector<double> thetas_deg = {0.0, 45.0};
    std::string input_state = "plus";
    double accidental_rate = 0.0;
    double prep_infidelity = 0.0;
};

struct EnvelopeConfig {
    double mode_match = 0.992;
    double scan_halfwidth_um = 500.0;
    double scan_step_um = 2.0;
};

struct BfeSweepConfig {
    std::uint64_t photons = 100000;
    std::vector<double> channel_error_rates = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5,
                                               0.6, 0.7, 0.8, 0.9, 1.0};
    std::vector<std::string> input_states = {"H", "plus", "R"};
    std::vector<double> fiber_lengths_m = {10.0, 800.0};
    double prep_infidelity = 0.02;
    double accidental_rate = 0.01;
    double residual_phase_rad = 0.0;
};

struct LockRunConfig {
    double duration_s = 3600.0;
    double initial_phase_rad = 0.0;
    double fiber_length_m = 800.0;
    DriftConfig drift;
    ControllerConfig controller;
    ProbeConfig probe;
};

struct ChshConfig {
    double pair_rate_hz = 22000.0;
    double v_hv = 0.981;
    double v_diag = 0.926;
    std::vector<double> angles_deg = {0.0, 45.0, 22.5, 67.5};
    std::uint64_t pairs_per_setting = 872;
    double accidental_rate = 0.0;
    std::uint32_t repetitions = 10;
    std::uint32_t slices_per_repetition = 60;
    double repetition_duration_s = 360.0;
    double fiber_length_m = 800.0;
    DriftConfig drift;
    ControllerConfig controller;
    ProbeConfig probe;

    SpdcSource source() const { return SpdcSource{pair_rate_hz, v_hv, v_diag}; }
    ChshAngles angles() const;
};

/// One runnable experiment: kind switch plus the per-kind section.
struct ExperimentScenario {
    std::string name;
    ScenarioKind kind = ScenarioKind::ThreePeak;
    std::uint64_t seed = 1;
    ProtocolConfig protocol;

    ThreePeakConfig three_peak;
    EnvelopeConfig envelope_scan;
    BfeSweepConfig bfe_sweep;
    LockRunConfig lock_run;
    ChshConfig chsh;
};

/// Parses and validates; throws ConfigError listing every problem found.
/// Unknown keys are errors.
ExperimentScenario parse_scenario(const nlohmann::json& j);
ExperimentScenario parse_scenario_file(const std::string& path);

nlohmann::json serialize_scenario(const ExperimentScenario& scenario);

bool operator==(const ExperimentScenario& a, const ExperimentScenario& b);

}  // namespace eft
