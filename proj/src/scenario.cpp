#include "eft/scenario.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace eft {

using nlohmann::json;

namespace {

std::string join_issues(const std::vector<std::string>& issues) {
    std::ostringstream os;
    os << "invalid scenario configuration:";
    for (const auto& issue : issues) os << "\n  - " << issue;
    return os.str();
}

/// Tracks which keys of a JSON object were consumed; everything left over is
/// reported as an unknown key (configs are fail-closed).
class ObjectReader {
public:
    ObjectReader(const json& obj, std::string path, std::vector<std::string>* issues)
        : obj_(obj), path_(std::move(path)), issues_(issues) {
        if (!obj_.is_object()) {
            issues_->push_back(path_ + ": expected an object");
            ok_ = false;
        }
    }

    ~ObjectReader() {
        if (!ok_) return;
        for (auto it = obj_.begin(); it != obj_.end(); ++it) {
            if (!consumed_.count(it.key())) {
                issues_->push_back(path_ + "." + it.key() + ": unknown key");
            }
        }
    }

    bool has(const char* key) const { return ok_ && obj_.contains(key); }

    double number(const char* key, double fallback) {
        const json* v = take(key);
        if (!v) return fallback;
        if (!v->is_number()) {
            issues_->push_back(field(key) + ": expected a number");
            return fallback;
        }
        return v->get<double>();
    }

    std::uint64_t uinteger(const char* key, std::uint64_t fallback) {
        const json* v = take(key);
        if (!v) return fallback;
        if (!v->is_number_unsigned()) {
            issues_->push_back(field(key) + ": expected a nonnegative integer");
            return fallback;
        }
        return v->get<std::uint64_t>();
    }

    std::string str(const char* key, std::string fallback) {
        const json* v = take(key);
        if (!v) return fallback;
        if (!v->is_string()) {
            issues_->push_back(field(key) + ": expected a string");
            return fallback;
        }
        return v->get<std::string>();
    }

    std::vector<double> number_array(const char* key, std::vector<double> fallback) {
        const json* v = take(key);
        if (!v) return fallback;
        if (!v->is_array()) {
            issues_->push_back(field(key) + ": expected an array of numbers");
            return fallback;
        }
        std::vector<double> out;
        for (const auto& e : *v) {
            if (!e.is_number()) {
                issues_->push_back(field(key) + ": expected an array of numbers");
                return fallback;
            }
            out.push_back(e.get<double>());
        }
        return out;
    }

    std::vector<std::string> string_array(const char* key, std::vector<std::string> fallback) {
        const json* v = take(key);
        if (!v) return fallback;
        if (!v->is_array()) {
            issues_->push_back(field(key) + ": expected an array of strings");
            return fallback;
        }
        std::vector<std::string> out;
        for (const auto& e : *v) {
            if (!e.is_string()) {
                issues_->push_back(field(key) + ": expected an array of strings");
                return fallback;
            }
            out.push_back(e.get<std::string>());
        }
        return out;
    }

    /// Returns the child object (or nullptr when absent) and marks it consumed.
    const json* child(const char* key) { return take(key); }

    std::string field(const char* key) const { return path_ + "." + key; }

private:
    const json* take(const char* key) {
        if (!ok_ || !obj_.contains(key)) return nullptr;
        consumed_.insert(key);
        return &obj_.at(key);
    }

    const json& obj_;
    std::string path_;
    std::vector<std::string>* issues_;
    std::set<std::string> consumed_;
    bool ok_ = true;
};

void require(bool condition, const std::string& message, std::vector<std::string>* issues) {
    if (!condition) issues->push_back(message);
}

ProtocolConfig parse_protocol(const json& j, const std::string& path,
                              std::vector<std::string>* issues) {
    ProtocolConfig cfg;
    ObjectReader r(j, path, issues);
    cfg.T_ns = r.number("T_ns", cfg.T_ns);
    cfg.T_prime_ns = r.number("T_prime_ns", cfg.T_prime_ns);
    cfg.window_ns = r.number("window_ns", cfg.window_ns);
    cfg.static_phase_offset_rad = r.number("static_phase_offset_rad", cfg.static_phase_offset_rad);
    cfg.wavelength_nm = r.number("wavelength_nm", cfg.wavelength_nm);
    cfg.filter_bandwidth_nm = r.number("filter_bandwidth_nm", cfg.filter_bandwidth_nm);
    cfg.flight_time_ns = r.number("flight_time_ns", cfg.flight_time_ns);

    require(cfg.T_ns > 0.0, path + ".T_ns: must be > 0", issues);
    require(cfg.T_prime_ns > 0.0, path + ".T_prime_ns: must be > 0", issues);
    require(cfg.window_ns > 0.0, path + ".window_ns: must be > 0", issues);
    require(cfg.window_ns < std::min(cfg.T_ns, cfg.T_prime_ns),
            path + ".window_ns: must be below the bin spacing", issues);
    require(cfg.wavelength_nm > 0.0, path + ".wavelength_nm: must be > 0", issues);
    require(cfg.filter_bandwidth_nm > 0.0, path + ".filter_bandwidth_nm: must be > 0", issues);
    require(cfg.flight_time_ns >= 0.0, path + ".flight_time_ns: must be >= 0", issues);
    return cfg;
}

DriftConfig parse_drift(const json& j, const std::string& path,
                        std::vector<std::string>* issues) {
    DriftConfig cfg;
    ObjectReader r(j, path, issues);
    cfg.kind = r.str("kind", cfg.kind);
    cfg.step_sigma = r.number("step_sigma", cfg.step_sigma);
    cfg.reversion_rate = r.number("reversion_rate", cfg.reversion_rate);
    require(cfg.kind == "random_walk" || cfg.kind == "ornstein_uhlenbeck",
            path + ".kind: must be random_walk or ornstein_uhlenbeck", issues);
    require(cfg.step_sigma >= 0.0, path + ".step_sigma: must be >= 0", issues);
    if (cfg.kind == "ornstein_uhlenbeck") {
        require(cfg.reversion_rate > 0.0, path + ".reversion_rate: must be > 0", issues);
    }
    return cfg;
}

ControllerConfig parse_controller(const json& j, const std::string& path,
                                  std::vector<std::string>* issues) {
    ControllerConfig cfg;
    ObjectReader r(j, path, issues);
    cfg.gain = r.number("gain", cfg.gain);
    cfg.dither_rad = r.number("dither_rad", cfg.dither_rad);
    cfg.update_interval_s = r.number("update_interval_s", cfg.update_interval_s);
    cfg.actuator_limit_rad = r.number("actuator_limit_rad", cfg.actuator_limit_rad);
    cfg.lock_target = r.str("lock_target", cfg.lock_target);
    require(cfg.gain > 0.0, path + ".gain: must be > 0", issues);
    require(cfg.dither_rad > 0.0 && cfg.dither_rad < std::numbers::pi / 2.0,
            path + ".dither_rad: must be in (0, pi/2)", issues);
    require(cfg.update_interval_s > 0.0, path + ".update_interval_s: must be > 0", issues);
    require(cfg.actuator_limit_rad > 0.0, path + ".actuator_limit_rad: must be > 0", issues);
    require(cfg.lock_target == "zero" || cfg.lock_target == "pi",
            path + ".lock_target: must be zero or pi", issues);
    return cfg;
}

ProbeConfig parse_probe(const json& j, const std::string& path,
                        std::vector<std::string>* issues) {
    ProbeConfig cfg;
    ObjectReader r(j, path, issues);
    cfg.visibility = r.number("visibility", cfg.visibility);
    cfg.shot_noise_sigma = r.number("shot_noise_sigma", cfg.shot_noise_sigma);
    cfg.phase_scale = r.number("phase_scale", cfg.phase_scale);
    require(cfg.visibility >= 0.0 && cfg.visibility <= 1.0,
            path + ".visibility: must be in [0,1]", issues);
    require(cfg.shot_noise_sigma >= 0.0, path + ".shot_noise_sigma: must be >= 0", issues);
    require(cfg.phase_scale > 0.0, path + ".phase_scale: must be > 0", issues);
    return cfg;
}

bool valid_state_name(const std::string& s) {
    return s == "H" || s == "V" || s == "plus" || s == "minus" || s == "R" || s == "L";
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> issues)
    : std::runtime_error(join_issues(issues)), issues_(std::move(issues)) {}

std::string to_string(ScenarioKind kind) {
    switch (kind) {
        case ScenarioKind::ThreePeak: return "three_peak";
        case ScenarioKind::EnvelopeScan: return "envelope_scan";
        case ScenarioKind::BfeSweep: return "bfe_sweep";
        case ScenarioKind::LockRun: return "lock_run";
        case ScenarioKind::Chsh: return "chsh";
    }
    return "unknown";
}

ScenarioKind scenario_kind_from_string(const std::string& s) {
    if (s == "three_peak") return ScenarioKind::ThreePeak;
    if (s == "envelope_scan") return ScenarioKind::EnvelopeScan;
    if (s == "bfe_sweep") return ScenarioKind::BfeSweep;
    if (s == "lock_run") return ScenarioKind::LockRun;
    if (s == "chsh") return ScenarioKind::Chsh;
    throw ConfigError({"kind: unknown scenario kind '" + s + "'"});
}

CoherenceModel ProtocolConfig::coherence() const {
    CoherenceModel model;
    model.wavelength = wavelength_nm * 1e-9;
    model.bandwidth = filter_bandwidth_nm * 1e-9;
    return model;
}

ProtocolParams ProtocolConfig::to_params(double drift_dt) const {
    ProtocolParams params;
    params.T = T_ns * 1e-9;
    params.T_prime = T_prime_ns * 1e-9;
    params.drift_dt = drift_dt;
    params.static_phase_offset = static_phase_offset_rad;
    params.coherence = coherence();
    return params;
}

DriftParams DriftConfig::to_params() const {
    DriftParams params;
    params.kind = (kind == "random_walk") ? DriftKind::RandomWalk : DriftKind::OrnsteinUhlenbeck;
    params.step_sigma = step_sigma;
    params.reversion_rate = reversion_rate;
    return params;
}

Controller ControllerConfig::to_controller() const {
    Controller ctrl;
    ctrl.gain = gain;
    ctrl.dither_amplitude = dither_rad;
    ctrl.update_interval = update_interval_s;
    ctrl.actuator_limit = actuator_limit_rad;
    ctrl.lock_target = (lock_target == "pi") ? LockTarget::Pi : LockTarget::Zero;
    return ctrl;
}

ProbeModel ProbeConfig::to_model() const {
    return ProbeModel{visibility, shot_noise_sigma, phase_scale};
}

ChshAngles ChshConfig::angles() const {
    const double d2r = std::numbers::pi / 180.0;
    return ChshAngles{angles_deg[0] * d2r, angles_deg[1] * d2r, angles_deg[2] * d2r,
                      angles_deg[3] * d2r};
}

ExperimentScenario parse_scenario(const json& j) {
    std::vector<std::string> issues;
    ExperimentScenario sc;
    {
        ObjectReader r(j, "scenario", &issues);
        sc.name = r.str("name", "");
        const std::string kind = r.str("kind", "");
        sc.seed = r.uinteger("seed", sc.seed);
        require(!sc.name.empty(), "scenario.name: required", &issues);

        bool kind_ok = true;
        try {
            sc.kind = scenario_kind_from_string(kind);
        } catch (const ConfigError&) {
            issues.push_back("scenario.kind: must be one of three_peak, envelope_scan, "
                             "bfe_sweep, lock_run, chsh (got '" + kind + "')");
            kind_ok = false;
        }

        if (const json* p = r.child("protocol")) {
            sc.protocol = parse_protocol(*p, "protocol", &issues);
        }

        if (kind_ok) {
            const std::string section = to_string(sc.kind);
            const json* body = r.child(section.c_str());
            switch (sc.kind) {
                case ScenarioKind::ThreePeak: {
                    auto& c = sc.three_peak;
                    if (body) {
                        ObjectReader b(*body, section, &issues);
                        c.photons = b.uinteger("photons", c.photons);
                        c.thetas_deg = b.number_array("thetas_deg", c.thetas_deg);
                        c.input_state = b.str("input_state", c.input_state);
                        c.accidental_rate = b.number("accidental_rate", c.accidental_rate);
                        c.prep_infidelity = b.number("prep_infidelity", c.prep_infidelity);
                    }
                    require(c.photons > 0, section + ".photons: must be > 0", &issues);
                    require(!c.thetas_deg.empty(), section + ".thetas_deg: must be nonempty", &issues);
                    require(valid_state_name(c.input_state),
                            section + ".input_state: unknown state name", &issues);
                    require(c.accidental_rate >= 0.0 && c.accidental_rate < 1.0,
                            section + ".accidental_rate: must be in [0,1)", &issues);
                    require(c.prep_infidelity >= 0.0 && c.prep_infidelity <= 0.5,
                            section + ".prep_infidelity: must be in [0,0.5]", &issues);
                    break;
                }
                case ScenarioKind::EnvelopeScan: {
                    auto& c = sc.envelope_scan;
                    if (body) {
                        ObjectReader b(*body, section, &issues);
                        c.mode_match = b.number("mode_match", c.mode_match);
                        c.scan_halfwidth_um = b.number("scan_halfwidth_um", c.scan_halfwidth_um);
                        c.scan_step_um = b.number("scan_step_um", c.scan_step_um);
                    }
                    require(c.mode_match >= 0.0 && c.mode_match <= 1.0,
                            section + ".mode_match: must be in [0,1]", &issues);
                    require(c.scan_halfwidth_um > 0.0,
                            section + ".scan_halfwidth_um: must be > 0", &issues);
                    require(c.scan_step_um > 0.0, section + ".scan_step_um: must be > 0", &issues);
                    break;
                }
                case ScenarioKind::BfeSweep: {
                    auto& c = sc.bfe_sweep;
                    if (body) {
                        ObjectReader b(*body, section, &issues);
                        c.photons = b.uinteger("photons", c.photons);
                        c.channel_error_rates =
                            b.number_array("channel_error_rates", c.channel_error_rates);
                        c.input_states = b.string_array("input_states", c.input_states);
                        c.fiber_lengths_m = b.number_array("fiber_lengths_m", c.fiber_lengths_m);
                        c.prep_infidelity = b.number("prep_infidelity", c.prep_infidelity);
                        c.accidental_rate = b.number("accidental_rate", c.accidental_rate);
                        c.residual_phase_rad = b.number("residual_phase_rad", c.residual_phase_rad);
                    }
                    require(c.photons > 0, section + ".photons: must be > 0", &issues);
                    require(!c.channel_error_rates.empty(),
                            section + ".channel_error_rates: must be nonempty", &issues);
                    for (double e : c.channel_error_rates) {
                        require(e >= 0.0 && e <= 1.0,
                                section + ".channel_error_rates: entries must be in [0,1]", &issues);
                    }
                    require(!c.input_states.empty(),
                            section + ".input_states: must be nonempty", &issues);
                    for (const auto& s : c.input_states) {
                        require(valid_state_name(s), section + ".input_states: unknown state name",
                                &issues);
                    }
                    require(!c.fiber_lengths_m.empty(),
                            section + ".fiber_lengths_m: must be nonempty", &issues);
                    for (double l : c.fiber_lengths_m) {
                        require(l > 0.0, section + ".fiber_lengths_m: entries must be > 0", &issues);
                    }
                    require(c.prep_infidelity >= 0.0 && c.prep_infidelity <= 0.5,
                            section + ".prep_infidelity: must be in [0,0.5]", &issues);
                    require(c.accidental_rate >= 0.0 && c.accidental_rate < 1.0,
                            section + ".accidental_rate: must be in [0,1)", &issues);
                    break;
                }
                case ScenarioKind::LockRun: {
                    auto& c = sc.lock_run;
                    if (body) {
                        ObjectReader b(*body, section, &issues);
                        c.duration_s = b.number("duration_s", c.duration_s);
                        c.initial_phase_rad = b.number("initial_phase_rad", c.initial_phase_rad);
                        c.fiber_length_m = b.number("fiber_length_m", c.fiber_length_m);
                        if (const json* d = b.child("drift"))
                            c.drift = parse_drift(*d, section + ".drift", &issues);
                        if (const json* ctl = b.child("controller"))
                            c.controller = parse_controller(*ctl, section + ".controller", &issues);
                        if (const json* pr = b.child("probe"))
                            c.probe = parse_probe(*pr, section + ".probe", &issues);
                    }
                    require(c.duration_s > 0.0, section + ".duration_s: must be > 0", &issues);
                    require(c.fiber_length_m > 0.0, section + ".fiber_length_m: must be > 0",
                            &issues);
                    require(c.controller.update_interval_s < c.duration_s,
                            section + ".controller.update_interval_s: must be below duration",
                            &issues);
                    break;
                }
                case ScenarioKind::Chsh: {
                    auto& c = sc.chsh;
                    if (body) {
                        ObjectReader b(*body, section, &issues);
                        c.pair_rate_hz = b.number("pair_rate_hz", c.pair_rate_hz);
                        c.v_hv = b.number("v_hv", c.v_hv);
                        c.v_diag = b.number("v_diag", c.v_diag);
                        c.angles_deg = b.number_array("angles_deg", c.angles_deg);
                        c.pairs_per_setting = b.uinteger("pairs_per_setting", c.pairs_per_setting);
                        c.accidental_rate = b.number("accidental_rate", c.accidental_rate);
                        c.repetitions = static_cast<std::uint32_t>(
                            b.uinteger("repetitions", c.repetitions));
                        c.slices_per_repetition = static_cast<std::uint32_t>(
                            b.uinteger("slices_per_repetition", c.slices_per_repetition));
                        c.repetition_duration_s =
                            b.number("repetition_duration_s", c.repetition_duration_s);
                        c.fiber_length_m = b.number("fiber_length_m", c.fiber_length_m);
                        if (const json* d = b.child("drift"))
                            c.drift = parse_drift(*d, section + ".drift", &issues);
                        if (const json* ctl = b.child("controller"))
                            c.controller = parse_controller(*ctl, section + ".controller", &issues);
                        if (const json* pr = b.child("probe"))
                            c.probe = parse_probe(*pr, section + ".probe", &issues);
                    }
                    require(c.pair_rate_hz >= 0.0, section + ".pair_rate_hz: must be >= 0", &issues);
                    require(c.v_hv >= 0.0 && c.v_hv <= 1.0,
                            section + ".v_hv: must be in [0,1]", &issues);
                    require(c.v_diag >= 0.0 && c.v_diag <= 1.0,
                            section + ".v_diag: must be in [0,1]", &issues);
                    require(2.0 * c.v_diag <= 1.0 + c.v_hv + 1e-12,
                            section + ".v_diag: no positive-semidefinite source state for this "
                                      "visibility pair",
                            &issues);
                    require(c.angles_deg.size() == 4,
                            section + ".angles_deg: exactly four angles required", &issues);
                    require(c.pairs_per_setting > 0,
                            section + ".pairs_per_setting: must be > 0", &issues);
                    require(c.accidental_rate >= 0.0 && c.accidental_rate < 1.0,
                            section + ".accidental_rate: must be in [0,1)", &issues);
                    require(c.repetitions > 0, section + ".repetitions: must be > 0", &issues);
                    require(c.slices_per_repetition > 0,
                            section + ".slices_per_repetition: must be > 0", &issues);
                    require(c.repetition_duration_s > 0.0,
                            section + ".repetition_duration_s: must be > 0", &issues);
                    require(c.fiber_length_m > 0.0, section + ".fiber_length_m: must be > 0",
                            &issues);
                    break;
                }
            }
        }
    }
    if (!issues.empty()) throw ConfigError(std::move(issues));
    return sc;
}

ExperimentScenario parse_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError({"cannot open scenario file: " + path});
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError({std::string("JSON parse error: ") + e.what()});
    }
    return parse_scenario(j);
}

namespace {

json drift_to_json(const DriftConfig& c) {
    return json{{"kind", c.kind},
                {"step_sigma", c.step_sigma},
                {"reversion_rate", c.reversion_rate}};
}

json controller_to_json(const ControllerConfig& c) {
    return json{{"gain", c.gain},
                {"dither_rad", c.dither_rad},
                {"update_interval_s", c.update_interval_s},
                {"actuator_limit_rad", c.actuator_limit_rad},
                {"lock_target", c.lock_target}};
}

json probe_to_json(const ProbeConfig& c) {
    return json{{"visibility", c.visibility},
                {"shot_noise_sigma", c.shot_noise_sigma},
                {"phase_scale", c.phase_scale}};
}

}  // namespace

json serialize_scenario(const ExperimentScenario& sc) {
    json j;
    j["name"] = sc.name;
    j["kind"] = to_string(sc.kind);
    j["seed"] = sc.seed;
    j["protocol"] = json{{"T_ns", sc.protocol.T_ns},
                         {"T_prime_ns", sc.protocol.T_prime_ns},
                         {"window_ns", sc.protocol.window_ns},
                         {"static_phase_offset_rad", sc.protocol.static_phase_offset_rad},
                         {"wavelength_nm", sc.protocol.wavelength_nm},
                         {"filter_bandwidth_nm", sc.protocol.filter_bandwidth_nm},
                         {"flight_time_ns", sc.protocol.flight_time_ns}};
    switch (sc.kind) {
        case ScenarioKind::ThreePeak: {
            const auto& c = sc.three_peak;
            j["three_peak"] = json{{"photons", c.photons},
                                   {"thetas_deg", c.thetas_deg},
                                   {"input_state", c.input_state},
                                   {"accidental_rate", c.accidental_rate},
                                   {"prep_infidelity", c.prep_infidelity}};
            break;
        }
        case ScenarioKind::EnvelopeScan: {
            const auto& c = sc.envelope_scan;
            j["envelope_scan"] = json{{"mode_match", c.mode_match},
                                      {"scan_halfwidth_um", c.scan_halfwidth_um},
                                      {"scan_step_um", c.scan_step_um}};
            break;
        }
        case ScenarioKind::BfeSweep: {
            const auto& c = sc.bfe_sweep;
            j["bfe_sweep"] = json{{"photons", c.photons},
                                  {"channel_error_rates", c.channel_error_rates},
                                  {"input_states", c.input_states},
                                  {"fiber_lengths_m", c.fiber_lengths_m},
                                  {"prep_infidelity", c.prep_infidelity},
                                  {"accidental_rate", c.accidental_rate},
                                  {"residual_phase_rad", c.residual_phase_rad}};
            break;
        }
        case ScenarioKind::LockRun: {
            const auto& c = sc.lock_run;
            j["lock_run"] = json{{"duration_s", c.duration_s},
                                 {"initial_phase_rad", c.initial_phase_rad},
                                 {"fiber_length_m", c.fiber_length_m},
                                 {"drift", drift_to_json(c.drift)},
                                 {"controller", controller_to_json(c.controller)},
                                 {"probe", probe_to_json(c.probe)}};
            break;
        }
        case ScenarioKind::Chsh: {
            const auto& c = sc.chsh;
            j["chsh"] = json{{"pair_rate_hz", c.pair_rate_hz},
                             {"v_hv", c.v_hv},
                             {"v_diag", c.v_diag},
                             {"angles_deg", c.angles_deg},
                             {"pairs_per_setting", c.pairs_per_setting},
                             {"accidental_rate", c.accidental_rate},
                             {"repetitions", c.repetitions},
                             {"slices_per_repetition", c.slices_per_repetition},
                             {"repetition_duration_s", c.repetition_duration_s},
                             {"fiber_length_m", c.fiber_length_m},
                             {"drift", drift_to_json(c.drift)},
                             {"controller", controller_to_json(c.controller)},
                             {"probe", probe_to_json(c.probe)}};
            break;
        }
    }
    return j;
}

bool operator==(const ExperimentScenario& a, const ExperimentScenario& b) {
    return serialize_scenario(a) == serialize_scenario(b);
}

}  // namespace eft
