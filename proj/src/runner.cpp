#include "eft/runner.hpp"

#include <chrono>
#include <cmath>
#include <numbers>

namespace eft {

using nlohmann::json;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDeg2Rad = std::numbers::pi / 180.0;

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

RunReport make_report(const ExperimentScenario& sc, json results) {
    RunReport report;
    report.scenario = serialize_scenario(sc);
    report.results = std::move(results);
    report.seed = sc.seed;
    report.timestamp = utc_timestamp();
    return report;
}

Matrix2 z_rotation(double phi) {
    Matrix2 m = Matrix2::Identity();
    m(1, 1) = std::polar(1.0, phi);
    return m;
}

Vector2 orthogonal_ket(const Vector2& ket) {
    return Vector2(-std::conj(ket(1)), std::conj(ket(0)));
}

double theta_for_error_rate(double error_rate) {
    return 0.5 * std::asin(std::sqrt(error_rate));
}

/// Early/central/late slot probabilities and the central-bin error
/// probability against the ideal state, for one pure branch of the channel.
struct BranchSlots {
    std::array<double, 3> prob{0.0, 0.0, 0.0};
    double central_error = 0.0;
};

BranchSlots branch_slots(const Vector2& input, const Unitary2& channel,
                         const ProtocolConfig& protocol,
                         const PolarizationState& ideal) {
    const CoherenceModel model = protocol.coherence();
    const ProtocolParams params = protocol.to_params();

    TimeBinState state = encode_umzi1(input, params.T, model);
    state = apply_channel_to_timebins(state, channel);
    state = decode_umzi2(state, params.T_prime, params.drift_dt, params.static_phase_offset);
    const ArrivalHistogram hist = arrival_histogram(state, model);

    const double center = *hist.central_time;
    const double half_window = 0.5 * protocol.window_s();
    BranchSlots slots;
    double central_weight = 0.0;
    Matrix2 central_rho = Matrix2::Zero();
    for (const auto& bin : hist.bins) {
        int slot;
        if (std::abs(bin.time - center) <= half_window) {
            slot = 1;
            central_weight += bin.probability;
            central_rho += bin.probability * bin.conditional.rho;
        } else {
            slot = bin.time < center ? 0 : 2;
        }
        slots.prob[slot] += bin.probability;
    }
    if (central_weight > 0.0) {
        slots.central_error =
            1.0 - fidelity(PolarizationState{central_rho / central_weight}, ideal);
    }
    return slots;
}

/// The four (prep variant x noise-stack sign) branches at one grid point.
struct GridPointModel {
    // index [variant][sign]: variant 0 = ideal prep, 1 = orthogonal prep
    BranchSlots branch[2][2];
    double prep_infidelity = 0.0;

    std::array<double, 3> analytic_slots(double accidental) const {
        std::array<double, 3> p{0.0, 0.0, 0.0};
        for (int v = 0; v < 2; ++v) {
            const double wv = (v == 0) ? 1.0 - prep_infidelity : prep_infidelity;
            for (int s = 0; s < 2; ++s) {
                for (int k = 0; k < 3; ++k) p[k] += 0.5 * wv * branch[v][s].prob[k];
            }
        }
        for (int k = 0; k < 3; ++k) p[k] = (1.0 - accidental) * p[k] + accidental / 3.0;
        return p;
    }

    double analytic_efficiency(double accidental) const { return analytic_slots(accidental)[1]; }

    double analytic_error(double accidental) const {
        double err = 0.0;
        for (int v = 0; v < 2; ++v) {
            const double wv = (v == 0) ? 1.0 - prep_infidelity : prep_infidelity;
            for (int s = 0; s < 2; ++s) {
                err += 0.5 * wv * branch[v][s].prob[1] * branch[v][s].central_error;
            }
        }
        const double kept = analytic_efficiency(accidental);
        if (kept <= 0.0) return 0.0;
        return ((1.0 - accidental) * err + accidental / 3.0 * 0.5) / kept;
    }
};

GridPointModel build_grid_point(const Vector2& ideal_ket, double theta,
                                const Unitary2& static_chain, double residual_phase,
                                const ProtocolConfig& protocol, double prep_infidelity) {
    GridPointModel m;
    m.prep_infidelity = prep_infidelity;
    const PolarizationState ideal = PolarizationState::from_ket(ideal_ket);
    const Vector2 kets[2] = {ideal_ket, orthogonal_ket(ideal_ket)};
    for (int v = 0; v < 2; ++v) {
        for (int s = 0; s < 2; ++s) {
            const Unitary2 u = ns_unitary({theta, s == 0 ? +1 : -1}) *
                               z_rotation(residual_phase) * static_chain;
            m.branch[v][s] = branch_slots(kets[v], u, protocol, ideal);
        }
    }
    return m;
}

struct McTally {
    std::array<std::uint64_t, 3> counts{0, 0, 0};
    std::uint64_t central_errors = 0;
    std::uint64_t photons = 0;
};

McTally run_grid_point_mc(const GridPointModel& m, std::uint64_t photons,
                          double accidental, RngStream& rng) {
    McTally tally;
    tally.photons = photons;
    for (std::uint64_t i = 0; i < photons; ++i) {
        std::size_t slot;
        bool error = false;
        if (accidental > 0.0 && rng.bernoulli(accidental)) {
            slot = rng.index(3);
            if (slot == 1) error = rng.bernoulli(0.5);
        } else {
            const int v = rng.bernoulli(m.prep_infidelity) ? 1 : 0;
            const int s = static_cast<int>(rng.index(2));
            const auto& branch = m.branch[v][s];
            slot = rng.categorical(std::span<const double>(branch.prob.data(), 3));
            if (slot == 1) error = rng.bernoulli(branch.central_error);
        }
        ++tally.counts[slot];
        if (slot == 1 && error) ++tally.central_errors;
    }
    return tally;
}

}  // namespace

json RunReport::to_json() const {
    return json{{"scenario", scenario},
                {"results", results},
                {"provenance",
                 json{{"seed", seed}, {"version", version}, {"timestamp", timestamp}}}};
}

RunReport run_scenario(const ExperimentScenario& sc) {
    switch (sc.kind) {
        case ScenarioKind::ThreePeak: return run_three_peak(sc);
        case ScenarioKind::EnvelopeScan: return run_envelope_scan(sc);
        case ScenarioKind::BfeSweep: return run_bfe_sweep(sc);
        case ScenarioKind::LockRun: return run_lock_scenario(sc);
        case ScenarioKind::Chsh: return run_chsh_scenario(sc);
    }
    throw std::logic_error("run_scenario: unhandled kind");
}

// ---------------------------------------------------------------------------
// three_peak
// ---------------------------------------------------------------------------

RunReport run_three_peak(const ExperimentScenario& sc) {
    const auto& c = sc.three_peak;
    const Vector2 input = named_ket(c.input_state);
    const double t_ns = sc.protocol.T_ns;
    const double tp_ns = sc.protocol.T_prime_ns;
    const double dt_ns = sc.protocol.flight_time_ns;

    json runs = json::array();
    for (std::size_t it = 0; it < c.thetas_deg.size(); ++it) {
        const double theta = c.thetas_deg[it] * kDeg2Rad;
        const GridPointModel model =
            build_grid_point(input, theta, Matrix2::Identity(), 0.0, sc.protocol,
                             c.prep_infidelity);
        const auto analytic = model.analytic_slots(c.accidental_rate);

        RngStream rng =
            RngStream::derive(sc.seed, "three_peak/theta" + std::to_string(it));
        const McTally tally = run_grid_point_mc(model, c.photons, c.accidental_rate, rng);

        json run;
        run["theta_deg"] = c.thetas_deg[it];
        run["channel_error_rate"] = bfe_probability(theta);
        run["times_ns"] = {dt_ns, dt_ns + tp_ns, dt_ns + t_ns + tp_ns};
        run["analytic_probabilities"] = analytic;
        run["counts"] = tally.counts;
        run["fractions"] = {
            static_cast<double>(tally.counts[0]) / static_cast<double>(c.photons),
            static_cast<double>(tally.counts[1]) / static_cast<double>(c.photons),
            static_cast<double>(tally.counts[2]) / static_cast<double>(c.photons)};
        run["photons"] = c.photons;
        runs.push_back(std::move(run));
    }
    return make_report(sc, json{{"runs", runs}});
}

// ---------------------------------------------------------------------------
// envelope_scan
// ---------------------------------------------------------------------------

RunReport run_envelope_scan(const ExperimentScenario& sc) {
    const auto& c = sc.envelope_scan;
    const CoherenceModel model = sc.protocol.coherence();

    const auto n = static_cast<long>(c.scan_halfwidth_um / c.scan_step_um + 1e-9);
    std::vector<double> taus;
    taus.reserve(2 * n + 1);
    for (long k = -n; k <= n; ++k) {
        taus.push_back(static_cast<double>(k) * c.scan_step_um * 1e-6 / model.light_speed);
    }
    const auto curve = interference_envelope(taus, c.mode_match, model);

    json points = json::array();
    double peak = 0.0;
    double width_grid_um = 0.0;
    for (std::size_t i = 0; i < curve.size(); ++i) {
        const double x_um = curve[i].first * model.light_speed * 1e6;
        points.push_back({x_um, curve[i].second});
        peak = std::max(peak, curve[i].second);
    }
    // First grid offset where the envelope has fallen below peak/e.
    for (std::size_t i = curve.size() / 2; i < curve.size(); ++i) {
        if (curve[i].second < peak / std::numbers::e) {
            width_grid_um = curve[i].first * model.light_speed * 1e6;
            break;
        }
    }

    json results;
    results["coherence_length_um"] = model.coherence_length() * 1e6;
    results["peak_visibility"] = peak;
    results["width_1e_um_analytic"] = model.coherence_length() * 1e6;
    results["width_1e_um_grid"] = width_grid_um;
    results["curve"] = std::move(points);
    return make_report(sc, std::move(results));
}

// ---------------------------------------------------------------------------
// bfe_sweep
// ---------------------------------------------------------------------------

RunReport run_bfe_sweep(const ExperimentScenario& sc) {
    const auto& c = sc.bfe_sweep;
    json table = json::array();

    for (std::size_t fi = 0; fi < c.fiber_lengths_m.size(); ++fi) {
        const double fiber_m = c.fiber_lengths_m[fi];
        RngStream fiber_stream =
            RngStream::derive(sc.seed, "bfe_sweep/fiber" + std::to_string(fi));
        const FiberChannel fiber = FiberChannel::make(fiber_m, fiber_stream);
        const PcSettings pc = pc_compensation(fiber.static_unitary);
        const Unitary2 static_chain = fiber.static_unitary * pc.recompose();

        for (std::size_t si = 0; si < c.input_states.size(); ++si) {
            const Vector2 input = named_ket(c.input_states[si]);
            for (std::size_t ei = 0; ei < c.channel_error_rates.size(); ++ei) {
                const double error_rate = c.channel_error_rates[ei];
                const double theta = theta_for_error_rate(error_rate);
                const GridPointModel model =
                    build_grid_point(input, theta, static_chain, c.residual_phase_rad,
                                     sc.protocol, c.prep_infidelity);

                RngStream rng = RngStream::derive(
                    sc.seed, "bfe_sweep/mc/f" + std::to_string(fi) + "/s" +
                                 std::to_string(si) + "/e" + std::to_string(ei));
                const McTally tally =
                    run_grid_point_mc(model, c.photons, c.accidental_rate, rng);

                const double kept = static_cast<double>(tally.counts[1]);
                json row;
                row["fiber_m"] = fiber_m;
                row["input_state"] = c.input_states[si];
                row["channel_error_rate"] = error_rate;
                row["theta_deg"] = theta / kDeg2Rad;
                row["efficiency_analytic"] = model.analytic_efficiency(c.accidental_rate);
                row["efficiency_mc"] = kept / static_cast<double>(c.photons);
                row["error_analytic"] = model.analytic_error(c.accidental_rate);
                if (tally.counts[1] > 0) {
                    row["error_mc"] = static_cast<double>(tally.central_errors) / kept;
                } else {
                    row["error_mc"] = nullptr;
                }
                row["kept"] = tally.counts[1];
                row["photons"] = c.photons;
                table.push_back(std::move(row));
            }
        }
    }
    return make_report(sc, json{{"table", table}});
}

// ---------------------------------------------------------------------------
// lock_run
// ---------------------------------------------------------------------------

namespace {

json trace_to_json(const LockTrace& trace) {
    json samples = json::array();
    for (const auto& s : trace.samples) {
        samples.push_back({s.time, s.phase_error, s.post_selected_error_rate});
    }
    double mean_abs_phase = 0.0;
    for (const auto& s : trace.samples) mean_abs_phase += std::abs(s.phase_error);
    if (!trace.samples.empty()) mean_abs_phase /= static_cast<double>(trace.samples.size());
    return json{{"mean_error_rate", trace.mean_error_rate()},
                {"mean_abs_phase_error_rad", mean_abs_phase},
                {"samples", std::move(samples)}};
}

}  // namespace

RunReport run_lock_scenario(const ExperimentScenario& sc) {
    const auto& c = sc.lock_run;
    const Controller ctrl = c.controller.to_controller();
    const ProbeModel probe = c.probe.to_model();
    const ProtocolParams params = sc.protocol.to_params();
    const double window = sc.protocol.window_s();
    const LockTarget target = ctrl.lock_target;

    const ErrorSampler protocol_sampler = make_protocol_error_sampler(target, params, window);
    // Raw-channel reference: the drifting phase acts on the polarization
    // directly, without the time-bin protocol around it.
    const PolarizationState plus = PolarizationState::from_ket(ket_plus());
    const ErrorSampler raw_sampler = [plus](double phase) {
        return 1.0 - fidelity(apply_unitary(plus, z_rotation(phase)), plus);
    };

    const LockRunOptions off{c.initial_phase_rad, false};
    const LockRunOptions on{c.initial_phase_rad, true};

    json traces;
    {
        DriftProcess drift(c.drift.to_params());
        RngStream rng = RngStream::derive(sc.seed, "lock_run/no_eft");
        traces["no_eft"] =
            trace_to_json(run_lock(drift, ctrl, probe, c.duration_s, raw_sampler, rng, off));
    }
    {
        DriftProcess drift(c.drift.to_params());
        RngStream rng = RngStream::derive(sc.seed, "lock_run/eft_unlocked");
        traces["eft_unlocked"] = trace_to_json(
            run_lock(drift, ctrl, probe, c.duration_s, protocol_sampler, rng, off));
    }
    {
        DriftProcess drift(c.drift.to_params());
        RngStream rng = RngStream::derive(sc.seed, "lock_run/eft_locked");
        traces["eft_locked"] = trace_to_json(
            run_lock(drift, ctrl, probe, c.duration_s, protocol_sampler, rng, on));
    }
    return make_report(sc, json{{"traces", std::move(traces)}});
}

// ---------------------------------------------------------------------------
// chsh
// ---------------------------------------------------------------------------

RunReport run_chsh_scenario(const ExperimentScenario& sc) {
    const auto& c = sc.chsh;
    const TwoQubitState source = source_state(c.source());
    const ChshAngles angles = c.angles();
    const ProtocolParams params = sc.protocol.to_params();
    const Controller ctrl = c.controller.to_controller();
    const ProbeModel probe = c.probe.to_model();

    const double slice_dt = c.repetition_duration_s / c.slices_per_repetition;
    const auto lock_steps = static_cast<std::uint64_t>(
        std::max(1.0, std::floor(slice_dt / ctrl.update_interval + 1e-9)));

    const std::array<std::pair<double, double>, 4> setting_pairs = {
        std::pair{angles.a, angles.b}, std::pair{angles.a, angles.b_prime},
        std::pair{angles.a_prime, angles.b}, std::pair{angles.a_prime, angles.b_prime}};

    json records = json::array();
    json pooled;
    for (const bool eft_enabled : {true, false}) {
        const std::string arm = eft_enabled ? "with_eft" : "without_eft";
        DriftProcess drift(c.drift.to_params());
        FeedbackLoop loop(ctrl, probe, eft_enabled, 0.0);
        RngStream loop_stream = RngStream::derive(sc.seed, "chsh/" + arm + "/loop");

        std::array<CountQuad, 4> pooled_quads{};
        for (std::uint32_t rep = 0; rep < c.repetitions; ++rep) {
            RngStream count_stream = RngStream::derive(
                sc.seed, "chsh/" + arm + "/rep" + std::to_string(rep) + "/counts");
            std::array<CountQuad, 4> quads{};
            double efficiency_sum = 0.0;

            for (std::uint32_t slice = 0; slice < c.slices_per_repetition; ++slice) {
                double phase = loop.phase();
                for (std::uint64_t i = 0; i < lock_steps; ++i) {
                    phase = loop.step(drift, ctrl.update_interval, loop_stream);
                }
                const ChannelEnsemble channel = ChannelEnsemble::single(z_rotation(phase));
                const DistributionResult dist =
                    distribute_entanglement(source, channel, params, eft_enabled);
                efficiency_sum += dist.efficiency;

                // Spread the exposure evenly over the slices.
                const std::uint64_t base = c.pairs_per_setting / c.slices_per_repetition;
                const std::uint64_t extra =
                    (slice < c.pairs_per_setting % c.slices_per_repetition) ? 1 : 0;
                const std::uint64_t pairs = base + extra;
                if (pairs == 0) continue;
                for (std::size_t k = 0; k < 4; ++k) {
                    quads[k] += sample_counts(dist.state, setting_pairs[k].first,
                                              setting_pairs[k].second, pairs,
                                              c.accidental_rate, count_stream);
                }
            }
            const ChshResult res = s_with_errorbars(quads);
            for (std::size_t k = 0; k < 4; ++k) pooled_quads[k] += quads[k];

            json record;
            record["repetition"] = rep;
            record["eft_enabled"] = eft_enabled;
            record["angles_deg"] = c.angles_deg;
            json counts = json::array();
            json e_values = json::array();
            json e_sigmas = json::array();
            for (const auto& quad : quads) {
                counts.push_back({quad.n_pp, quad.n_mm, quad.n_pm, quad.n_mp});
                const CorrelationEstimate est = empirical_correlation(quad);
                e_values.push_back(est.e);
                e_sigmas.push_back(est.sigma);
            }
            record["counts"] = std::move(counts);
            record["E"] = std::move(e_values);
            record["sigma_E"] = std::move(e_sigmas);
            record["S"] = res.s_value;
            record["sigma_S"] = res.sigma_s;
            record["mean_efficiency"] =
                efficiency_sum / static_cast<double>(c.slices_per_repetition);
            records.push_back(std::move(record));
        }
        const ChshResult pooled_res = s_with_errorbars(pooled_quads);
        pooled[arm] = json{{"S", pooled_res.s_value}, {"sigma_S", pooled_res.sigma_s}};
    }

    json results;
    results["analytic_S"] = chsh_S(source, angles);
    results["records"] = std::move(records);
    results["pooled"] = std::move(pooled);
    return make_report(sc, std::move(results));
}

// ---------------------------------------------------------------------------
// built-in checks
// ---------------------------------------------------------------------------

namespace {

void check_fraction(double fraction, double expected, std::uint64_t n, double n_sigma,
                    const std::string& what, CheckOutcome* outcome) {
    const double sigma = std::sqrt(std::max(0.0, expected * (1.0 - expected)) /
                                   static_cast<double>(n));
    const double tol = n_sigma * sigma + 1e-12;
    if (std::abs(fraction - expected) > tol) {
        outcome->failures.push_back(what + ": got " + std::to_string(fraction) +
                                    ", expected " + std::to_string(expected) + " +- " +
                                    std::to_string(tol));
    }
}

}  // namespace

CheckOutcome check_report(const ExperimentScenario& sc, const RunReport& report) {
    CheckOutcome outcome;
    const json& r = report.results;
    switch (sc.kind) {
        case ScenarioKind::ThreePeak: {
            for (const auto& run : r.at("runs")) {
                const auto n = run.at("photons").get<std::uint64_t>();
                for (int k = 0; k < 3; ++k) {
                    check_fraction(run.at("fractions")[k].get<double>(),
                                   run.at("analytic_probabilities")[k].get<double>(), n, 5.0,
                                   "three_peak theta=" +
                                       std::to_string(run.at("theta_deg").get<double>()) +
                                       " slot " + std::to_string(k),
                                   &outcome);
                }
            }
            break;
        }
        case ScenarioKind::EnvelopeScan: {
            const double peak = r.at("peak_visibility").get<double>();
            if (std::abs(peak - sc.envelope_scan.mode_match) > 1e-12) {
                outcome.failures.push_back("envelope peak visibility differs from mode match");
            }
            const auto& curve = r.at("curve");
            const std::size_t m = curve.size();
            for (std::size_t i = 0; i < m / 2; ++i) {
                const double left = curve[i][1].get<double>();
                const double right = curve[m - 1 - i][1].get<double>();
                if (std::abs(left - right) > 1e-12) {
                    outcome.failures.push_back("envelope is not symmetric");
                    break;
                }
            }
            break;
        }
        case ScenarioKind::BfeSweep: {
            for (const auto& row : r.at("table")) {
                const auto n = row.at("photons").get<std::uint64_t>();
                const std::string label =
                    "bfe_sweep " + row.at("input_state").get<std::string>() + " e=" +
                    std::to_string(row.at("channel_error_rate").get<double>());
                check_fraction(row.at("efficiency_mc").get<double>(),
                               row.at("efficiency_analytic").get<double>(), n, 5.0,
                               label + " efficiency", &outcome);
                if (!row.at("error_mc").is_null()) {
                    const auto kept = row.at("kept").get<std::uint64_t>();
                    if (kept > 100) {
                        check_fraction(row.at("error_mc").get<double>(),
                                       row.at("error_analytic").get<double>(), kept, 5.0,
                                       label + " error rate", &outcome);
                    }
                }
            }
            break;
        }
        case ScenarioKind::LockRun: {
            const double locked =
                r.at("traces").at("eft_locked").at("mean_error_rate").get<double>();
            const double unlocked =
                r.at("traces").at("eft_unlocked").at("mean_error_rate").get<double>();
            const double raw = r.at("traces").at("no_eft").at("mean_error_rate").get<double>();
            if (locked > 0.10) {
                outcome.failures.push_back("locked mean error rate above 10%: " +
                                           std::to_string(locked));
            }
            if (unlocked < 0.40) {
                outcome.failures.push_back("unlocked mean error rate below 40%: " +
                                           std::to_string(unlocked));
            }
            if (raw < 0.40) {
                outcome.failures.push_back("raw-channel mean error rate below 40%: " +
                                           std::to_string(raw));
            }
            break;
        }
        case ScenarioKind::Chsh: {
            const double analytic = r.at("analytic_S").get<double>();
            for (const auto& record : r.at("records")) {
                if (!record.at("eft_enabled").get<bool>()) continue;
                const double s = record.at("S").get<double>();
                const double sigma = record.at("sigma_S").get<double>();
                if (s - 2.0 < 3.0 * sigma) {
                    outcome.failures.push_back("with EFT, repetition " +
                                               record.at("repetition").dump() +
                                               " does not violate S=2 by 3 sigma");
                }
            }
            const double pooled_eft = r.at("pooled").at("with_eft").at("S").get<double>();
            const double pooled_eft_sigma =
                r.at("pooled").at("with_eft").at("sigma_S").get<double>();
            const double expected = (1.0 - sc.chsh.accidental_rate) * analytic;
            if (std::abs(pooled_eft - expected) > 5.0 * pooled_eft_sigma + 5e-3) {
                outcome.failures.push_back("pooled with-EFT S away from analytic value");
            }
            const double pooled_raw = r.at("pooled").at("without_eft").at("S").get<double>();
            if (pooled_raw > 2.0) {
                outcome.failures.push_back("time-averaged S without EFT above 2: " +
                                           std::to_string(pooled_raw));
            }
            break;
        }
    }
    outcome.passed = outcome.failures.empty();
    return outcome;
}

}  // namespace eft
