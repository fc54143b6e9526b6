#include "eft/feedback.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace eft {

namespace {
constexpr double kPi = std::numbers::pi;
}

double wrap_phase(double phi) {
    double w = std::remainder(phi, 2.0 * kPi);
    if (w <= -kPi) w += 2.0 * kPi;
    return w;
}

ProbeSignal probe_measure(double phi, double visibility, double shot_noise_sigma,
                          RngStream& rng) {
    if (visibility < 0.0 || visibility > 1.0) {
        throw std::invalid_argument("probe_measure: visibility outside [0,1]");
    }
    if (shot_noise_sigma < 0.0) {
        throw std::invalid_argument("probe_measure: negative shot noise");
    }
    double i_plus = 0.5 * (1.0 + visibility * std::cos(phi));
    if (shot_noise_sigma > 0.0) i_plus += shot_noise_sigma * rng.gaussian();
    i_plus = std::clamp(i_plus, 0.0, 1.0);
    return ProbeSignal{i_plus, 1.0 - i_plus};
}

void ProbeModel::validate() const {
    if (visibility < 0.0 || visibility > 1.0) {
        throw std::invalid_argument("ProbeModel: visibility outside [0,1]");
    }
    if (shot_noise_sigma < 0.0) throw std::invalid_argument("ProbeModel: negative shot noise");
    if (phase_scale <= 0.0) throw std::invalid_argument("ProbeModel: phase_scale must be > 0");
}

double target_phase(LockTarget target) {
    return target == LockTarget::Zero ? 0.0 : kPi;
}

void Controller::validate() const {
    if (gain <= 0.0) throw std::invalid_argument("Controller: gain must be > 0");
    if (dither_amplitude <= 0.0 || dither_amplitude >= kPi / 2.0) {
        throw std::invalid_argument("Controller: dither amplitude outside (0, pi/2)");
    }
    if (update_interval <= 0.0) throw std::invalid_argument("Controller: update interval must be > 0");
    if (actuator_limit <= 0.0) throw std::invalid_argument("Controller: actuator limit must be > 0");
}

double estimate_phase_error(const Controller& ctrl, const ProbeModel& probe,
                            const ProbeSignal& at_plus_dither,
                            const ProbeSignal& at_minus_dither) {
    const double d = ctrl.dither_amplitude;
    if (d <= 0.0 || d >= kPi / 2.0) {
        throw std::invalid_argument("estimate_phase_error: dither amplitude outside (0, pi/2)");
    }
    // Quadratures of the fringe: D = (V/2) sin(phi_p), C = (V/2) cos(phi_p).
    const double dq = (at_minus_dither.i_plus - at_plus_dither.i_plus) / (2.0 * std::sin(d));
    const double cq =
        (at_plus_dither.i_plus + at_minus_dither.i_plus - 1.0) / (2.0 * std::cos(d));
    const double probe_target = probe.phase_scale * target_phase(ctrl.lock_target);
    const double est_probe = dq * std::cos(probe_target) - cq * std::sin(probe_target);
    return est_probe / probe.phase_scale;
}

ErrorSampler make_protocol_error_sampler(LockTarget target, const ProtocolParams& params,
                                         double window) {
    const PolarizationState ideal = PolarizationState::from_ket(ket_plus());
    return [target, params, window, ideal](double phase) {
        TimeBinState state = encode_umzi1(ket_plus(), params.T, params.coherence);
        if (target == LockTarget::Pi) {
            state = apply_channel_to_timebins(state, PauliOp::Z);
        }
        state = decode_umzi2(state, params.T_prime, params.drift_dt,
                             params.static_phase_offset + phase);
        const auto selected = post_select(arrival_histogram(state, params.coherence), window);
        return 1.0 - fidelity(selected.state, ideal);
    };
}

double LockTrace::mean_error_rate() const {
    if (samples.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& s : samples) sum += s.post_selected_error_rate;
    return sum / static_cast<double>(samples.size());
}

FeedbackLoop::FeedbackLoop(Controller ctrl, ProbeModel probe, bool engaged,
                           double initial_phase)
    : ctrl_(ctrl), probe_(probe), engaged_(engaged), phase_(initial_phase) {
    ctrl_.validate();
    probe_.validate();
}

double FeedbackLoop::step(DriftProcess& drift, double dt, RngStream& rng) {
    phase_ += drift.step(dt, rng);
    if (engaged_) {
        const double probe_phase = probe_.phase_scale * phase_;
        const ProbeSignal at_plus = probe_measure(probe_phase + ctrl_.dither_amplitude,
                                                  probe_.visibility,
                                                  probe_.shot_noise_sigma, rng);
        const ProbeSignal at_minus = probe_measure(probe_phase - ctrl_.dither_amplitude,
                                                   probe_.visibility,
                                                   probe_.shot_noise_sigma, rng);
        const double estimate = estimate_phase_error(ctrl_, probe_, at_plus, at_minus);
        const double correction =
            std::clamp(ctrl_.gain * estimate, -ctrl_.actuator_limit, ctrl_.actuator_limit);
        phase_ -= correction;
    }
    return phase_;
}

LockTrace run_lock(DriftProcess& drift, const Controller& ctrl, const ProbeModel& probe,
                   double duration, const ErrorSampler& sampler, RngStream& rng,
                   const LockRunOptions& options) {
    if (duration <= 0.0) throw std::invalid_argument("run_lock: duration must be positive");
    if (ctrl.update_interval >= duration) {
        throw std::invalid_argument("run_lock: update interval must be below duration");
    }
    FeedbackLoop loop(ctrl, probe, options.engaged, options.initial_phase);
    const double dt = ctrl.update_interval;

    const auto n_steps = static_cast<std::size_t>(duration / dt + 1e-9);
    LockTrace trace;
    trace.samples.reserve(n_steps);
    for (std::size_t i = 1; i <= n_steps; ++i) {
        const double phase = loop.step(drift, dt, rng);
        LockSample sample;
        sample.time = static_cast<double>(i) * dt;
        sample.phase_error = wrap_phase(phase - target_phase(ctrl.lock_target));
        sample.post_selected_error_rate = sampler(phase);
        trace.samples.push_back(sample);
    }
    return trace;
}

}  // namespace eft
