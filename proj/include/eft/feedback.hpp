#pragma once

#include <functional>
#include <vector>

#include "eft/noise.hpp"
#include "eft/timebin.hpp"

namespace eft {

// ---------------------------------------------------------------------------
// Probe beam
// ---------------------------------------------------------------------------

/// Normalized intensities at the |+> / |-> analyzer outputs of the probe.
struct ProbeSignal {
    double i_plus = 0.0;
    double i_minus = 0.0;
};

/// i_plus = (1 + visibility cos phi)/2 plus Gaussian shot noise, clamped to
/// [0,1] and renormalized against i_minus. `phi` is the probe's own phase.
ProbeSignal probe_measure(double phi, double visibility, double shot_noise_sigma,
                          RngStream& rng);

/// Probe beam parameters. The probe runs at its own wavelength, so per unit
/// of path drift it accumulates phase_scale times the signal phase
/// (phase per unit path goes as 1/lambda; 810/633 by default).
struct ProbeModel {
    double visibility = 0.99;
    double shot_noise_sigma = 0.0;
    double phase_scale = 810.0 / 633.0;

    void validate() const;
};

// ---------------------------------------------------------------------------
// Controller
// ---------------------------------------------------------------------------

enum class LockTarget { Zero, Pi };

double target_phase(LockTarget target);

struct Controller {
    double gain = 1.6;
    double dither_amplitude = 0.1;  // probe radians
    double update_interval = 1.0;   // s
    double actuator_limit = 1.0;    // rad per update, signal frame
    LockTarget lock_target = LockTarget::Zero;

    void validate() const;
};

/// Signed signal-frame phase error from two probe readings dithered to
/// +-dither_amplitude around the current phase. The cosine fringe is even, so
/// the two dithered samples are demodulated into quadratures; the estimate is
/// (V/2) sin(scale (phi - target)) / scale, odd around the lock point with
/// the sign of (phi - target) for |phi - target| < pi/2.
double estimate_phase_error(const Controller& ctrl, const ProbeModel& probe,
                            const ProbeSignal& at_plus_dither,
                            const ProbeSignal& at_minus_dither);

// ---------------------------------------------------------------------------
// Closed-loop simulation
// ---------------------------------------------------------------------------

/// Maps the current interferometer phase (signal frame) to the post-selected
/// error rate of the protocol at that phase.
using ErrorSampler = std::function<double(double phase)>;

/// Full-pipeline sampler for input |+>: encode, optional Z error when the
/// loop locks at pi, decode at the given residual phase, post-select, and
/// compare with |+>. Equals sin^2(residual/2) analytically.
ErrorSampler make_protocol_error_sampler(LockTarget target,
                                         const ProtocolParams& params,
                                         double window);

struct LockSample {
    double time = 0.0;         // s
    double phase_error = 0.0;  // rad, wrapped to (-pi, pi]
    double post_selected_error_rate = 0.0;
};

struct LockTrace {
    std::vector<LockSample> samples;

    double mean_error_rate() const;
};

/// One probe-and-correct servo around a drifting phase.
class FeedbackLoop {
public:
    FeedbackLoop(Controller ctrl, ProbeModel probe, bool engaged = true,
                 double initial_phase = 0.0);

    /// Drift by dt, then (when engaged) probe twice and apply the bounded
    /// proportional correction. Returns the resulting phase.
    double step(DriftProcess& drift, double dt, RngStream& rng);

    double phase() const { return phase_; }
    const Controller& controller() const { return ctrl_; }

private:
    Controller ctrl_;
    ProbeModel probe_;
    bool engaged_;
    double phase_;
};

struct LockRunOptions {
    double initial_phase = 0.0;
    bool engaged = true;
};

/// Closed-loop trace over `duration` at the controller's update interval.
LockTrace run_lock(DriftProcess& drift, const Controller& ctrl, const ProbeModel& probe,
                   double duration, const ErrorSampler& sampler, RngStream& rng,
                   const LockRunOptions& options = {});

double wrap_phase(double phi);  // to (-pi, pi]

}  // namespace eft
