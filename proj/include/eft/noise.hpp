#pragma once

#include "eft/polarization.hpp"
#include "eft/rng.hpp"

namespace eft {

// ---------------------------------------------------------------------------
// Noise simulator: QWP(90) - HWP(+-theta) - QWP(90) waveplate stack
// ---------------------------------------------------------------------------

/// HWP orientation of the noise stack; the sign is redrawn per photon.
struct NoiseSimulatorSetting {
    double theta = 0.0;  // radians
    int sign = +1;       // +1 or -1
};

/// Unitary of the noise stack: equals cos(2 theta) I -+ i sin(2 theta) X up
/// to a global phase, with the -+ tied to the HWP sign.
Unitary2 ns_unitary(const NoiseSimulatorSetting& setting);

/// Bit-flip probability engineered by the stack: sin^2(2 theta).
double bfe_probability(double theta);

/// The channel obtained by averaging the two HWP signs with equal weight:
/// (cos^2 2theta, sin^2 2theta, 0, 0).
PauliChannel ns_as_pauli_channel(double theta);

// ---------------------------------------------------------------------------
// Polarization controller
// ---------------------------------------------------------------------------

/// QWP-HWP-QWP settings whose recomposed matrix inverts `static_unitary` up
/// to a global phase, pre-compensating a birefringent channel.
struct PcSettings {
    WaveplateSetting qwp1;
    WaveplateSetting hwp;
    WaveplateSetting qwp2;

    Unitary2 recompose() const;
};

PcSettings pc_compensation(const Unitary2& static_unitary);

// ---------------------------------------------------------------------------
// Slow phase drift of a fiber channel
// ---------------------------------------------------------------------------

enum class DriftKind { RandomWalk, OrnsteinUhlenbeck };

struct DriftParams {
    DriftKind kind = DriftKind::RandomWalk;
    double step_sigma = 0.0;      // rad / sqrt(s)
    double reversion_rate = 0.0;  // 1/s, OU only

    void validate() const;
};

/// Stateful differential-phase drift (a slowly varying Z rotation between the
/// H and V components). One process per logical channel; sampling is
/// deterministic given the stream and call sequence.
class DriftProcess {
public:
    explicit DriftProcess(DriftParams params) : params_(params) { params_.validate(); }

    /// Advances by dt and returns the phase increment. Rejects dt <= 0.
    double step(double dt, RngStream& rng);

    double phase() const { return phase_; }
    void reset(double phase = 0.0) { phase_ = phase; }
    const DriftParams& params() const { return params_; }

private:
    DriftParams params_;
    double phase_ = 0.0;
};

/// Free-function form of DriftProcess::step.
double sample_drift(DriftProcess& process, double dt, RngStream& rng);

// ---------------------------------------------------------------------------
// Fiber channel
// ---------------------------------------------------------------------------

/// A fiber span: fixed random birefringence plus slow differential-phase
/// drift whose magnitude grows with length.
struct FiberChannel {
    double length = 10.0;  // m
    Unitary2 static_unitary = Unitary2::Identity();
    DriftParams drift;

    /// Drift defaults: 0.01 rad/sqrt(s) for short (10 m class) spans,
    /// 0.1 rad/sqrt(s) for km class spans.
    static FiberChannel make(double length_m, RngStream& rng);
};

}  // namespace eft
