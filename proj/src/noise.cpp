#include "eft/noise.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace eft {

namespace {
constexpr double kHalfPi = std::numbers::pi / 2.0;
}

Unitary2 ns_unitary(const NoiseSimulatorSetting& setting) {
    if (setting.sign != 1 && setting.sign != -1) {
        throw std::invalid_argument("ns_unitary: sign must be +1 or -1");
    }
    const Unitary2 qwp = waveplate_matrix({WaveplateKind::QWP, kHalfPi});
    const Unitary2 hwp =
        waveplate_matrix({WaveplateKind::HWP, setting.sign * setting.theta});
    return qwp * hwp * qwp;
}

double bfe_probability(double theta) {
    const double s = std::sin(2.0 * theta);
    return s * s;
}

PauliChannel ns_as_pauli_channel(double theta) {
    const double p_flip = bfe_probability(theta);
    return PauliChannel{{1.0 - p_flip, p_flip, 0.0, 0.0}};
}

Unitary2 PcSettings::recompose() const {
    return waveplate_matrix(qwp1) * waveplate_matrix(hwp) * waveplate_matrix(qwp2);
}

PcSettings pc_compensation(const Unitary2& static_unitary) {
    validate_unitary(static_unitary, 1e-9);
    const QhqAngles angles = decompose_su2_to_qhq(static_unitary.adjoint());
    return PcSettings{{WaveplateKind::QWP, angles.qwp1},
                      {WaveplateKind::HWP, angles.hwp},
                      {WaveplateKind::QWP, angles.qwp2}};
}

void DriftParams::validate() const {
    if (step_sigma < 0.0) throw std::invalid_argument("DriftParams: step_sigma must be >= 0");
    if (kind == DriftKind::OrnsteinUhlenbeck && reversion_rate <= 0.0) {
        throw std::invalid_argument("DriftParams: OU reversion_rate must be > 0");
    }
}

double DriftProcess::step(double dt, RngStream& rng) {
    if (dt <= 0.0) throw std::invalid_argument("DriftProcess: dt must be positive");
    double increment = 0.0;
    if (params_.kind == DriftKind::RandomWalk) {
        increment = params_.step_sigma * std::sqrt(dt) * rng.gaussian();
    } else {
        // Exact OU discretization: phi' = phi e^{-k dt} + N(0, s^2 (1-e^{-2k dt})/(2k)).
        const double k = params_.reversion_rate;
        const double decay = std::exp(-k * dt);
        const double stat_var =
            params_.step_sigma * params_.step_sigma * (1.0 - decay * decay) / (2.0 * k);
        const double next = phase_ * decay + std::sqrt(stat_var) * rng.gaussian();
        increment = next - phase_;
    }
    phase_ += increment;
    return increment;
}

double sample_drift(DriftProcess& process, double dt, RngStream& rng) {
    return process.step(dt, rng);
}

FiberChannel FiberChannel::make(double length_m, RngStream& rng) {
    if (length_m <= 0.0) throw std::invalid_argument("FiberChannel: length must be positive");
    FiberChannel fiber;
    fiber.length = length_m;
    fiber.static_unitary = haar_random_unitary(rng);
    fiber.drift.kind = DriftKind::RandomWalk;
    fiber.drift.step_sigma = (length_m >= 100.0) ? 0.1 : 0.01;
    return fiber;
}

}  // namespace eft
