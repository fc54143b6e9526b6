#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "eft/timebin.hpp"

namespace eft {

using Matrix4 = Eigen::Matrix4cd;

// ---------------------------------------------------------------------------
// Two-qubit states and the SPDC source
// ---------------------------------------------------------------------------

/// Two-photon polarization state, basis order (HH, HV, VH, VV).
struct TwoQubitState {
    Matrix4 rho;

    void validate(double tol = kAlgebraTol) const;
};

/// (|HH> + |VV>)/sqrt(2) as a density operator.
TwoQubitState bell_phi_plus();

struct SpdcSource {
    double pair_rate = 22000.0;  // pairs/s
    double v_hv = 1.0;           // correlation visibility, H/V basis
    double v_diag = 1.0;         // correlation visibility, +/- basis

    void validate() const;
};

/// Two-parameter degradation of the Bell state: diagonal populations mixed to
/// set the H/V visibility, coherences scaled to set the +/- visibility.
/// Rejects (v_hv, v_diag) pairs that would not be positive semidefinite.
TwoQubitState source_state(const SpdcSource& src);

/// Correlation visibilities read back from a state.
double visibility_hv(const TwoQubitState& rho);
double visibility_diag(const TwoQubitState& rho);

// ---------------------------------------------------------------------------
// Correlations and the CHSH parameter
// ---------------------------------------------------------------------------

/// Dichotomic linear-analyzer observable P(theta) - P(theta + 90 deg).
Matrix2 analyzer_observable(double theta);

/// E(thetaA, thetaB) = tr(rho A(thetaA) x A(thetaB)), in [-1, 1].
double correlation_E(const TwoQubitState& rho, double theta_a, double theta_b);

struct ChshAngles {
    double a = 0.0;
    double a_prime = 0.0;
    double b = 0.0;
    double b_prime = 0.0;

    /// (0, 45, 22.5, 67.5) degrees.
    static ChshAngles canonical();
};

/// S = |E(a,b) - E(a,b') + E(a',b) + E(a',b')|.
double chsh_S(const TwoQubitState& rho, const ChshAngles& angles);

// ---------------------------------------------------------------------------
// Counting statistics
// ---------------------------------------------------------------------------

/// Coincidence counts at analyzer settings (a,b), (a+90,b+90), (a,b+90),
/// (a+90,b) for one CHSH term.
struct CountQuad {
    std::uint64_t n_pp = 0;
    std::uint64_t n_mm = 0;
    std::uint64_t n_pm = 0;
    std::uint64_t n_mp = 0;

    std::uint64_t total() const { return n_pp + n_mm + n_pm + n_mp; }

    CountQuad& operator+=(const CountQuad& other);
};

/// Joint projection probabilities for the four outcomes of a setting pair,
/// in CountQuad order.
std::array<double, 4> joint_probabilities(const TwoQubitState& rho, double theta_a,
                                          double theta_b);

/// Multinomial draw of `pairs` coincidences; with probability
/// `accidental_rate` an event lands uniformly on the four outcomes.
CountQuad sample_counts(const TwoQubitState& rho, double theta_a, double theta_b,
                        std::uint64_t pairs, double accidental_rate, RngStream& rng);

/// Empirical correlation with first-order Poisson error propagation.
struct CorrelationEstimate {
    double e = 0.0;
    double sigma = 0.0;
};

CorrelationEstimate empirical_correlation(const CountQuad& quad);

struct ChshResult {
    double s_value = 0.0;
    double sigma_s = 0.0;
};

/// S and its uncertainty from the four setting-pair quads, ordered
/// (a,b), (a,b'), (a',b), (a',b'). Rejects all-zero quads.
ChshResult s_with_errorbars(const std::array<CountQuad, 4>& quads);

// ---------------------------------------------------------------------------
// Distribution through the protocol
// ---------------------------------------------------------------------------

/// Incoherent mixture of unitary channel branches, e.g. the two noise-stack
/// signs or the four Pauli branches.
struct ChannelEnsemble {
    std::vector<std::pair<double, Unitary2>> branches;

    static ChannelEnsemble single(const Unitary2& u);
    static ChannelEnsemble from_pauli(const PauliChannel& channel);

    void validate() const;
};

struct DistributionResult {
    TwoQubitState state;
    double efficiency = 1.0;
};

/// Routes the second photon through the channel. With EFT enabled the
/// encode -> channel -> decode -> central-peak post-selection map acts on
/// that tensor factor (efficiency is the kept fraction); with EFT disabled
/// the raw channel acts directly.
DistributionResult distribute_entanglement(const TwoQubitState& rho,
                                           const ChannelEnsemble& channel,
                                           const ProtocolParams& params,
                                           bool eft_enabled);

}  // namespace eft
