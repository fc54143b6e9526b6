#pragma once

#include <Eigen/Dense>
#include <array>
#include <complex>

#include "eft/rng.hpp"

namespace eft {

using Complex = std::complex<double>;
using Matrix2 = Eigen::Matrix2cd;
using Vector2 = Eigen::Vector2cd;

/// 2x2 unitary Jones matrix. Plain Eigen matrix; see validate_unitary().
using Unitary2 = Matrix2;

// Tolerances used throughout: algebraic identities vs iteratively produced
// results (decompositions, recompositions).
inline constexpr double kAlgebraTol = 1e-12;
inline constexpr double kDecompositionTol = 1e-9;

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s

// ---------------------------------------------------------------------------
// Polarization states. Basis order is fixed as (H, V).
// ---------------------------------------------------------------------------

/// Single-photon polarization state as a 2x2 density operator.
struct PolarizationState {
    Matrix2 rho;

    static PolarizationState from_ket(const Vector2& ket);

    /// Throws std::invalid_argument unless rho is Hermitian, unit-trace and
    /// positive semidefinite within `tol`.
    void validate(double tol = kAlgebraTol) const;

    /// Purity tr(rho^2); 1 for pure states.
    double purity() const { return (rho * rho).trace().real(); }
};

Vector2 ket_h();
Vector2 ket_v();
Vector2 ket_plus();
Vector2 ket_minus();
Vector2 ket_r();  // right circular, (|H> + i|V>)/sqrt(2)
Vector2 ket_l();

/// Single-letter state names used by scenario configs: H, V, plus, minus, R, L.
Vector2 named_ket(const std::string& name);

// ---------------------------------------------------------------------------
// Pauli operators and channels
// ---------------------------------------------------------------------------

/// XZ means X applied after Z (matrix product X*Z).
enum class PauliOp { I, X, Z, XZ };

Matrix2 pauli_matrix(PauliOp op);

/// Incoherent Pauli mixture (p_I, p_X, p_Z, p_XZ).
struct PauliChannel {
    std::array<double, 4> p{1.0, 0.0, 0.0, 0.0};

    /// Throws std::invalid_argument if any p_i is outside [0,1] or the
    /// probabilities do not sum to 1 within kAlgebraTol.
    void validate() const;

    PauliOp sample(RngStream& rng) const;
};

// ---------------------------------------------------------------------------
// Waveplates
// ---------------------------------------------------------------------------

enum class WaveplateKind { HWP, QWP };

/// Fast-axis orientation in radians from horizontal, normalized to [0, pi).
struct WaveplateSetting {
    WaveplateKind kind = WaveplateKind::HWP;
    double angle = 0.0;

    WaveplateSetting normalized() const;
};

/// Jones matrix of a waveplate, fast axis horizontal at angle 0, global
/// phases as produced by the convention below:
///   HWP(t) = [[cos 2t, sin 2t], [sin 2t, -cos 2t]]
///   QWP(t) = R(t) diag(1, i) R(-t),  R the 2D rotation matrix.
Unitary2 waveplate_matrix(const WaveplateSetting& setting);

/// QWP-HWP-QWP angle triple realizing an arbitrary 2x2 unitary up to global
/// phase (see decompose_su2_to_qhq).
struct QhqAngles {
    double qwp1 = 0.0;
    double hwp = 0.0;
    double qwp2 = 0.0;
};

/// Finds angles such that QWP(qwp1) * HWP(hwp) * QWP(qwp2) equals `u` up to a
/// global phase. Total on unitary input; closed form, no iteration.
QhqAngles decompose_su2_to_qhq(const Unitary2& u);

/// Recompose the waveplate product QWP(qwp1) * HWP(hwp) * QWP(qwp2).
Unitary2 recompose_qhq(const QhqAngles& angles);

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// rho' = u rho u^dagger
PolarizationState apply_unitary(const PolarizationState& state, const Unitary2& u);

/// rho' = sum_i p_i P_i rho P_i^dagger. Validates the channel.
PolarizationState apply_pauli_channel(const PolarizationState& state,
                                      const PauliChannel& channel);

/// Uhlmann fidelity, squared convention: for pure target |psi> this is
/// <psi|rho|psi>. Closed form for qubits: tr(rho sigma) + 2 sqrt(det rho det sigma).
double fidelity(const PolarizationState& state, const PolarizationState& target);

/// Probability of the analyzer click: linear analyzer at `basis_angle`
/// projects onto cos(t)|H> + sin(t)|V>; with `circular` set, projects onto |R>.
double measure_projector(const PolarizationState& state, double basis_angle,
                         bool circular = false);

// ---------------------------------------------------------------------------
// Matrix utilities shared by modules and tests
// ---------------------------------------------------------------------------

/// Throws std::invalid_argument unless u u^dagger = I within tol.
void validate_unitary(const Unitary2& u, double tol = kAlgebraTol);

/// Operator-norm distance min over global phase of ||e^{i a} A - B||.
double distance_up_to_phase(const Matrix2& a, const Matrix2& b);

/// 0.5 * ||rho - sigma||_1 for Hermitian arguments.
double trace_distance(const Matrix2& rho, const Matrix2& sigma);

/// Haar-distributed 2x2 unitary (QR of a complex Ginibre matrix).
Unitary2 haar_random_unitary(RngStream& rng);

/// Haar-random pure polarization ket.
Vector2 haar_random_ket(RngStream& rng);

}  // namespace eft
