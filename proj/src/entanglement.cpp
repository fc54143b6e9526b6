#include "eft/entanglement.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <unsupported/Eigen/KroneckerProduct>

namespace eft {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kHalfPi = std::numbers::pi / 2.0;

Matrix2 projector(double theta) {
    const Vector2 axis(std::cos(theta), std::sin(theta));
    return axis * axis.adjoint();
}

Matrix4 kron_right(const Matrix2& k) {
    return Eigen::kroneckerProduct(Matrix2::Identity(), k).eval();
}

}  // namespace

void TwoQubitState::validate(double tol) const {
    if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > tol) {
        throw std::invalid_argument("TwoQubitState: rho is not Hermitian");
    }
    if (std::abs(rho.trace().real() - 1.0) > tol || std::abs(rho.trace().imag()) > tol) {
        throw std::invalid_argument("TwoQubitState: trace is not 1");
    }
    Eigen::SelfAdjointEigenSolver<Matrix4> es(rho);
    if (es.eigenvalues().minCoeff() < -tol) {
        throw std::invalid_argument("TwoQubitState: rho is not positive semidefinite");
    }
}

TwoQubitState bell_phi_plus() {
    Eigen::Vector4cd ket = Eigen::Vector4cd::Zero();
    ket(0) = 1.0 / std::sqrt(2.0);
    ket(3) = 1.0 / std::sqrt(2.0);
    return TwoQubitState{ket * ket.adjoint()};
}

void SpdcSource::validate() const {
    if (pair_rate < 0.0) throw std::invalid_argument("SpdcSource: negative pair rate");
    if (v_hv < 0.0 || v_hv > 1.0 || v_diag < 0.0 || v_diag > 1.0) {
        throw std::invalid_argument("SpdcSource: visibilities outside [0,1]");
    }
}

TwoQubitState source_state(const SpdcSource& src) {
    src.validate();
    Matrix4 rho = Matrix4::Zero();
    rho(0, 0) = rho(3, 3) = 0.25 * (1.0 + src.v_hv);
    rho(1, 1) = rho(2, 2) = 0.25 * (1.0 - src.v_hv);
    rho(0, 3) = rho(3, 0) = 0.5 * src.v_diag;
    TwoQubitState state{rho};
    state.validate();  // rejects visibility pairs with no PSD realization
    return state;
}

double visibility_hv(const TwoQubitState& rho) { return correlation_E(rho, 0.0, 0.0); }

double visibility_diag(const TwoQubitState& rho) {
    return correlation_E(rho, kPi / 4.0, kPi / 4.0);
}

Matrix2 analyzer_observable(double theta) {
    return projector(theta) - projector(theta + kHalfPi);
}

double correlation_E(const TwoQubitState& rho, double theta_a, double theta_b) {
    const Matrix4 obs = Eigen::kroneckerProduct(analyzer_observable(theta_a),
                                                analyzer_observable(theta_b))
                            .eval();
    return (rho.rho * obs).trace().real();
}

ChshAngles ChshAngles::canonical() {
    return ChshAngles{0.0, kPi / 4.0, kPi / 8.0, 3.0 * kPi / 8.0};
}

double chsh_S(const TwoQubitState& rho, const ChshAngles& angles) {
    return std::abs(correlation_E(rho, angles.a, angles.b) -
                    correlation_E(rho, angles.a, angles.b_prime) +
                    correlation_E(rho, angles.a_prime, angles.b) +
                    correlation_E(rho, angles.a_prime, angles.b_prime));
}

CountQuad& CountQuad::operator+=(const CountQuad& other) {
    n_pp += other.n_pp;
    n_mm += other.n_mm;
    n_pm += other.n_pm;
    n_mp += other.n_mp;
    return *this;
}

std::array<double, 4> joint_probabilities(const TwoQubitState& rho, double theta_a,
                                          double theta_b) {
    const Matrix2 pa = projector(theta_a);
    const Matrix2 pa_perp = projector(theta_a + kHalfPi);
    const Matrix2 pb = projector(theta_b);
    const Matrix2 pb_perp = projector(theta_b + kHalfPi);
    auto joint = [&rho](const Matrix2& a, const Matrix2& b) {
        const Matrix4 op = Eigen::kroneckerProduct(a, b).eval();
        return std::max(0.0, (rho.rho * op).trace().real());
    };
    return {joint(pa, pb), joint(pa_perp, pb_perp), joint(pa, pb_perp), joint(pa_perp, pb)};
}

CountQuad sample_counts(const TwoQubitState& rho, double theta_a, double theta_b,
                        std::uint64_t pairs, double accidental_rate, RngStream& rng) {
    if (pairs == 0) throw std::invalid_argument("sample_counts: pairs must be positive");
    if (accidental_rate < 0.0 || accidental_rate > 1.0) {
        throw std::invalid_argument("sample_counts: accidental rate outside [0,1]");
    }
    std::array<double, 4> probs = joint_probabilities(rho, theta_a, theta_b);
    for (double& p : probs) {
        p = (1.0 - accidental_rate) * p + 0.25 * accidental_rate;
    }
    CountQuad quad;
    std::uint64_t* slots[4] = {&quad.n_pp, &quad.n_mm, &quad.n_pm, &quad.n_mp};
    for (std::uint64_t i = 0; i < pairs; ++i) {
        ++*slots[rng.categorical(probs)];
    }
    return quad;
}

CorrelationEstimate empirical_correlation(const CountQuad& quad) {
    const auto total = quad.total();
    if (total == 0) throw std::invalid_argument("empirical_correlation: all counts zero");
    const double t = static_cast<double>(total);
    const double same = static_cast<double>(quad.n_pp + quad.n_mm);
    const double diff = static_cast<double>(quad.n_pm + quad.n_mp);
    const double d = same - diff;
    CorrelationEstimate est;
    est.e = d / t;
    // Independent Poisson counts, first order: dE/dn = (+-t - d)/t^2.
    const double var = ((t - d) * (t - d) * same + (t + d) * (t + d) * diff) / (t * t * t * t);
    est.sigma = std::sqrt(var);
    return est;
}

ChshResult s_with_errorbars(const std::array<CountQuad, 4>& quads) {
    std::array<CorrelationEstimate, 4> est;
    for (std::size_t i = 0; i < 4; ++i) est[i] = empirical_correlation(quads[i]);
    ChshResult result;
    result.s_value = std::abs(est[0].e - est[1].e + est[2].e + est[3].e);
    double var = 0.0;
    for (const auto& e : est) var += e.sigma * e.sigma;
    result.sigma_s = std::sqrt(var);
    return result;
}

ChannelEnsemble ChannelEnsemble::single(const Unitary2& u) {
    return ChannelEnsemble{{{1.0, u}}};
}

ChannelEnsemble ChannelEnsemble::from_pauli(const PauliChannel& channel) {
    channel.validate();
    ChannelEnsemble ensemble;
    const PauliOp ops[4] = {PauliOp::I, PauliOp::X, PauliOp::Z, PauliOp::XZ};
    for (int i = 0; i < 4; ++i) {
        if (channel.p[i] > 0.0) ensemble.branches.emplace_back(channel.p[i], pauli_matrix(ops[i]));
    }
    return ensemble;
}

void ChannelEnsemble::validate() const {
    if (branches.empty()) throw std::invalid_argument("ChannelEnsemble: no branches");
    double sum = 0.0;
    for (const auto& [w, u] : branches) {
        if (w < 0.0) throw std::invalid_argument("ChannelEnsemble: negative weight");
        validate_unitary(u, 1e-9);
        sum += w;
    }
    if (std::abs(sum - 1.0) > kAlgebraTol) {
        throw std::invalid_argument("ChannelEnsemble: weights do not sum to 1");
    }
}

DistributionResult distribute_entanglement(const TwoQubitState& rho,
                                           const ChannelEnsemble& channel,
                                           const ProtocolParams& params,
                                           bool eft_enabled) {
    channel.validate();
    Matrix4 out = Matrix4::Zero();
    for (const auto& [weight, u] : channel.branches) {
        Matrix4 op;
        if (eft_enabled) {
            op = kron_right(eft_kraus_ops(u, params).central);
        } else {
            op = kron_right(u);
        }
        out += weight * op * rho.rho * op.adjoint();
    }
    const double efficiency = out.trace().real();
    if (efficiency <= 0.0) {
        return DistributionResult{TwoQubitState{Matrix4::Identity() * 0.25}, 0.0};
    }
    return DistributionResult{TwoQubitState{out / efficiency}, efficiency};
}

}  // namespace eft
