#include "eft/polarization.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace eft {

namespace {

constexpr double kPi = std::numbers::pi;
const Complex kI{0.0, 1.0};

double wrap_angle_half_turn(double angle) {
    double a = std::fmod(angle, kPi);
    if (a < 0.0) a += kPi;
    return a;
}

}  // namespace

PolarizationState PolarizationState::from_ket(const Vector2& ket) {
    const double n = ket.norm();
    if (n <= 0.0) throw std::invalid_argument("from_ket: zero vector");
    Vector2 k = ket / n;
    return PolarizationState{k * k.adjoint()};
}

void PolarizationState::validate(double tol) const {
    if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > tol) {
        throw std::invalid_argument("PolarizationState: rho is not Hermitian");
    }
    if (std::abs(rho.trace().real() - 1.0) > tol || std::abs(rho.trace().imag()) > tol) {
        throw std::invalid_argument("PolarizationState: trace is not 1");
    }
    Eigen::SelfAdjointEigenSolver<Matrix2> es(rho);
    if (es.eigenvalues().minCoeff() < -tol) {
        throw std::invalid_argument("PolarizationState: rho is not positive semidefinite");
    }
}

Vector2 ket_h() { return Vector2(1.0, 0.0); }
Vector2 ket_v() { return Vector2(0.0, 1.0); }
Vector2 ket_plus() { return Vector2(1.0, 1.0) / std::sqrt(2.0); }
Vector2 ket_minus() { return Vector2(1.0, -1.0) / std::sqrt(2.0); }
Vector2 ket_r() { return Vector2(Complex(1.0, 0.0), kI) / std::sqrt(2.0); }
Vector2 ket_l() { return Vector2(Complex(1.0, 0.0), -kI) / std::sqrt(2.0); }

Vector2 named_ket(const std::string& name) {
    if (name == "H") return ket_h();
    if (name == "V") return ket_v();
    if (name == "plus") return ket_plus();
    if (name == "minus") return ket_minus();
    if (name == "R") return ket_r();
    if (name == "L") return ket_l();
    throw std::invalid_argument("unknown state name: " + name);
}

Matrix2 pauli_matrix(PauliOp op) {
    Matrix2 m;
    switch (op) {
        case PauliOp::I: m << 1, 0, 0, 1; break;
        case PauliOp::X: m << 0, 1, 1, 0; break;
        case PauliOp::Z: m << 1, 0, 0, -1; break;
        case PauliOp::XZ: m << 0, -1, 1, 0; break;  // X * Z
    }
    return m;
}

void PauliChannel::validate() const {
    double sum = 0.0;
    for (double pi : p) {
        if (pi < -kAlgebraTol || pi > 1.0 + kAlgebraTol) {
            throw std::invalid_argument("PauliChannel: probability outside [0,1]");
        }
        sum += pi;
    }
    if (std::abs(sum - 1.0) > kAlgebraTol) {
        throw std::invalid_argument("PauliChannel: probabilities do not sum to 1");
    }
}

PauliOp PauliChannel::sample(RngStream& rng) const {
    switch (rng.categorical(std::span<const double>(p.data(), p.size()))) {
        case 0: return PauliOp::I;
        case 1: return PauliOp::X;
        case 2: return PauliOp::Z;
        default: return PauliOp::XZ;
    }
}

WaveplateSetting WaveplateSetting::normalized() const {
    return WaveplateSetting{kind, wrap_angle_half_turn(angle)};
}

Unitary2 waveplate_matrix(const WaveplateSetting& setting) {
    const double t = setting.angle;
    const double c = std::cos(t), s = std::sin(t);
    Matrix2 m;
    if (setting.kind == WaveplateKind::HWP) {
        const double c2 = std::cos(2.0 * t), s2 = std::sin(2.0 * t);
        m << c2, s2, s2, -c2;
    } else {
        Matrix2 rot, retard;
        rot << c, -s, s, c;
        retard << 1.0, 0.0, 0.0, kI;
        m = rot * retard * rot.transpose();
    }
    return m;
}

QhqAngles decompose_su2_to_qhq(const Unitary2& u) {
    validate_unitary(u, 1e-9);
    // Strip the global phase: U = u / sqrt(det u) is special unitary and can
    // be written as U = w I + i (x X + y Y + z Z) with w^2+x^2+y^2+z^2 = 1.
    const Complex det = u.determinant();
    const Complex root = std::sqrt(det);
    const Matrix2 su = u / root;

    const double w = 0.5 * (su(0, 0) + su(1, 1)).real();
    const double z = 0.5 * (su(0, 0) - su(1, 1)).imag();
    const double x = 0.5 * (su(0, 1) + su(1, 0)).imag();
    const double y = 0.5 * (su(0, 1) - su(1, 0)).real();

    // With q(t) = exp(-i pi/4 n(2t).sigma), h(t) = exp(-i pi/2 n(2t).sigma),
    // n(a) = (sin a, 0, cos a), the product q(A) h(B) q(C) has Bloch
    // coordinates
    //   w = -cos(S) cos(D), y = sin(S) cos(D),
    //   x = cos(M) sin(D),  z = -sin(M) sin(D),
    // in terms of u1 = 2A, u2 = 2B, u3 = 2C via
    //   S = ((u1-u2)+(u2-u3))/2, D = ((u1-u2)-(u2-u3))/2, M = u2 + D.
    // Inverting gives closed-form plate angles.
    const double cos_delta = std::hypot(w, y);
    const double sin_delta = std::hypot(x, z);
    const double delta = std::atan2(sin_delta, cos_delta);
    const double sigma = (cos_delta > 1e-15) ? std::atan2(y, -w) : 0.0;
    const double mu = (sin_delta > 1e-15) ? std::atan2(-z, x) : 0.0;

    const double u1 = sigma + mu;
    const double u2 = mu - delta;
    const double u3 = mu - sigma;

    return QhqAngles{wrap_angle_half_turn(0.5 * u1), wrap_angle_half_turn(0.5 * u2),
                     wrap_angle_half_turn(0.5 * u3)};
}

Unitary2 recompose_qhq(const QhqAngles& angles) {
    return waveplate_matrix({WaveplateKind::QWP, angles.qwp1}) *
           waveplate_matrix({WaveplateKind::HWP, angles.hwp}) *
           waveplate_matrix({WaveplateKind::QWP, angles.qwp2});
}

PolarizationState apply_unitary(const PolarizationState& state, const Unitary2& u) {
    return PolarizationState{u * state.rho * u.adjoint()};
}

PolarizationState apply_pauli_channel(const PolarizationState& state,
                                      const PauliChannel& channel) {
    channel.validate();
    Matrix2 out = Matrix2::Zero();
    const PauliOp ops[4] = {PauliOp::I, PauliOp::X, PauliOp::Z, PauliOp::XZ};
    for (int i = 0; i < 4; ++i) {
        if (channel.p[i] == 0.0) continue;
        const Matrix2 pm = pauli_matrix(ops[i]);
        out += channel.p[i] * pm * state.rho * pm.adjoint();
    }
    return PolarizationState{out};
}

double fidelity(const PolarizationState& state, const PolarizationState& target) {
    const double overlap = (state.rho * target.rho).trace().real();
    const double da = std::max(0.0, state.rho.determinant().real());
    const double db = std::max(0.0, target.rho.determinant().real());
    const double f = overlap + 2.0 * std::sqrt(da * db);
    return std::clamp(f, 0.0, 1.0);
}

double measure_projector(const PolarizationState& state, double basis_angle,
                         bool circular) {
    Vector2 axis;
    if (circular) {
        axis = ket_r();
    } else {
        axis = Vector2(std::cos(basis_angle), std::sin(basis_angle));
    }
    const double p = (axis.adjoint() * state.rho * axis)(0, 0).real();
    return std::clamp(p, 0.0, 1.0);
}

void validate_unitary(const Unitary2& u, double tol) {
    if ((u * u.adjoint() - Matrix2::Identity()).cwiseAbs().maxCoeff() > tol) {
        throw std::invalid_argument("matrix is not unitary");
    }
}

double distance_up_to_phase(const Matrix2& a, const Matrix2& b) {
    const Complex t = (a.adjoint() * b).trace();
    Complex phase{1.0, 0.0};
    if (std::abs(t) > 1e-300) phase = t / std::abs(t);
    return (a * phase - b).operatorNorm();
}

double trace_distance(const Matrix2& rho, const Matrix2& sigma) {
    Eigen::SelfAdjointEigenSolver<Matrix2> es(rho - sigma);
    return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

Unitary2 haar_random_unitary(RngStream& rng) {
    Matrix2 g;
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) g(r, c) = Complex(rng.gaussian(), rng.gaussian());
    Eigen::HouseholderQR<Matrix2> qr(g);
    Matrix2 q = qr.householderQ();
    Matrix2 rmat = qr.matrixQR().triangularView<Eigen::Upper>();
    // Fix the phase convention so the distribution is exactly Haar.
    for (int c = 0; c < 2; ++c) {
        Complex d = rmat(c, c);
        q.col(c) *= (std::abs(d) > 0.0) ? d / std::abs(d) : Complex(1.0, 0.0);
    }
    return q;
}

Vector2 haar_random_ket(RngStream& rng) {
    Vector2 v(Complex(rng.gaussian(), rng.gaussian()),
              Complex(rng.gaussian(), rng.gaussian()));
    return v / v.norm();
}

}  // namespace eft
