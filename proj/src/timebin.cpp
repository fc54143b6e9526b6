#include "eft/timebin.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace eft {

namespace {

constexpr double kAmplitudeEps = 1e-15;
// Bin times produced by the same arithmetic are compared with a slack far
// below any physical time scale in play (fs drifts, ns bins).
constexpr double kBinMatchTol = 1e-18;

Matrix2 pol_outer(Pol a, Pol b) {
    Matrix2 m = Matrix2::Zero();
    m(a == Pol::H ? 0 : 1, b == Pol::H ? 0 : 1) = Complex(1.0, 0.0);
    return m;
}

}  // namespace

double CoherenceModel::wave_number() const {
    return 2.0 * std::numbers::pi / wavelength;
}

void CoherenceModel::validate() const {
    if (wavelength <= 0.0 || bandwidth <= 0.0 || light_speed <= 0.0) {
        throw std::invalid_argument("CoherenceModel: nonpositive parameter");
    }
}

double coherence_factor(double tau, const CoherenceModel& model) {
    const double x = model.light_speed * tau / model.coherence_length();
    return std::exp(-x * x);
}

double TimeBinState::total_weight() const {
    double w = 0.0;
    for (const auto& t : terms) w += std::norm(t.amplitude);
    return w;
}

TimeBinState encode_umzi1(const Vector2& ket, double T, const CoherenceModel& model) {
    if (T <= 0.0) throw std::invalid_argument("encode_umzi1: T must be positive");
    model.validate();
    const Vector2 k = ket / ket.norm();
    TimeBinState state;
    state.coherence = model;
    if (std::abs(k(0)) > kAmplitudeEps) state.terms.push_back({Pol::H, 0.0, k(0)});
    if (std::abs(k(1)) > kAmplitudeEps) state.terms.push_back({Pol::V, T, k(1)});
    return state;
}

TimeBinState encode_umzi1(const PolarizationState& psi, double T,
                          const CoherenceModel& model) {
    if (psi.purity() < 1.0 - 1e-9) {
        throw std::invalid_argument("encode_umzi1: input state must be pure");
    }
    Eigen::SelfAdjointEigenSolver<Matrix2> es(psi.rho);
    Eigen::Index imax;
    es.eigenvalues().maxCoeff(&imax);
    return encode_umzi1(Vector2(es.eigenvectors().col(imax)), T, model);
}

TimeBinState apply_channel_to_timebins(const TimeBinState& state, const Unitary2& u) {
    // Group terms into bins and transform the per-bin polarization vector.
    std::vector<TimeBinTerm> sorted = state.terms;
    std::sort(sorted.begin(), sorted.end(),
              [](const TimeBinTerm& a, const TimeBinTerm& b) { return a.bin_time < b.bin_time; });

    TimeBinState out;
    out.coherence = state.coherence;
    out.central_time = state.central_time;
    std::size_t i = 0;
    while (i < sorted.size()) {
        const double t = sorted[i].bin_time;
        Vector2 amp = Vector2::Zero();
        while (i < sorted.size() && sorted[i].bin_time - t <= kBinMatchTol) {
            amp(sorted[i].pol == Pol::H ? 0 : 1) += sorted[i].amplitude;
            ++i;
        }
        const Vector2 transformed = u * amp;
        if (std::abs(transformed(0)) > kAmplitudeEps)
            out.terms.push_back({Pol::H, t, transformed(0)});
        if (std::abs(transformed(1)) > kAmplitudeEps)
            out.terms.push_back({Pol::V, t, transformed(1)});
    }
    return out;
}

TimeBinState apply_channel_to_timebins(const TimeBinState& state, PauliOp op) {
    return apply_channel_to_timebins(state, pauli_matrix(op));
}

TimeBinState decode_umzi2(const TimeBinState& state, double T_prime, double drift_dt,
                          double static_phase_offset) {
    if (T_prime <= 0.0) throw std::invalid_argument("decode_umzi2: T' must be positive");
    const double t_eff = T_prime + drift_dt;

    TimeBinState out;
    out.coherence = state.coherence;
    out.central_time = t_eff;
    out.terms.reserve(state.terms.size());

    double min_bin = std::numeric_limits<double>::infinity();
    for (const auto& term : state.terms) {
        TimeBinTerm moved = term;
        if (term.pol == Pol::H) moved.bin_time += t_eff;
        // Terms delayed by the first interferometer carry the channel's
        // static differential phase.
        if (term.bin_time > kBinMatchTol) {
            moved.amplitude *= std::polar(1.0, static_phase_offset);
        }
        min_bin = std::min(min_bin, moved.bin_time);
        out.terms.push_back(moved);
    }

    // Rebuild propagation phases from accumulated delays, relative to the
    // earliest bin: coincident terms end up with phase k c (delay difference).
    const double kc = state.coherence.wave_number() * state.coherence.light_speed;
    for (auto& term : out.terms) {
        term.amplitude *= std::polar(1.0, kc * (term.bin_time - min_bin));
    }
    return out;
}

ArrivalHistogram arrival_histogram(const TimeBinState& state, const CoherenceModel& model) {
    if (state.terms.empty() || state.total_weight() <= kAmplitudeEps) {
        throw std::invalid_argument("arrival_histogram: empty state");
    }
    std::vector<TimeBinTerm> sorted = state.terms;
    std::sort(sorted.begin(), sorted.end(),
              [](const TimeBinTerm& a, const TimeBinTerm& b) { return a.bin_time < b.bin_time; });

    // Peaks split where the gap exceeds the scale on which gamma has died off.
    const double cluster_gap = std::max(10.0 * model.coherence_time(), 1e-15);

    ArrivalHistogram hist;
    hist.central_time = state.central_time;

    std::size_t i = 0;
    double total = 0.0;
    while (i < sorted.size()) {
        std::size_t j = i + 1;
        while (j < sorted.size() && sorted[j].bin_time - sorted[j - 1].bin_time <= cluster_gap) ++j;

        Matrix2 rho = Matrix2::Zero();
        double weight_time = 0.0, weight = 0.0;
        for (std::size_t a = i; a < j; ++a) {
            weight += std::norm(sorted[a].amplitude);
            weight_time += std::norm(sorted[a].amplitude) * sorted[a].bin_time;
            for (std::size_t b = i; b < j; ++b) {
                const double gamma =
                    coherence_factor(sorted[a].bin_time - sorted[b].bin_time, model);
                rho += sorted[a].amplitude * std::conj(sorted[b].amplitude) * gamma *
                       pol_outer(sorted[a].pol, sorted[b].pol);
            }
        }
        const double prob = rho.trace().real();
        if (prob > kAmplitudeEps * kAmplitudeEps) {
            ArrivalBin bin;
            bin.time = weight_time / weight;
            bin.probability = prob;
            bin.conditional = PolarizationState{rho / prob};
            hist.bins.push_back(bin);
            total += prob;
        }
        i = j;
    }

    for (auto& bin : hist.bins) bin.probability /= total;
    return hist;
}

void ArrivalHistogram::validate(double tol) const {
    double sum = 0.0;
    for (const auto& bin : bins) {
        if (bin.probability < -tol) throw std::invalid_argument("ArrivalHistogram: negative probability");
        bin.conditional.validate(1e-9);
        sum += bin.probability;
    }
    if (std::abs(sum - 1.0) > tol) {
        throw std::invalid_argument("ArrivalHistogram: probabilities do not sum to 1");
    }
}

PostSelection post_select(const ArrivalHistogram& hist, double window) {
    if (window <= 0.0) throw std::invalid_argument("post_select: window must be positive");
    if (!hist.central_time) {
        throw std::invalid_argument("post_select: histogram lacks a decoded central time");
    }
    const double center = *hist.central_time;

    // The peak nearest the recombined arrival time is the central candidate;
    // the window must stay clear of every other peak.
    double nearest = std::numeric_limits<double>::infinity();
    for (const auto& bin : hist.bins) nearest = std::min(nearest, std::abs(bin.time - center));
    double min_other = std::numeric_limits<double>::infinity();
    bool nearest_taken = false;
    for (const auto& bin : hist.bins) {
        const double d = std::abs(bin.time - center);
        if (!nearest_taken && d == nearest) {
            nearest_taken = true;
            continue;
        }
        min_other = std::min(min_other, d);
    }
    if (window >= min_other) {
        throw std::invalid_argument("post_select: window reaches the side peaks");
    }

    Matrix2 rho = Matrix2::Zero();
    double efficiency = 0.0;
    for (const auto& bin : hist.bins) {
        if (std::abs(bin.time - center) <= 0.5 * window) {
            rho += bin.probability * bin.conditional.rho;
            efficiency += bin.probability;
        }
    }
    if (efficiency <= 0.0) {
        return PostSelection{PolarizationState{Matrix2::Identity() * 0.5}, 0.0};
    }
    return PostSelection{PolarizationState{rho / efficiency}, efficiency};
}

ArrivalHistogram mix_histograms(
    std::span<const std::pair<double, ArrivalHistogram>> weighted, double time_tol) {
    struct Entry {
        double time;
        double prob;
        Matrix2 rho;
    };
    std::vector<Entry> entries;
    double total_weight = 0.0;
    ArrivalHistogram out;
    for (const auto& [w, hist] : weighted) {
        if (w < 0.0) throw std::invalid_argument("mix_histograms: negative weight");
        if (w == 0.0) continue;
        total_weight += w;
        if (!out.central_time && hist.central_time) out.central_time = hist.central_time;
        for (const auto& bin : hist.bins) {
            entries.push_back({bin.time, w * bin.probability,
                               w * bin.probability * bin.conditional.rho});
        }
    }
    if (entries.empty() || total_weight <= 0.0) {
        throw std::invalid_argument("mix_histograms: nothing to mix");
    }
    std::sort(entries.begin(), entries.end(),
              [](const Entry& a, const Entry& b) { return a.time < b.time; });

    std::size_t i = 0;
    while (i < entries.size()) {
        std::size_t j = i + 1;
        while (j < entries.size() && entries[j].time - entries[j - 1].time <= time_tol) ++j;
        double prob = 0.0, weight_time = 0.0;
        Matrix2 rho = Matrix2::Zero();
        for (std::size_t a = i; a < j; ++a) {
            prob += entries[a].prob;
            weight_time += entries[a].prob * entries[a].time;
            rho += entries[a].rho;
        }
        if (prob > 0.0) {
            out.bins.push_back({weight_time / prob, prob / total_weight,
                                PolarizationState{rho / prob}});
        }
        i = j;
    }
    return out;
}

std::vector<std::pair<double, double>> interference_envelope(
    std::span<const double> delta_scan, double mode_match, const CoherenceModel& model) {
    if (mode_match < 0.0 || mode_match > 1.0) {
        throw std::invalid_argument("interference_envelope: mode_match outside [0,1]");
    }
    std::vector<std::pair<double, double>> curve;
    curve.reserve(delta_scan.size());
    for (double dt : delta_scan) {
        curve.emplace_back(dt, mode_match * coherence_factor(dt, model));
    }
    return curve;
}

double ProtocolParams::phi1() const {
    const double kc = coherence.wave_number() * coherence.light_speed;
    return kc * (T - (T_prime + drift_dt)) + static_phase_offset;
}

double ProtocolParams::phi2() const {
    const double kc = coherence.wave_number() * coherence.light_speed;
    return kc * (T + (T_prime + drift_dt)) + static_phase_offset;
}

EftKrausOps eft_kraus_ops(const Unitary2& u, double phi1, double phi2) {
    EftKrausOps ops;
    ops.central = Matrix2::Zero();
    ops.central(0, 0) = u(0, 0);
    ops.central(1, 1) = u(1, 1) * std::polar(1.0, phi1);
    ops.early = Matrix2::Zero();
    ops.early(1, 0) = u(1, 0);
    ops.late = Matrix2::Zero();
    ops.late(0, 1) = u(0, 1) * std::polar(1.0, phi2);
    return ops;
}

EftKrausOps eft_kraus_ops(const Unitary2& u, const ProtocolParams& params) {
    return eft_kraus_ops(u, params.phi1(), params.phi2());
}

}  // namespace eft
