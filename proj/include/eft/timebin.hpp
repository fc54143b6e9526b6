#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "eft/polarization.hpp"

namespace eft {

// ---------------------------------------------------------------------------
// Coherence model of the state-carrier photon
// ---------------------------------------------------------------------------

/// Spectral coherence of the photon behind a narrowband filter. Defaults are
/// the 810 nm / 4 nm FWHM configuration (coherence length 164 um).
struct CoherenceModel {
    double wavelength = 810e-9;   // m
    double bandwidth = 4e-9;      // m
    double light_speed = kSpeedOfLight;

    double coherence_length() const { return wavelength * wavelength / bandwidth; }
    double coherence_time() const { return coherence_length() / light_speed; }
    double wave_number() const;  // 2 pi / wavelength

    void validate() const;
};

/// Interference envelope gamma(tau) = exp(-(c tau / l)^2): 1 at tau = 0,
/// monotone in |tau|, effectively zero beyond ~10 coherence lengths.
double coherence_factor(double tau, const CoherenceModel& model);

// ---------------------------------------------------------------------------
// Time-bin states
// ---------------------------------------------------------------------------

enum class Pol { H, V };

/// One basis term of a (polarization x time-bin) superposition. `bin_time` is
/// the total accumulated delay of the term's path history, in seconds.
struct TimeBinTerm {
    Pol pol = Pol::H;
    double bin_time = 0.0;
    Complex amplitude{0.0, 0.0};
};

/// Pure state over (polarization, time-bin) modes. Amplitude phases are kept
/// relative to the earliest bin; the common propagation phase is dropped.
struct TimeBinState {
    std::vector<TimeBinTerm> terms;
    CoherenceModel coherence;
    /// Arrival time of the interferometrically recombined (central) bin; set
    /// by decode_umzi2, absent before decoding.
    std::optional<double> central_time;

    /// Sum of |amplitude|^2; 1 for lossless protocol states.
    double total_weight() const;
};

/// First interferometer: H keeps bin 0, V is delayed by `T`.
TimeBinState encode_umzi1(const Vector2& ket, double T,
                          const CoherenceModel& model = CoherenceModel{});

/// Density-operator overload; requires an effectively pure input
/// (purity >= 1 - 1e-9) and encodes its dominant eigenvector.
TimeBinState encode_umzi1(const PolarizationState& psi, double T,
                          const CoherenceModel& model = CoherenceModel{});

/// Applies a polarization transform identically to every time bin; bin times
/// are unchanged (channels are time-bin independent at ns separations).
TimeBinState apply_channel_to_timebins(const TimeBinState& state, const Unitary2& u);
TimeBinState apply_channel_to_timebins(const TimeBinState& state, PauliOp op);

/// Second interferometer: H terms are delayed by T' + drift_dt, and amplitude
/// phases are rebuilt from accumulated path delays, so coincident H/V terms
/// acquire the relative phase k c (T - T' - drift_dt) + static_phase_offset
/// and the late side term k c (T + T' + drift_dt) + static_phase_offset.
/// The static offset models the channel's fixed differential H/V phase and is
/// attributed to terms delayed by the first interferometer.
TimeBinState decode_umzi2(const TimeBinState& state, double T_prime,
                          double drift_dt = 0.0, double static_phase_offset = 0.0);

// ---------------------------------------------------------------------------
// Arrival histograms and post-selection
// ---------------------------------------------------------------------------

struct ArrivalBin {
    double time = 0.0;         // relative to flight time
    double probability = 0.0;  // fraction of all detections
    PolarizationState conditional;
};

/// Detection-time histogram with a normalized conditional polarization state
/// per peak. `flight_time` is a pure labeling origin for reports.
struct ArrivalHistogram {
    std::vector<ArrivalBin> bins;  // sorted by time
    double flight_time = 0.0;
    std::optional<double> central_time;

    void validate(double tol = kAlgebraTol) const;
};

/// Groups terms into arrival peaks: terms separated by more than the
/// coherence scale populate distinct bins incoherently; terms within it
/// interfere with cross terms weighted by gamma(dt). Throws on empty states.
ArrivalHistogram arrival_histogram(const TimeBinState& state,
                                   const CoherenceModel& model);

struct PostSelection {
    PolarizationState state;
    double efficiency = 0.0;
};

/// Keeps only the central peak (within window/2 of the recombined arrival
/// time). Throws if the histogram lacks decode provenance or if the window
/// would reach a side peak.
PostSelection post_select(const ArrivalHistogram& hist, double window);

/// Convex combination of histograms, e.g. over the branches of a Pauli
/// channel. Bins are matched by arrival time within `time_tol`.
ArrivalHistogram mix_histograms(
    std::span<const std::pair<double, ArrivalHistogram>> weighted,
    double time_tol = 1e-12);

/// Envelope of two-photon interference visibility against interferometer
/// mismatch: visibility(dT) = mode_match * gamma(dT).
std::vector<std::pair<double, double>> interference_envelope(
    std::span<const double> delta_scan, double mode_match,
    const CoherenceModel& model);

// ---------------------------------------------------------------------------
// Protocol parameter bundle and the equivalent Kraus picture
// ---------------------------------------------------------------------------

/// Timing of the two interferometers plus channel drift and static offset.
struct ProtocolParams {
    double T = 2.5e-9;        // first-interferometer delay, s
    double T_prime = 2.5e-9;  // second-interferometer delay, s
    double drift_dt = 0.0;    // slow drift of T', s
    double static_phase_offset = 0.0;  // rad
    CoherenceModel coherence;

    double phi1() const;  // central-peak relative phase
    double phi2() const;  // reunited side-term phase
};

/// Kraus operators of the encode -> u -> decode map, split by arrival peak:
///   central = diag(u00, u11 e^{i phi1}),
///   early   = u10 |V><H|,  late = u01 e^{i phi2} |H><V|.
/// Together they resolve the identity for unitary u.
struct EftKrausOps {
    Matrix2 central;
    Matrix2 early;
    Matrix2 late;
};

EftKrausOps eft_kraus_ops(const Unitary2& u, double phi1, double phi2);
EftKrausOps eft_kraus_ops(const Unitary2& u, const ProtocolParams& params);

}  // namespace eft
