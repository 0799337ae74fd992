#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "melcmp/audio.hpp"
#include "melcmp/common.hpp"
#include "melcmp/fft.hpp"

namespace melcmp {

enum class Scale : std::uint8_t { power = 0, decibel = 1 };
enum class SpecKind : std::uint8_t { linear = 0, mel = 1 };
enum class MelVariant { htk, slaney };
enum class MelNorm { none, slaney_area };

inline const char* to_string(SpecKind k) { return k == SpecKind::linear ? "linear" : "mel"; }
inline const char* to_string(Scale s) { return s == Scale::power ? "power" : "decibel"; }
inline const char* to_string(MelVariant v) { return v == MelVariant::htk ? "htk" : "slaney"; }
inline const char* to_string(MelNorm n) { return n == MelNorm::none ? "none" : "slaney-area"; }

inline SpecKind spec_kind_from_string(const std::string& s) {
    if (s == "linear") return SpecKind::linear;
    if (s == "mel") return SpecKind::mel;
    throw ValidationError("unknown spectrogram kind: '" + s + "'");
}
inline MelVariant mel_variant_from_string(const std::string& s) {
    if (s == "htk") return MelVariant::htk;
    if (s == "slaney") return MelVariant::slaney;
    throw ValidationError("unknown mel variant: '" + s + "'");
}
inline MelNorm mel_norm_from_string(const std::string& s) {
    if (s == "none") return MelNorm::none;
    if (s == "slaney-area") return MelNorm::slaney_area;
    throw ValidationError("unknown mel normalization: '" + s + "'");
}

/// Power or decibel values over (band, frame) cells. Rows are frequency
/// or mel bands, columns are time frames.
struct Spectrogram {
    Matrix values;
    Scale scale = Scale::power;
    SpecKind kind = SpecKind::linear;
    unsigned sample_rate = 0;
    unsigned n_fft = 0;
    unsigned hop_length = 0;

    std::size_t bands() const { return values.rows; }
    std::size_t frames() const { return values.cols; }
};

// ---------------------------------------------------------------- window

/// Periodic Hann window: w[k] = 0.5 - 0.5*cos(2*pi*k/n).
inline std::vector<double> hann_window(std::size_t n) {
    if (n == 0) throw DomainError("hann_window: empty window");
    std::vector<double> w(n);
    for (std::size_t k = 0; k < n; ++k)
        w[k] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi *
                                    static_cast<double>(k) / static_cast<double>(n));
    return w;
}

// ---------------------------------------------------------------- stft

namespace detail {

/// Reflect (no edge repeat) sample lookup for out-of-range positions.
inline double reflect_sample(const std::vector<double>& x, std::int64_t pos) {
    const auto n = static_cast<std::int64_t>(x.size());
    if (n == 1) return x[0];
    const std::int64_t period = 2 * (n - 1);
    std::int64_t m = pos % period;
    if (m < 0) m += period;
    if (m >= n) m = period - m;
    return x[static_cast<std::size_t>(m)];
}

}  // namespace detail

/// Short-time Fourier transform power spectrogram. Frames are taken at
/// stride hop_length, Hann-windowed and transformed with a radix-2 FFT;
/// bins 0..n_fft/2 are kept, value[f][t] = |X_t[f]|^2. With `centered`
/// the signal is reflect-padded by n_fft/2 on both sides, giving
/// 1 + floor(len/hop_length) frames.
inline Spectrogram stft_power(const AudioBuffer& buffer, unsigned n_fft,
                              unsigned hop_length, bool centered) {
    if (!is_pow2(n_fft)) throw DomainError("stft_power: n_fft must be a power of two");
    if (hop_length == 0 || hop_length > n_fft)
        throw DomainError("stft_power: hop_length must be in [1, n_fft]");
    if (buffer.samples.empty()) throw DomainError("stft_power: empty buffer");

    const std::size_t len = buffer.samples.size();
    std::size_t n_frames;
    std::int64_t start0;
    if (centered) {
        n_frames = 1 + len / hop_length;
        start0 = -static_cast<std::int64_t>(n_fft) / 2;
    } else {
        if (len < n_fft)
            throw DomainError("stft_power: insufficient data (" + std::to_string(len) +
                              " samples, frame length " + std::to_string(n_fft) + ")");
        n_frames = 1 + (len - n_fft) / hop_length;
        start0 = 0;
    }

    const std::vector<double> window = hann_window(n_fft);
    const Fft plan(n_fft);
    const std::size_t n_bins = n_fft / 2 + 1;

    Spectrogram spec;
    spec.scale = Scale::power;
    spec.kind = SpecKind::linear;
    spec.sample_rate = buffer.sample_rate;
    spec.n_fft = n_fft;
    spec.hop_length = hop_length;
    spec.values = Matrix(n_bins, n_frames);

    std::vector<std::complex<double>> frame(n_fft);
    for (std::size_t t = 0; t < n_frames; ++t) {
        const std::int64_t base =
            start0 + static_cast<std::int64_t>(t) * static_cast<std::int64_t>(hop_length);
        for (std::size_t k = 0; k < n_fft; ++k) {
            const std::int64_t pos = base + static_cast<std::int64_t>(k);
            double s = (pos >= 0 && pos < static_cast<std::int64_t>(len))
                           ? buffer.samples[static_cast<std::size_t>(pos)]
                           : (centered ? detail::reflect_sample(buffer.samples, pos) : 0.0);
            frame[k] = {s * window[k], 0.0};
        }
        plan.forward(frame.data());
        for (std::size_t f = 0; f < n_bins; ++f)
            spec.values.at(f, t) = std::norm(frame[f]);
    }
    return spec;
}

// ---------------------------------------------------------------- mel maps

/// Frequency (Hz) to mel. HTK: 2595*log10(1+f/700). Slaney: linear
/// below 1 kHz (3f/200), logarithmic above with step ln(6.4)/27.
inline double hz_to_mel(double f, MelVariant variant) {
    if (f < 0.0) throw DomainError("hz_to_mel: negative frequency");
    if (variant == MelVariant::htk)
        return 2595.0 * std::log10(1.0 + f / 700.0);
    constexpr double kMinLogHz = 1000.0;
    constexpr double kMinLogMel = 15.0;  // 3 * 1000 / 200, exact
    const double log_step = std::log(6.4) / 27.0;
    if (f < kMinLogHz) return 3.0 * f / 200.0;
    return kMinLogMel + std::log(f / kMinLogHz) / log_step;
}

/// Exact inverse of hz_to_mel for the same variant.
inline double mel_to_hz(double m, MelVariant variant) {
    if (m < 0.0) throw DomainError("mel_to_hz: negative mel value");
    if (variant == MelVariant::htk)
        return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0);
    constexpr double kMinLogMel = 15.0;
    const double log_step = std::log(6.4) / 27.0;
    if (m < kMinLogMel) return m * 200.0 / 3.0;
    return 1000.0 * std::exp(log_step * (m - kMinLogMel));
}

// ---------------------------------------------------------------- filterbank

/// Triangular mel filterbank over FFT bin center frequencies.
struct MelFilterbank {
    Matrix weights;  // n_mels x (n_fft/2 + 1)
    double fmin = 0.0;
    double fmax = 0.0;
    MelVariant variant = MelVariant::slaney;
    MelNorm normalization = MelNorm::slaney_area;
    std::vector<double> breakpoints_hz;        // n_mels + 2 triangle corners
    std::vector<std::size_t> degenerate_rows;  // rows whose triangle caught no bin
};

/// Build a mel filterbank: n_mels+2 breakpoints equally spaced in mel
/// between fmin and fmax, mapped back to Hz; row i is the triangle over
/// [pt_i, pt_{i+2}] peaking at pt_{i+1}, sampled at bin frequencies
/// k*sample_rate/n_fft. With MelNorm::none each nonzero row is scaled to
/// a maximum of exactly 1; slaney-area scales row i by 2/(pt_{i+2}-pt_i).
inline MelFilterbank mel_filterbank(unsigned sample_rate, unsigned n_fft,
                                    unsigned n_mels, double fmin, double fmax,
                                    MelVariant variant, MelNorm normalization) {
    const double nyquist = sample_rate / 2.0;
    if (n_mels == 0) throw DomainError("mel_filterbank: n_mels must be >= 1");
    if (!is_pow2(n_fft)) throw DomainError("mel_filterbank: n_fft must be a power of two");
    if (fmin < 0.0 || fmin >= fmax)
        throw DomainError("mel_filterbank: need 0 <= fmin < fmax");
    if (fmax > nyquist)
        throw DomainError("mel_filterbank: fmax " + fmt_double(fmax) +
                          " above Nyquist " + fmt_double(nyquist));

    const std::size_t n_bins = n_fft / 2 + 1;
    const double mel_lo = hz_to_mel(fmin, variant);
    const double mel_hi = hz_to_mel(fmax, variant);

    MelFilterbank fb;
    fb.fmin = fmin;
    fb.fmax = fmax;
    fb.variant = variant;
    fb.normalization = normalization;
    fb.breakpoints_hz.resize(n_mels + 2);
    for (std::size_t i = 0; i < n_mels + 2; ++i) {
        double m = mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) /
                                static_cast<double>(n_mels + 1);
        fb.breakpoints_hz[i] = mel_to_hz(m, variant);
    }

    fb.weights = Matrix(n_mels, n_bins);
    for (std::size_t i = 0; i < n_mels; ++i) {
        const double lo = fb.breakpoints_hz[i];
        const double mid = fb.breakpoints_hz[i + 1];
        const double hi = fb.breakpoints_hz[i + 2];
        double row_max = 0.0;
        for (std::size_t k = 0; k < n_bins; ++k) {
            const double f = static_cast<double>(k) * sample_rate /
                             static_cast<double>(n_fft);
            const double up = (f - lo) / (mid - lo);
            const double down = (hi - f) / (hi - mid);
            const double w = std::max(0.0, std::min(up, down));
            fb.weights.at(i, k) = w;
            row_max = std::max(row_max, w);
        }
        if (row_max <= 0.0) {
            fb.degenerate_rows.push_back(i);
            continue;
        }
        const double scale = (normalization == MelNorm::none)
                                 ? 1.0 / row_max
                                 : 2.0 / (hi - lo);
        for (std::size_t k = 0; k < n_bins; ++k) fb.weights.at(i, k) *= scale;
    }
    return fb;
}

/// Project a linear power spectrogram onto mel bands:
/// out = fb.weights * spec.values.
inline Spectrogram apply_filterbank(const Spectrogram& spec, const MelFilterbank& fb) {
    if (spec.kind != SpecKind::linear || spec.scale != Scale::power)
        throw DomainError("apply_filterbank: input must be a linear power spectrogram");
    if (spec.values.rows != fb.weights.cols)
        throw ShapeError("apply_filterbank: " + std::to_string(spec.values.rows) +
                         " spectrogram rows vs " + std::to_string(fb.weights.cols) +
                         " filterbank columns");

    Spectrogram out;
    out.scale = Scale::power;
    out.kind = SpecKind::mel;
    out.sample_rate = spec.sample_rate;
    out.n_fft = spec.n_fft;
    out.hop_length = spec.hop_length;
    out.values = Matrix(fb.weights.rows, spec.values.cols);
    for (std::size_t i = 0; i < fb.weights.rows; ++i) {
        const double* wrow = fb.weights.row(i);
        for (std::size_t t = 0; t < spec.values.cols; ++t) {
            double acc = 0.0;
            for (std::size_t k = 0; k < spec.values.rows; ++k)
                acc += wrow[k] * spec.values.at(k, t);
            out.values.at(i, t) = acc;
        }
    }
    return out;
}

// ---------------------------------------------------------------- dB scale

/// d = 10*log10(max(value, amin)/ref); with top_db set, values are
/// clamped below at max(d) - top_db.
inline Spectrogram power_to_db(const Spectrogram& spec, double ref, double amin,
                               std::optional<double> top_db) {
    if (ref <= 0.0) throw DomainError("power_to_db: ref must be positive");
    if (amin <= 0.0) throw DomainError("power_to_db: amin must be positive");
    if (top_db && *top_db < 0.0) throw DomainError("power_to_db: negative top_db");

    Spectrogram out = spec;
    out.scale = Scale::decibel;
    double peak = -std::numeric_limits<double>::infinity();
    for (double& v : out.values.v) {
        v = 10.0 * std::log10(std::max(v, amin) / ref);
        peak = std::max(peak, v);
    }
    if (top_db && !out.values.v.empty()) {
        const double floor_db = peak - *top_db;
        for (double& v : out.values.v) v = std::max(v, floor_db);
    }
    return out;
}

/// power_to_db against the spectrogram's own maximum (clamped to amin).
inline Spectrogram power_to_db_ref_max(const Spectrogram& spec, double amin,
                                       std::optional<double> top_db) {
    double peak = 0.0;
    for (double v : spec.values.v) peak = std::max(peak, v);
    return power_to_db(spec, std::max(peak, amin), amin, top_db);
}

}  // namespace melcmp
