#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "melcmp/common.hpp"

namespace melcmp {

/// Decoded mono audio. Samples are dimensionless amplitudes in [-1, 1].
struct AudioBuffer {
    std::vector<double> samples;
    unsigned sample_rate = 0;
    std::string source_id;
};

enum class WavEncoding { pcm16, float32 };

namespace detail {

inline std::uint16_t rd_u16(const std::uint8_t* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
inline std::uint32_t rd_u32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
inline void wr_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}
inline void wr_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xff));
}
inline void wr_tag(std::vector<std::uint8_t>& out, const char* tag) {
    out.insert(out.end(), tag, tag + 4);
}

}  // namespace detail

/// Decode a RIFF/WAVE file: PCM 16-bit or IEEE float 32-bit, 1 or 2
/// channels. Stereo is averaged to mono; 16-bit samples are scaled by
/// 1/32768. Unknown chunks are skipped.
inline AudioBuffer decode_wav(const std::string& path) {
    using namespace detail;
    const std::vector<std::uint8_t> bytes = read_binary_file(path);
    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
        throw FormatError(path + ": not a RIFF/WAVE file");

    std::uint16_t format = 0, channels = 0, bits = 0;
    std::uint32_t rate = 0;
    bool have_fmt = false;
    const std::uint8_t* data = nullptr;
    std::size_t data_size = 0;

    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const std::uint8_t* hdr = bytes.data() + pos;
        std::uint32_t chunk_size = rd_u32(hdr + 4);
        std::size_t payload = pos + 8;
        if (std::memcmp(hdr, "fmt ", 4) == 0) {
            if (payload + 16 > bytes.size())
                throw TruncationError(path + ": truncated fmt chunk");
            format = rd_u16(hdr + 8);
            channels = rd_u16(hdr + 10);
            rate = rd_u32(hdr + 12);
            bits = rd_u16(hdr + 22);
            have_fmt = true;
        } else if (std::memcmp(hdr, "data", 4) == 0) {
            if (payload + chunk_size > bytes.size())
                throw TruncationError(path + ": truncated data chunk");
            data = bytes.data() + payload;
            data_size = chunk_size;
        }
        pos = payload + chunk_size + (chunk_size & 1);  // chunks are word-aligned
    }

    if (!have_fmt) throw FormatError(path + ": missing fmt chunk");
    if (data == nullptr) throw FormatError(path + ": missing data chunk");
    if (rate == 0) throw FormatError(path + ": zero sample rate");
    if (channels != 1 && channels != 2)
        throw UnsupportedCodecError(path + ": unsupported channel count " +
                                    std::to_string(channels));
    const bool pcm16 = (format == 1 && bits == 16);
    const bool f32 = (format == 3 && bits == 32);
    if (!pcm16 && !f32)
        throw UnsupportedCodecError(path + ": unsupported encoding (format tag " +
                                    std::to_string(format) + ", " +
                                    std::to_string(bits) + " bit)");

    const std::size_t bytes_per_sample = pcm16 ? 2 : 4;
    const std::size_t frame_bytes = bytes_per_sample * channels;
    const std::size_t n_frames = data_size / frame_bytes;

    AudioBuffer out;
    out.sample_rate = rate;
    out.source_id = path;
    out.samples.resize(n_frames);
    for (std::size_t i = 0; i < n_frames; ++i) {
        double acc = 0.0;
        for (std::uint16_t c = 0; c < channels; ++c) {
            const std::uint8_t* sp = data + i * frame_bytes + c * bytes_per_sample;
            double s;
            if (pcm16) {
                auto raw = static_cast<std::int16_t>(rd_u16(sp));
                s = static_cast<double>(raw) / 32768.0;
            } else {
                std::uint32_t u = rd_u32(sp);
                float f;
                std::memcpy(&f, &u, 4);
                s = static_cast<double>(f);
            }
            acc += s;
        }
        double v = acc / channels;
        if (!std::isfinite(v))
            throw FormatError(path + ": non-finite sample at frame " + std::to_string(i));
        out.samples[i] = std::clamp(v, -1.0, 1.0);
    }
    return out;
}

/// Write a mono WAV file in the given encoding.
inline void write_wav(const AudioBuffer& buf, const std::string& path,
                      WavEncoding enc) {
    using namespace detail;
    if (buf.sample_rate == 0) throw DomainError("write_wav: zero sample rate");
    const std::uint16_t bytes_per_sample = (enc == WavEncoding::pcm16) ? 2 : 4;
    const auto data_size =
        static_cast<std::uint32_t>(buf.samples.size() * bytes_per_sample);

    std::vector<std::uint8_t> out;
    out.reserve(44 + data_size);
    wr_tag(out, "RIFF");
    wr_u32(out, 36 + data_size);
    wr_tag(out, "WAVE");
    wr_tag(out, "fmt ");
    wr_u32(out, 16);
    wr_u16(out, enc == WavEncoding::pcm16 ? 1 : 3);
    wr_u16(out, 1);  // mono
    wr_u32(out, buf.sample_rate);
    wr_u32(out, buf.sample_rate * bytes_per_sample);
    wr_u16(out, bytes_per_sample);
    wr_u16(out, static_cast<std::uint16_t>(bytes_per_sample * 8));
    wr_tag(out, "data");
    wr_u32(out, data_size);
    for (double v : buf.samples) {
        if (enc == WavEncoding::pcm16) {
            double scaled = std::round(v * 32768.0);
            auto s = static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
            wr_u16(out, static_cast<std::uint16_t>(s));
        } else {
            auto f = static_cast<float>(v);
            std::uint32_t u;
            std::memcpy(&u, &f, 4);
            wr_u32(out, u);
        }
    }
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot write " + path);
    os.write(reinterpret_cast<const char*>(out.data()),
             static_cast<std::streamsize>(out.size()));
    if (!os) throw IoError("write failed: " + path);
}

/// Linear-interpolation resampling. Output length is
/// round(input_length * target_rate / source_rate); equal rates return
/// a copy.
inline AudioBuffer resample_linear(const AudioBuffer& buf, unsigned target_rate) {
    if (target_rate == 0) throw DomainError("resample_linear: target rate must be positive");
    if (buf.samples.empty()) throw DomainError("resample_linear: empty buffer");
    if (target_rate == buf.sample_rate) return buf;

    const std::size_t in_len = buf.samples.size();
    const auto out_len = static_cast<std::size_t>(std::llround(
        static_cast<double>(in_len) * target_rate / buf.sample_rate));
    AudioBuffer out;
    out.sample_rate = target_rate;
    out.source_id = buf.source_id;
    out.samples.resize(out_len);
    const double step = static_cast<double>(buf.sample_rate) / target_rate;
    for (std::size_t i = 0; i < out_len; ++i) {
        double pos = static_cast<double>(i) * step;
        auto i0 = static_cast<std::size_t>(pos);
        if (i0 >= in_len - 1) {
            out.samples[i] = buf.samples[in_len - 1];
        } else {
            double frac = pos - static_cast<double>(i0);
            out.samples[i] =
                buf.samples[i0] * (1.0 - frac) + buf.samples[i0 + 1] * frac;
        }
    }
    return out;
}

/// Pure sine: samples[n] = amplitude * sin(2*pi*freq*n / sample_rate).
inline AudioBuffer synth_tone(double freq, double duration, unsigned sample_rate,
                              double amplitude) {
    if (sample_rate == 0) throw DomainError("synth_tone: zero sample rate");
    if (freq <= 0.0 || freq >= sample_rate / 2.0)
        throw DomainError("synth_tone: frequency " + fmt_double(freq) +
                          " outside (0, Nyquist) at rate " + std::to_string(sample_rate));
    if (duration < 0.0) throw DomainError("synth_tone: negative duration");
    if (amplitude < 0.0 || amplitude > 1.0)
        throw DomainError("synth_tone: amplitude outside [0, 1]");

    AudioBuffer out;
    out.sample_rate = sample_rate;
    out.source_id = "tone:" + fmt_double(freq);
    auto n = static_cast<std::size_t>(std::llround(duration * sample_rate));
    out.samples.resize(n);
    const double w = 2.0 * std::numbers::pi * freq / sample_rate;
    for (std::size_t i = 0; i < n; ++i)
        out.samples[i] = amplitude * std::sin(w * static_cast<double>(i));
    return out;
}

}  // namespace melcmp
