#pragma once

#include <cstring>
#include <string>
#include <vector>

#include "melcmp/dsp.hpp"

namespace melcmp {

// Spectrogram tensor file, magic "SPG1": little-endian u32 rows, u32 cols,
// u8 scale code (0 power, 1 decibel), u8 kind code (0 linear, 1 mel),
// u32 sample_rate, u32 n_fft, u32 hop, then rows*cols float32 row-major.

inline std::vector<std::uint8_t> encode_spectrogram(const Spectrogram& spec) {
    std::vector<std::uint8_t> out;
    out.reserve(26 + spec.values.size() * 4);
    auto put_u32 = [&out](std::uint32_t v) {
        out.push_back(static_cast<std::uint8_t>(v & 0xff));
        out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
        out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
        out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xff));
    };
    for (char c : {'S', 'P', 'G', '1'}) out.push_back(static_cast<std::uint8_t>(c));
    put_u32(static_cast<std::uint32_t>(spec.values.rows));
    put_u32(static_cast<std::uint32_t>(spec.values.cols));
    out.push_back(static_cast<std::uint8_t>(spec.scale));
    out.push_back(static_cast<std::uint8_t>(spec.kind));
    put_u32(spec.sample_rate);
    put_u32(spec.n_fft);
    put_u32(spec.hop_length);
    for (double d : spec.values.v) {
        auto f = static_cast<float>(d);
        std::uint32_t u;
        std::memcpy(&u, &f, 4);
        put_u32(u);
    }
    return out;
}

inline void write_spectrogram(const Spectrogram& spec, const std::string& path) {
    const auto bytes = encode_spectrogram(spec);
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot write " + path);
    os.write(reinterpret_cast<const char*>(bytes.data()),
             static_cast<std::streamsize>(bytes.size()));
    if (!os) throw IoError("write failed: " + path);
}

inline Spectrogram decode_spectrogram(const std::vector<std::uint8_t>& bytes,
                                      const std::string& what) {
    auto get_u32 = [&bytes](std::size_t off) {
        return static_cast<std::uint32_t>(bytes[off]) |
               (static_cast<std::uint32_t>(bytes[off + 1]) << 8) |
               (static_cast<std::uint32_t>(bytes[off + 2]) << 16) |
               (static_cast<std::uint32_t>(bytes[off + 3]) << 24);
    };
    if (bytes.size() < 26 || std::memcmp(bytes.data(), "SPG1", 4) != 0)
        throw FormatError(what + ": not an SPG1 tensor");
    Spectrogram spec;
    const std::uint32_t rows = get_u32(4);
    const std::uint32_t cols = get_u32(8);
    const std::uint8_t scale_code = bytes[12];
    const std::uint8_t kind_code = bytes[13];
    if (scale_code > 1 || kind_code > 1)
        throw FormatError(what + ": bad scale/kind code");
    spec.scale = static_cast<Scale>(scale_code);
    spec.kind = static_cast<SpecKind>(kind_code);
    spec.sample_rate = get_u32(14);
    spec.n_fft = get_u32(18);
    spec.hop_length = get_u32(22);
    const std::size_t n = static_cast<std::size_t>(rows) * cols;
    if (bytes.size() != 26 + n * 4)
        throw TruncationError(what + ": expected " + std::to_string(26 + n * 4) +
                              " bytes, got " + std::to_string(bytes.size()));
    spec.values = Matrix(rows, cols);
    for (std::size_t i = 0; i < n; ++i) {
        std::uint32_t u = get_u32(26 + i * 4);
        float f;
        std::memcpy(&f, &u, 4);
        spec.values.v[i] = static_cast<double>(f);
    }
    return spec;
}

inline Spectrogram read_spectrogram(const std::string& path) {
    return decode_spectrogram(read_binary_file(path), path);
}

}  // namespace melcmp
