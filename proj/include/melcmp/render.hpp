#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "melcmp/dsp.hpp"

namespace melcmp {

struct Rgb {
    std::uint8_t r = 0, g = 0, b = 0;
    bool operator==(const Rgb&) const = default;
};

struct RasterImage {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<Rgb> pixels;  // row-major, top row first

    Rgb at(std::size_t x, std::size_t y) const { return pixels[y * width + x]; }
};

// 16 viridis anchors sampled at t = 0, 1/15, ..., 1 (matplotlib 3.10).
inline const std::array<Rgb, 16>& viridis_anchors() {
    static const std::array<Rgb, 16> anchors = {{
        {68, 1, 84},    {72, 26, 108},  {71, 47, 125},  {65, 68, 135},
        {57, 86, 140},  {49, 104, 142}, {42, 120, 142}, {35, 136, 142},
        {31, 152, 139}, {34, 168, 132}, {53, 183, 121}, {84, 197, 104},
        {122, 209, 81}, {165, 219, 54}, {210, 226, 27}, {253, 231, 37},
    }};
    return anchors;
}

/// Piecewise-linear interpolation over the embedded viridis table;
/// t is clamped to [0, 1].
inline Rgb colormap_viridis(double t) {
    const auto& anchors = viridis_anchors();
    t = std::clamp(t, 0.0, 1.0);
    const double pos = t * static_cast<double>(anchors.size() - 1);
    auto i = static_cast<std::size_t>(pos);
    if (i >= anchors.size() - 1) return anchors.back();
    const double frac = pos - static_cast<double>(i);
    auto mix = [frac](std::uint8_t a, std::uint8_t b) {
        return static_cast<std::uint8_t>(
            std::lround(static_cast<double>(a) * (1.0 - frac) +
                        static_cast<double>(b) * frac));
    };
    const Rgb& lo = anchors[i];
    const Rgb& hi = anchors[i + 1];
    return {mix(lo.r, hi.r), mix(lo.g, hi.g), mix(lo.b, hi.b)};
}

/// One pixel per matrix cell, min-max normalized to [0, 1] (a constant
/// matrix maps to 0.5). With flip_vertical the lowest band lands on the
/// bottom image row.
inline RasterImage render_spectrogram(const Spectrogram& spec, bool flip_vertical) {
    if (spec.values.empty()) throw DomainError("render_spectrogram: empty spectrogram");
    double lo = spec.values.v[0], hi = spec.values.v[0];
    for (double v : spec.values.v) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double range = hi - lo;

    RasterImage img;
    img.width = spec.values.cols;
    img.height = spec.values.rows;
    img.pixels.resize(img.width * img.height);
    for (std::size_t r = 0; r < spec.values.rows; ++r) {
        const std::size_t row = flip_vertical ? spec.values.rows - 1 - r : r;
        for (std::size_t c = 0; c < spec.values.cols; ++c) {
            const double v = spec.values.at(r, c);
            const double t = range > 0.0 ? (v - lo) / range : 0.5;
            img.pixels[row * img.width + c] = colormap_viridis(t);
        }
    }
    return img;
}

/// Binary P6 PPM: "P6\n<w> <h>\n255\n" followed by RGB bytes.
inline void write_ppm(const RasterImage& img, const std::string& path) {
    if (img.width == 0 || img.height == 0)
        throw DomainError("write_ppm: empty image");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot write " + path);
    os << "P6\n" << img.width << ' ' << img.height << "\n255\n";
    for (const Rgb& px : img.pixels) {
        const char bytes[3] = {static_cast<char>(px.r), static_cast<char>(px.g),
                               static_cast<char>(px.b)};
        os.write(bytes, 3);
    }
    if (!os) throw IoError("write failed: " + path);
}

inline RasterImage read_ppm(const std::string& path) {
    const auto bytes = read_binary_file(path);
    std::size_t pos = 0;
    auto next_token = [&bytes, &pos, &path]() {
        while (pos < bytes.size() &&
               std::isspace(static_cast<unsigned char>(bytes[pos])) != 0)
            ++pos;
        std::size_t start = pos;
        while (pos < bytes.size() &&
               std::isspace(static_cast<unsigned char>(bytes[pos])) == 0)
            ++pos;
        if (start == pos) throw FormatError(path + ": truncated PPM header");
        return std::string(bytes.begin() + static_cast<std::ptrdiff_t>(start),
                           bytes.begin() + static_cast<std::ptrdiff_t>(pos));
    };
    if (next_token() != "P6") throw FormatError(path + ": not a P6 PPM");
    RasterImage img;
    img.width = static_cast<std::size_t>(parse_u64(next_token(), "ppm width"));
    img.height = static_cast<std::size_t>(parse_u64(next_token(), "ppm height"));
    if (next_token() != "255") throw FormatError(path + ": expected maxval 255");
    ++pos;  // single whitespace byte after maxval
    const std::size_t n = img.width * img.height;
    if (bytes.size() - pos < n * 3) throw TruncationError(path + ": short pixel data");
    img.pixels.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        img.pixels[i] = {bytes[pos + i * 3], bytes[pos + i * 3 + 1],
                         bytes[pos + i * 3 + 2]};
    return img;
}

}  // namespace melcmp
