#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace melcmp {

// ---------------------------------------------------------------- errors

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed file or container structure.
struct FormatError : Error { using Error::Error; };
/// Encoding present but outside the supported set.
struct UnsupportedCodecError : Error { using Error::Error; };
/// File ends before the declared payload.
struct TruncationError : Error { using Error::Error; };
/// Argument outside the mathematical or documented domain.
struct DomainError : Error { using Error::Error; };
/// Input data violates a schema or cross-record constraint.
struct ValidationError : Error { using Error::Error; };
/// Filesystem read/write failure.
struct IoError : Error { using Error::Error; };
/// Training produced a non-finite loss.
struct DivergenceError : Error { using Error::Error; };
/// Matrix/vector dimensions do not line up.
struct ShapeError : Error { using Error::Error; };
/// Sample unusable for the requested statistic (zero variance etc).
struct DegenerateError : Error { using Error::Error; };

// ---------------------------------------------------------------- rng

/// SplitMix64 generator (Steele et al.). Fully specified by 64-bit
/// arithmetic, so streams are identical across platforms and runs;
/// every seeded artifact in the pipeline depends on that.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double next_double() {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

    /// Uniform integer in [0, n). Lemire rejection method, exact.
    std::uint64_t bounded(std::uint64_t n) {
        if (n == 0) throw DomainError("bounded: n must be positive");
        std::uint64_t x = next();
        unsigned __int128 m = static_cast<unsigned __int128>(x) * n;
        auto lo = static_cast<std::uint64_t>(m);
        if (lo < n) {
            std::uint64_t t = (0 - n) % n;
            while (lo < t) {
                x = next();
                m = static_cast<unsigned __int128>(x) * n;
                lo = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i)
            std::swap(v[i - 1], v[bounded(i)]);
    }

private:
    std::uint64_t state_;
};

// ---------------------------------------------------------------- hashing

inline std::uint64_t fnv1a64(const void* data, std::size_t len,
                             std::uint64_t h = 0xcbf29ce484222325ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t fnv1a64(std::string_view s) {
    return fnv1a64(s.data(), s.size());
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(v));
    return buf;
}

/// Sub-stream seed for a named cell, so cells can be processed in any
/// order (or in parallel) without changing their random streams.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag) {
    return SplitMix64(seed ^ fnv1a64(tag)).next();
}

// ---------------------------------------------------------------- strings

inline std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && (std::isspace(static_cast<unsigned char>(s[b])) != 0)) ++b;
    while (e > b && (std::isspace(static_cast<unsigned char>(s[e - 1])) != 0)) --e;
    return std::string(s.substr(b, e - b));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == sep) {
            out.emplace_back(s.substr(start, i - start));
            start = i + 1;
        }
    }
    return out;
}

/// Shortest decimal form that round-trips a double (%.17g).
inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline double parse_double(std::string_view s, std::string_view what = "value") {
    std::string t = trim(s);
    char* end = nullptr;
    double v = std::strtod(t.c_str(), &end);
    if (end == t.c_str() || *end != '\0')
        throw FormatError("bad number for " + std::string(what) + ": '" + t + "'");
    return v;
}

inline std::uint64_t parse_u64(std::string_view s, std::string_view what = "value") {
    std::string t = trim(s);
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || p != t.data() + t.size())
        throw FormatError("bad integer for " + std::string(what) + ": '" + t + "'");
    return v;
}

// ---------------------------------------------------------------- matrix

/// Dense row-major matrix of doubles.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> v;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), v(r * c, fill) {}

    double& at(std::size_t r, std::size_t c) { return v[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return v[r * cols + c]; }
    const double* row(std::size_t r) const { return v.data() + r * cols; }
    double* row(std::size_t r) { return v.data() + r * cols; }
    bool empty() const { return rows == 0 || cols == 0; }
    std::size_t size() const { return v.size(); }
};

// ---------------------------------------------------------------- kv docs

/// Flat `key = value` text document, preserving line order. Used for
/// split plans, trained classifiers and test-result files so every
/// artifact stays diffable and byte-stable.
class KvDoc {
public:
    void set(std::string key, std::string value) {
        lines_.emplace_back(std::move(key), std::move(value));
    }
    void set_double(const std::string& key, double v) { set(key, fmt_double(v)); }
    void set_u64(const std::string& key, std::uint64_t v) { set(key, std::to_string(v)); }
    template <typename It>
    void set_list(const std::string& key, It first, It last) {
        std::string s;
        for (It it = first; it != last; ++it) {
            if (!s.empty()) s += ' ';
            s += item_to_string(*it);
        }
        set(key, s);
    }

    bool has(std::string_view key) const { return find(key) != nullptr; }

    const std::string& get(std::string_view key) const {
        const std::string* v = find(key);
        if (v == nullptr) throw FormatError("missing key: " + std::string(key));
        return *v;
    }
    std::string get_or(std::string_view key, std::string fallback) const {
        const std::string* v = find(key);
        return v != nullptr ? *v : std::move(fallback);
    }
    double get_double(std::string_view key) const { return parse_double(get(key), key); }
    std::uint64_t get_u64(std::string_view key) const { return parse_u64(get(key), key); }

    std::vector<double> get_double_list(std::string_view key) const {
        std::vector<double> out;
        for (const auto& tok : split(get(key), ' '))
            if (!tok.empty()) out.push_back(parse_double(tok, key));
        return out;
    }
    std::vector<std::size_t> get_index_list(std::string_view key) const {
        std::vector<std::size_t> out;
        for (const auto& tok : split(get(key), ' '))
            if (!tok.empty()) out.push_back(static_cast<std::size_t>(parse_u64(tok, key)));
        return out;
    }

    const std::vector<std::pair<std::string, std::string>>& lines() const {
        return lines_;
    }

    std::string serialize(std::string_view header) const {
        std::string out(header);
        out += '\n';
        for (const auto& [k, val] : lines_) {
            out += k;
            out += " = ";
            out += val;
            out += '\n';
        }
        return out;
    }

    static KvDoc parse(const std::string& text, std::string_view expect_header) {
        KvDoc doc;
        std::istringstream in(text);
        std::string line;
        if (!std::getline(in, line) || trim(line) != expect_header)
            throw FormatError("expected header '" + std::string(expect_header) +
                              "', got '" + trim(line) + "'");
        while (std::getline(in, line)) {
            if (trim(line).empty()) continue;
            auto eq = line.find(" = ");
            if (eq == std::string::npos)
                throw FormatError("bad key-value line: '" + line + "'");
            doc.set(trim(line.substr(0, eq)), line.substr(eq + 3));
        }
        return doc;
    }

private:
    static std::string item_to_string(std::size_t v) { return std::to_string(v); }
    static std::string item_to_string(double v) { return fmt_double(v); }
    static std::string item_to_string(const std::string& v) { return v; }

    const std::string* find(std::string_view key) const {
        for (const auto& [k, v] : lines_)
            if (k == key) return &v;
        return nullptr;
    }

    std::vector<std::pair<std::string, std::string>> lines_;
};

// ---------------------------------------------------------------- file io

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text_file(const std::string& path, std::string_view text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw IoError("write failed: " + path);
}

inline std::vector<std::uint8_t> read_binary_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw IoError("cannot open " + path);
    auto size = static_cast<std::size_t>(in.tellg());
    in.seekg(0);
    std::vector<std::uint8_t> buf(size);
    if (size > 0) in.read(reinterpret_cast<char*>(buf.data()),
                          static_cast<std::streamsize>(size));
    if (!in) throw IoError("read failed: " + path);
    return buf;
}

}  // namespace melcmp
