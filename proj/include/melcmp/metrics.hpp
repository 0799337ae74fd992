#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "melcmp/common.hpp"
#include "melcmp/dsp.hpp"
#include "melcmp/stats.hpp"

namespace melcmp {

struct ConfusionCounts {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t tn = 0;
    std::uint64_t fn = 0;

    std::uint64_t total() const { return tp + fp + tn + fn; }
};

inline ConfusionCounts confusion(const std::vector<std::uint8_t>& predictions,
                                 const std::vector<std::uint8_t>& truth) {
    if (predictions.size() != truth.size())
        throw ShapeError("confusion: prediction/truth length mismatch");
    if (predictions.empty())
        throw DomainError("confusion: empty vectors");
    ConfusionCounts c;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const bool p = predictions[i] != 0;
        const bool t = truth[i] != 0;
        if (p && t) ++c.tp;
        else if (p && !t) ++c.fp;
        else if (!p && t) ++c.fn;
        else ++c.tn;
    }
    return c;
}

// Bits set in MetricRecord::zero_division_flags when a ratio's
// denominator was zero and the value was forced to 0.
inline constexpr unsigned kZeroDivPrecision = 1u;
inline constexpr unsigned kZeroDivRecall = 2u;
inline constexpr unsigned kZeroDivF1 = 4u;
inline constexpr unsigned kZeroDivSpecificity = 8u;

struct MetricRecord {
    std::string genre;
    SpecKind kind = SpecKind::linear;
    std::string variant;
    double accuracy = 0.0;
    double balanced_accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double loss = 0.0;
    unsigned zero_division_flags = 0;
};

inline MetricRecord compute_metrics(const ConfusionCounts& c) {
    if (c.total() == 0)
        throw DomainError("compute_metrics: empty evaluation");
    MetricRecord r;
    const double total = static_cast<double>(c.total());
    r.accuracy = static_cast<double>(c.tp + c.tn) / total;
    if (c.tp + c.fp > 0) {
        r.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
    } else {
        r.zero_division_flags |= kZeroDivPrecision;
    }
    if (c.tp + c.fn > 0) {
        r.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    } else {
        r.zero_division_flags |= kZeroDivRecall;
    }
    if (r.precision + r.recall > 0.0) {
        r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
    } else {
        r.zero_division_flags |= kZeroDivF1;
    }
    double specificity = 0.0;
    if (c.tn + c.fp > 0) {
        specificity = static_cast<double>(c.tn) / static_cast<double>(c.tn + c.fp);
    } else {
        r.zero_division_flags |= kZeroDivSpecificity;
    }
    r.balanced_accuracy = (r.recall + specificity) / 2.0;
    return r;
}

/// One macro-average row: `key` is a variant name when grouped by
/// (kind, variant), a genre name when grouped by (kind, genre).
struct MacroRow {
    SpecKind kind = SpecKind::linear;
    std::string key;
    double accuracy = 0.0;
    double balanced_accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double loss = 0.0;
    std::size_t cells = 0;
};

struct EvalReport {
    std::vector<MetricRecord> records;
    std::vector<MacroRow> by_kind_variant;
    std::vector<MacroRow> by_kind_genre;
};

namespace detail {

inline std::vector<MacroRow> macro_group(
    const std::vector<MetricRecord>& records,
    const std::string MetricRecord::* key_field) {
    // Group order: first appearance in the record list.
    std::vector<MacroRow> rows;
    std::map<std::pair<int, std::string>, std::size_t> index;
    for (const MetricRecord& r : records) {
        const std::pair<int, std::string> key{static_cast<int>(r.kind), r.*key_field};
        auto it = index.find(key);
        if (it == index.end()) {
            it = index.emplace(key, rows.size()).first;
            MacroRow row;
            row.kind = r.kind;
            row.key = r.*key_field;
            rows.push_back(row);
        }
        MacroRow& row = rows[it->second];
        row.accuracy += r.accuracy;
        row.balanced_accuracy += r.balanced_accuracy;
        row.precision += r.precision;
        row.recall += r.recall;
        row.f1 += r.f1;
        row.loss += r.loss;
        ++row.cells;
    }
    for (MacroRow& row : rows) {
        const double n = static_cast<double>(row.cells);
        row.accuracy /= n;
        row.balanced_accuracy /= n;
        row.precision /= n;
        row.recall /= n;
        row.f1 /= n;
        row.loss /= n;
    }
    return rows;
}

}  // namespace detail

inline EvalReport aggregate(std::vector<MetricRecord> records) {
    if (records.empty())
        throw DomainError("aggregate: no records");
    EvalReport report;
    report.by_kind_variant = detail::macro_group(records, &MetricRecord::variant);
    report.by_kind_genre = detail::macro_group(records, &MetricRecord::genre);
    report.records = std::move(records);
    return report;
}

// ---------------------------------------------------------------- CSV i/o

inline void write_metric_records_csv(const std::vector<MetricRecord>& records,
                                     const std::string& path,
                                     const std::vector<std::string>& comments = {}) {
    std::string out;
    for (const std::string& c : comments) out += "# " + c + "\n";
    out += "genre,kind,variant,accuracy,balanced_accuracy,precision,recall,f1,"
           "loss,zero_division_flags\n";
    for (const MetricRecord& r : records) {
        out += r.genre + ',' + to_string(r.kind) + ',' + r.variant + ',' +
               fmt_double(r.accuracy) + ',' + fmt_double(r.balanced_accuracy) + ',' +
               fmt_double(r.precision) + ',' + fmt_double(r.recall) + ',' +
               fmt_double(r.f1) + ',' + fmt_double(r.loss) + ',' +
               std::to_string(r.zero_division_flags) + '\n';
    }
    write_text_file(path, out);
}

inline std::vector<MetricRecord> read_metric_records_csv(const std::string& path) {
    const std::string text = read_text_file(path);
    std::vector<MetricRecord> records;
    bool header_seen = false;
    for (const std::string& raw : split(text, '\n')) {
        const std::string line = trim(raw);
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            if (line.rfind("genre,kind,variant,", 0) != 0)
                throw FormatError(path + ": unexpected metrics header: " + line);
            header_seen = true;
            continue;
        }
        const std::vector<std::string> f = split(line, ',');
        if (f.size() != 10)
            throw FormatError(path + ": expected 10 fields, got " +
                              std::to_string(f.size()) + " in: " + line);
        MetricRecord r;
        r.genre = trim(f[0]);
        r.kind = spec_kind_from_string(trim(f[1]));
        r.variant = trim(f[2]);
        r.accuracy = parse_double(f[3]);
        r.balanced_accuracy = parse_double(f[4]);
        r.precision = parse_double(f[5]);
        r.recall = parse_double(f[6]);
        r.f1 = parse_double(f[7]);
        r.loss = parse_double(f[8]);
        r.zero_division_flags = static_cast<unsigned>(parse_u64(f[9]));
        records.push_back(std::move(r));
    }
    if (!header_seen) throw FormatError(path + ": missing metrics header");
    return records;
}

inline void write_macro_csv(const EvalReport& report, const std::string& path,
                            const std::vector<std::string>& comments = {}) {
    std::string out;
    for (const std::string& c : comments) out += "# " + c + "\n";
    out += "grouping,kind,key,accuracy,balanced_accuracy,precision,recall,f1,"
           "loss,cells\n";
    auto emit = [&out](const char* grouping, const MacroRow& row) {
        out += std::string(grouping) + ',' + to_string(row.kind) + ',' + row.key +
               ',' + fmt_double(row.accuracy) + ',' +
               fmt_double(row.balanced_accuracy) + ',' + fmt_double(row.precision) +
               ',' + fmt_double(row.recall) + ',' + fmt_double(row.f1) + ',' +
               fmt_double(row.loss) + ',' + std::to_string(row.cells) + '\n';
    };
    for (const MacroRow& row : report.by_kind_variant) emit("variant", row);
    for (const MacroRow& row : report.by_kind_genre) emit("genre", row);
    write_text_file(path, out);
}

// ---------------------------------------------------------------- pairing

enum class PairingMode { model, cell };

inline std::string to_string(PairingMode mode) {
    return mode == PairingMode::model ? "model" : "cell";
}

inline PairingMode pairing_mode_from_string(const std::string& s) {
    if (s == "model") return PairingMode::model;
    if (s == "cell") return PairingMode::cell;
    throw ValidationError("unknown pairing mode: " + s);
}

/// Builds the paired F1 sample for the comparison protocol.
/// `cell` pairs every (genre, variant) across the two kinds;
/// `model` pairs the per-variant macro F1 values.
inline PairedSample build_paired_sample(const std::vector<MetricRecord>& records,
                                        PairingMode mode) {
    PairedSample sample;
    if (mode == PairingMode::cell) {
        std::map<std::pair<std::string, std::string>, std::pair<bool, bool>> seen;
        std::vector<std::pair<std::string, std::string>> order;
        std::map<std::pair<std::string, std::string>, std::pair<double, double>> f1;
        for (const MetricRecord& r : records) {
            const std::pair<std::string, std::string> key{r.genre, r.variant};
            auto it = seen.find(key);
            if (it == seen.end()) {
                it = seen.emplace(key, std::pair<bool, bool>{false, false}).first;
                order.push_back(key);
            }
            if (r.kind == SpecKind::linear) {
                if (it->second.first)
                    throw ValidationError("duplicate linear record for cell " +
                                          r.genre + "|" + r.variant);
                it->second.first = true;
                f1[key].first = r.f1;
            } else {
                if (it->second.second)
                    throw ValidationError("duplicate mel record for cell " +
                                          r.genre + "|" + r.variant);
                it->second.second = true;
                f1[key].second = r.f1;
            }
        }
        for (const auto& key : order) {
            const auto& flags = seen[key];
            if (!flags.first || !flags.second)
                throw ValidationError("cell " + key.first + "|" + key.second +
                                      " missing one spectrogram kind");
            sample.labels.push_back(key.first + "|" + key.second);
            sample.a_values.push_back(f1[key].first);
            sample.b_values.push_back(f1[key].second);
        }
    } else {
        const EvalReport report = aggregate(records);
        std::vector<std::string> order;
        std::map<std::string, std::pair<double, double>> f1;
        std::map<std::string, std::pair<bool, bool>> seen;
        for (const MacroRow& row : report.by_kind_variant) {
            auto it = seen.find(row.key);
            if (it == seen.end()) {
                it = seen.emplace(row.key, std::pair<bool, bool>{false, false}).first;
                order.push_back(row.key);
            }
            if (row.kind == SpecKind::linear) {
                it->second.first = true;
                f1[row.key].first = row.f1;
            } else {
                it->second.second = true;
                f1[row.key].second = row.f1;
            }
        }
        for (const std::string& key : order) {
            const auto& flags = seen[key];
            if (!flags.first || !flags.second)
                throw ValidationError("variant " + key +
                                      " missing one spectrogram kind");
            sample.labels.push_back(key);
            sample.a_values.push_back(f1[key].first);
            sample.b_values.push_back(f1[key].second);
        }
    }
    return sample;
}

}  // namespace melcmp
