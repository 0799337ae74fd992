#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "melcmp/common.hpp"

namespace melcmp {

struct TrackRecord {
    std::string track_id;
    std::string audio_path;
    std::vector<std::string> subgenres;  // 1..3 tags
    std::vector<std::string> genres;     // resolved, in retained-genre order
};

/// Subgenre → broad-genre mapping plus the ordered list of genres the
/// experiment retains. Subgenres resolving only to non-retained genres
/// cause their tracks to be dropped at manifest load.
struct GenreTable {
    std::map<std::string, std::vector<std::string>> entries;
    std::vector<std::string> retained_genres;

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    std::size_t index_of(const std::string& genre) const {
        for (std::size_t i = 0; i < retained_genres.size(); ++i)
            if (retained_genres[i] == genre) return i;
        return npos;
    }
};

/// Genre-table CSV: `subgenre,genre1[,genre2]`. An optional
/// `#retained: A;B;C` comment pins the retained list and its order;
/// without it every target genre is retained in first-appearance order.
inline GenreTable load_genre_table(const std::string& path) {
    const std::string text = read_text_file(path);
    GenreTable table;
    std::vector<std::string> appearance;
    bool have_directive = false;
    for (const std::string& raw : split(text, '\n')) {
        const std::string line = trim(raw);
        if (line.empty()) continue;
        if (line[0] == '#') {
            const std::string directive = "#retained:";
            if (line.rfind(directive, 0) == 0) {
                if (have_directive)
                    throw FormatError(path + ": duplicate #retained directive");
                have_directive = true;
                for (const std::string& g : split(line.substr(directive.size()), ';')) {
                    const std::string name = trim(g);
                    if (name.empty())
                        throw FormatError(path + ": empty genre in #retained");
                    if (std::find(table.retained_genres.begin(),
                                  table.retained_genres.end(),
                                  name) != table.retained_genres.end())
                        throw FormatError(path + ": duplicate retained genre " + name);
                    table.retained_genres.push_back(name);
                }
            }
            continue;
        }
        if (line.rfind("subgenre,", 0) == 0) continue;  // header row
        const std::vector<std::string> f = split(line, ',');
        if (f.size() < 2 || f.size() > 3)
            throw FormatError(path + ": expected 2-3 fields in: " + line);
        const std::string sub = trim(f[0]);
        if (sub.empty()) throw FormatError(path + ": empty subgenre in: " + line);
        if (table.entries.count(sub) != 0)
            throw FormatError(path + ": duplicate subgenre " + sub);
        std::vector<std::string> genres;
        for (std::size_t i = 1; i < f.size(); ++i) {
            const std::string g = trim(f[i]);
            if (g.empty()) throw FormatError(path + ": empty genre in: " + line);
            if (std::find(genres.begin(), genres.end(), g) != genres.end())
                throw FormatError(path + ": repeated genre for subgenre " + sub);
            genres.push_back(g);
            if (std::find(appearance.begin(), appearance.end(), g) == appearance.end())
                appearance.push_back(g);
        }
        table.entries.emplace(sub, std::move(genres));
    }
    if (!have_directive) table.retained_genres = std::move(appearance);
    if (table.retained_genres.empty())
        throw ValidationError(path + ": no retained genres");
    return table;
}

inline void save_genre_table(const GenreTable& table, const std::string& path) {
    std::string out = "#retained:";
    for (std::size_t i = 0; i < table.retained_genres.size(); ++i)
        out += (i == 0 ? " " : ";") + table.retained_genres[i];
    out += "\nsubgenre,genre1,genre2\n";
    for (const auto& [sub, genres] : table.entries) {
        out += sub;
        for (const std::string& g : genres) out += ',' + g;
        out += '\n';
    }
    write_text_file(path, out);
}

/// Binary multilabel matrix; rows follow manifest order, columns follow
/// the retained-genre order.
struct LabelMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::string> genres;
    std::vector<std::uint8_t> v;

    LabelMatrix() = default;
    LabelMatrix(std::size_t r, std::vector<std::string> genre_names)
        : rows(r), cols(genre_names.size()), genres(std::move(genre_names)),
          v(r * cols, 0) {}

    std::uint8_t& at(std::size_t r, std::size_t c) { return v[r * cols + c]; }
    std::uint8_t at(std::size_t r, std::size_t c) const { return v[r * cols + c]; }
};

/// Column sums, aligned with labels.genres.
inline std::vector<std::uint64_t> genre_counts(const LabelMatrix& labels) {
    std::vector<std::uint64_t> counts(labels.cols, 0);
    for (std::size_t r = 0; r < labels.rows; ++r)
        for (std::size_t c = 0; c < labels.cols; ++c)
            if (labels.at(r, c)) ++counts[c];
    return counts;
}

struct ManifestData {
    std::vector<TrackRecord> tracks;  // retained tracks only
    LabelMatrix labels;
    std::size_t dropped_count = 0;    // resolved to zero retained genres
    std::vector<std::string> dropped_ids;
    std::string checksum;             // of the manifest file bytes
};

/// Manifest CSV: `track_id,audio_path,subgenres`, subgenres separated
/// by semicolons. Unknown subgenres and duplicate ids are errors;
/// tracks whose subgenres resolve to no retained genre are dropped
/// (counted, not fatal).
inline ManifestData load_manifest(const std::string& path, const GenreTable& table) {
    const std::string text = read_text_file(path);
    ManifestData data;
    data.checksum = hex64(fnv1a64(text));
    std::set<std::string> seen_ids;
    std::vector<std::vector<std::uint8_t>> label_rows;
    bool header_seen = false;
    for (const std::string& raw : split(text, '\n')) {
        const std::string line = trim(raw);
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            if (line != "track_id,audio_path,subgenres")
                throw FormatError(path + ": unexpected manifest header: " + line);
            header_seen = true;
            continue;
        }
        const std::vector<std::string> f = split(line, ',');
        if (f.size() != 3)
            throw FormatError(path + ": expected 3 fields in: " + line);
        TrackRecord rec;
        rec.track_id = trim(f[0]);
        rec.audio_path = trim(f[1]);
        if (rec.track_id.empty())
            throw FormatError(path + ": empty track_id in: " + line);
        if (!seen_ids.insert(rec.track_id).second)
            throw ValidationError(path + ": duplicate track_id " + rec.track_id);
        for (const std::string& s : split(f[2], ';')) {
            const std::string tag = trim(s);
            if (!tag.empty()) rec.subgenres.push_back(tag);
        }
        if (rec.subgenres.empty() || rec.subgenres.size() > 3)
            throw ValidationError(path + ": track " + rec.track_id + " has " +
                                  std::to_string(rec.subgenres.size()) +
                                  " subgenre tags (need 1-3)");
        std::vector<std::uint8_t> row(table.retained_genres.size(), 0);
        for (const std::string& tag : rec.subgenres) {
            auto it = table.entries.find(tag);
            if (it == table.entries.end())
                throw ValidationError(path + ": unknown subgenre '" + tag +
                                      "' on track " + rec.track_id);
            for (const std::string& g : it->second) {
                const std::size_t idx = table.index_of(g);
                if (idx != GenreTable::npos) row[idx] = 1;
            }
        }
        bool any = false;
        for (std::uint8_t b : row) any = any || b != 0;
        if (!any) {
            ++data.dropped_count;
            data.dropped_ids.push_back(rec.track_id);
            continue;
        }
        for (std::size_t c = 0; c < row.size(); ++c)
            if (row[c]) rec.genres.push_back(table.retained_genres[c]);
        data.tracks.push_back(std::move(rec));
        label_rows.push_back(std::move(row));
    }
    if (!header_seen && !trim(text).empty())
        throw FormatError(path + ": missing manifest header");
    data.labels = LabelMatrix(label_rows.size(), table.retained_genres);
    for (std::size_t r = 0; r < label_rows.size(); ++r)
        for (std::size_t c = 0; c < data.labels.cols; ++c)
            data.labels.at(r, c) = label_rows[r][c];
    return data;
}

// ---------------------------------------------------------------- split

struct SplitPlan {
    std::uint64_t seed = 0;
    double fraction = 0.0;
    std::string config_hash;  // filled by the pipeline layer
    std::string manifest_checksum;
    std::size_t rows = 0;
    std::vector<std::string> genres;
    std::vector<std::size_t> test_indices;  // sorted
    std::vector<std::size_t> train_pool;    // sorted complement
    std::vector<std::vector<std::size_t>> per_genre_subsets;  // by genre column
    std::vector<std::string> warnings;
};

namespace detail {

inline long long penalty(long long err) {
    const long long a = err < 0 ? -err : err;
    return a > 1 ? a - 1 : 0;
}

}  // namespace detail

/// Iterative multilabel stratification of the test split: genres are
/// processed rarest first and each of their unassigned tracks goes to
/// the side (test or train) whose remaining demand for the genre is
/// larger, ties broken by total remaining demand and then by seeded
/// coin flip. A greedy repair pass then moves or swaps tracks until
/// every genre's test count is within one sample of
/// round(fraction * positives). Fills test_indices/train_pool only.
inline SplitPlan stratified_test_split(const LabelMatrix& labels, double fraction,
                                       std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction < 1.0))
        throw DomainError("stratified_test_split: fraction must be in (0, 1)");
    SplitPlan plan;
    plan.seed = seed;
    plan.fraction = fraction;
    plan.rows = labels.rows;
    plan.genres = labels.genres;

    const std::size_t n = labels.rows;
    const std::size_t g_count = labels.cols;
    const std::vector<std::uint64_t> counts = genre_counts(labels);

    std::vector<long long> desired_test(g_count), desired_train(g_count);
    std::vector<bool> degenerate(g_count, false);
    for (std::size_t g = 0; g < g_count; ++g) {
        if (counts[g] < 2) {
            degenerate[g] = true;
            desired_test[g] = 0;
            if (counts[g] > 0)
                plan.warnings.push_back("genre '" + labels.genres[g] +
                                       "' has fewer than 2 positives; kept in train");
        } else {
            desired_test[g] =
                std::llround(fraction * static_cast<double>(counts[g]));
        }
        desired_train[g] = static_cast<long long>(counts[g]) - desired_test[g];
    }

    // side: -1 unassigned, 0 train, 1 test
    std::vector<int> side(n, -1);
    std::vector<long long> need_test = desired_test, need_train = desired_train;
    SplitMix64 rng(derive_seed(seed, "stratify"));

    auto assign = [&](std::size_t row, int s) {
        side[row] = s;
        for (std::size_t g = 0; g < g_count; ++g)
            if (labels.at(row, g)) (s == 1 ? need_test[g] : need_train[g]) -= 1;
    };

    // Tracks positive for a degenerate genre are train-locked.
    std::vector<bool> locked(n, false);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t g = 0; g < g_count; ++g) {
            if (degenerate[g] && labels.at(r, g)) {
                locked[r] = true;
                break;
            }
        }
        if (locked[r]) assign(r, 0);
    }

    std::vector<std::uint64_t> remaining = counts;
    for (std::size_t r = 0; r < n; ++r)
        if (side[r] != -1)
            for (std::size_t g = 0; g < g_count; ++g)
                if (labels.at(r, g)) --remaining[g];

    std::size_t unassigned = 0;
    for (std::size_t r = 0; r < n; ++r)
        if (side[r] == -1) ++unassigned;

    while (unassigned > 0) {
        std::size_t pick = g_count;
        for (std::size_t g = 0; g < g_count; ++g) {
            if (remaining[g] == 0) continue;
            if (pick == g_count || remaining[g] < remaining[pick]) pick = g;
        }
        if (pick == g_count) {
            // all-zero rows (not produced by load_manifest, but tolerated)
            for (std::size_t r = 0; r < n; ++r) {
                if (side[r] != -1) continue;
                long long tt = 0, tr = 0;
                for (std::size_t g = 0; g < g_count; ++g) {
                    tt += need_test[g];
                    tr += need_train[g];
                }
                assign(r, tt > tr ? 1 : 0);
                --unassigned;
            }
            break;
        }
        for (std::size_t r = 0; r < n && remaining[pick] > 0; ++r) {
            if (side[r] != -1 || !labels.at(r, pick)) continue;
            int s;
            if (need_test[pick] != need_train[pick]) {
                s = need_test[pick] > need_train[pick] ? 1 : 0;
            } else {
                long long tt = 0, tr = 0;
                for (std::size_t g = 0; g < g_count; ++g)
                    if (labels.at(r, g)) {
                        tt += need_test[g];
                        tr += need_train[g];
                    }
                if (tt != tr) s = tt > tr ? 1 : 0;
                else s = static_cast<int>(rng.bounded(2));
            }
            assign(r, s);
            for (std::size_t g = 0; g < g_count; ++g)
                if (labels.at(r, g)) --remaining[g];
            --unassigned;
        }
    }

    // Repair: test-count error per genre, target |err| <= 1.
    std::vector<long long> err(g_count, 0);
    auto recompute_err = [&] {
        std::fill(err.begin(), err.end(), 0);
        for (std::size_t r = 0; r < n; ++r)
            if (side[r] == 1)
                for (std::size_t g = 0; g < g_count; ++g)
                    if (labels.at(r, g)) ++err[g];
        for (std::size_t g = 0; g < g_count; ++g) err[g] -= desired_test[g];
    };
    recompute_err();
    auto total_penalty = [&] {
        long long t = 0;
        for (long long e : err) t += detail::penalty(e);
        return t;
    };
    auto move_gain = [&](std::size_t row, int delta) {
        // delta +1: row enters test; -1: row leaves test
        long long gain = 0;
        for (std::size_t g = 0; g < g_count; ++g)
            if (labels.at(row, g))
                gain += detail::penalty(err[g]) - detail::penalty(err[g] + delta);
        return gain;
    };
    auto apply_move = [&](std::size_t row, int delta) {
        side[row] = delta > 0 ? 1 : 0;
        for (std::size_t g = 0; g < g_count; ++g)
            if (labels.at(row, g)) err[g] += delta;
    };

    for (int iter = 0; iter < 4000 && total_penalty() > 0; ++iter) {
        long long best_gain = 0;
        std::size_t best_row = n;
        int best_delta = 0;
        for (std::size_t r = 0; r < n; ++r) {
            if (side[r] == 1) {
                const long long gain = move_gain(r, -1);
                if (gain > best_gain) {
                    best_gain = gain;
                    best_row = r;
                    best_delta = -1;
                }
            } else if (!locked[r]) {
                const long long gain = move_gain(r, +1);
                if (gain > best_gain) {
                    best_gain = gain;
                    best_row = r;
                    best_delta = +1;
                }
            }
        }
        if (best_row != n) {
            apply_move(best_row, best_delta);
            continue;
        }
        // No single move helps: try a swap (one out of test, one in).
        long long best_pair_gain = 0;
        std::size_t out_row = n, in_row = n;
        for (std::size_t a = 0; a < n; ++a) {
            if (side[a] != 1) continue;
            for (std::size_t b = 0; b < n; ++b) {
                if (side[b] != 0 || locked[b]) continue;
                long long gain = 0;
                for (std::size_t g = 0; g < g_count; ++g) {
                    const int d = (labels.at(b, g) ? 1 : 0) - (labels.at(a, g) ? 1 : 0);
                    if (d != 0)
                        gain += detail::penalty(err[g]) - detail::penalty(err[g] + d);
                }
                if (gain > best_pair_gain) {
                    best_pair_gain = gain;
                    out_row = a;
                    in_row = b;
                }
            }
        }
        if (out_row == n) break;
        apply_move(out_row, -1);
        apply_move(in_row, +1);
    }
    if (total_penalty() > 0)
        plan.warnings.push_back("stratification left some genre off target by >1");

    for (std::size_t r = 0; r < n; ++r)
        (side[r] == 1 ? plan.test_indices : plan.train_pool).push_back(r);
    return plan;
}

/// Primary genre of a track: its rarest positive genre by overall
/// column counts, lower column index on ties.
inline std::size_t primary_genre(const LabelMatrix& labels,
                                 const std::vector<std::uint64_t>& counts,
                                 std::size_t row) {
    std::size_t best = GenreTable::npos;
    for (std::size_t g = 0; g < labels.cols; ++g) {
        if (!labels.at(row, g)) continue;
        if (best == GenreTable::npos || counts[g] < counts[best]) best = g;
    }
    return best;
}

/// Balanced one-vs-all subset for one genre: every train-pool positive
/// plus an equal number of negatives. Negative quotas follow each
/// negative track's primary genre share via largest-remainder
/// apportionment; each quota is drawn by partial Fisher-Yates with a
/// sub-seed derived from (seed, genre, group), so genre subsets can be
/// generated in any order with identical results.
inline std::vector<std::size_t> ova_balanced_subset(
    const LabelMatrix& labels, std::size_t genre_index,
    const std::vector<std::size_t>& train_pool, std::uint64_t seed,
    std::vector<std::string>* warnings = nullptr) {
    if (genre_index >= labels.cols)
        throw DomainError("ova_balanced_subset: genre index out of range");
    const std::vector<std::uint64_t> counts = genre_counts(labels);
    std::vector<std::size_t> positives, negatives;
    for (std::size_t row : train_pool)
        (labels.at(row, genre_index) ? positives : negatives).push_back(row);
    std::vector<std::size_t> subset = positives;
    const std::string genre_name = labels.genres[genre_index];
    if (negatives.size() <= positives.size()) {
        if (warnings != nullptr && negatives.size() < positives.size())
            warnings->push_back("genre '" + genre_name + "': only " +
                                std::to_string(negatives.size()) +
                                " negatives for " + std::to_string(positives.size()) +
                                " positives; subset imbalanced");
        subset.insert(subset.end(), negatives.begin(), negatives.end());
        std::sort(subset.begin(), subset.end());
        return subset;
    }

    const std::size_t need = positives.size();
    std::map<std::size_t, std::vector<std::size_t>> groups;  // primary genre → rows
    for (std::size_t row : negatives)
        groups[primary_genre(labels, counts, row)].push_back(row);

    const std::uint64_t total = negatives.size();
    std::vector<std::pair<std::size_t, std::size_t>> quota;  // (group genre, quota)
    std::vector<std::pair<std::uint64_t, std::size_t>> rema;  // (remainder, pos in quota)
    std::size_t assigned = 0;
    for (const auto& [g, rows] : groups) {
        const std::uint64_t prod = static_cast<std::uint64_t>(need) * rows.size();
        quota.emplace_back(g, static_cast<std::size_t>(prod / total));
        rema.emplace_back(prod % total, quota.size() - 1);
        assigned += quota.back().second;
    }
    std::stable_sort(rema.begin(), rema.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t i = 0; assigned < need; ++i) {
        quota[rema[i % rema.size()].second].second += 1;
        ++assigned;
    }

    const std::uint64_t base =
        derive_seed(seed, "ova:" + std::to_string(genre_index));
    for (auto& [g, q] : quota) {
        if (q == 0) continue;
        std::vector<std::size_t>& rows = groups[g];
        SplitMix64 rng(derive_seed(base, "grp:" + std::to_string(g)));
        const std::size_t take = std::min(q, rows.size());
        for (std::size_t i = 0; i < take; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(
                rng.bounded(static_cast<std::uint64_t>(rows.size() - i)));
            std::swap(rows[i], rows[j]);
            subset.push_back(rows[i]);
        }
    }
    std::sort(subset.begin(), subset.end());
    return subset;
}

/// Full plan: stratified test split plus one balanced subset per genre.
inline SplitPlan make_split_plan(const LabelMatrix& labels, double fraction,
                                 std::uint64_t seed,
                                 const std::string& manifest_checksum) {
    SplitPlan plan = stratified_test_split(labels, fraction, seed);
    plan.manifest_checksum = manifest_checksum;
    plan.per_genre_subsets.resize(labels.cols);
    for (std::size_t g = 0; g < labels.cols; ++g)
        plan.per_genre_subsets[g] =
            ova_balanced_subset(labels, g, plan.train_pool, seed, &plan.warnings);
    return plan;
}

inline constexpr const char* kSplitPlanHeader = "melcmp-split-plan v1";

inline void save_split_plan(const SplitPlan& plan, const std::string& path) {
    KvDoc doc;
    doc.set_u64("seed", plan.seed);
    doc.set_double("fraction", plan.fraction);
    if (!plan.config_hash.empty()) doc.set("config_hash", plan.config_hash);
    doc.set("manifest_checksum", plan.manifest_checksum);
    doc.set_u64("rows", plan.rows);
    std::string genres;
    for (std::size_t i = 0; i < plan.genres.size(); ++i)
        genres += (i ? ";" : "") + plan.genres[i];
    doc.set("genres", genres);
    doc.set_list("test_indices", plan.test_indices.begin(), plan.test_indices.end());
    doc.set_list("train_pool", plan.train_pool.begin(), plan.train_pool.end());
    for (std::size_t g = 0; g < plan.per_genre_subsets.size(); ++g)
        doc.set_list("subset." + std::to_string(g),
                     plan.per_genre_subsets[g].begin(),
                     plan.per_genre_subsets[g].end());
    doc.set_u64("warning_count", plan.warnings.size());
    for (std::size_t i = 0; i < plan.warnings.size(); ++i)
        doc.set("warning." + std::to_string(i), plan.warnings[i]);
    write_text_file(path, doc.serialize(kSplitPlanHeader));
}

inline SplitPlan load_split_plan(const std::string& path) {
    const KvDoc doc = KvDoc::parse(read_text_file(path), kSplitPlanHeader);
    SplitPlan plan;
    plan.seed = doc.get_u64("seed");
    plan.fraction = doc.get_double("fraction");
    plan.config_hash = doc.get_or("config_hash", "");
    plan.manifest_checksum = doc.get("manifest_checksum");
    plan.rows = static_cast<std::size_t>(doc.get_u64("rows"));
    for (const std::string& g : split(doc.get("genres"), ';'))
        plan.genres.push_back(trim(g));
    plan.test_indices = doc.get_index_list("test_indices");
    plan.train_pool = doc.get_index_list("train_pool");
    plan.per_genre_subsets.resize(plan.genres.size());
    for (std::size_t g = 0; g < plan.genres.size(); ++g)
        plan.per_genre_subsets[g] = doc.get_index_list("subset." + std::to_string(g));
    const std::size_t warn_count =
        static_cast<std::size_t>(doc.get_u64("warning_count"));
    for (std::size_t i = 0; i < warn_count; ++i)
        plan.warnings.push_back(doc.get("warning." + std::to_string(i)));

    if (plan.test_indices.size() + plan.train_pool.size() != plan.rows)
        throw ValidationError(path + ": split does not cover all rows");
    std::vector<bool> seen(plan.rows, false);
    for (std::size_t idx : plan.test_indices) {
        if (idx >= plan.rows || seen[idx])
            throw ValidationError(path + ": bad test index " + std::to_string(idx));
        seen[idx] = true;
    }
    for (std::size_t idx : plan.train_pool) {
        if (idx >= plan.rows || seen[idx])
            throw ValidationError(path + ": bad train index " + std::to_string(idx));
        seen[idx] = true;
    }
    return plan;
}

// ------------------------------------------------------- reference data

/// Genre → song count table from the source dataset, descending.
inline const std::vector<std::pair<std::string, std::uint64_t>>&
reference_genre_counts() {
    static const std::vector<std::pair<std::string, std::uint64_t>> counts = {
        {"Hip-Hop", 5641},           {"Electronic", 4680},
        {"Rock", 4356},              {"Pop", 2758},
        {"Psychedelia", 1367},       {"Metal", 1153},
        {"Dance", 960},              {"Punk", 804},
        {"R&B", 801},                {"Industrial & Noise", 788},
        {"Experimental", 694},       {"Ambient", 687},
        {"Folk", 652},               {"Classical Music", 608},
        {"Singer-Songwriter", 474},  {"Jazz", 278},
    };
    return counts;
}

inline constexpr std::size_t kReferenceTrackCount = 18019;

/// Genre table for the reference corpus: identity subgenre per genre
/// plus the documented two-genre example tag.
inline GenreTable reference_genre_table() {
    GenreTable table;
    for (const auto& [genre, count] : reference_genre_counts()) {
        (void)count;
        table.retained_genres.push_back(genre);
        table.entries.emplace(genre, std::vector<std::string>{genre});
    }
    table.entries.emplace("electro-industrial",
                          std::vector<std::string>{"Electronic",
                                                   "Industrial & Noise"});
    return table;
}

/// Label matrix with the reference column sums: one genre per track in
/// table order, then the remaining genre slots become second labels of
/// the earliest tracks (whose first labels cannot collide with them).
inline LabelMatrix build_reference_labels() {
    std::vector<std::string> genres;
    std::vector<std::size_t> slots;
    for (std::size_t g = 0; g < reference_genre_counts().size(); ++g) {
        const auto& [name, count] = reference_genre_counts()[g];
        genres.push_back(name);
        for (std::uint64_t i = 0; i < count; ++i) slots.push_back(g);
    }
    LabelMatrix labels(kReferenceTrackCount, genres);
    for (std::size_t s = 0; s < slots.size(); ++s) {
        const std::size_t row = s < kReferenceTrackCount ? s : s - kReferenceTrackCount;
        labels.at(row, slots[s]) = 1;
    }
    return labels;
}

}  // namespace melcmp
