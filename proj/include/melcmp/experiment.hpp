#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <ostream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "melcmp/audio.hpp"
#include "melcmp/common.hpp"
#include "melcmp/dataset.hpp"
#include "melcmp/dsp.hpp"
#include "melcmp/metrics.hpp"
#include "melcmp/model.hpp"
#include "melcmp/render.hpp"
#include "melcmp/spectrogram_io.hpp"
#include "melcmp/stats.hpp"

namespace melcmp {

// ---------------------------------------------------------------- config

/// All knobs of one experiment. The hash covers only semantic
/// parameters (everything the outputs depend on numerically), never
/// paths or the worker count, so the same experiment run from a
/// different directory or at a different parallelism keeps its
/// identity.
struct ExperimentConfig {
    std::string manifest_path;
    std::string genre_table_path;
    std::string audio_root;
    std::string output_root = "out";

    std::uint64_t seed = 42;

    unsigned sample_rate = 22050;
    unsigned n_fft = 2048;
    unsigned hop_length = 512;
    unsigned n_mels = 128;
    MelVariant mel_variant = MelVariant::slaney;
    MelNorm mel_norm = MelNorm::slaney_area;
    double fmin = 0.0;
    double fmax = 0.0;  // 0 means Nyquist
    double amin = 1e-10;
    double top_db = 80.0;

    double split_fraction = 0.1;
    std::vector<std::string> variants = {"p32", "p64", "p96", "p128"};

    double learning_rate = 0.1;
    unsigned epochs = 200;
    unsigned batch_size = 32;
    double l2 = 1e-4;

    PairingMode pairing = PairingMode::cell;

    unsigned jobs = 1;
    bool force = false;

    double effective_fmax() const {
        return fmax > 0.0 ? fmax : sample_rate / 2.0;
    }

    void apply(const std::string& key, const std::string& value) {
        if (key == "manifest") manifest_path = value;
        else if (key == "genre_table") genre_table_path = value;
        else if (key == "audio_root") audio_root = value;
        else if (key == "output_root") output_root = value;
        else if (key == "seed") seed = parse_u64(value, key);
        else if (key == "sample_rate") sample_rate = parse_unsigned(value, key);
        else if (key == "n_fft") n_fft = parse_unsigned(value, key);
        else if (key == "hop_length") hop_length = parse_unsigned(value, key);
        else if (key == "n_mels") n_mels = parse_unsigned(value, key);
        else if (key == "mel_variant") mel_variant = mel_variant_from_string(value);
        else if (key == "mel_norm") mel_norm = mel_norm_from_string(value);
        else if (key == "fmin") fmin = parse_double(value, key);
        else if (key == "fmax") fmax = parse_double(value, key);
        else if (key == "amin") amin = parse_double(value, key);
        else if (key == "top_db") top_db = parse_double(value, key);
        else if (key == "split_fraction") split_fraction = parse_double(value, key);
        else if (key == "variants") variants = parse_variants(value);
        else if (key == "learning_rate") learning_rate = parse_double(value, key);
        else if (key == "epochs") epochs = parse_unsigned(value, key);
        else if (key == "batch_size") batch_size = parse_unsigned(value, key);
        else if (key == "l2") l2 = parse_double(value, key);
        else if (key == "pairing") pairing = pairing_mode_from_string(value);
        else if (key == "jobs") jobs = parse_unsigned(value, key);
        else throw ValidationError("unknown config key: " + key);
    }

    /// Flat `key = value` config document; '#' lines are comments.
    void apply_file(const std::string& path) {
        if (!std::filesystem::exists(path))
            throw ValidationError("config file not found: " + path);
        const std::string text = read_text_file(path);
        for (const std::string& raw : split(text, '\n')) {
            const std::string line = trim(raw);
            if (line.empty() || line[0] == '#') continue;
            const std::size_t eq = line.find('=');
            if (eq == std::string::npos)
                throw FormatError(path + ": expected key = value, got: " + line);
            apply(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        }
    }

    /// Canonical serialization of the semantic parameters.
    std::string semantic_string() const {
        std::string s;
        s += "seed=" + std::to_string(seed);
        s += ";sample_rate=" + std::to_string(sample_rate);
        s += ";n_fft=" + std::to_string(n_fft);
        s += ";hop_length=" + std::to_string(hop_length);
        s += ";n_mels=" + std::to_string(n_mels);
        s += ";mel_variant=" + std::string(to_string(mel_variant));
        s += ";mel_norm=" + std::string(to_string(mel_norm));
        s += ";fmin=" + fmt_double(fmin);
        s += ";fmax=" + fmt_double(fmax);
        s += ";amin=" + fmt_double(amin);
        s += ";top_db=" + fmt_double(top_db);
        s += ";split_fraction=" + fmt_double(split_fraction);
        s += ";variants=";
        for (std::size_t i = 0; i < variants.size(); ++i)
            s += (i ? "," : "") + variants[i];
        s += ";learning_rate=" + fmt_double(learning_rate);
        s += ";epochs=" + std::to_string(epochs);
        s += ";batch_size=" + std::to_string(batch_size);
        s += ";l2=" + fmt_double(l2);
        s += ";pairing=" + to_string(pairing);
        return s;
    }

    std::string hash() const { return hex64(fnv1a64(semantic_string())); }

    void validate_dsp() const {
        if (sample_rate == 0) throw ValidationError("sample_rate must be positive");
        if (!is_pow2(n_fft)) throw ValidationError("n_fft must be a power of two");
        if (hop_length == 0 || hop_length > n_fft)
            throw ValidationError("hop_length must be in [1, n_fft]");
        if (n_mels == 0) throw ValidationError("n_mels must be positive");
        if (!(split_fraction > 0.0 && split_fraction < 1.0))
            throw ValidationError("split_fraction must be in (0, 1)");
        if (variants.empty()) throw ValidationError("variants must be non-empty");
    }

    static unsigned parse_unsigned(const std::string& value, const std::string& what) {
        const std::uint64_t v = parse_u64(value, what);
        if (v > 0xffffffffull) throw ValidationError(what + " out of range");
        return static_cast<unsigned>(v);
    }

    static std::vector<std::string> parse_variants(const std::string& value) {
        std::vector<std::string> out;
        std::string norm = value;
        for (char& c : norm)
            if (c == ',') c = ';';
        for (const std::string& tok : split(norm, ';')) {
            const std::string v = trim(tok);
            if (!v.empty()) out.push_back(v);
        }
        if (out.empty()) throw ValidationError("variants list is empty");
        return out;
    }
};

inline void require_file(const std::string& path, const std::string& what) {
    if (path.empty())
        throw ValidationError("no " + what + " configured");
    if (!std::filesystem::exists(path))
        throw ValidationError(what + " not found: " + path);
}

/// Pooling band count of a variant name like "p64".
inline std::size_t variant_bands(const std::string& variant) {
    if (variant.size() < 2 || variant[0] != 'p')
        throw ValidationError("bad variant '" + variant + "' (expected pN)");
    const std::uint64_t bands = parse_u64(variant.substr(1), "variant bands");
    if (bands == 0) throw ValidationError("variant bands must be positive");
    return static_cast<std::size_t>(bands);
}

// ------------------------------------------------------------- worker pool

/// Runs fn(0..count-1) over `jobs` threads. Exceptions are collected
/// per index and the lowest-index one is rethrown after the join, so
/// error reporting does not depend on scheduling.
template <typename Fn>
void parallel_for(std::size_t count, unsigned jobs, Fn&& fn) {
    if (count == 0) return;
    std::size_t workers = jobs == 0 ? 1 : jobs;
    workers = std::min(workers, count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    fn(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    }
    for (std::thread& t : pool) t.join();
    for (const std::exception_ptr& e : errors)
        if (e) std::rethrow_exception(e);
}

// ---------------------------------------------------------------- layout

namespace paths {

inline std::string sanitize_id(const std::string& id) {
    std::string out = id;
    for (char& c : out) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                        (c >= '0' && c <= '9') || c == '.' || c == '_' || c == '-';
        if (!ok) c = '_';
    }
    return out;
}

inline std::string spectrogram(const ExperimentConfig& cfg, const std::string& id,
                               SpecKind kind) {
    return cfg.output_root + "/spectrograms/" + sanitize_id(id) + "." +
           to_string(kind) + ".spg";
}
inline std::string model_file(const ExperimentConfig& cfg, std::size_t genre_index,
                              SpecKind kind, const std::string& variant) {
    return cfg.output_root + "/models/model.g" + std::to_string(genre_index) + "." +
           to_string(kind) + "." + variant + ".txt";
}
inline std::string split_plan(const ExperimentConfig& cfg) {
    return cfg.output_root + "/split_plan.txt";
}
inline std::string extraction_log(const ExperimentConfig& cfg) {
    return cfg.output_root + "/extraction_log.txt";
}
inline std::string metrics_csv(const ExperimentConfig& cfg) {
    return cfg.output_root + "/metrics.csv";
}
inline std::string macro_csv(const ExperimentConfig& cfg) {
    return cfg.output_root + "/macro.csv";
}
inline std::string compare_doc(const ExperimentConfig& cfg) {
    return cfg.output_root + "/compare.txt";
}
inline std::string qq_csv(const ExperimentConfig& cfg) {
    return cfg.output_root + "/qq.csv";
}
inline std::string report_txt(const ExperimentConfig& cfg) {
    return cfg.output_root + "/report.txt";
}
inline std::string render_ppm(const ExperimentConfig& cfg, const std::string& id,
                              SpecKind kind) {
    return cfg.output_root + "/renders/" + sanitize_id(id) + "." + to_string(kind) +
           ".ppm";
}

}  // namespace paths

inline std::string join_path(const std::string& root, const std::string& rel) {
    if (!rel.empty() && rel[0] == '/') return rel;
    if (root.empty()) return rel;
    return root + "/" + rel;
}

// ------------------------------------------------------------ synth corpus

/// The four synthetic classes live in separated spectral registers so
/// a pooled-band classifier can tell them apart by construction.
struct SynthGenre {
    const char* name;
    const char* tag_a;
    const char* tag_b;
    const char* overlap_tag;  // this genre + the next one (cyclic)
    std::uint64_t weight;     // descending reference counts, ranks 0/5/10/15
};

inline const std::vector<SynthGenre>& synth_genres() {
    static const std::vector<SynthGenre> genres = {
        {"Low Tones", "sub-bass", "warm-bass", "bass-lead", 5641},
        {"Mid Tones", "bright-lead", "pure-lead", "lead-riser", 1153},
        {"Chirps", "riser", "sweep", "riser-wash", 788},
        {"Noise Bands", "static-wash", "white-hiss", "wash-bass", 278},
    };
    return genres;
}

struct SynthSummary {
    std::size_t tracks = 0;
    std::vector<std::pair<std::string, std::size_t>> per_genre;  // positives
};

namespace detail {

/// One second of the genre's characteristic signal at unit scale.
inline std::vector<double> synth_component(std::size_t genre, SplitMix64& rng,
                                           unsigned sr) {
    const std::size_t n = sr;
    std::vector<double> s(n, 0.0);
    auto add_tone = [&](double freq, double amp, double phase) {
        for (std::size_t i = 0; i < n; ++i)
            s[i] += amp * std::sin(2.0 * std::numbers::pi * freq * i / sr + phase);
    };
    switch (genre) {
        case 0: {  // low tones, 110-200 Hz
            const double f = 110.0 + 90.0 * rng.next_double();
            add_tone(f, 0.35, 0.0);
            add_tone(f * 1.01, 0.2, 0.0);
            break;
        }
        case 1: {  // mid tones, 440-800 Hz + fifth
            const double f = 440.0 + 360.0 * rng.next_double();
            add_tone(f, 0.35, 0.0);
            add_tone(f * 1.5, 0.2, 0.0);
            break;
        }
        case 2: {  // linear chirp, ~1.5 kHz up to ~3.5 kHz
            const double f0 = 1500.0 + 300.0 * rng.next_double();
            const double f1 = 3000.0 + 500.0 * rng.next_double();
            for (std::size_t i = 0; i < n; ++i) {
                const double t = static_cast<double>(i) / sr;
                const double phase =
                    2.0 * std::numbers::pi * (f0 * t + 0.5 * (f1 - f0) * t * t);
                s[i] += 0.5 * std::sin(phase);
            }
            break;
        }
        default: {  // random-phase sine bed, 5-8 kHz
            const double amp = 0.5 / std::sqrt(40.0);
            for (int k = 0; k < 40; ++k) {
                const double f = 5000.0 + 3000.0 * rng.next_double();
                const double ph = 2.0 * std::numbers::pi * rng.next_double();
                add_tone(f, amp, ph);
            }
            break;
        }
    }
    return s;
}

}  // namespace detail

/// Generates `size` one-second tracks: WAVs under <dir>/audio, a
/// manifest and a genre table. Class sizes follow the reference
/// proportions by largest-remainder apportionment (about 20:1 between
/// the largest and smallest class); every seventh track of a class
/// carries a two-genre tag and mixes both class signals. A quarter of
/// the single-genre tracks carry quiet off-register bleed and every
/// track gets a low noise bed, so classifiers stay good but imperfect.
inline SynthSummary synth_corpus(const std::string& dir, std::size_t size,
                                 std::uint64_t seed) {
    if (size < 8) throw ValidationError("synth-corpus: size must be >= 8");
    const std::vector<SynthGenre>& genres = synth_genres();
    const std::size_t g_count = genres.size();

    std::uint64_t total_weight = 0;
    for (const SynthGenre& g : genres) total_weight += g.weight;
    std::vector<std::size_t> quota(g_count);
    std::vector<std::pair<std::uint64_t, std::size_t>> rema;
    std::size_t assigned = 0;
    for (std::size_t g = 0; g < g_count; ++g) {
        const std::uint64_t prod = static_cast<std::uint64_t>(size) * genres[g].weight;
        quota[g] = static_cast<std::size_t>(prod / total_weight);
        rema.emplace_back(prod % total_weight, g);
        assigned += quota[g];
    }
    std::stable_sort(rema.begin(), rema.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t i = 0; assigned < size; ++i) {
        quota[rema[i % rema.size()].second] += 1;
        ++assigned;
    }
    for (std::size_t g = 0; g < g_count; ++g) {
        while (quota[g] < 2) {  // keep every class stratifiable
            std::size_t donor = 0;
            for (std::size_t h = 1; h < g_count; ++h)
                if (quota[h] > quota[donor]) donor = h;
            if (quota[donor] <= 2)
                throw ValidationError("synth-corpus: size too small for 4 classes");
            --quota[donor];
            ++quota[g];
        }
    }

    namespace fs = std::filesystem;
    fs::create_directories(dir + "/audio");

    GenreTable table;
    for (const SynthGenre& g : genres) table.retained_genres.push_back(g.name);
    for (std::size_t g = 0; g < g_count; ++g) {
        table.entries.emplace(genres[g].tag_a,
                              std::vector<std::string>{genres[g].name});
        table.entries.emplace(genres[g].tag_b,
                              std::vector<std::string>{genres[g].name});
        table.entries.emplace(
            genres[g].overlap_tag,
            std::vector<std::string>{genres[g].name,
                                     genres[(g + 1) % g_count].name});
    }
    save_genre_table(table, dir + "/genre_table.csv");

    constexpr unsigned kRate = 22050;
    std::string manifest = "track_id,audio_path,subgenres\n";
    SynthSummary summary;
    std::vector<std::size_t> positives(g_count, 0);
    std::size_t serial = 0;
    for (std::size_t g = 0; g < g_count; ++g) {
        for (std::size_t local = 0; local < quota[g]; ++local) {
            ++serial;
            char idbuf[16];
            std::snprintf(idbuf, sizeof idbuf, "t%04zu", serial);
            const std::string id = idbuf;
            SplitMix64 rng(derive_seed(seed, "track:" + id));

            const bool overlap = local % 7 == 3;
            std::vector<double> samples = detail::synth_component(g, rng, kRate);
            std::string tags;
            ++positives[g];
            if (overlap) {
                const std::size_t h = (g + 1) % g_count;
                const std::vector<double> other =
                    detail::synth_component(h, rng, kRate);
                for (std::size_t i = 0; i < samples.size(); ++i)
                    samples[i] = 0.5 * samples[i] + 0.5 * other[i];
                tags = genres[g].overlap_tag;
                ++positives[h];
            } else {
                tags = local % 2 == 0 ? genres[g].tag_a : genres[g].tag_b;
                if (local % 5 == 2) {
                    tags += ';';
                    tags += local % 2 == 0 ? genres[g].tag_b : genres[g].tag_a;
                }
            }
            if (!overlap && local % 4 == 1) {
                // quiet unlabeled bleed from the opposite register, so the
                // classes stay separable without being trivially so
                const std::vector<double> bleed =
                    detail::synth_component((g + 2) % g_count, rng, kRate);
                for (std::size_t i = 0; i < samples.size(); ++i)
                    samples[i] += 0.25 * bleed[i];
            }
            for (double& v : samples) v += 0.02 * (2.0 * rng.next_double() - 1.0);

            AudioBuffer buf;
            buf.sample_rate = kRate;
            buf.source_id = id;
            buf.samples = std::move(samples);
            for (double& v : buf.samples) v = std::clamp(v, -1.0, 1.0);
            write_wav(buf, dir + "/audio/" + id + ".wav", WavEncoding::pcm16);
            manifest += id + ",audio/" + id + ".wav," + tags + "\n";
        }
    }
    write_text_file(dir + "/manifest.csv", manifest);

    summary.tracks = size;
    for (std::size_t g = 0; g < g_count; ++g)
        summary.per_genre.emplace_back(genres[g].name, positives[g]);
    return summary;
}

// ---------------------------------------------------------------- stages

namespace detail {

inline ManifestData load_dataset(const ExperimentConfig& cfg, GenreTable* table_out) {
    require_file(cfg.genre_table_path, "genre table");
    require_file(cfg.manifest_path, "manifest");
    GenreTable table = load_genre_table(cfg.genre_table_path);
    ManifestData data = load_manifest(cfg.manifest_path, table);
    if (table_out != nullptr) *table_out = std::move(table);
    return data;
}

}  // namespace detail

struct ExtractSummary {
    std::size_t tracks = 0;
    std::size_t written = 0;
    std::size_t skipped = 0;
    std::size_t failed = 0;
};

inline constexpr const char* kExtractionLogHeader = "melcmp-extraction-log v1";

inline ExtractSummary run_extract(const ExperimentConfig& cfg, std::ostream& out) {
    cfg.validate_dsp();
    const ManifestData data = detail::load_dataset(cfg, nullptr);
    std::filesystem::create_directories(cfg.output_root + "/spectrograms");

    const MelFilterbank fb =
        mel_filterbank(cfg.sample_rate, cfg.n_fft, cfg.n_mels, cfg.fmin,
                       cfg.effective_fmax(), cfg.mel_variant, cfg.mel_norm);

    struct FileOutcome {
        std::string status;  // written | skipped | failed
        std::string detail;  // checksum or error text
    };
    struct TrackOutcome {
        FileOutcome file[2];  // by SpecKind value
        bool failed = false;
    };
    std::vector<TrackOutcome> outcomes(data.tracks.size());

    parallel_for(data.tracks.size(), cfg.jobs, [&](std::size_t i) {
        const TrackRecord& rec = data.tracks[i];
        TrackOutcome& o = outcomes[i];
        const std::string lin_path = paths::spectrogram(cfg, rec.track_id, SpecKind::linear);
        const std::string mel_path = paths::spectrogram(cfg, rec.track_id, SpecKind::mel);
        const bool lin_exists = std::filesystem::exists(lin_path);
        const bool mel_exists = std::filesystem::exists(mel_path);
        try {
            if (lin_exists && mel_exists && !cfg.force) {
                for (int k = 0; k < 2; ++k) {
                    const std::string& p = k == 0 ? lin_path : mel_path;
                    o.file[k].status = "skipped";
                    o.file[k].detail = hex64(fnv1a64(read_text_file(p)));
                }
                return;
            }
            AudioBuffer buf = decode_wav(join_path(cfg.audio_root, rec.audio_path));
            if (buf.sample_rate != cfg.sample_rate)
                buf = resample_linear(buf, cfg.sample_rate);
            const Spectrogram power = stft_power(buf, cfg.n_fft, cfg.hop_length, true);
            const Spectrogram lin_db = power_to_db_ref_max(power, cfg.amin, cfg.top_db);
            Spectrogram mel_power = apply_filterbank(power, fb);
            const Spectrogram mel_db =
                power_to_db_ref_max(mel_power, cfg.amin, cfg.top_db);
            const std::vector<std::uint8_t> lin_bytes = encode_spectrogram(lin_db);
            const std::vector<std::uint8_t> mel_bytes = encode_spectrogram(mel_db);
            write_spectrogram(lin_db, lin_path);
            write_spectrogram(mel_db, mel_path);
            o.file[0] = {"written", hex64(fnv1a64(lin_bytes.data(), lin_bytes.size()))};
            o.file[1] = {"written", hex64(fnv1a64(mel_bytes.data(), mel_bytes.size()))};
        } catch (const Error& e) {
            o.failed = true;
            o.file[0] = {"failed", e.what()};
            o.file[1] = {"failed", e.what()};
        }
    });

    ExtractSummary summary;
    summary.tracks = data.tracks.size();
    KvDoc log;
    log.set("config_hash", cfg.hash());
    log.set_u64("seed", cfg.seed);
    log.set("dsp", cfg.semantic_string());
    log.set_u64("tracks", data.tracks.size());
    log.set_u64("dropped_tracks", data.dropped_count);
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        const TrackOutcome& o = outcomes[i];
        if (o.failed) ++summary.failed;
        else if (o.file[0].status == "written") ++summary.written;
        else ++summary.skipped;
        for (int k = 0; k < 2; ++k) {
            const SpecKind kind = k == 0 ? SpecKind::linear : SpecKind::mel;
            log.set("file." + data.tracks[i].track_id + "." + to_string(kind),
                    o.file[k].status + " " + o.file[k].detail);
        }
    }
    log.set_u64("written", summary.written);
    log.set_u64("skipped", summary.skipped);
    log.set_u64("failed", summary.failed);
    write_text_file(paths::extraction_log(cfg), log.serialize(kExtractionLogHeader));

    out << "extract: " << summary.tracks << " tracks, " << summary.written
        << " written, " << summary.skipped << " skipped, " << summary.failed
        << " failed\n";
    if (summary.failed * 2 > summary.tracks)
        throw Error("extraction failed for more than half the corpus (" +
                    std::to_string(summary.failed) + "/" +
                    std::to_string(summary.tracks) + ")");
    return summary;
}

inline SplitPlan run_split(const ExperimentConfig& cfg, std::ostream& out) {
    cfg.validate_dsp();
    const ManifestData data = detail::load_dataset(cfg, nullptr);
    SplitPlan plan =
        make_split_plan(data.labels, cfg.split_fraction, cfg.seed, data.checksum);
    plan.config_hash = cfg.hash();
    std::filesystem::create_directories(cfg.output_root);
    save_split_plan(plan, paths::split_plan(cfg));

    out << "split: " << plan.rows << " tracks -> " << plan.test_indices.size()
        << " test, " << plan.train_pool.size() << " train pool\n";
    const std::vector<std::uint64_t> counts = genre_counts(data.labels);
    for (std::size_t g = 0; g < plan.genres.size(); ++g) {
        std::size_t in_test = 0;
        for (std::size_t idx : plan.test_indices)
            if (data.labels.at(idx, g)) ++in_test;
        out << "  " << plan.genres[g] << ": " << in_test << "/" << counts[g]
            << " in test, subset " << plan.per_genre_subsets[g].size() << "\n";
    }
    for (const std::string& w : plan.warnings) out << "  warning: " << w << "\n";
    return plan;
}

namespace detail {

/// Pooled feature matrices per (kind, variant), rows in manifest order.
struct FeatureBank {
    // indexed [kind][variant index]
    std::vector<std::vector<Matrix>> features;
};

inline FeatureBank build_features(const ExperimentConfig& cfg,
                                  const ManifestData& data) {
    FeatureBank bank;
    std::vector<std::size_t> bands;
    for (const std::string& v : cfg.variants) bands.push_back(variant_bands(v));
    bank.features.assign(2, std::vector<Matrix>(cfg.variants.size()));
    for (int k = 0; k < 2; ++k)
        for (std::size_t vi = 0; vi < cfg.variants.size(); ++vi)
            bank.features[k][vi] = Matrix(data.tracks.size(), 2 * bands[vi]);

    parallel_for(data.tracks.size(), cfg.jobs, [&](std::size_t i) {
        for (int k = 0; k < 2; ++k) {
            const SpecKind kind = k == 0 ? SpecKind::linear : SpecKind::mel;
            const std::string path =
                paths::spectrogram(cfg, data.tracks[i].track_id, kind);
            if (!std::filesystem::exists(path))
                throw Error("missing spectrogram " + path + "; run extract first");
            const Spectrogram spec = read_spectrogram(path);
            for (std::size_t vi = 0; vi < cfg.variants.size(); ++vi) {
                const FeatureVector fv = pool_features_banded(spec, bands[vi]);
                double* row = bank.features[k][vi].row(i);
                std::copy(fv.values.begin(), fv.values.end(), row);
            }
        }
    });
    return bank;
}

inline SplitPlan load_plan_checked(const ExperimentConfig& cfg,
                                   const ManifestData& data) {
    const std::string path = paths::split_plan(cfg);
    if (!std::filesystem::exists(path))
        throw Error("missing split plan " + path + "; run split first");
    SplitPlan plan = load_split_plan(path);
    if (plan.manifest_checksum != data.checksum)
        throw ValidationError("split plan was built from a different manifest "
                              "(checksum mismatch)");
    if (plan.genres != data.labels.genres)
        throw ValidationError("split plan genre set does not match the manifest");
    if (plan.rows != data.labels.rows)
        throw ValidationError("split plan row count does not match the manifest");
    return plan;
}

}  // namespace detail

struct TrainSummary {
    std::size_t cells = 0;
    std::size_t trained = 0;
    std::size_t skipped = 0;
};

inline TrainSummary run_train(const ExperimentConfig& cfg, std::ostream& out) {
    cfg.validate_dsp();
    const ManifestData data = detail::load_dataset(cfg, nullptr);
    const SplitPlan plan = detail::load_plan_checked(cfg, data);
    const detail::FeatureBank bank = detail::build_features(cfg, data);
    std::filesystem::create_directories(cfg.output_root + "/models");

    struct Cell {
        std::size_t genre;
        int kind;
        std::size_t variant;
    };
    std::vector<Cell> cells;
    for (int k = 0; k < 2; ++k)
        for (std::size_t vi = 0; vi < cfg.variants.size(); ++vi)
            for (std::size_t g = 0; g < data.labels.cols; ++g)
                cells.push_back({g, k, vi});

    std::vector<std::uint8_t> cell_trained(cells.size(), 0);
    parallel_for(cells.size(), cfg.jobs, [&](std::size_t ci) {
        const Cell& cell = cells[ci];
        const SpecKind kind = cell.kind == 0 ? SpecKind::linear : SpecKind::mel;
        const std::string& variant = cfg.variants[cell.variant];
        const std::string path = paths::model_file(cfg, cell.genre, kind, variant);
        if (std::filesystem::exists(path) && !cfg.force) return;

        const std::vector<std::size_t>& subset = plan.per_genre_subsets[cell.genre];
        const std::string genre = data.labels.genres[cell.genre];
        const std::string tag = genre + "/" + to_string(kind) + "/" + variant;
        if (subset.empty())
            throw ValidationError("empty training subset for genre '" + genre +
                                  "'; corpus too small");
        std::vector<std::uint8_t> genre_labels(data.labels.rows);
        for (std::size_t r = 0; r < data.labels.rows; ++r)
            genre_labels[r] = data.labels.at(r, cell.genre);

        TrainConfig tc;
        tc.learning_rate = cfg.learning_rate;
        tc.epochs = cfg.epochs;
        tc.batch_size = cfg.batch_size;
        tc.l2 = cfg.l2;
        tc.seed = derive_seed(cfg.seed, "train:g" + std::to_string(cell.genre) +
                                            ":" + to_string(kind) + ":" + variant);
        try {
            TrainedModel model = train(bank.features[cell.kind][cell.variant],
                                       genre_labels, subset, tc);
            model.params.genre = genre;
            model.params.kind = kind;
            model.params.variant = variant;
            model.config_hash = cfg.hash();
            save_model(model, path);
        } catch (const DivergenceError& e) {
            throw DivergenceError("cell " + tag + ": " + e.what());
        }
        cell_trained[ci] = 1;
    });

    TrainSummary summary;
    summary.cells = cells.size();
    for (std::uint8_t t : cell_trained) summary.trained += t;
    summary.skipped = summary.cells - summary.trained;
    out << "train: " << summary.cells << " cells (" << data.labels.cols
        << " genres x 2 kinds x " << cfg.variants.size() << " variants), "
        << summary.trained << " trained, " << summary.skipped << " skipped\n";
    return summary;
}

inline EvalReport run_evaluate(const ExperimentConfig& cfg, std::ostream& out) {
    cfg.validate_dsp();
    const ManifestData data = detail::load_dataset(cfg, nullptr);
    const SplitPlan plan = detail::load_plan_checked(cfg, data);
    if (plan.test_indices.empty()) throw Error("empty test split");
    const detail::FeatureBank bank = detail::build_features(cfg, data);

    struct Cell {
        std::size_t genre;
        int kind;
        std::size_t variant;
    };
    std::vector<Cell> cells;
    for (int k = 0; k < 2; ++k)
        for (std::size_t vi = 0; vi < cfg.variants.size(); ++vi)
            for (std::size_t g = 0; g < data.labels.cols; ++g)
                cells.push_back({g, k, vi});

    std::vector<MetricRecord> records(cells.size());
    parallel_for(cells.size(), cfg.jobs, [&](std::size_t ci) {
        const Cell& cell = cells[ci];
        const SpecKind kind = cell.kind == 0 ? SpecKind::linear : SpecKind::mel;
        const std::string& variant = cfg.variants[cell.variant];
        const std::string path = paths::model_file(cfg, cell.genre, kind, variant);
        if (!std::filesystem::exists(path))
            throw Error("missing model " + path + "; run train first");
        const TrainedModel model = load_model(path);
        const Matrix& features = bank.features[cell.kind][cell.variant];

        std::vector<std::uint8_t> preds, truth;
        double loss = 0.0;
        preds.reserve(plan.test_indices.size());
        truth.reserve(plan.test_indices.size());
        for (std::size_t row : plan.test_indices) {
            std::vector<double> x(features.row(row), features.row(row) + features.cols);
            const double y = data.labels.at(row, cell.genre) != 0 ? 1.0 : 0.0;
            preds.push_back(predict(model, x) ? 1 : 0);
            truth.push_back(data.labels.at(row, cell.genre));
            loss += bce_loss_logit(predict_logit(model, x), y);
        }
        MetricRecord rec = compute_metrics(confusion(preds, truth));
        rec.genre = data.labels.genres[cell.genre];
        rec.kind = kind;
        rec.variant = variant;
        rec.loss = loss / static_cast<double>(plan.test_indices.size());
        records[ci] = std::move(rec);
    });

    EvalReport report = aggregate(std::move(records));
    const std::vector<std::string> comments = {
        "config_hash = " + cfg.hash(), "seed = " + std::to_string(cfg.seed),
        "test_size = " + std::to_string(plan.test_indices.size())};
    write_metric_records_csv(report.records, paths::metrics_csv(cfg), comments);
    write_macro_csv(report, paths::macro_csv(cfg), comments);

    out << "evaluate: " << report.records.size() << " cells over "
        << plan.test_indices.size() << " test tracks\n";
    for (const MacroRow& row : report.by_kind_variant)
        out << "  " << to_string(row.kind) << " " << row.key << ": macro f1 "
            << fmt_double(row.f1) << "\n";
    return report;
}

inline constexpr const char* kCompareHeader = "melcmp-compare v1";

inline PairedTestResult run_compare(const ExperimentConfig& cfg, std::ostream& out) {
    const std::string metrics_path = paths::metrics_csv(cfg);
    if (!std::filesystem::exists(metrics_path))
        throw Error("missing " + metrics_path + "; run evaluate first");
    const std::vector<MetricRecord> records = read_metric_records_csv(metrics_path);
    const PairedSample sample = build_paired_sample(records, cfg.pairing);
    const PairedTestResult res = paired_compare(sample);
    const std::vector<double> d = paired_differences(sample);
    const std::vector<QqPoint> qq = qq_data(d);

    KvDoc doc;
    doc.set("config_hash", cfg.hash());
    doc.set_u64("seed", cfg.seed);
    doc.set("pairing", to_string(cfg.pairing));
    doc.set("difference", "linear F1 minus mel F1");
    doc.set_u64("n", res.n);
    doc.set_double("mean_diff", res.mean_diff);
    doc.set_double("sd_diff", res.sd_diff);
    doc.set_double("t_statistic", res.t_statistic);
    doc.set_u64("degrees_of_freedom", res.degrees_of_freedom);
    doc.set_double("p_value", res.p_value);
    doc.set_double("shapiro_w", res.shapiro_w);
    doc.set_double("shapiro_p", res.shapiro_p);
    write_text_file(paths::compare_doc(cfg), doc.serialize(kCompareHeader));

    std::string qq_text = "# config_hash = " + cfg.hash() + "\n# seed = " +
                          std::to_string(cfg.seed) + "\ntheoretical,observed\n";
    for (const QqPoint& p : qq)
        qq_text += fmt_double(p.theoretical) + ',' + fmt_double(p.observed) + '\n';
    write_text_file(paths::qq_csv(cfg), qq_text);

    out << "compare (" << to_string(cfg.pairing) << " pairing, n=" << res.n
        << "): t = " << fmt_double(res.t_statistic)
        << ", df = " << res.degrees_of_freedom
        << ", p = " << fmt_double(res.p_value)
        << ", shapiro W = " << fmt_double(res.shapiro_w)
        << " (p = " << fmt_double(res.shapiro_p) << ")\n";
    return res;
}

inline void render_track(const ExperimentConfig& cfg, const std::string& track_id,
                         SpecKind kind, std::ostream& out) {
    const std::string spg = paths::spectrogram(cfg, track_id, kind);
    if (!std::filesystem::exists(spg))
        throw Error("missing spectrogram " + spg + "; run extract first");
    const Spectrogram spec = read_spectrogram(spg);
    const RasterImage img = render_spectrogram(spec, true);
    std::filesystem::create_directories(cfg.output_root + "/renders");
    const std::string ppm = paths::render_ppm(cfg, track_id, kind);
    write_ppm(img, ppm);
    out << "render: " << ppm << " (" << img.width << "x" << img.height << ")\n";
}

inline void run_report(const ExperimentConfig& cfg, std::ostream& out) {
    std::string text;
    text += "experiment report\n";
    text += "config_hash = " + cfg.hash() + "\n";
    text += "seed = " + std::to_string(cfg.seed) + "\n\n";

    const ManifestData data = detail::load_dataset(cfg, nullptr);
    const std::vector<std::uint64_t> counts = genre_counts(data.labels);
    text += "dataset: " + std::to_string(data.tracks.size()) + " tracks (" +
            std::to_string(data.dropped_count) + " dropped)\n";
    for (std::size_t g = 0; g < data.labels.cols; ++g)
        text += "  " + data.labels.genres[g] + ": " + std::to_string(counts[g]) + "\n";

    const std::string plan_path = paths::split_plan(cfg);
    if (std::filesystem::exists(plan_path)) {
        const SplitPlan plan = load_split_plan(plan_path);
        text += "\nsplit: " + std::to_string(plan.test_indices.size()) + " test / " +
                std::to_string(plan.train_pool.size()) + " train pool\n";
    } else {
        text += "\nsplit: not run\n";
    }

    const std::string metrics_path = paths::metrics_csv(cfg);
    if (std::filesystem::exists(metrics_path)) {
        const EvalReport report = aggregate(read_metric_records_csv(metrics_path));
        text += "\nmacro by kind and variant:\n";
        for (const MacroRow& row : report.by_kind_variant)
            text += "  " + std::string(to_string(row.kind)) + " " + row.key +
                    ": f1 " + fmt_double(row.f1) + ", precision " +
                    fmt_double(row.precision) + ", recall " + fmt_double(row.recall) +
                    "\n";
        text += "macro by kind and genre:\n";
        for (const MacroRow& row : report.by_kind_genre)
            text += "  " + std::string(to_string(row.kind)) + " " + row.key +
                    ": f1 " + fmt_double(row.f1) + "\n";
    } else {
        text += "\nevaluate: not run\n";
    }

    const std::string compare_path = paths::compare_doc(cfg);
    if (std::filesystem::exists(compare_path)) {
        const KvDoc doc =
            KvDoc::parse(read_text_file(compare_path), kCompareHeader);
        text += "\npaired comparison (" + doc.get("pairing") + ", n = " +
                doc.get("n") + "): t = " + doc.get("t_statistic") + ", df = " +
                doc.get("degrees_of_freedom") + ", p = " + doc.get("p_value") +
                "; shapiro W = " + doc.get("shapiro_w") + " (p = " +
                doc.get("shapiro_p") + ")\n";
    } else {
        text += "\ncompare: not run\n";
    }

    std::filesystem::create_directories(cfg.output_root);
    write_text_file(paths::report_txt(cfg), text);
    out << text;
}

}  // namespace melcmp
