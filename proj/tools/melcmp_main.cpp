#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "melcmp/experiment.hpp"

namespace {

struct CliState {
    std::string config_path;
    std::vector<std::string> overrides;
    std::uint64_t seed = 0;
    unsigned jobs = 0;
    std::string pairing;
    bool force = false;

    CLI::Option* seed_opt = nullptr;
    CLI::Option* jobs_opt = nullptr;
    CLI::Option* pairing_opt = nullptr;
};

melcmp::ExperimentConfig build_config(const CliState& cli) {
    melcmp::ExperimentConfig cfg;
    if (!cli.config_path.empty()) cfg.apply_file(cli.config_path);
    for (const std::string& kv : cli.overrides) {
        const std::size_t eq = kv.find('=');
        if (eq == std::string::npos)
            throw melcmp::ValidationError("--set expects key=value, got: " + kv);
        cfg.apply(melcmp::trim(kv.substr(0, eq)), melcmp::trim(kv.substr(eq + 1)));
    }
    if (cli.seed_opt->count() > 0) cfg.seed = cli.seed;
    if (cli.jobs_opt->count() > 0) cfg.jobs = cli.jobs;
    if (cli.pairing_opt->count() > 0)
        cfg.pairing = melcmp::pairing_mode_from_string(cli.pairing);
    if (cli.force) cfg.force = true;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"linear vs mel spectrogram genre-recognition pipeline"};
    app.require_subcommand(1);
    app.fallthrough();

    CliState cli;
    app.add_option("--config", cli.config_path, "flat key = value config file");
    cli.seed_opt = app.add_option("--seed", cli.seed, "experiment seed");
    cli.jobs_opt = app.add_option("--jobs", cli.jobs, "worker threads");
    cli.pairing_opt = app.add_option("--pairing", cli.pairing,
                                     "statistics pairing: model or cell")
                          ->check(CLI::IsMember({"model", "cell"}));
    app.add_flag("--force", cli.force, "rebuild artifacts that already exist");
    app.add_option("--set", cli.overrides,
                   "config override key=value (repeatable)");

    CLI::App* c_extract =
        app.add_subcommand("extract", "decode audio, write spectrogram tensors");
    CLI::App* c_render =
        app.add_subcommand("render", "render one extracted spectrogram to PPM");
    std::string render_track_id, render_kind = "mel";
    c_render->add_option("--track-id", render_track_id, "manifest track id")
        ->required();
    c_render->add_option("--kind", render_kind, "spectrogram kind")
        ->check(CLI::IsMember({"linear", "mel"}));
    CLI::App* c_split =
        app.add_subcommand("split", "stratified test split + OVA subsets");
    CLI::App* c_train = app.add_subcommand("train", "train all classifier cells");
    CLI::App* c_evaluate =
        app.add_subcommand("evaluate", "per-genre metrics over the test split");
    CLI::App* c_compare =
        app.add_subcommand("compare", "paired statistics between the two kinds");
    CLI::App* c_synth =
        app.add_subcommand("synth-corpus", "generate a synthetic labeled corpus");
    std::string synth_out;
    std::size_t synth_size = 320;
    c_synth->add_option("--out", synth_out, "corpus output directory")->required();
    c_synth->add_option("--size", synth_size, "number of tracks");
    CLI::App* c_report = app.add_subcommand("report", "summarize all outputs");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        const melcmp::ExperimentConfig cfg = build_config(cli);
        if (c_extract->parsed()) {
            melcmp::run_extract(cfg, std::cout);
        } else if (c_render->parsed()) {
            melcmp::render_track(cfg, render_track_id,
                                 melcmp::spec_kind_from_string(render_kind),
                                 std::cout);
        } else if (c_split->parsed()) {
            melcmp::run_split(cfg, std::cout);
        } else if (c_train->parsed()) {
            melcmp::run_train(cfg, std::cout);
        } else if (c_evaluate->parsed()) {
            melcmp::run_evaluate(cfg, std::cout);
        } else if (c_compare->parsed()) {
            melcmp::run_compare(cfg, std::cout);
        } else if (c_synth->parsed()) {
            const melcmp::SynthSummary s =
                melcmp::synth_corpus(synth_out, synth_size, cfg.seed);
            std::cout << "synth-corpus: " << s.tracks << " tracks in " << synth_out
                      << "\n";
            for (const auto& [genre, count] : s.per_genre)
                std::cout << "  " << genre << ": " << count << " positives\n";
        } else if (c_report->parsed()) {
            melcmp::run_report(cfg, std::cout);
        }
        return 0;
    } catch (const melcmp::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const melcmp::FormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const melcmp::UnsupportedCodecError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const melcmp::TruncationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const melcmp::DomainError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const melcmp::ShapeError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const melcmp::DegenerateError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "failure: " << e.what() << "\n";
        return 2;
    }
}
