#include <catch_amalgamated.hpp>

#include <cmath>
#include <string>
#include <vector>

#include "melcmp/metrics.hpp"
#include "helpers.hpp"

using namespace melcmp;

namespace {

MetricRecord rec(std::string genre, SpecKind kind, std::string variant, double f1) {
    MetricRecord r;
    r.genre = std::move(genre);
    r.kind = kind;
    r.variant = std::move(variant);
    r.f1 = f1;
    r.accuracy = f1;
    r.loss = 1.0 - f1;
    return r;
}

}  // namespace

TEST_CASE("confusion counting") {
    SECTION("hand case") {
        const ConfusionCounts c = confusion({1, 1, 0, 0}, {1, 0, 1, 0});
        REQUIRE(c.tp == 1);
        REQUIRE(c.fp == 1);
        REQUIRE(c.fn == 1);
        REQUIRE(c.tn == 1);
        REQUIRE(c.total() == 4);
    }
    SECTION("perfect agreement has no fp/fn") {
        const ConfusionCounts c = confusion({1, 0, 1}, {1, 0, 1});
        REQUIRE(c.fp == 0);
        REQUIRE(c.fn == 0);
        REQUIRE(c.tp == 2);
        REQUIRE(c.tn == 1);
    }
    SECTION("perfect disagreement has no tp/tn") {
        const ConfusionCounts c = confusion({1, 0, 1}, {0, 1, 0});
        REQUIRE(c.tp == 0);
        REQUIRE(c.tn == 0);
        REQUIRE(c.fp == 2);
        REQUIRE(c.fn == 1);
    }
    SECTION("input validation") {
        REQUIRE_THROWS_AS(confusion({1}, {1, 0}), ShapeError);
        REQUIRE_THROWS_AS(confusion({}, {}), DomainError);
    }
}

TEST_CASE("compute_metrics closed forms") {
    SECTION("perfect classifier") {
        const MetricRecord r = compute_metrics({5, 0, 5, 0});
        REQUIRE(r.accuracy == 1.0);
        REQUIRE(r.precision == 1.0);
        REQUIRE(r.recall == 1.0);
        REQUIRE(r.f1 == 1.0);
        REQUIRE(r.balanced_accuracy == 1.0);
        REQUIRE(r.zero_division_flags == 0);
    }
    SECTION("tp=2 fp=1 fn=1 tn=0") {
        const MetricRecord r = compute_metrics({2, 1, 0, 1});
        REQUIRE(r.precision == Catch::Approx(2.0 / 3.0).margin(1e-12));
        REQUIRE(r.recall == Catch::Approx(2.0 / 3.0).margin(1e-12));
        REQUIRE(r.f1 == Catch::Approx(2.0 / 3.0).margin(1e-12));
        REQUIRE(r.accuracy == Catch::Approx(0.5).margin(1e-12));
    }
    SECTION("balanced accuracy averages recall and specificity") {
        const MetricRecord r = compute_metrics({8, 5, 5, 2});
        REQUIRE(r.recall == Catch::Approx(0.8).margin(1e-12));
        REQUIRE(r.balanced_accuracy == Catch::Approx(0.65).margin(1e-12));
        REQUIRE(r.accuracy == Catch::Approx(0.65).margin(1e-12));
    }
    SECTION("empty evaluation rejected") {
        REQUIRE_THROWS_AS(compute_metrics({0, 0, 0, 0}), DomainError);
    }
}

TEST_CASE("zero-division flags") {
    SECTION("no predicted positives flags precision") {
        const MetricRecord r = compute_metrics({0, 0, 3, 2});
        REQUIRE(r.precision == 0.0);
        REQUIRE((r.zero_division_flags & kZeroDivPrecision) != 0);
        REQUIRE((r.zero_division_flags & kZeroDivRecall) == 0);
    }
    SECTION("no actual positives flags recall; f1 follows when P+R=0") {
        const MetricRecord r = compute_metrics({0, 0, 4, 0});
        REQUIRE((r.zero_division_flags & kZeroDivPrecision) != 0);
        REQUIRE((r.zero_division_flags & kZeroDivRecall) != 0);
        REQUIRE((r.zero_division_flags & kZeroDivF1) != 0);
        REQUIRE(r.f1 == 0.0);
        REQUIRE(r.accuracy == 1.0);
    }
    SECTION("no actual negatives flags specificity") {
        const MetricRecord r = compute_metrics({4, 0, 0, 0});
        REQUIRE((r.zero_division_flags & kZeroDivSpecificity) != 0);
        REQUIRE(r.balanced_accuracy == 0.5);  // (1 + 0)/2
        REQUIRE(r.f1 == 1.0);
    }
}

TEST_CASE("metrics match a brute-force recomputation") {
    SplitMix64 rng(606);
    for (int rep = 0; rep < 200; ++rep) {
        const std::size_t n = 1 + rng.bounded(40);
        std::vector<std::uint8_t> pred(n), truth(n);
        for (std::size_t i = 0; i < n; ++i) {
            pred[i] = static_cast<std::uint8_t>(rng.bounded(2));
            truth[i] = static_cast<std::uint8_t>(rng.bounded(2));
        }
        const ConfusionCounts c = confusion(pred, truth);
        const MetricRecord r = compute_metrics(c);

        double tp = 0, fp = 0, tn = 0, fn = 0;
        for (std::size_t i = 0; i < n; ++i) {
            tp += (pred[i] && truth[i]) ? 1 : 0;
            fp += (pred[i] && !truth[i]) ? 1 : 0;
            tn += (!pred[i] && !truth[i]) ? 1 : 0;
            fn += (!pred[i] && truth[i]) ? 1 : 0;
        }
        const double acc = (tp + tn) / static_cast<double>(n);
        const double prec = tp + fp > 0 ? tp / (tp + fp) : 0.0;
        const double recl = tp + fn > 0 ? tp / (tp + fn) : 0.0;
        const double f1 = prec + recl > 0 ? 2 * prec * recl / (prec + recl) : 0.0;
        const double spec = tn + fp > 0 ? tn / (tn + fp) : 0.0;
        REQUIRE(r.accuracy == acc);
        REQUIRE(r.precision == prec);
        REQUIRE(r.recall == recl);
        REQUIRE(r.f1 == f1);
        REQUIRE(r.balanced_accuracy == (recl + spec) / 2.0);

        // range and harmonic-mean ordering
        for (double v : {r.accuracy, r.precision, r.recall, r.f1, r.balanced_accuracy}) {
            REQUIRE(v >= 0.0);
            REQUIRE(v <= 1.0);
        }
        if (r.precision > 0.0 && r.recall > 0.0) {
            REQUIRE(r.f1 <= std::max(r.precision, r.recall) + 1e-12);
            REQUIRE(r.f1 >= std::min(r.precision, r.recall) - 1e-12);
        }
    }
}

TEST_CASE("label-swap duality") {
    SplitMix64 rng(777);
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t n = 4 + rng.bounded(30);
        std::vector<std::uint8_t> pred(n), truth(n), ipred(n), itruth(n);
        for (std::size_t i = 0; i < n; ++i) {
            pred[i] = static_cast<std::uint8_t>(rng.bounded(2));
            truth[i] = static_cast<std::uint8_t>(rng.bounded(2));
            ipred[i] = 1 - pred[i];
            itruth[i] = 1 - truth[i];
        }
        const ConfusionCounts c = confusion(pred, truth);
        const ConfusionCounts ic = confusion(ipred, itruth);
        REQUIRE(ic.tp == c.tn);
        REQUIRE(ic.fp == c.fn);
        REQUIRE(ic.fn == c.fp);
        REQUIRE(ic.tn == c.tp);
        const MetricRecord r = compute_metrics(c);
        const MetricRecord ir = compute_metrics(ic);
        if (r.zero_division_flags == 0 && ir.zero_division_flags == 0) {
            REQUIRE(ir.balanced_accuracy ==
                    Catch::Approx(r.balanced_accuracy).margin(1e-12));
            // swapped recall equals original specificity
            const double spec =
                static_cast<double>(c.tn) / static_cast<double>(c.tn + c.fp);
            REQUIRE(ir.recall == Catch::Approx(spec).margin(1e-12));
        }
        REQUIRE(ir.accuracy == r.accuracy);
    }
}

TEST_CASE("aggregate macro averages") {
    SECTION("single record: macro equals the record") {
        const EvalReport report = aggregate({rec("Jazz", SpecKind::mel, "p32", 0.7)});
        REQUIRE(report.by_kind_variant.size() == 1);
        REQUIRE(report.by_kind_genre.size() == 1);
        REQUIRE(report.by_kind_variant[0].f1 == 0.7);
        REQUIRE(report.by_kind_variant[0].cells == 1);
        REQUIRE(report.by_kind_genre[0].key == "Jazz");
    }
    SECTION("two cells average") {
        const EvalReport report = aggregate({rec("A", SpecKind::mel, "p32", 0.2),
                                             rec("B", SpecKind::mel, "p32", 0.8)});
        REQUIRE(report.by_kind_variant.size() == 1);
        REQUIRE(report.by_kind_variant[0].f1 == Catch::Approx(0.5).margin(1e-12));
        REQUIRE(report.by_kind_variant[0].cells == 2);
        REQUIRE(report.by_kind_genre.size() == 2);
    }
    SECTION("16 genres x 2 kinds collapse to 2 variant rows and 32 genre rows") {
        std::vector<MetricRecord> records;
        for (int k = 0; k < 2; ++k)
            for (int g = 0; g < 16; ++g)
                records.push_back(rec("g" + std::to_string(g),
                                      k == 0 ? SpecKind::linear : SpecKind::mel,
                                      "p64", 0.5 + 0.01 * g));
        const EvalReport report = aggregate(records);
        REQUIRE(report.by_kind_variant.size() == 2);
        REQUIRE(report.by_kind_genre.size() == 32);
        for (const MacroRow& row : report.by_kind_variant) REQUIRE(row.cells == 16);

        // macro equals the arithmetic mean of the constituent records
        double mean = 0.0;
        for (int g = 0; g < 16; ++g) mean += 0.5 + 0.01 * g;
        mean /= 16.0;
        REQUIRE(report.by_kind_variant[0].f1 == Catch::Approx(mean).margin(1e-12));
        REQUIRE(report.by_kind_variant[1].f1 == Catch::Approx(mean).margin(1e-12));
    }
    SECTION("group order follows first appearance") {
        const EvalReport report = aggregate({rec("Z", SpecKind::mel, "v2", 0.4),
                                             rec("A", SpecKind::mel, "v1", 0.6)});
        REQUIRE(report.by_kind_genre[0].key == "Z");
        REQUIRE(report.by_kind_genre[1].key == "A");
        REQUIRE(report.by_kind_variant[0].key == "v2");
    }
    SECTION("empty input rejected") {
        REQUIRE_THROWS_AS(aggregate({}), DomainError);
    }
}

TEST_CASE("metric record csv round trip") {
    const auto dir = testutil::fresh_dir("metrics_csv");
    const auto path = dir / "metrics.csv";
    std::vector<MetricRecord> records;
    SplitMix64 rng(55);
    for (int i = 0; i < 12; ++i) {
        MetricRecord r = rec("genre" + std::to_string(i % 3),
                             i % 2 == 0 ? SpecKind::linear : SpecKind::mel,
                             "p" + std::to_string(32 * (1 + i % 2)),
                             rng.next_double());
        r.balanced_accuracy = rng.next_double();
        r.precision = rng.next_double();
        r.recall = rng.next_double();
        r.loss = rng.next_double() * 3.0;
        r.zero_division_flags = static_cast<unsigned>(rng.bounded(16));
        records.push_back(r);
    }
    write_metric_records_csv(records, path.string(), {"config_hash = abc", "seed = 9"});
    const auto back = read_metric_records_csv(path.string());
    REQUIRE(back.size() == records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        REQUIRE(back[i].genre == records[i].genre);
        REQUIRE(back[i].kind == records[i].kind);
        REQUIRE(back[i].variant == records[i].variant);
        REQUIRE(back[i].accuracy == records[i].accuracy);
        REQUIRE(back[i].balanced_accuracy == records[i].balanced_accuracy);
        REQUIRE(back[i].precision == records[i].precision);
        REQUIRE(back[i].recall == records[i].recall);
        REQUIRE(back[i].f1 == records[i].f1);
        REQUIRE(back[i].loss == records[i].loss);
        REQUIRE(back[i].zero_division_flags == records[i].zero_division_flags);
    }

    SECTION("comments are preserved as leading # lines") {
        const std::string text = testutil::read_text(path);
        REQUIRE(text.rfind("# config_hash = abc\n", 0) == 0);
    }
    SECTION("bad header rejected") {
        testutil::write_text(path, "nope,nope\n1,2\n");
        REQUIRE_THROWS_AS(read_metric_records_csv(path.string()), FormatError);
    }
    SECTION("wrong field count rejected") {
        testutil::write_text(path,
                             "genre,kind,variant,accuracy,balanced_accuracy,"
                             "precision,recall,f1,loss,zero_division_flags\n"
                             "g,linear,v,0.5\n");
        REQUIRE_THROWS_AS(read_metric_records_csv(path.string()), FormatError);
    }
}

TEST_CASE("macro csv layout") {
    const auto dir = testutil::fresh_dir("metrics_macro_csv");
    const auto path = dir / "macro.csv";
    const EvalReport report = aggregate({rec("A", SpecKind::linear, "p32", 0.25),
                                         rec("A", SpecKind::mel, "p32", 0.75)});
    write_macro_csv(report, path.string());
    const std::string text = testutil::read_text(path);
    REQUIRE(text.find("grouping,kind,key,") != std::string::npos);
    REQUIRE(text.find("variant,linear,p32,") != std::string::npos);
    REQUIRE(text.find("variant,mel,p32,") != std::string::npos);
    REQUIRE(text.find("genre,linear,A,") != std::string::npos);
    REQUIRE(text.find("genre,mel,A,") != std::string::npos);
}

TEST_CASE("paired sample construction") {
    std::vector<MetricRecord> records;
    for (const char* genre : {"A", "B"}) {
        for (const char* variant : {"p32", "p64"}) {
            records.push_back(rec(genre, SpecKind::linear, variant, 0.8));
            records.push_back(rec(genre, SpecKind::mel, variant, 0.6));
        }
    }

    SECTION("cell mode pairs every genre x variant") {
        const PairedSample sample = build_paired_sample(records, PairingMode::cell);
        REQUIRE(sample.labels.size() == 4);
        REQUIRE(sample.labels[0] == "A|p32");
        REQUIRE(sample.labels[3] == "B|p64");
        for (std::size_t i = 0; i < 4; ++i) {
            REQUIRE(sample.a_values[i] == 0.8);
            REQUIRE(sample.b_values[i] == 0.6);
        }
    }
    SECTION("model mode pairs per-variant macro means") {
        const PairedSample sample = build_paired_sample(records, PairingMode::model);
        REQUIRE(sample.labels == std::vector<std::string>{"p32", "p64"});
        REQUIRE(sample.a_values[0] == Catch::Approx(0.8).margin(1e-12));
        REQUIRE(sample.b_values[0] == Catch::Approx(0.6).margin(1e-12));
    }
    SECTION("missing counterpart rejected") {
        records.pop_back();  // drop B|p64 mel
        REQUIRE_THROWS_AS(build_paired_sample(records, PairingMode::cell),
                          ValidationError);
    }
    SECTION("duplicate cell rejected") {
        records.push_back(rec("A", SpecKind::linear, "p32", 0.9));
        REQUIRE_THROWS_AS(build_paired_sample(records, PairingMode::cell),
                          ValidationError);
    }
    SECTION("pairing mode names round trip") {
        REQUIRE(pairing_mode_from_string("cell") == PairingMode::cell);
        REQUIRE(pairing_mode_from_string("model") == PairingMode::model);
        REQUIRE(to_string(PairingMode::model) == "model");
        REQUIRE_THROWS_AS(pairing_mode_from_string("banana"), ValidationError);
    }
}
