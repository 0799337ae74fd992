#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "melcmp/model.hpp"
#include "helpers.hpp"

using namespace melcmp;

namespace {

Spectrogram db_spec(std::size_t rows, std::size_t cols) {
    Spectrogram spec;
    spec.kind = SpecKind::mel;
    spec.scale = Scale::decibel;
    spec.values = Matrix(rows, cols);
    return spec;
}

// Central finite differences of the training objective.
Gradient numeric_gradient(const std::vector<double>& w, double b,
                          const Matrix& batch, const std::vector<double>& y,
                          double l2) {
    const double h = 1e-5;
    Gradient g;
    g.weights.resize(w.size());
    for (std::size_t c = 0; c < w.size(); ++c) {
        std::vector<double> hi = w, lo = w;
        hi[c] += h;
        lo[c] -= h;
        g.weights[c] =
            (objective(hi, b, batch, y, l2) - objective(lo, b, batch, y, l2)) / (2 * h);
    }
    g.bias = (objective(w, b + h, batch, y, l2) - objective(w, b - h, batch, y, l2)) /
             (2 * h);
    return g;
}

struct ToySet {
    Matrix features;
    std::vector<std::uint8_t> labels;
    std::vector<std::size_t> subset;
};

// Linearly separable 1-d set: negatives at -1, positives at +1.
ToySet separable_toy(std::size_t per_class) {
    ToySet t;
    t.features = Matrix(2 * per_class, 1);
    t.labels.resize(2 * per_class);
    for (std::size_t i = 0; i < per_class; ++i) {
        t.features.at(i, 0) = -1.0;
        t.labels[i] = 0;
        t.features.at(per_class + i, 0) = 1.0;
        t.labels[per_class + i] = 1;
    }
    t.subset.resize(2 * per_class);
    for (std::size_t i = 0; i < t.subset.size(); ++i) t.subset[i] = i;
    return t;
}

}  // namespace

TEST_CASE("feature pooling") {
    SECTION("1 band, frames [0, 2] gives mean 1 and population std 1") {
        Spectrogram spec = db_spec(1, 2);
        spec.values.at(0, 0) = 0.0;
        spec.values.at(0, 1) = 2.0;
        const FeatureVector fv = pool_features(spec);
        REQUIRE(fv.values.size() == 2);
        REQUIRE(fv.values[0] == Catch::Approx(1.0).margin(1e-12));
        REQUIRE(fv.values[1] == Catch::Approx(1.0).margin(1e-12));
        REQUIRE(fv.kind == SpecKind::mel);
    }
    SECTION("constant spectrogram pools to (c, 0) per band") {
        Spectrogram spec = db_spec(4, 7);
        for (double& v : spec.values.v) v = -42.0;
        const FeatureVector fv = pool_features(spec);
        REQUIRE(fv.values.size() == 8);
        for (std::size_t j = 0; j < 4; ++j) {
            REQUIRE(fv.values[j] == Catch::Approx(-42.0).margin(1e-12));
            REQUIRE(fv.values[4 + j] == Catch::Approx(0.0).margin(1e-9));
        }
    }
    SECTION("single frame pools to (frame, 0)") {
        Spectrogram spec = db_spec(3, 1);
        spec.values.at(0, 0) = 1.0;
        spec.values.at(1, 0) = 2.0;
        spec.values.at(2, 0) = 3.0;
        const FeatureVector fv = pool_features(spec);
        REQUIRE(fv.values[0] == 1.0);
        REQUIRE(fv.values[1] == 2.0);
        REQUIRE(fv.values[2] == 3.0);
        REQUIRE(fv.values[3] == 0.0);
        REQUIRE(fv.values[4] == 0.0);
        REQUIRE(fv.values[5] == 0.0);
    }
    SECTION("band grouping covers [j*R/B, (j+1)*R/B)") {
        Spectrogram spec = db_spec(3, 1);
        spec.values.at(0, 0) = 0.0;
        spec.values.at(1, 0) = 6.0;
        spec.values.at(2, 0) = 12.0;
        // groups for B=2: rows [0,1) and [1,3)
        const FeatureVector fv = pool_features_banded(spec, 2);
        REQUIRE(fv.values[0] == Catch::Approx(0.0).margin(1e-12));
        REQUIRE(fv.values[1] == Catch::Approx(9.0).margin(1e-12));
        REQUIRE(fv.values[2] == Catch::Approx(0.0).margin(1e-12));
        REQUIRE(fv.values[3] == Catch::Approx(3.0).margin(1e-12));
    }
    SECTION("input validation") {
        Spectrogram empty;
        REQUIRE_THROWS_AS(pool_features(empty), DomainError);
        Spectrogram power = db_spec(2, 2);
        power.scale = Scale::power;
        REQUIRE_THROWS_AS(pool_features(power), DomainError);
        Spectrogram ok = db_spec(2, 2);
        REQUIRE_THROWS_AS(pool_features_banded(ok, 0), DomainError);
        REQUIRE_THROWS_AS(pool_features_banded(ok, 3), DomainError);
    }
}

TEST_CASE("sigmoid and forward") {
    SECTION("closed-form points") {
        REQUIRE(sigmoid(0.0) == 0.5);
        REQUIRE(sigmoid(std::log(3.0)) == Catch::Approx(0.75).margin(1e-12));
        REQUIRE(sigmoid(-std::log(3.0)) == Catch::Approx(0.25).margin(1e-12));
    }
    SECTION("saturation without overflow") {
        REQUIRE(sigmoid(1000.0) >= 1.0 - 1e-12);
        REQUIRE(sigmoid(1000.0) <= 1.0);
        REQUIRE(sigmoid(-1000.0) >= 0.0);
        REQUIRE(sigmoid(-1000.0) <= 1e-12);
    }
    SECTION("forward evaluates sigma(w.x + b)") {
        ClassifierParams p;
        p.weights = {1.0};
        p.bias = 0.0;
        REQUIRE(forward(p, {std::log(3.0)}) == Catch::Approx(0.75).margin(1e-12));
        p.weights = {0.0, 0.0};
        p.bias = 0.0;
        REQUIRE(forward(p, {5.0, -3.0}) == 0.5);
        REQUIRE_THROWS_AS(forward(p, {1.0}), ShapeError);
    }
}

TEST_CASE("bce loss from logits") {
    SECTION("logit 0 costs ln 2 for either label") {
        REQUIRE(bce_loss_logit(0.0, 0.0) == Catch::Approx(std::log(2.0)).margin(1e-12));
        REQUIRE(bce_loss_logit(0.0, 1.0) == Catch::Approx(std::log(2.0)).margin(1e-12));
    }
    SECTION("saturated correct predictions cost almost nothing") {
        REQUIRE(bce_loss_logit(40.0, 1.0) < 1e-6);
        REQUIRE(bce_loss_logit(-40.0, 0.0) < 1e-6);
    }
    SECTION("confidently wrong costs about |z|") {
        REQUIRE(bce_loss_logit(-100.0, 1.0) == Catch::Approx(100.0).margin(1e-6));
        REQUIRE(bce_loss_logit(100.0, 0.0) == Catch::Approx(100.0).margin(1e-6));
    }
    SECTION("monotone in the margin for y=1") {
        double prev = bce_loss_logit(5.0, 1.0);
        for (double z : {2.0, 0.0, -2.0, -5.0}) {
            const double cur = bce_loss_logit(z, 1.0);
            REQUIRE(cur > prev);
            prev = cur;
        }
    }
}

TEST_CASE("analytic gradient") {
    SECTION("hand case: single sample, zero params") {
        Matrix batch(1, 1);
        batch.at(0, 0) = 1.0;
        const Gradient g = gradient({0.0}, 0.0, batch, {1.0}, 0.0);
        REQUIRE(g.weights[0] == Catch::Approx(-0.5).margin(1e-12));
        REQUIRE(g.bias == Catch::Approx(-0.5).margin(1e-12));
    }
    SECTION("perfect predictions with l2=0 give a vanishing gradient") {
        Matrix batch(2, 1);
        batch.at(0, 0) = 1.0;
        batch.at(1, 0) = -1.0;
        const Gradient g = gradient({50.0}, 0.0, batch, {1.0, 0.0}, 0.0);
        REQUIRE(std::abs(g.weights[0]) < 1e-12);
        REQUIRE(std::abs(g.bias) < 1e-12);
    }
    SECTION("l2 adds l2*w to the weight gradient only") {
        Matrix batch(1, 1);
        batch.at(0, 0) = 1.0;
        const Gradient a = gradient({2.0}, 0.0, batch, {1.0}, 0.0);
        const Gradient b = gradient({2.0}, 0.0, batch, {1.0}, 0.1);
        REQUIRE(b.weights[0] - a.weights[0] == Catch::Approx(0.2).margin(1e-12));
        REQUIRE(b.bias == a.bias);
    }
    SECTION("matches central finite differences") {
        SplitMix64 rng(314);
        for (int rep = 0; rep < 20; ++rep) {
            const std::size_t dim = 1 + rng.bounded(4);
            const std::size_t m = 1 + rng.bounded(6);
            Matrix batch(m, dim);
            std::vector<double> y(m), w(dim);
            for (double& v : batch.v) v = rng.next_double() * 4.0 - 2.0;
            for (double& v : y) v = static_cast<double>(rng.bounded(2));
            for (double& v : w) v = rng.next_double() * 2.0 - 1.0;
            const double b = rng.next_double() - 0.5;
            const double l2 = rep % 2 == 0 ? 0.0 : 0.05;
            const Gradient got = gradient(w, b, batch, y, l2);
            const Gradient want = numeric_gradient(w, b, batch, y, l2);
            for (std::size_t c = 0; c < dim; ++c) {
                const double scale = std::max(1.0, std::abs(want.weights[c]));
                REQUIRE(std::abs(got.weights[c] - want.weights[c]) / scale < 1e-4);
            }
            const double bscale = std::max(1.0, std::abs(want.bias));
            REQUIRE(std::abs(got.bias - want.bias) / bscale < 1e-4);
        }
    }
    SECTION("full-batch gradient is permutation invariant") {
        SplitMix64 rng(9);
        Matrix batch(5, 2);
        std::vector<double> y(5);
        for (double& v : batch.v) v = rng.next_double();
        for (double& v : y) v = static_cast<double>(rng.bounded(2));
        Matrix rev(5, 2);
        std::vector<double> yrev(5);
        for (std::size_t r = 0; r < 5; ++r) {
            yrev[r] = y[4 - r];
            for (std::size_t c = 0; c < 2; ++c) rev.at(r, c) = batch.at(4 - r, c);
        }
        const Gradient a = gradient({0.3, -0.2}, 0.1, batch, y, 0.01);
        const Gradient b = gradient({0.3, -0.2}, 0.1, rev, yrev, 0.01);
        REQUIRE(std::abs(a.weights[0] - b.weights[0]) < 1e-12);
        REQUIRE(std::abs(a.weights[1] - b.weights[1]) < 1e-12);
        REQUIRE(std::abs(a.bias - b.bias) < 1e-12);
    }
    SECTION("shape validation") {
        Matrix batch(0, 1);
        REQUIRE_THROWS_AS(gradient({0.0}, 0.0, batch, {}, 0.0), DomainError);
        Matrix two(2, 1);
        REQUIRE_THROWS_AS(gradient({0.0}, 0.0, two, {1.0}, 0.0), ShapeError);
        REQUIRE_THROWS_AS(gradient({0.0, 0.0}, 0.0, two, {1.0, 0.0}, 0.0), ShapeError);
    }
}

TEST_CASE("training on a separable toy set") {
    const ToySet toy = separable_toy(20);
    TrainConfig cfg;
    cfg.learning_rate = 0.5;
    cfg.epochs = 200;
    cfg.batch_size = 8;
    cfg.seed = 1;
    const TrainedModel model = train(toy.features, toy.labels, toy.subset, cfg);

    SECTION("training accuracy reaches 1.0") {
        for (std::size_t i = 0; i < toy.subset.size(); ++i) {
            const bool positive = predict(model, {toy.features.at(i, 0)});
            REQUIRE(positive == (toy.labels[i] != 0));
        }
    }
    SECTION("loss history has one entry per epoch and ends low") {
        REQUIRE(model.loss_history.size() == 200);
        REQUIRE(model.loss_history.back() < model.loss_history.front());
        REQUIRE(model.loss_history.back() < 0.2);
    }
    SECTION("no warnings on a two-class subset") {
        REQUIRE(model.warnings.empty());
    }
}

TEST_CASE("full-batch descent with small lr is monotone") {
    const ToySet toy = separable_toy(10);
    TrainConfig cfg;
    cfg.learning_rate = 1e-3;
    cfg.epochs = 50;
    cfg.batch_size = 100;  // larger than the subset: one batch per epoch
    cfg.seed = 4;
    const TrainedModel model = train(toy.features, toy.labels, toy.subset, cfg);
    for (std::size_t e = 1; e < model.loss_history.size(); ++e)
        REQUIRE(model.loss_history[e] <= model.loss_history[e - 1] + 1e-9);
}

TEST_CASE("training is bit-deterministic in the seed") {
    SplitMix64 rng(77);
    Matrix features(30, 3);
    std::vector<std::uint8_t> labels(30);
    for (double& v : features.v) v = rng.next_double() * 2.0 - 1.0;
    for (auto& l : labels) l = static_cast<std::uint8_t>(rng.bounded(2));
    std::vector<std::size_t> subset;
    for (std::size_t i = 0; i < 30; ++i) subset.push_back(i);
    TrainConfig cfg;
    cfg.epochs = 30;
    cfg.seed = 123;
    const TrainedModel a = train(features, labels, subset, cfg);
    const TrainedModel b = train(features, labels, subset, cfg);
    REQUIRE(a.params.weights == b.params.weights);
    REQUIRE(a.params.bias == b.params.bias);
    REQUIRE(a.loss_history == b.loss_history);
}

TEST_CASE("single-class subsets warn but do not crash") {
    const ToySet toy = separable_toy(5);
    std::vector<std::uint8_t> ones(toy.labels.size(), 1);
    TrainConfig cfg;
    cfg.epochs = 20;
    const TrainedModel model = train(toy.features, ones, toy.subset, cfg);
    REQUIRE_FALSE(model.warnings.empty());
    REQUIRE(predict(model, {0.0}));  // learns to say yes
}

TEST_CASE("training divergence is reported with the epoch") {
    const ToySet toy = separable_toy(4);
    TrainConfig cfg;
    cfg.learning_rate = 1e200;
    cfg.epochs = 10;
    cfg.batch_size = 2;
    REQUIRE_THROWS_AS(train(toy.features, toy.labels, toy.subset, cfg),
                      DivergenceError);
    try {
        train(toy.features, toy.labels, toy.subset, cfg);
    } catch (const DivergenceError& e) {
        REQUIRE(std::string(e.what()).find("epoch") != std::string::npos);
    }
}

TEST_CASE("train input validation") {
    const ToySet toy = separable_toy(4);
    TrainConfig cfg;
    SECTION("config bounds") {
        TrainConfig bad = cfg;
        bad.learning_rate = 0.0;
        REQUIRE_THROWS_AS(train(toy.features, toy.labels, toy.subset, bad),
                          ValidationError);
        bad = cfg;
        bad.epochs = 0;
        REQUIRE_THROWS_AS(train(toy.features, toy.labels, toy.subset, bad),
                          ValidationError);
        bad = cfg;
        bad.batch_size = 0;
        REQUIRE_THROWS_AS(train(toy.features, toy.labels, toy.subset, bad),
                          ValidationError);
        bad = cfg;
        bad.l2 = -1.0;
        REQUIRE_THROWS_AS(train(toy.features, toy.labels, toy.subset, bad),
                          ValidationError);
    }
    SECTION("subset bounds") {
        REQUIRE_THROWS_AS(train(toy.features, toy.labels, {}, cfg), DomainError);
        REQUIRE_THROWS_AS(train(toy.features, toy.labels, {900}, cfg), DomainError);
    }
    SECTION("label count must match feature rows") {
        std::vector<std::uint8_t> short_labels(3, 1);
        REQUIRE_THROWS_AS(train(toy.features, short_labels, toy.subset, cfg),
                          ShapeError);
    }
}

TEST_CASE("prediction thresholds") {
    TrainedModel model;
    model.params.weights = {1.0};
    model.params.bias = 0.0;
    model.feature_mean = {0.0};
    model.feature_std = {1.0};
    SECTION("probability exactly 0.5 counts as positive") {
        REQUIRE(predict(model, {0.0}));
    }
    SECTION("zero params say yes to everything at the default threshold") {
        model.params.weights = {0.0};
        REQUIRE(predict(model, {123.0}));
        REQUIRE(predict(model, {-9.0}));
    }
    SECTION("higher thresholds flip non-saturated calls") {
        REQUIRE_FALSE(predict(model, {0.0}, 0.6));
        REQUIRE_FALSE(predict(model, {2.0}, 1.0));
    }
    SECTION("standardization is applied before the dot product") {
        model.feature_mean = {10.0};
        model.feature_std = {2.0};
        REQUIRE(predict_logit(model, {12.0}) == Catch::Approx(1.0).margin(1e-12));
        REQUIRE_FALSE(predict(model, {8.0}));  // z = -1
    }
    SECTION("dimension mismatch rejected") {
        REQUIRE_THROWS_AS(predict(model, {1.0, 2.0}), ShapeError);
        REQUIRE_THROWS_AS(predict_logit(model, {1.0, 2.0}), ShapeError);
    }
}

TEST_CASE("model serialization round trip") {
    const auto dir = testutil::fresh_dir("model_io");
    const ToySet toy = separable_toy(6);
    TrainConfig cfg;
    cfg.epochs = 15;
    cfg.seed = 2718;
    TrainedModel model = train(toy.features, toy.labels, toy.subset, cfg);
    model.params.genre = "Jazz";
    model.params.kind = SpecKind::mel;
    model.params.variant = "p32";
    model.config_hash = "0011223344556677";
    const auto path = dir / "model.txt";
    save_model(model, path.string());
    const TrainedModel back = load_model(path.string());
    REQUIRE(back.params.genre == "Jazz");
    REQUIRE(back.params.kind == SpecKind::mel);
    REQUIRE(back.params.variant == "p32");
    REQUIRE(back.config_hash == "0011223344556677");
    REQUIRE(back.params.weights == model.params.weights);
    REQUIRE(back.params.bias == model.params.bias);
    REQUIRE(back.feature_mean == model.feature_mean);
    REQUIRE(back.feature_std == model.feature_std);
    REQUIRE(back.loss_history == model.loss_history);
    REQUIRE(back.config.learning_rate == cfg.learning_rate);
    REQUIRE(back.config.epochs == 15);
    REQUIRE(back.config.seed == 2718);
    REQUIRE(back.warnings == model.warnings);

    SECTION("corrupted feature length rejected") {
        std::string text = testutil::read_text(path);
        const std::string key = "feature_length = 1";
        text.replace(text.find(key), key.size(), "feature_length = 7");
        testutil::write_text(path, text);
        REQUIRE_THROWS_AS(load_model(path.string()), FormatError);
    }
}
