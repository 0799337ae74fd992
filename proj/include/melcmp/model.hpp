#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "melcmp/common.hpp"
#include "melcmp/dsp.hpp"

namespace melcmp {

struct FeatureVector {
    std::vector<double> values;
    std::string track_id;
    SpecKind kind = SpecKind::linear;
};

/// Pools a decibel spectrogram into `bands` contiguous row groups
/// (group j covers rows [floor(j*R/B), floor((j+1)*R/B))) and returns
/// per-group mean followed by per-group population standard deviation
/// over all covered cells. No standardization happens here; train-time
/// statistics handle that.
inline FeatureVector pool_features_banded(const Spectrogram& spec,
                                          std::size_t bands) {
    if (spec.values.empty())
        throw DomainError("pool_features: empty spectrogram");
    if (spec.scale != Scale::decibel)
        throw DomainError("pool_features: expected a decibel spectrogram");
    const std::size_t rows = spec.bands();
    if (bands == 0 || bands > rows)
        throw DomainError("pool_features: bands must be in [1, rows]");
    FeatureVector out;
    out.kind = spec.kind;
    out.values.assign(2 * bands, 0.0);
    const std::size_t frames = spec.frames();
    for (std::size_t j = 0; j < bands; ++j) {
        const std::size_t lo = j * rows / bands;
        const std::size_t hi = (j + 1) * rows / bands;
        double sum = 0.0, sumsq = 0.0;
        for (std::size_t r = lo; r < hi; ++r) {
            for (std::size_t t = 0; t < frames; ++t) {
                const double v = spec.values.at(r, t);
                sum += v;
                sumsq += v * v;
            }
        }
        const double count = static_cast<double>((hi - lo) * frames);
        const double mean = sum / count;
        const double var = std::max(0.0, sumsq / count - mean * mean);
        out.values[j] = mean;
        out.values[bands + j] = std::sqrt(var);
    }
    return out;
}

/// One band per spectrogram row.
inline FeatureVector pool_features(const Spectrogram& spec) {
    return pool_features_banded(spec, spec.bands());
}

struct ClassifierParams {
    std::vector<double> weights;
    double bias = 0.0;
    std::string genre;
    SpecKind kind = SpecKind::linear;
    std::string variant;
};

struct TrainConfig {
    double learning_rate = 0.1;
    unsigned epochs = 200;
    unsigned batch_size = 32;
    std::uint64_t seed = 0;
    double l2 = 1e-4;

    void validate() const {
        if (!(learning_rate > 0.0)) throw ValidationError("learning_rate must be > 0");
        if (epochs == 0) throw ValidationError("epochs must be > 0");
        if (batch_size == 0) throw ValidationError("batch_size must be > 0");
        if (l2 < 0.0) throw ValidationError("l2 must be >= 0");
    }
};

/// Overflow-free logistic function.
inline double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

inline double forward(const ClassifierParams& params, const std::vector<double>& x) {
    if (params.weights.size() != x.size())
        throw ShapeError("forward: dimension mismatch");
    double z = params.bias;
    for (std::size_t i = 0; i < x.size(); ++i) z += params.weights[i] * x[i];
    return sigmoid(z);
}

/// Binary cross-entropy evaluated from the logit:
/// max(z,0) - z*y + log(1 + exp(-|z|)), stable at saturation.
inline double bce_loss_logit(double z, double y) {
    return std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::fabs(z)));
}

struct Gradient {
    std::vector<double> weights;
    double bias = 0.0;
};

/// Analytic gradient of mean BCE + (l2/2)*||w||^2 over the batch:
/// dw = mean((p - y) * x) + l2*w, db = mean(p - y).
inline Gradient gradient(const std::vector<double>& weights, double bias,
                         const Matrix& batch, const std::vector<double>& y,
                         double l2) {
    if (batch.rows == 0) throw DomainError("gradient: empty batch");
    if (batch.rows != y.size())
        throw ShapeError("gradient: batch/label count mismatch");
    if (batch.cols != weights.size())
        throw ShapeError("gradient: feature dimension mismatch");
    Gradient g;
    g.weights.assign(weights.size(), 0.0);
    for (std::size_t r = 0; r < batch.rows; ++r) {
        double z = bias;
        const double* x = batch.row(r);
        for (std::size_t c = 0; c < batch.cols; ++c) z += weights[c] * x[c];
        const double diff = sigmoid(z) - y[r];
        for (std::size_t c = 0; c < batch.cols; ++c) g.weights[c] += diff * x[c];
        g.bias += diff;
    }
    const double inv = 1.0 / static_cast<double>(batch.rows);
    for (std::size_t c = 0; c < batch.cols; ++c)
        g.weights[c] = g.weights[c] * inv + l2 * weights[c];
    g.bias *= inv;
    return g;
}

/// Objective value mean BCE + (l2/2)*||w||^2 over the given rows.
inline double objective(const std::vector<double>& weights, double bias,
                        const Matrix& features, const std::vector<double>& y,
                        double l2) {
    double loss = 0.0;
    for (std::size_t r = 0; r < features.rows; ++r) {
        double z = bias;
        const double* x = features.row(r);
        for (std::size_t c = 0; c < features.cols; ++c) z += weights[c] * x[c];
        loss += bce_loss_logit(z, y[r]);
    }
    loss /= static_cast<double>(features.rows);
    double w2 = 0.0;
    for (double w : weights) w2 += w * w;
    return loss + 0.5 * l2 * w2;
}

struct TrainedModel {
    ClassifierParams params;
    std::vector<double> feature_mean;
    std::vector<double> feature_std;  // floored at 1e-8
    std::vector<double> loss_history;  // objective after each epoch
    TrainConfig config;
    std::string config_hash;  // filled by the pipeline layer
    std::vector<std::string> warnings;
};

/// Mini-batch gradient descent on the standardized subset. The subset
/// is fixed for the whole run; only the batch order reshuffles each
/// epoch, driven by the config seed.
inline TrainedModel train(const Matrix& features,
                          const std::vector<std::uint8_t>& labels,
                          const std::vector<std::size_t>& subset,
                          const TrainConfig& config) {
    config.validate();
    if (subset.empty()) throw DomainError("train: empty subset");
    if (features.rows != labels.size())
        throw ShapeError("train: feature/label count mismatch");
    for (std::size_t idx : subset)
        if (idx >= features.rows)
            throw DomainError("train: subset index out of range");

    const std::size_t m = subset.size();
    const std::size_t dim = features.cols;
    TrainedModel model;
    model.config = config;

    std::size_t positives = 0;
    for (std::size_t idx : subset) positives += labels[idx] != 0 ? 1 : 0;
    if (positives == 0 || positives == m)
        model.warnings.push_back("training subset contains a single class");

    model.feature_mean.assign(dim, 0.0);
    model.feature_std.assign(dim, 0.0);
    for (std::size_t idx : subset) {
        const double* x = features.row(idx);
        for (std::size_t c = 0; c < dim; ++c) model.feature_mean[c] += x[c];
    }
    for (std::size_t c = 0; c < dim; ++c)
        model.feature_mean[c] /= static_cast<double>(m);
    for (std::size_t idx : subset) {
        const double* x = features.row(idx);
        for (std::size_t c = 0; c < dim; ++c) {
            const double d = x[c] - model.feature_mean[c];
            model.feature_std[c] += d * d;
        }
    }
    for (std::size_t c = 0; c < dim; ++c)
        model.feature_std[c] =
            std::max(1e-8, std::sqrt(model.feature_std[c] / static_cast<double>(m)));

    Matrix xs(m, dim);
    std::vector<double> y(m);
    for (std::size_t i = 0; i < m; ++i) {
        const double* x = features.row(subset[i]);
        for (std::size_t c = 0; c < dim; ++c)
            xs.at(i, c) = (x[c] - model.feature_mean[c]) / model.feature_std[c];
        y[i] = labels[subset[i]] != 0 ? 1.0 : 0.0;
    }

    std::vector<double> w(dim, 0.0);
    double b = 0.0;
    SplitMix64 rng(derive_seed(config.seed, "train"));
    std::vector<std::size_t> order(m);
    for (std::size_t i = 0; i < m; ++i) order[i] = i;

    model.loss_history.reserve(config.epochs);
    for (unsigned epoch = 0; epoch < config.epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t start = 0; start < m; start += config.batch_size) {
            const std::size_t stop = std::min(m, start + config.batch_size);
            Matrix batch(stop - start, dim);
            std::vector<double> by(stop - start);
            for (std::size_t i = start; i < stop; ++i) {
                const double* x = xs.row(order[i]);
                std::copy(x, x + dim, batch.row(i - start));
                by[i - start] = y[order[i]];
            }
            const Gradient g = gradient(w, b, batch, by, config.l2);
            for (std::size_t c = 0; c < dim; ++c)
                w[c] -= config.learning_rate * g.weights[c];
            b -= config.learning_rate * g.bias;
        }
        const double loss = objective(w, b, xs, y, config.l2);
        if (!std::isfinite(loss))
            throw DivergenceError("training diverged at epoch " +
                                  std::to_string(epoch + 1));
        model.loss_history.push_back(loss);
    }
    model.params.weights = std::move(w);
    model.params.bias = b;
    return model;
}

/// Applies the stored standardization, then thresholds the forward
/// probability; exactly 0.5 counts as positive.
inline bool predict(const TrainedModel& model, const std::vector<double>& x,
                    double threshold = 0.5) {
    if (x.size() != model.params.weights.size())
        throw ShapeError("predict: dimension mismatch");
    std::vector<double> xs(x.size());
    for (std::size_t c = 0; c < x.size(); ++c)
        xs[c] = (x[c] - model.feature_mean[c]) / model.feature_std[c];
    return forward(model.params, xs) >= threshold;
}

/// Standardized logit of one sample, for loss reporting through
/// bce_loss_logit.
inline double predict_logit(const TrainedModel& model,
                            const std::vector<double>& x) {
    if (x.size() != model.params.weights.size())
        throw ShapeError("predict_logit: dimension mismatch");
    std::vector<double> xs(x.size());
    for (std::size_t c = 0; c < x.size(); ++c)
        xs[c] = (x[c] - model.feature_mean[c]) / model.feature_std[c];
    double z = model.params.bias;
    for (std::size_t c = 0; c < xs.size(); ++c) z += model.params.weights[c] * xs[c];
    return z;
}

inline constexpr const char* kClassifierHeader = "melcmp-classifier v1";

inline void save_model(const TrainedModel& model, const std::string& path) {
    KvDoc doc;
    doc.set("genre", model.params.genre);
    doc.set("kind", to_string(model.params.kind));
    doc.set("variant", model.params.variant);
    if (!model.config_hash.empty()) doc.set("config_hash", model.config_hash);
    doc.set_u64("feature_length", model.params.weights.size());
    doc.set_double("learning_rate", model.config.learning_rate);
    doc.set_u64("epochs", model.config.epochs);
    doc.set_u64("batch_size", model.config.batch_size);
    doc.set_u64("seed", model.config.seed);
    doc.set_double("l2", model.config.l2);
    doc.set_list("feature_mean", model.feature_mean.begin(), model.feature_mean.end());
    doc.set_list("feature_std", model.feature_std.begin(), model.feature_std.end());
    doc.set_list("weights", model.params.weights.begin(), model.params.weights.end());
    doc.set_double("bias", model.params.bias);
    doc.set_list("loss_history", model.loss_history.begin(),
                 model.loss_history.end());
    doc.set_u64("warning_count", model.warnings.size());
    for (std::size_t i = 0; i < model.warnings.size(); ++i)
        doc.set("warning." + std::to_string(i), model.warnings[i]);
    write_text_file(path, doc.serialize(kClassifierHeader));
}

inline TrainedModel load_model(const std::string& path) {
    const KvDoc doc = KvDoc::parse(read_text_file(path), kClassifierHeader);
    TrainedModel model;
    model.params.genre = doc.get("genre");
    model.params.kind = spec_kind_from_string(doc.get("kind"));
    model.params.variant = doc.get("variant");
    model.config_hash = doc.get_or("config_hash", "");
    model.config.learning_rate = doc.get_double("learning_rate");
    model.config.epochs = static_cast<unsigned>(doc.get_u64("epochs"));
    model.config.batch_size = static_cast<unsigned>(doc.get_u64("batch_size"));
    model.config.seed = doc.get_u64("seed");
    model.config.l2 = doc.get_double("l2");
    model.feature_mean = doc.get_double_list("feature_mean");
    model.feature_std = doc.get_double_list("feature_std");
    model.params.weights = doc.get_double_list("weights");
    model.params.bias = doc.get_double("bias");
    model.loss_history = doc.get_double_list("loss_history");
    const std::size_t warn_count =
        static_cast<std::size_t>(doc.get_u64("warning_count"));
    for (std::size_t i = 0; i < warn_count; ++i)
        model.warnings.push_back(doc.get("warning." + std::to_string(i)));
    const std::size_t dim = static_cast<std::size_t>(doc.get_u64("feature_length"));
    if (model.params.weights.size() != dim || model.feature_mean.size() != dim ||
        model.feature_std.size() != dim)
        throw FormatError(path + ": inconsistent feature length");
    return model;
}

}  // namespace melcmp
