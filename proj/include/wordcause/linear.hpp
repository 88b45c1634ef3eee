#pragma once

#include <cmath>
#include <memory>
#include <numeric>
#include <span>
#include <vector>

#include <json.hpp>

#include "wordcause/bow.hpp"
#include "wordcause/corpus.hpp"
#include "wordcause/error.hpp"
#include "wordcause/estimator.hpp"
#include "wordcause/rng.hpp"

namespace wordcause {

struct LinearConfig {
    std::size_t epochs = 20;
    double learning_rate = 0.1;
    double l2 = 1e-4;
    std::size_t batch_size = 32;
    std::uint64_t seed = 1;
    FeatureMode feature_mode = FeatureMode::binary;

    nlohmann::json to_json() const {
        return {{"epochs", epochs},
                {"learning_rate", learning_rate},
                {"l2", l2},
                {"batch_size", batch_size},
                {"seed", seed},
                {"feature_mode", to_string(feature_mode)}};
    }

    static LinearConfig from_json(const nlohmann::json& j) {
        LinearConfig c;
        if (j.contains("epochs")) c.epochs = j["epochs"].get<std::size_t>();
        if (j.contains("learning_rate")) c.learning_rate = j["learning_rate"].get<double>();
        if (j.contains("l2")) c.l2 = j["l2"].get<double>();
        if (j.contains("batch_size")) c.batch_size = j["batch_size"].get<std::size_t>();
        if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("feature_mode"))
            c.feature_mode = feature_mode_from_string(j["feature_mode"].get<std::string>());
        return c;
    }
};

struct LinearParams {
    std::vector<double> weights;
    double bias = 0.0;
};

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// log(1 + e^z) without overflow
inline double softplus(double z) {
    return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

inline double dot(const LinearParams& p, const BowVector& x) {
    double z = p.bias;
    for (const auto& [idx, v] : x.entries) z += p.weights[idx] * v;
    return z;
}

// Mean binary cross-entropy plus (l2/2)*||w||^2; the bias is unregularized.
inline double logistic_loss(const LinearParams& p,
                            std::span<const BowVector> xs,
                            std::span<const int> ys, double l2) {
    double loss = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double z = dot(p, xs[i]);
        loss += softplus(z) - static_cast<double>(ys[i]) * z;
    }
    loss /= static_cast<double>(xs.size());
    double reg = 0.0;
    for (double w : p.weights) reg += w * w;
    return loss + 0.5 * l2 * reg;
}

inline LinearParams logistic_gradient(const LinearParams& p,
                                      std::span<const BowVector> xs,
                                      std::span<const int> ys, double l2) {
    LinearParams g;
    g.weights.assign(p.weights.size(), 0.0);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double err = sigmoid(dot(p, xs[i])) - static_cast<double>(ys[i]);
        for (const auto& [idx, v] : xs[i].entries) g.weights[idx] += err * v;
        g.bias += err;
    }
    double inv = 1.0 / static_cast<double>(xs.size());
    for (std::size_t j = 0; j < g.weights.size(); ++j) {
        g.weights[j] = g.weights[j] * inv + l2 * p.weights[j];
    }
    g.bias *= inv;
    return g;
}

// Mean hinge loss on +-1 targets plus (l2/2)*||w||^2.
inline double hinge_loss(const LinearParams& p, std::span<const BowVector> xs,
                         std::span<const int> ys, double l2) {
    double loss = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double t = ys[i] == 1 ? 1.0 : -1.0;
        loss += std::max(0.0, 1.0 - t * dot(p, xs[i]));
    }
    loss /= static_cast<double>(xs.size());
    double reg = 0.0;
    for (double w : p.weights) reg += w * w;
    return loss + 0.5 * l2 * reg;
}

inline LinearParams hinge_subgradient(const LinearParams& p,
                                      std::span<const BowVector> xs,
                                      std::span<const int> ys, double l2) {
    LinearParams g;
    g.weights.assign(p.weights.size(), 0.0);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double t = ys[i] == 1 ? 1.0 : -1.0;
        if (t * dot(p, xs[i]) < 1.0) {
            for (const auto& [idx, v] : xs[i].entries) g.weights[idx] -= t * v;
            g.bias -= t;
        }
    }
    double inv = 1.0 / static_cast<double>(xs.size());
    for (std::size_t j = 0; j < g.weights.size(); ++j) {
        g.weights[j] = g.weights[j] * inv + l2 * p.weights[j];
    }
    g.bias *= inv;
    return g;
}

namespace detail {

// Mini-batch gradient descent from zero init; deterministic given the seed
// (the seed drives only the per-epoch shuffle).
template <typename GradFn, typename LossFn>
LinearParams minibatch_descent(std::span<const BowVector> xs,
                               std::span<const int> ys, std::size_t dim,
                               const LinearConfig& cfg, GradFn grad_fn,
                               LossFn loss_fn) {
    LinearParams p;
    p.weights.assign(dim, 0.0);
    std::vector<std::size_t> order(xs.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<BowVector> bx;
    std::vector<int> by;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        RngStream rng(derive_seed(cfg.seed, "epoch", epoch));
        rng.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            std::size_t stop = std::min(start + cfg.batch_size, order.size());
            bx.clear();
            by.clear();
            for (std::size_t k = start; k < stop; ++k) {
                bx.push_back(xs[order[k]]);
                by.push_back(ys[order[k]]);
            }
            LinearParams g = grad_fn(p, std::span<const BowVector>(bx),
                                     std::span<const int>(by), cfg.l2);
            for (std::size_t j = 0; j < dim; ++j) {
                p.weights[j] -= cfg.learning_rate * g.weights[j];
            }
            p.bias -= cfg.learning_rate * g.bias;
        }
        double loss = loss_fn(p, xs, ys, cfg.l2);
        if (!std::isfinite(loss)) {
            throw Error("non-finite training loss at epoch " +
                        std::to_string(epoch) +
                        "; try a lower learning_rate");
        }
    }
    return p;
}

}  // namespace detail

// Shared shell for the two linear estimators.
class LinearModelBase : public AttributeEstimator {
public:
    double predict(std::span<const Token> tokens) const override {
        return sigmoid(decision(tokens));
    }

    // Raw pre-link score w.x + b (the margin, for the hinge-trained model).
    double decision(std::span<const Token> tokens) const {
        return dot(params_, featurizer_.featurize(tokens));
    }

    std::string vocab_hash() const override { return vocab_hash_; }
    const LinearParams& params() const { return params_; }
    const LinearConfig& config() const { return config_; }

    nlohmann::json to_json() const override {
        return {{"kind", kind()},
                {"config", config_.to_json()},
                {"vocab", vocab_.to_json()},
                {"params", {{"weights", params_.weights}, {"bias", params_.bias}}}};
    }

    using AttributeEstimator::predict;

protected:
    void init(const Vocabulary& vocab, LinearConfig cfg) {
        vocab_ = vocab;
        vocab_hash_ = vocab.hash();
        config_ = cfg;
        featurizer_ = Featurizer(vocab, cfg.feature_mode);
    }

    void load(const nlohmann::json& j) {
        vocab_ = Vocabulary::from_json(j.at("vocab"));
        vocab_hash_ = vocab_.hash();
        config_ = LinearConfig::from_json(j.at("config"));
        featurizer_ = Featurizer(vocab_, config_.feature_mode);
        params_.weights = j.at("params").at("weights").get<std::vector<double>>();
        params_.bias = j.at("params").at("bias").get<double>();
        if (params_.weights.size() != featurizer_.dim()) {
            throw DataError("linear model parameter size mismatch");
        }
    }

    Vocabulary vocab_;
    std::string vocab_hash_;
    LinearConfig config_;
    Featurizer featurizer_;
    LinearParams params_;

    template <typename Model, typename GradFn, typename LossFn>
    friend Model train_linear(const Dataset&, const Vocabulary&,
                              const LinearConfig&, GradFn, LossFn);
};

class LogisticRegressionModel final : public LinearModelBase {
public:
    std::string name() const override { return "LR"; }
    std::string kind() const override { return "lr"; }

    static std::unique_ptr<LogisticRegressionModel> from_json(const nlohmann::json& j) {
        auto m = std::make_unique<LogisticRegressionModel>();
        m->load(j);
        return m;
    }
};

class LinearSvmModel final : public LinearModelBase {
public:
    std::string name() const override { return "SVM"; }
    std::string kind() const override { return "svm"; }

    double margin(std::span<const Token> tokens) const { return decision(tokens); }

    static std::unique_ptr<LinearSvmModel> from_json(const nlohmann::json& j) {
        auto m = std::make_unique<LinearSvmModel>();
        m->load(j);
        return m;
    }
};

template <typename Model, typename GradFn, typename LossFn>
Model train_linear(const Dataset& dataset, const Vocabulary& vocab,
                   const LinearConfig& cfg, GradFn grad_fn, LossFn loss_fn) {
    if (dataset.empty()) throw DataError("cannot train on an empty dataset");
    if (cfg.batch_size == 0) throw ConfigError("batch_size must be positive");
    Model m;
    m.init(vocab, cfg);
    std::vector<BowVector> xs;
    std::vector<int> ys;
    xs.reserve(dataset.size());
    Featurizer feat(vocab, cfg.feature_mode);
    for (const auto& ex : dataset.examples) {
        xs.push_back(feat.featurize(ex.tokens));
        ys.push_back(ex.label);
    }
    m.params_ = detail::minibatch_descent(std::span<const BowVector>(xs),
                                          std::span<const int>(ys), feat.dim(),
                                          cfg, grad_fn, loss_fn);
    return m;
}

inline LogisticRegressionModel train_logistic_regression(
    const Dataset& dataset, const Vocabulary& vocab, const LinearConfig& cfg = {}) {
    return train_linear<LogisticRegressionModel>(
        dataset, vocab, cfg,
        [](const LinearParams& p, std::span<const BowVector> xs,
           std::span<const int> ys, double l2) {
            return logistic_gradient(p, xs, ys, l2);
        },
        [](const LinearParams& p, std::span<const BowVector> xs,
           std::span<const int> ys, double l2) {
            return logistic_loss(p, xs, ys, l2);
        });
}

inline LinearSvmModel train_linear_svm(const Dataset& dataset,
                                       const Vocabulary& vocab,
                                       const LinearConfig& cfg = {}) {
    return train_linear<LinearSvmModel>(
        dataset, vocab, cfg,
        [](const LinearParams& p, std::span<const BowVector> xs,
           std::span<const int> ys, double l2) {
            return hinge_subgradient(p, xs, ys, l2);
        },
        [](const LinearParams& p, std::span<const BowVector> xs,
           std::span<const int> ys, double l2) {
            return hinge_loss(p, xs, ys, l2);
        });
}

}  // namespace wordcause
