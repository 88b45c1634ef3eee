#pragma once

#include <cmath>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "wordcause/bow.hpp"
#include "wordcause/corpus.hpp"
#include "wordcause/error.hpp"
#include "wordcause/estimator.hpp"
#include "wordcause/linear.hpp"
#include "wordcause/rng.hpp"

namespace wordcause {

struct MlpConfig {
    std::vector<std::size_t> hidden_sizes{10, 5};
    std::size_t epochs = 50;
    double learning_rate = 0.05;
    double l2 = 1e-4;
    std::size_t batch_size = 32;
    std::uint64_t seed = 1;
    FeatureMode feature_mode = FeatureMode::binary;

    nlohmann::json to_json() const {
        return {{"hidden_sizes", hidden_sizes},
                {"epochs", epochs},
                {"learning_rate", learning_rate},
                {"l2", l2},
                {"batch_size", batch_size},
                {"seed", seed},
                {"feature_mode", to_string(feature_mode)}};
    }

    static MlpConfig from_json(const nlohmann::json& j) {
        MlpConfig c;
        if (j.contains("hidden_sizes"))
            c.hidden_sizes = j["hidden_sizes"].get<std::vector<std::size_t>>();
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

// Dense layer stack; W[l] is row-major (out x in), b[l] has out entries.
struct MlpParams {
    std::vector<std::vector<double>> W;
    std::vector<std::vector<double>> b;
};

namespace detail {

// sizes = [input_dim, hidden..., 1]
inline std::vector<std::size_t> mlp_layer_sizes(std::size_t dim,
                                                const std::vector<std::size_t>& hidden) {
    std::vector<std::size_t> sizes{dim};
    sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    sizes.push_back(1);
    return sizes;
}

struct MlpForward {
    std::vector<std::vector<double>> pre;   // z per layer (1..L)
    std::vector<std::vector<double>> post;  // relu(z) per hidden, logit last
    double logit = 0.0;
};

inline MlpForward mlp_forward(const MlpParams& p,
                              const std::vector<std::size_t>& sizes,
                              const BowVector& x) {
    MlpForward f;
    std::size_t L = p.W.size();
    f.pre.resize(L);
    f.post.resize(L);
    for (std::size_t l = 0; l < L; ++l) {
        std::size_t out = sizes[l + 1], in = sizes[l];
        f.pre[l].assign(p.b[l].begin(), p.b[l].end());
        if (l == 0) {
            for (const auto& [idx, v] : x.entries) {
                for (std::size_t r = 0; r < out; ++r) {
                    f.pre[l][r] += p.W[l][r * in + idx] * v;
                }
            }
        } else {
            const auto& a = f.post[l - 1];
            for (std::size_t r = 0; r < out; ++r) {
                double z = f.pre[l][r];
                const double* row = &p.W[l][r * in];
                for (std::size_t c = 0; c < in; ++c) z += row[c] * a[c];
                f.pre[l][r] = z;
            }
        }
        f.post[l] = f.pre[l];
        if (l + 1 < L) {
            for (double& v : f.post[l]) v = std::max(0.0, v);  // relu
        }
    }
    f.logit = f.pre[L - 1][0];
    return f;
}

}  // namespace detail

inline double mlp_loss(const MlpParams& p, const std::vector<std::size_t>& sizes,
                       std::span<const BowVector> xs, std::span<const int> ys,
                       double l2) {
    double loss = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double z = detail::mlp_forward(p, sizes, xs[i]).logit;
        loss += softplus(z) - static_cast<double>(ys[i]) * z;
    }
    loss /= static_cast<double>(xs.size());
    double reg = 0.0;
    for (const auto& W : p.W) {
        for (double w : W) reg += w * w;
    }
    return loss + 0.5 * l2 * reg;
}

// Backprop gradient of mlp_loss; mean over the batch plus the l2 term.
inline MlpParams mlp_gradient(const MlpParams& p,
                              const std::vector<std::size_t>& sizes,
                              std::span<const BowVector> xs,
                              std::span<const int> ys, double l2) {
    std::size_t L = p.W.size();
    MlpParams g;
    g.W.resize(L);
    g.b.resize(L);
    for (std::size_t l = 0; l < L; ++l) {
        g.W[l].assign(p.W[l].size(), 0.0);
        g.b[l].assign(p.b[l].size(), 0.0);
    }
    for (std::size_t i = 0; i < xs.size(); ++i) {
        auto f = detail::mlp_forward(p, sizes, xs[i]);
        std::vector<double> delta{sigmoid(f.logit) - static_cast<double>(ys[i])};
        for (std::size_t l = L; l-- > 0;) {
            std::size_t out = sizes[l + 1], in = sizes[l];
            for (std::size_t r = 0; r < out; ++r) g.b[l][r] += delta[r];
            if (l == 0) {
                for (const auto& [idx, v] : xs[i].entries) {
                    for (std::size_t r = 0; r < out; ++r) {
                        g.W[l][r * in + idx] += delta[r] * v;
                    }
                }
            } else {
                const auto& a = f.post[l - 1];
                for (std::size_t r = 0; r < out; ++r) {
                    double* row = &g.W[l][r * in];
                    for (std::size_t c = 0; c < in; ++c) row[c] += delta[r] * a[c];
                }
                std::vector<double> prev(in, 0.0);
                for (std::size_t c = 0; c < in; ++c) {
                    if (f.pre[l - 1][c] <= 0.0) continue;  // relu gate
                    double s = 0.0;
                    for (std::size_t r = 0; r < out; ++r) {
                        s += p.W[l][r * in + c] * delta[r];
                    }
                    prev[c] = s;
                }
                delta = std::move(prev);
            }
        }
    }
    double inv = 1.0 / static_cast<double>(xs.size());
    for (std::size_t l = 0; l < L; ++l) {
        for (std::size_t k = 0; k < g.W[l].size(); ++k) {
            g.W[l][k] = g.W[l][k] * inv + l2 * p.W[l][k];
        }
        for (double& v : g.b[l]) v *= inv;
    }
    return g;
}

inline std::vector<double> mlp_flatten(const MlpParams& p) {
    std::vector<double> out;
    for (std::size_t l = 0; l < p.W.size(); ++l) {
        out.insert(out.end(), p.W[l].begin(), p.W[l].end());
        out.insert(out.end(), p.b[l].begin(), p.b[l].end());
    }
    return out;
}

inline void mlp_unflatten(std::span<const double> flat, MlpParams& p) {
    std::size_t k = 0;
    for (std::size_t l = 0; l < p.W.size(); ++l) {
        for (double& w : p.W[l]) w = flat[k++];
        for (double& b : p.b[l]) b = flat[k++];
    }
    if (k != flat.size()) throw InternalError("mlp parameter size mismatch");
}

// Feed-forward net on bag-of-words features: relu hidden layers, logistic
// output, cross-entropy loss, mini-batch gradient descent. Named after its
// architecture, e.g. hidden [10,5] -> "NN2Layer105".
class MlpModel final : public AttributeEstimator {
public:
    MlpModel() = default;

    std::string name() const override {
        std::string n = "NN" + std::to_string(config_.hidden_sizes.size()) + "Layer";
        for (auto h : config_.hidden_sizes) n += std::to_string(h);
        return n;
    }
    std::string kind() const override { return "mlp"; }
    std::string vocab_hash() const override { return vocab_hash_; }

    double predict(std::span<const Token> tokens) const override {
        BowVector x = featurizer_.featurize(tokens);
        return sigmoid(detail::mlp_forward(params_, sizes_, x).logit);
    }

    const MlpParams& params() const { return params_; }
    const MlpConfig& config() const { return config_; }

    nlohmann::json to_json() const override {
        return {{"kind", kind()},
                {"config", config_.to_json()},
                {"vocab", vocab_.to_json()},
                {"params", {{"W", params_.W}, {"b", params_.b}}}};
    }

    static std::unique_ptr<MlpModel> from_json(const nlohmann::json& j) {
        auto m = std::make_unique<MlpModel>();
        m->vocab_ = Vocabulary::from_json(j.at("vocab"));
        m->vocab_hash_ = m->vocab_.hash();
        m->config_ = MlpConfig::from_json(j.at("config"));
        m->featurizer_ = Featurizer(m->vocab_, m->config_.feature_mode);
        m->sizes_ = detail::mlp_layer_sizes(m->featurizer_.dim(), m->config_.hidden_sizes);
        m->params_.W = j.at("params").at("W").get<std::vector<std::vector<double>>>();
        m->params_.b = j.at("params").at("b").get<std::vector<std::vector<double>>>();
        if (m->params_.W.size() != m->sizes_.size() - 1) {
            throw DataError("mlp parameter shape mismatch");
        }
        return m;
    }

    using AttributeEstimator::predict;

    friend MlpModel train_mlp(const Dataset&, const Vocabulary&, const MlpConfig&);

private:
    Vocabulary vocab_;
    std::string vocab_hash_;
    Featurizer featurizer_;
    MlpConfig config_;
    std::vector<std::size_t> sizes_;
    MlpParams params_;
};

inline MlpModel train_mlp(const Dataset& dataset, const Vocabulary& vocab,
                          const MlpConfig& cfg = {}) {
    if (cfg.hidden_sizes.empty()) {
        throw ConfigError("mlp needs at least one hidden layer");
    }
    for (auto h : cfg.hidden_sizes) {
        if (h == 0) throw ConfigError("hidden layer sizes must be positive");
    }
    if (cfg.batch_size == 0) throw ConfigError("batch_size must be positive");
    if (dataset.empty()) throw DataError("cannot train on an empty dataset");

    MlpModel m;
    m.vocab_ = vocab;
    m.vocab_hash_ = vocab.hash();
    m.config_ = cfg;
    m.featurizer_ = Featurizer(vocab, cfg.feature_mode);
    m.sizes_ = detail::mlp_layer_sizes(m.featurizer_.dim(), cfg.hidden_sizes);

    // Uniform(-r, r) init with r = sqrt(6/(fan_in+fan_out)); biases at zero.
    std::size_t L = m.sizes_.size() - 1;
    m.params_.W.resize(L);
    m.params_.b.resize(L);
    for (std::size_t l = 0; l < L; ++l) {
        std::size_t out = m.sizes_[l + 1], in = m.sizes_[l];
        double r = std::sqrt(6.0 / static_cast<double>(in + out));
        RngStream rng(derive_seed(cfg.seed, "mlp-init", l));
        m.params_.W[l].resize(out * in);
        for (double& w : m.params_.W[l]) w = (2.0 * rng.next_unit() - 1.0) * r;
        m.params_.b[l].assign(out, 0.0);
    }

    std::vector<BowVector> xs;
    std::vector<int> ys;
    xs.reserve(dataset.size());
    for (const auto& ex : dataset.examples) {
        xs.push_back(m.featurizer_.featurize(ex.tokens));
        ys.push_back(ex.label);
    }

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
            MlpParams g = mlp_gradient(m.params_, m.sizes_,
                                       std::span<const BowVector>(bx),
                                       std::span<const int>(by), cfg.l2);
            for (std::size_t l = 0; l < L; ++l) {
                for (std::size_t k = 0; k < g.W[l].size(); ++k) {
                    m.params_.W[l][k] -= cfg.learning_rate * g.W[l][k];
                }
                for (std::size_t k = 0; k < g.b[l].size(); ++k) {
                    m.params_.b[l][k] -= cfg.learning_rate * g.b[l][k];
                }
            }
        }
        double loss = mlp_loss(m.params_, m.sizes_, std::span<const BowVector>(xs),
                               std::span<const int>(ys), cfg.l2);
        if (!std::isfinite(loss)) {
            throw Error("non-finite training loss at epoch " +
                        std::to_string(epoch) + "; try a lower learning_rate");
        }
    }
    return m;
}

}  // namespace wordcause
