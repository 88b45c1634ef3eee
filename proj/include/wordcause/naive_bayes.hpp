#pragma once

#include <cmath>
#include <memory>
#include <span>
#include <vector>

#include <json.hpp>

#include "wordcause/bow.hpp"
#include "wordcause/corpus.hpp"
#include "wordcause/error.hpp"
#include "wordcause/estimator.hpp"

namespace wordcause {

// Multinomial naive Bayes with additive smoothing. predict returns the
// posterior P(label=1 | tokens); with no in-vocabulary evidence it falls
// back to the class prior.
class NaiveBayesModel final : public AttributeEstimator {
public:
    NaiveBayesModel() = default;

    std::string name() const override { return "NB"; }
    std::string kind() const override { return "nb"; }
    std::string vocab_hash() const override { return vocab_hash_; }

    double predict(std::span<const Token> tokens) const override {
        BowVector x = featurizer_.featurize(tokens);
        // log P(c) + sum counts * log P(w|c), for c in {0,1}
        double z = log_prior_[1] - log_prior_[0];
        for (const auto& [idx, count] : x.entries) {
            z += count * (log_cond_[1][idx] - log_cond_[0][idx]);
        }
        return 1.0 / (1.0 + std::exp(-z));
    }

    nlohmann::json to_json() const override {
        return {{"kind", kind()},
                {"config", {{"alpha", alpha_}}},
                {"vocab", vocab_.to_json()},
                {"params",
                 {{"log_prior", log_prior_},
                  {"log_cond_0", log_cond_[0]},
                  {"log_cond_1", log_cond_[1]}}}};
    }

    static std::unique_ptr<NaiveBayesModel> from_json(const nlohmann::json& j) {
        auto m = std::make_unique<NaiveBayesModel>();
        m->vocab_ = Vocabulary::from_json(j.at("vocab"));
        m->vocab_hash_ = m->vocab_.hash();
        m->featurizer_ = Featurizer(m->vocab_, FeatureMode::counts);
        m->alpha_ = j.at("config").at("alpha").get<double>();
        const auto& p = j.at("params");
        m->log_prior_ = p.at("log_prior").get<std::vector<double>>();
        m->log_cond_[0] = p.at("log_cond_0").get<std::vector<double>>();
        m->log_cond_[1] = p.at("log_cond_1").get<std::vector<double>>();
        if (m->log_cond_[0].size() != m->featurizer_.dim() ||
            m->log_cond_[1].size() != m->featurizer_.dim()) {
            throw DataError("naive bayes parameter size mismatch");
        }
        return m;
    }

    using AttributeEstimator::predict;

    friend NaiveBayesModel train_naive_bayes(const Dataset&, const Vocabulary&,
                                             double);

private:
    Vocabulary vocab_;
    std::string vocab_hash_;
    Featurizer featurizer_;  // counts: multinomial event model
    double alpha_ = 1.0;
    std::vector<double> log_prior_ = {0.0, 0.0};
    std::vector<double> log_cond_[2];
};

inline NaiveBayesModel train_naive_bayes(const Dataset& dataset,
                                         const Vocabulary& vocab,
                                         double alpha = 1.0) {
    if (alpha <= 0.0) throw ConfigError("smoothing alpha must be positive");
    if (dataset.empty()) throw DataError("cannot train on an empty dataset");

    NaiveBayesModel m;
    m.vocab_ = vocab;
    m.vocab_hash_ = vocab.hash();
    m.featurizer_ = Featurizer(vocab, FeatureMode::counts);
    m.alpha_ = alpha;

    const std::size_t dim = m.featurizer_.dim();
    std::vector<double> counts[2] = {std::vector<double>(dim, 0.0),
                                     std::vector<double>(dim, 0.0)};
    double total[2] = {0.0, 0.0};
    std::size_t n_class[2] = {0, 0};
    for (const auto& ex : dataset.examples) {
        int c = ex.label;
        ++n_class[c];
        for (const auto& [idx, count] : m.featurizer_.featurize(ex.tokens).entries) {
            counts[c][idx] += count;
            total[c] += count;
        }
    }
    if (n_class[0] == 0 || n_class[1] == 0) {
        throw DataError("naive bayes needs both classes in the training data");
    }
    double n = static_cast<double>(dataset.size());
    m.log_prior_ = {std::log(n_class[0] / n), std::log(n_class[1] / n)};
    for (int c : {0, 1}) {
        m.log_cond_[c].resize(dim);
        double denom = total[c] + alpha * static_cast<double>(dim);
        for (std::size_t i = 0; i < dim; ++i) {
            m.log_cond_[c][i] = std::log((counts[c][i] + alpha) / denom);
        }
    }
    return m;
}

}  // namespace wordcause
