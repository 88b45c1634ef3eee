#pragma once

#include <algorithm>
#include <cstdio>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>

#include <json.hpp>

#include "wordcause/corpus.hpp"
#include "wordcause/error.hpp"
#include "wordcause/token.hpp"

namespace wordcause {

// Contract for anything that estimates P(attribute | sentence). Implementations
// are immutable once trained; predict is a pure function of (state, tokens) and
// safe for unlimited concurrent callers. predict must land in [0,1] for every
// token list, including empty and all-out-of-vocabulary input.
class AttributeEstimator {
public:
    virtual ~AttributeEstimator() = default;

    virtual std::string name() const = 0;
    virtual std::string kind() const = 0;
    virtual double predict(std::span<const Token> tokens) const = 0;

    // Hash of the vocabulary the model was trained against.
    virtual std::string vocab_hash() const = 0;

    // Full self-describing payload (kind, config, vocabulary, parameters).
    virtual nlohmann::json to_json() const = 0;

    // Binds derived artifacts (score tables, reports) to one trained model.
    std::string fingerprint() const {
        std::uint64_t h = fnv1a64(to_json().dump());
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx",
                      static_cast<unsigned long long>(h));
        return std::string(buf);
    }

    double predict(const std::vector<Token>& tokens) const {
        return predict(std::span<const Token>(tokens));
    }
};

// Per-word attribute score: the fraction of sentences containing the word
// that carry the attribute label, exactly attr_freq/doc_freq for retained
// words. Unseen or dropped words score `default_score`.
class WordAttributeModel {
public:
    WordAttributeModel() = default;

    WordAttributeModel(const Vocabulary& vocab, double default_score)
        : default_(default_score), vocab_hash_(vocab.hash()) {
        for (const auto& w : vocab.words) {
            scores_[w] = static_cast<double>(vocab.attr(w)) /
                         static_cast<double>(vocab.doc(w));
        }
    }

    double score(const Token& w) const {
        auto it = scores_.find(w);
        return it == scores_.end() ? default_ : it->second;
    }

    double default_score() const { return default_; }
    const std::string& vocab_hash() const { return vocab_hash_; }
    const std::unordered_map<Token, double>& table() const { return scores_; }

private:
    std::unordered_map<Token, double> scores_;
    double default_ = 0.0;
    std::string vocab_hash_;
};

inline WordAttributeModel train_word_model(const Dataset& dataset,
                                           std::uint64_t min_count = 1,
                                           double default_score = 0.0) {
    if (dataset.empty()) throw DataError("cannot train on an empty dataset");
    return WordAttributeModel(build_vocabulary(dataset, min_count), default_score);
}

// Conservative sentence model: the max per-word score over the sentence.
// Appending a token never lowers the prediction; the empty sentence falls
// back to the word model's default.
class MaxWordSentenceModel final : public AttributeEstimator {
public:
    MaxWordSentenceModel() = default;

    MaxWordSentenceModel(Vocabulary vocab, double default_score)
        : vocab_(std::move(vocab)), word_model_(vocab_, default_score) {}

    std::string name() const override { return "MaxWord"; }
    std::string kind() const override { return "maxword"; }
    std::string vocab_hash() const override { return word_model_.vocab_hash(); }

    double predict(std::span<const Token> tokens) const override {
        if (tokens.empty()) return word_model_.default_score();
        double best = word_model_.score(tokens[0]);
        for (std::size_t i = 1; i < tokens.size(); ++i) {
            best = std::max(best, word_model_.score(tokens[i]));
        }
        return best;
    }

    const WordAttributeModel& word_model() const { return word_model_; }
    const Vocabulary& vocabulary() const { return vocab_; }

    nlohmann::json to_json() const override {
        return {{"kind", kind()},
                {"config", {{"default_score", word_model_.default_score()}}},
                {"vocab", vocab_.to_json()}};
    }

    static std::unique_ptr<MaxWordSentenceModel> from_json(const nlohmann::json& j) {
        return std::make_unique<MaxWordSentenceModel>(
            Vocabulary::from_json(j.at("vocab")),
            j.at("config").at("default_score").get<double>());
    }

    using AttributeEstimator::predict;

private:
    Vocabulary vocab_;
    WordAttributeModel word_model_;
};

inline MaxWordSentenceModel train_max_word_model(const Dataset& dataset,
                                                 std::uint64_t min_count = 1,
                                                 double default_score = 0.0) {
    if (dataset.empty()) throw DataError("cannot train on an empty dataset");
    return MaxWordSentenceModel(build_vocabulary(dataset, min_count), default_score);
}

inline double predict_max_word(const MaxWordSentenceModel& model,
                               std::span<const Token> tokens) {
    return model.predict(tokens);
}

}  // namespace wordcause
