#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "wordcause/corpus.hpp"
#include "wordcause/error.hpp"
#include "wordcause/estimator.hpp"
#include "wordcause/rng.hpp"
#include "wordcause/token.hpp"

namespace wordcause {

struct WeightedWord {
    Token word;
    double weight = 0.0;
};

// A replacement distribution for one sentence position. Weights are positive
// and sum to 1. `exact` distinguishes a fully enumerated distribution from
// merged Monte-Carlo draws (n_draws of them). n_fallbacks counts filter
// fallback events that produced this set.
struct CandidateSet {
    std::vector<WeightedWord> words;
    bool exact = true;
    std::size_t n_draws = 0;
    std::size_t n_fallbacks = 0;
};

struct ReplacementConfig {
    std::string kind = "uniform";  // uniform | unigram | remote
    std::size_t k = 16;
    std::size_t exact_enumeration_threshold = 512;
    bool assumption1_filter = true;
    std::size_t max_resamples = 8;
    std::uint64_t seed = 7;

    nlohmann::json to_json() const {
        return {{"kind", kind},
                {"k", k},
                {"exact_enumeration_threshold", exact_enumeration_threshold},
                {"assumption1_filter", assumption1_filter},
                {"max_resamples", max_resamples},
                {"seed", seed}};
    }
};

// Proposes counterfactual replacement words for one position. The original
// word tokens[i] never appears among candidates. Implementations are
// stateless given the explicit rng, so concurrent use is safe.
class ReplacementModel {
public:
    virtual ~ReplacementModel() = default;

    virtual std::string name() const = 0;

    // Distinct candidate count at this position, when known ahead of time.
    virtual std::optional<std::size_t> support_size(
        const std::vector<Token>& tokens, std::size_t i) const = 0;

    // The full replacement distribution. Only valid when support_size
    // reports a finite value.
    virtual CandidateSet enumerate(const std::vector<Token>& tokens,
                                   std::size_t i) const = 0;

    // k draws with replacement, merged into a weighted set (weight =
    // draw count / k).
    virtual CandidateSet sample(const std::vector<Token>& tokens, std::size_t i,
                                std::size_t k, RngStream& rng) const = 0;
};

// Single entry point: the full set when k covers the support, else k
// Monte-Carlo draws.
inline CandidateSet candidates(const ReplacementModel& model,
                               const std::vector<Token>& tokens, std::size_t i,
                               std::size_t k, RngStream& rng) {
    if (k == 0) throw ConfigError("candidate count k must be positive");
    auto s = model.support_size(tokens, i);
    if (s && *s <= k) return model.enumerate(tokens, i);
    return model.sample(tokens, i, k, rng);
}

namespace detail {

inline void check_position(const std::vector<Token>& tokens, std::size_t i) {
    if (i >= tokens.size()) {
        throw ConfigError("replacement position " + std::to_string(i) +
                          " out of range for sentence of length " +
                          std::to_string(tokens.size()));
    }
}

inline CandidateSet merge_draws(std::vector<Token> draws, std::size_t n_fallbacks) {
    std::map<Token, std::size_t> counts;
    for (auto& w : draws) ++counts[w];
    CandidateSet out;
    out.exact = false;
    out.n_draws = draws.size();
    out.n_fallbacks = n_fallbacks;
    double inv = 1.0 / static_cast<double>(draws.size());
    for (auto& [w, c] : counts) {
        out.words.push_back({w, static_cast<double>(c) * inv});
    }
    return out;
}

}  // namespace detail

// Uniform over the retained vocabulary minus the original word.
class UniformReplacer final : public ReplacementModel {
public:
    explicit UniformReplacer(const Vocabulary& vocab) : vocab_(&vocab) {
        if (vocab.size() < 2) {
            throw ConfigError("replacement needs a vocabulary of at least 2 words");
        }
    }

    std::string name() const override { return "uniform"; }

    std::optional<std::size_t> support_size(const std::vector<Token>& tokens,
                                            std::size_t i) const override {
        detail::check_position(tokens, i);
        return vocab_->size() - (vocab_->contains(tokens[i]) ? 1 : 0);
    }

    CandidateSet enumerate(const std::vector<Token>& tokens,
                           std::size_t i) const override {
        detail::check_position(tokens, i);
        CandidateSet out;
        std::size_t s = *support_size(tokens, i);
        double w = 1.0 / static_cast<double>(s);
        for (const auto& word : vocab_->words) {
            if (word != tokens[i]) out.words.push_back({word, w});
        }
        return out;
    }

    CandidateSet sample(const std::vector<Token>& tokens, std::size_t i,
                        std::size_t k, RngStream& rng) const override {
        detail::check_position(tokens, i);
        const auto& words = vocab_->words;
        // index of the excluded original, one past the end when absent
        std::size_t skip = words.size();
        auto it = std::lower_bound(words.begin(), words.end(), tokens[i]);
        if (it != words.end() && *it == tokens[i]) {
            skip = static_cast<std::size_t>(it - words.begin());
        }
        std::size_t s = words.size() - (skip < words.size() ? 1 : 0);
        std::vector<Token> draws;
        draws.reserve(k);
        for (std::size_t d = 0; d < k; ++d) {
            std::size_t j = rng.next_below(s);
            if (j >= skip) ++j;
            draws.push_back(words[j]);
        }
        return detail::merge_draws(std::move(draws), 0);
    }

private:
    const Vocabulary* vocab_;
};

// Weights proportional to document frequency, excluding the original word.
class UnigramReplacer final : public ReplacementModel {
public:
    explicit UnigramReplacer(const Vocabulary& vocab) : vocab_(&vocab) {
        if (vocab.size() < 2) {
            throw ConfigError("replacement needs a vocabulary of at least 2 words");
        }
        cumulative_.reserve(vocab.words.size());
        double acc = 0.0;
        for (const auto& w : vocab.words) {
            acc += static_cast<double>(vocab.doc(w));
            cumulative_.push_back(acc);
        }
        total_ = acc;
    }

    std::string name() const override { return "unigram"; }

    std::optional<std::size_t> support_size(const std::vector<Token>& tokens,
                                            std::size_t i) const override {
        detail::check_position(tokens, i);
        return vocab_->size() - (vocab_->contains(tokens[i]) ? 1 : 0);
    }

    CandidateSet enumerate(const std::vector<Token>& tokens,
                           std::size_t i) const override {
        detail::check_position(tokens, i);
        double denom = total_ - static_cast<double>(vocab_->doc(tokens[i]));
        if (denom <= 0.0) {
            throw InternalError("unigram replacer has no probability mass left");
        }
        CandidateSet out;
        for (const auto& word : vocab_->words) {
            if (word != tokens[i]) {
                out.words.push_back(
                    {word, static_cast<double>(vocab_->doc(word)) / denom});
            }
        }
        return out;
    }

    CandidateSet sample(const std::vector<Token>& tokens, std::size_t i,
                        std::size_t k, RngStream& rng) const override {
        detail::check_position(tokens, i);
        double excluded = static_cast<double>(vocab_->doc(tokens[i]));
        std::vector<Token> draws;
        draws.reserve(k);
        if (2.0 * excluded > total_) {
            // the original word dominates the mass; walk an exclusion-aware
            // CDF instead of rejection-sampling against it
            std::vector<double> cum;
            std::vector<std::size_t> idx;
            double acc = 0.0;
            for (std::size_t j = 0; j < vocab_->words.size(); ++j) {
                if (vocab_->words[j] == tokens[i]) continue;
                acc += static_cast<double>(vocab_->doc(vocab_->words[j]));
                cum.push_back(acc);
                idx.push_back(j);
            }
            for (std::size_t d = 0; d < k; ++d) {
                double u = rng.next_unit() * acc;
                auto it = std::upper_bound(cum.begin(), cum.end(), u);
                std::size_t j = std::min<std::size_t>(
                    static_cast<std::size_t>(it - cum.begin()), idx.size() - 1);
                draws.push_back(vocab_->words[idx[j]]);
            }
            return detail::merge_draws(std::move(draws), 0);
        }
        for (std::size_t d = 0; d < k; ++d) {
            // CDF draw over the full vocabulary, rejecting the original.
            while (true) {
                double u = rng.next_unit() * total_;
                auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
                std::size_t j = std::min<std::size_t>(
                    static_cast<std::size_t>(it - cumulative_.begin()),
                    vocab_->words.size() - 1);
                if (vocab_->words[j] != tokens[i]) {
                    draws.push_back(vocab_->words[j]);
                    break;
                }
            }
        }
        return detail::merge_draws(std::move(draws), 0);
    }

private:
    const Vocabulary* vocab_;
    std::vector<double> cumulative_;
    double total_ = 0.0;
};

// Context attribute score: the max word score over the sentence minus
// position i; the word model's default for single-word sentences.
inline double context_score(const WordAttributeModel& wm,
                            const std::vector<Token>& tokens, std::size_t i) {
    double best = wm.default_score();
    bool any = false;
    for (std::size_t j = 0; j < tokens.size(); ++j) {
        if (j == i) continue;
        double s = wm.score(tokens[j]);
        best = any ? std::max(best, s) : s;
        any = true;
    }
    return any ? best : wm.default_score();
}

// Keeps only candidates scoring strictly below the context score and
// renormalizes. When the filter removes everything it falls back to the
// single lowest-scoring candidate (ties: lexicographically smallest) so the
// outer average keeps its support; the event is counted.
inline CandidateSet filter_assumption1(const WordAttributeModel& wm,
                                       const std::vector<Token>& tokens,
                                       std::size_t i, CandidateSet in) {
    if (in.words.empty()) {
        throw InternalError("filter_assumption1 requires a non-empty candidate set");
    }
    double bound = context_score(wm, tokens, i);
    CandidateSet out;
    out.exact = in.exact;
    out.n_draws = in.n_draws;
    out.n_fallbacks = in.n_fallbacks;
    double kept = 0.0;
    for (const auto& ww : in.words) {
        if (wm.score(ww.word) < bound) {
            out.words.push_back(ww);
            kept += ww.weight;
        }
    }
    if (out.words.empty()) {
        const WeightedWord* best = &in.words[0];
        double best_score = wm.score(best->word);
        for (const auto& ww : in.words) {
            double s = wm.score(ww.word);
            if (s < best_score || (s == best_score && ww.word < best->word)) {
                best = &ww;
                best_score = s;
            }
        }
        out.words.push_back({best->word, 1.0});
        ++out.n_fallbacks;
        return out;
    }
    for (auto& ww : out.words) ww.weight /= kept;
    return out;
}

// Assumption-1 enforcing wrapper around any replacement model.
class FilteredReplacer final : public ReplacementModel {
public:
    FilteredReplacer(std::unique_ptr<ReplacementModel> base,
                     WordAttributeModel word_model, std::size_t max_resamples = 8)
        : base_(std::move(base)),
          word_model_(std::move(word_model)),
          max_resamples_(std::max<std::size_t>(1, max_resamples)) {}

    std::string name() const override { return base_->name() + "+a1"; }

    std::optional<std::size_t> support_size(const std::vector<Token>& tokens,
                                            std::size_t i) const override {
        return base_->support_size(tokens, i);  // filter only shrinks it
    }

    CandidateSet enumerate(const std::vector<Token>& tokens,
                           std::size_t i) const override {
        return filter_assumption1(word_model_, tokens, i, base_->enumerate(tokens, i));
    }

    CandidateSet sample(const std::vector<Token>& tokens, std::size_t i,
                        std::size_t k, RngStream& rng) const override {
        // With a known finite support, draw straight from the filtered
        // distribution; otherwise rejection-sample against the bound.
        if (base_->support_size(tokens, i)) {
            CandidateSet dist = enumerate(tokens, i);
            std::vector<double> cum;
            cum.reserve(dist.words.size());
            double acc = 0.0;
            for (const auto& ww : dist.words) {
                acc += ww.weight;
                cum.push_back(acc);
            }
            std::vector<Token> draws;
            draws.reserve(k);
            for (std::size_t d = 0; d < k; ++d) {
                double u = rng.next_unit() * acc;
                auto it = std::upper_bound(cum.begin(), cum.end(), u);
                std::size_t j = std::min<std::size_t>(
                    static_cast<std::size_t>(it - cum.begin()), dist.words.size() - 1);
                draws.push_back(dist.words[j].word);
            }
            auto out = detail::merge_draws(std::move(draws), dist.n_fallbacks);
            return out;
        }
        double bound = context_score(word_model_, tokens, i);
        std::vector<Token> draws;
        std::size_t fallbacks = 0;
        for (std::size_t d = 0; d < k; ++d) {
            std::optional<Token> accepted;
            Token least;
            double least_score = 0.0;
            for (std::size_t attempt = 0; attempt < max_resamples_; ++attempt) {
                CandidateSet one = base_->sample(tokens, i, 1, rng);
                const Token& w = one.words.at(0).word;
                double s = word_model_.score(w);
                if (s < bound) {
                    accepted = w;
                    break;
                }
                if (attempt == 0 || s < least_score ||
                    (s == least_score && w < least)) {
                    least = w;
                    least_score = s;
                }
            }
            if (accepted) {
                draws.push_back(*accepted);
            } else {
                draws.push_back(least);
                ++fallbacks;
            }
        }
        return detail::merge_draws(std::move(draws), fallbacks);
    }

    const WordAttributeModel& word_model() const { return word_model_; }

private:
    std::unique_ptr<ReplacementModel> base_;
    WordAttributeModel word_model_;
    std::size_t max_resamples_;
};

// One-call conveniences for ad-hoc use.
inline CandidateSet uniform_candidates(const Vocabulary& vocab,
                                       const std::vector<Token>& tokens,
                                       std::size_t i, std::size_t k,
                                       RngStream& rng) {
    return candidates(UniformReplacer(vocab), tokens, i, k, rng);
}

inline CandidateSet unigram_candidates(const Vocabulary& vocab,
                                       const std::vector<Token>& tokens,
                                       std::size_t i, std::size_t k,
                                       RngStream& rng) {
    return candidates(UnigramReplacer(vocab), tokens, i, k, rng);
}

// Builds the configured local sampler stack (remote endpoints are wired in
// the pipeline layer). The vocabulary must outlive the returned replacer.
inline std::unique_ptr<ReplacementModel> make_local_replacer(
    const ReplacementConfig& cfg, const Vocabulary& vocab,
    const WordAttributeModel& word_model) {
    std::unique_ptr<ReplacementModel> base;
    if (cfg.kind == "uniform") base = std::make_unique<UniformReplacer>(vocab);
    else if (cfg.kind == "unigram") base = std::make_unique<UnigramReplacer>(vocab);
    else throw ConfigError("unknown replacer kind: " + cfg.kind);
    if (cfg.assumption1_filter) {
        return std::make_unique<FilteredReplacer>(std::move(base), word_model,
                                                  cfg.max_resamples);
    }
    return base;
}

}  // namespace wordcause
