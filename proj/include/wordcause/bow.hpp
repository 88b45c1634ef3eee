#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "wordcause/corpus.hpp"
#include "wordcause/error.hpp"
#include "wordcause/token.hpp"

namespace wordcause {

enum class FeatureMode { binary, counts };

inline std::string to_string(FeatureMode m) {
    return m == FeatureMode::binary ? "binary" : "counts";
}

inline FeatureMode feature_mode_from_string(const std::string& s) {
    if (s == "binary") return FeatureMode::binary;
    if (s == "counts") return FeatureMode::counts;
    throw ConfigError("unknown feature mode: " + s);
}

// Sparse bag-of-words vector: (vocabulary index, value) pairs sorted by index.
struct BowVector {
    std::vector<std::pair<std::uint32_t, double>> entries;

    std::size_t nnz() const { return entries.size(); }
};

// Maps token lists onto a fixed vocabulary. Out-of-vocabulary tokens are
// dropped.
class Featurizer {
public:
    Featurizer() = default;

    Featurizer(std::vector<Token> words, FeatureMode mode)
        : words_(std::move(words)), mode_(mode) {
        for (std::size_t i = 0; i < words_.size(); ++i) {
            index_[words_[i]] = static_cast<std::uint32_t>(i);
        }
    }

    Featurizer(const Vocabulary& vocab, FeatureMode mode)
        : Featurizer(vocab.words, mode) {}

    std::size_t dim() const { return words_.size(); }
    FeatureMode mode() const { return mode_; }
    const std::vector<Token>& words() const { return words_; }

    BowVector featurize(std::span<const Token> tokens) const {
        std::unordered_map<std::uint32_t, double> acc;
        for (const auto& t : tokens) {
            auto it = index_.find(t);
            if (it == index_.end()) continue;
            if (mode_ == FeatureMode::binary) {
                acc[it->second] = 1.0;
            } else {
                acc[it->second] += 1.0;
            }
        }
        BowVector v;
        v.entries.assign(acc.begin(), acc.end());
        std::sort(v.entries.begin(), v.entries.end());
        return v;
    }

private:
    std::vector<Token> words_;
    std::unordered_map<Token, std::uint32_t> index_;
    FeatureMode mode_ = FeatureMode::binary;
};

inline BowVector featurize(const Vocabulary& vocab,
                           std::span<const Token> tokens, FeatureMode mode) {
    return Featurizer(vocab, mode).featurize(tokens);
}

}  // namespace wordcause
