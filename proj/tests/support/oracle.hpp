#pragma once

// Independent brute-force reference for word effect scores: a plain triple
// loop over sentences, positions, and replacement words. Word attribute
// scores, candidate weights, and the replacement filter are re-derived here
// from first principles so this stays a genuine oracle for the library's
// sampler and averaging machinery.

#include <algorithm>
#include <map>
#include <optional>
#include <vector>

#include "wordcause/corpus.hpp"
#include "wordcause/estimator.hpp"
#include "wordcause/token.hpp"

namespace oracle {

using wordcause::AttributeEstimator;
using wordcause::Dataset;
using wordcause::Token;
using wordcause::Vocabulary;

struct Options {
    bool unigram_weights = false;  // else uniform
    bool a1_filter = false;
    double default_score = 0.0;
    std::size_t min_support = 1;  // sentences containing the word
};

struct Counts {
    std::map<Token, std::size_t> doc;
    std::map<Token, std::size_t> attr;
};

// Sentence-membership recount straight from the dataset.
inline Counts recount(const Dataset& d) {
    Counts c;
    for (const auto& ex : d.examples) {
        std::vector<Token> uniq = ex.tokens;
        std::sort(uniq.begin(), uniq.end());
        uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
        for (const auto& t : uniq) {
            ++c.doc[t];
            if (ex.label == 1) ++c.attr[t];
            else c.attr.emplace(t, 0);
        }
    }
    return c;
}

inline double word_score(const Counts& c, const Token& w, double fallback) {
    auto it = c.doc.find(w);
    if (it == c.doc.end() || it->second == 0) return fallback;
    return static_cast<double>(c.attr.at(w)) / static_cast<double>(it->second);
}

struct WordResult {
    double ate = 0.0;
    std::size_t n_occurrences = 0;
    std::size_t n_sentences = 0;
};

inline std::optional<WordResult> word_ate(const AttributeEstimator& f,
                                          const Dataset& d,
                                          const Vocabulary& vocab,
                                          const Token& word,
                                          const Options& opt = {}) {
    Counts counts = recount(d);

    std::size_t n_sentences = 0;
    double te_sum = 0.0;
    std::size_t n_occurrences = 0;
    for (const auto& ex : d.examples) {
        bool present = false;
        for (std::size_t i = 0; i < ex.tokens.size(); ++i) {
            if (ex.tokens[i] != word) continue;
            present = true;
            ++n_occurrences;

            double base = f.predict(ex.tokens);

            // context score: max word score over the other positions
            double ctx = opt.default_score;
            bool any = false;
            for (std::size_t j = 0; j < ex.tokens.size(); ++j) {
                if (j == i) continue;
                double s = word_score(counts, ex.tokens[j], opt.default_score);
                ctx = any ? std::max(ctx, s) : s;
                any = true;
            }

            // candidate pool: retained vocabulary minus the original word
            struct Cand {
                Token w;
                double weight;
            };
            std::vector<Cand> pool;
            for (const auto& cand : vocab.words) {
                if (cand == word) continue;
                double weight = opt.unigram_weights
                                    ? static_cast<double>(vocab.doc(cand))
                                    : 1.0;
                pool.push_back({cand, weight});
            }
            if (opt.a1_filter) {
                std::vector<Cand> kept;
                for (const auto& c : pool) {
                    if (word_score(counts, c.w, opt.default_score) < ctx) {
                        kept.push_back(c);
                    }
                }
                if (kept.empty()) {
                    // fallback: the lowest-scoring candidate, smallest word on ties
                    const Cand* best = &pool.front();
                    double best_s = word_score(counts, best->w, opt.default_score);
                    for (const auto& c : pool) {
                        double s = word_score(counts, c.w, opt.default_score);
                        if (s < best_s || (s == best_s && c.w < best->w)) {
                            best = &c;
                            best_s = s;
                        }
                    }
                    kept = {{best->w, 1.0}};
                }
                pool = std::move(kept);
            }
            double total = 0.0;
            for (const auto& c : pool) total += c.weight;

            double inner = 0.0;
            std::vector<Token> perturbed = ex.tokens;
            for (const auto& c : pool) {
                perturbed[i] = c.w;
                inner += (c.weight / total) * f.predict(perturbed);
            }
            te_sum += base - inner;
        }
        if (present) ++n_sentences;
    }
    if (n_sentences < opt.min_support || n_occurrences == 0) return std::nullopt;
    return WordResult{te_sum / static_cast<double>(n_occurrences), n_occurrences,
                      n_sentences};
}

}  // namespace oracle
