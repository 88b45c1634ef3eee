#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "wordcause/corpus.hpp"
#include "wordcause/error.hpp"
#include "wordcause/estimator.hpp"
#include "wordcause/replace.hpp"
#include "wordcause/rng.hpp"

namespace wordcause {

struct AteConfig {
    std::size_t min_support = 5;  // sentences containing the word
    std::size_t exact_enumeration_threshold = 512;
    std::size_t mc_samples = 16;
    std::uint64_t seed = 0;
    double default_ate = 0.0;
};

struct AteEntry {
    Token word;
    double ate = 0.0;          // in [-1, 1]
    std::size_t support = 0;   // (sentence, occurrence) contexts averaged
    double mc_stderr = 0.0;    // 0 under full enumeration
    std::size_t n_fallbacks = 0;
};

// Persisted word -> score lookup. Metadata binds the table to exactly one
// estimator and replacement configuration.
struct AteTable {
    std::map<Token, AteEntry> entries;
    double default_ate = 0.0;
    nlohmann::json metadata;

    const AteEntry* find(const Token& w) const {
        auto it = entries.find(w);
        return it == entries.end() ? nullptr : &it->second;
    }

    double ate_of(const Token& w) const {
        const AteEntry* e = find(w);
        return e ? e->ate : default_ate;
    }
};

// f(s) - f(s') where s' replaces only position i.
inline double treatment_effect(const AttributeEstimator& estimator,
                               const std::vector<Token>& tokens, std::size_t i,
                               const Token& replacement) {
    if (i >= tokens.size()) {
        throw ConfigError("treatment_effect position out of range");
    }
    if (replacement == tokens[i]) {
        throw ConfigError("treatment_effect replacement equals the original word");
    }
    double base = estimator.predict(tokens);
    std::vector<Token> perturbed = tokens;
    perturbed[i] = replacement;
    return base - estimator.predict(perturbed);
}

// Build timestamp in UTC. Honors SOURCE_DATE_EPOCH so reproducibility checks
// can pin it.
inline std::string now_iso8601() {
    std::time_t t;
    if (const char* env = std::getenv("SOURCE_DATE_EPOCH")) {
        t = static_cast<std::time_t>(std::strtoll(env, nullptr, 10));
    } else {
        t = std::time(nullptr);
    }
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

namespace detail {

struct InnerMean {
    double mean = 0.0;
    double var_of_mean = 0.0;  // 0 for exact sets
};

// Expectation of f over the candidate distribution at position i. For
// Monte-Carlo sets the variance of the sample mean is estimated from the
// draws themselves.
inline InnerMean inner_replacement_mean(const AttributeEstimator& estimator,
                                        std::vector<Token>& scratch,
                                        std::size_t i, const CandidateSet& cs) {
    InnerMean out;
    const Token original = scratch[i];
    std::vector<double> values;
    values.reserve(cs.words.size());
    for (const auto& ww : cs.words) {
        scratch[i] = ww.word;
        double f = estimator.predict(scratch);
        values.push_back(f);
        out.mean += ww.weight * f;
    }
    scratch[i] = original;
    if (!cs.exact && cs.n_draws >= 2) {
        double k = static_cast<double>(cs.n_draws);
        double ss = 0.0;
        for (std::size_t j = 0; j < values.size(); ++j) {
            double count = cs.words[j].weight * k;
            double d = values[j] - out.mean;
            ss += count * d * d;
        }
        out.var_of_mean = ss / (k - 1.0) / k;
    }
    return out;
}

struct Occurrence {
    std::size_t example = 0;
    std::size_t position = 0;
};

inline AteEntry word_ate_over(const AttributeEstimator& estimator,
                              const Dataset& dataset,
                              const ReplacementModel& replacer,
                              const Token& word,
                              const std::vector<Occurrence>& occurrences,
                              const AteConfig& cfg) {
    AteEntry entry;
    entry.word = word;
    entry.support = occurrences.size();
    double te_sum = 0.0;
    double var_sum = 0.0;
    std::vector<Token> scratch;
    for (const auto& occ : occurrences) {
        const LabeledExample& ex = dataset.examples[occ.example];
        scratch = ex.tokens;
        double base = estimator.predict(scratch);
        RngStream rng(derive_seed(cfg.seed, "ate", word.text, ex.id,
                                  static_cast<std::uint64_t>(occ.position)));
        auto support = replacer.support_size(scratch, occ.position);
        CandidateSet cs =
            (support && *support <= cfg.exact_enumeration_threshold)
                ? replacer.enumerate(scratch, occ.position)
                : replacer.sample(scratch, occ.position, cfg.mc_samples, rng);
        InnerMean inner = inner_replacement_mean(estimator, scratch, occ.position, cs);
        te_sum += base - inner.mean;
        var_sum += inner.var_of_mean;
        entry.n_fallbacks += cs.n_fallbacks;
    }
    double m = static_cast<double>(occurrences.size());
    entry.ate = te_sum / m;
    entry.mc_stderr = std::sqrt(var_sum) / m;
    if (!(entry.ate >= -1.0 - 1e-9 && entry.ate <= 1.0 + 1e-9)) {
        throw InternalError("word effect for '" + word.text +
                            "' left [-1,1]: " + std::to_string(entry.ate));
    }
    return entry;
}

inline std::vector<Occurrence> find_occurrences(const Dataset& dataset,
                                                const Token& word,
                                                std::size_t* n_sentences) {
    std::vector<Occurrence> occ;
    std::size_t sentences = 0;
    for (std::size_t e = 0; e < dataset.examples.size(); ++e) {
        bool present = false;
        const auto& toks = dataset.examples[e].tokens;
        for (std::size_t i = 0; i < toks.size(); ++i) {
            if (toks[i] == word) {
                occ.push_back({e, i});
                present = true;
            }
        }
        if (present) ++sentences;
    }
    if (n_sentences) *n_sentences = sentences;
    return occ;
}

}  // namespace detail

// Average treatment effect of one word: the outer mean runs uniformly over
// every occurrence of the word in every sentence containing it; the inner
// expectation runs over the replacer's distribution, fully enumerated when
// the candidate support fits exact_enumeration_threshold and Monte-Carlo
// sampled (mc_samples draws, a stream per occurrence) otherwise.
inline std::optional<AteEntry> try_word_ate(const AttributeEstimator& estimator,
                                            const Dataset& dataset,
                                            const ReplacementModel& replacer,
                                            const Token& word,
                                            const AteConfig& cfg = {}) {
    if (cfg.mc_samples == 0) throw ConfigError("mc_samples must be positive");
    std::size_t sentences = 0;
    auto occ = detail::find_occurrences(dataset, word, &sentences);
    if (sentences < cfg.min_support) return std::nullopt;
    return detail::word_ate_over(estimator, dataset, replacer, word, occ, cfg);
}

inline AteEntry word_ate(const AttributeEstimator& estimator,
                         const Dataset& dataset,
                         const ReplacementModel& replacer, const Token& word,
                         const AteConfig& cfg = {}) {
    auto entry = try_word_ate(estimator, dataset, replacer, word, cfg);
    if (!entry) {
        throw DataError("insufficient support for word '" + word.text + "' (need " +
                        std::to_string(cfg.min_support) + " sentences)");
    }
    return *entry;
}

struct AteBuildReport {
    std::size_t n_scored = 0;
    std::size_t n_fallbacks = 0;
    std::vector<Token> omitted;  // below min_support

    nlohmann::json to_json() const {
        nlohmann::json skipped = nlohmann::json::array();
        for (const auto& w : omitted) skipped.push_back(w.text);
        return {{"n_scored", n_scored},
                {"n_fallbacks", n_fallbacks},
                {"omitted", skipped}};
    }
};

// One entry per retained vocabulary word meeting min_support. Deterministic
// for a given seed regardless of thread count: every occurrence derives its
// own rng stream from (seed, word, sentence id, position).
inline AteTable build_ate_table(const AttributeEstimator& estimator,
                                const Dataset& dataset, const Vocabulary& vocab,
                                const ReplacementModel& replacer,
                                const AteConfig& cfg = {},
                                AteBuildReport* report = nullptr,
                                unsigned threads = 0) {
    if (estimator.vocab_hash() != vocab.hash()) {
        throw ConfigError("estimator/vocabulary mismatch: model was trained on " +
                          estimator.vocab_hash() + ", table build uses " +
                          vocab.hash());
    }
    if (dataset.empty()) throw DataError("cannot build a table on an empty dataset");
    if (cfg.mc_samples == 0) throw ConfigError("mc_samples must be positive");

    // Per-word occurrence index in one corpus pass.
    std::unordered_map<Token, std::vector<detail::Occurrence>> occ_index;
    std::unordered_map<Token, std::size_t> sentence_count;
    std::unordered_set<Token> seen;
    for (std::size_t e = 0; e < dataset.examples.size(); ++e) {
        const auto& toks = dataset.examples[e].tokens;
        seen.clear();
        for (std::size_t i = 0; i < toks.size(); ++i) {
            if (!vocab.contains(toks[i])) continue;
            occ_index[toks[i]].push_back({e, i});
            seen.insert(toks[i]);
        }
        for (const auto& t : seen) ++sentence_count[t];
    }

    std::vector<std::optional<AteEntry>> results(vocab.words.size());
    std::vector<bool> omitted(vocab.words.size(), false);
    auto worker = [&](std::size_t begin, std::size_t step) {
        for (std::size_t w = begin; w < vocab.words.size(); w += step) {
            const Token& word = vocab.words[w];
            auto it = occ_index.find(word);
            std::size_t sentences =
                sentence_count.contains(word) ? sentence_count[word] : 0;
            if (it == occ_index.end() || sentences < cfg.min_support) {
                omitted[w] = true;
                continue;
            }
            results[w] = detail::word_ate_over(estimator, dataset, replacer,
                                               word, it->second, cfg);
        }
    };
    unsigned n_threads = threads ? threads : std::thread::hardware_concurrency();
    n_threads = std::max(1u, std::min<unsigned>(n_threads, 64));
    if (n_threads == 1 || vocab.words.size() < 2) {
        worker(0, 1);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_threads);
        for (unsigned t = 0; t < n_threads; ++t) {
            pool.emplace_back(worker, t, n_threads);
        }
        for (auto& t : pool) t.join();
    }

    AteTable table;
    table.default_ate = cfg.default_ate;
    AteBuildReport rep;
    for (std::size_t w = 0; w < vocab.words.size(); ++w) {
        if (results[w]) {
            rep.n_fallbacks += results[w]->n_fallbacks;
            table.entries[vocab.words[w]] = std::move(*results[w]);
        } else if (omitted[w]) {
            rep.omitted.push_back(vocab.words[w]);
        }
    }
    rep.n_scored = table.entries.size();
    table.metadata = {{"created_at", now_iso8601()},
                      {"estimator_name", estimator.name()},
                      {"estimator_kind", estimator.kind()},
                      {"estimator_hash", estimator.fingerprint()},
                      {"vocab_hash", vocab.hash()},
                      {"replacer", replacer.name()},
                      {"dataset", {{"name", dataset.name},
                                   {"n", dataset.size()},
                                   {"provenance", dataset.provenance}}},
                      {"config", {{"min_support", cfg.min_support},
                                  {"exact_enumeration_threshold",
                                   cfg.exact_enumeration_threshold},
                                  {"mc_samples", cfg.mc_samples},
                                  {"seed", cfg.seed},
                                  {"default_ate", cfg.default_ate}}}};
    if (report) *report = std::move(rep);
    return table;
}

constexpr double kInfiniteOrder = std::numeric_limits<double>::infinity();

struct SentenceScore {
    double value = 0.0;
    double p = kInfiniteOrder;
    std::optional<Token> argmax_word;                 // p = inf only
    std::vector<std::pair<Token, double>> per_word;   // raw table scores used
};

// Aggregates per-word table scores, clamped at zero, into a sentence score:
// the max (with argmax, earliest position on ties) for p = inf, the
// unnormalized Lp norm for finite p > 0. Words absent from the table score
// default_ate; the empty sentence scores 0.
inline SentenceScore sentence_score(const AteTable& table,
                                    const std::vector<Token>& tokens, double p) {
    if (std::isnan(p) || p <= 0.0) {
        throw ConfigError("aggregation order p must be positive (or inf)");
    }
    SentenceScore out;
    out.p = p;
    if (tokens.empty()) return out;
    out.per_word.reserve(tokens.size());
    for (const auto& t : tokens) out.per_word.emplace_back(t, table.ate_of(t));
    if (std::isinf(p)) {
        std::size_t best = 0;
        double best_score = std::max(out.per_word[0].second, 0.0);
        for (std::size_t i = 1; i < out.per_word.size(); ++i) {
            double s = std::max(out.per_word[i].second, 0.0);
            if (s > best_score) {
                best = i;
                best_score = s;
            }
        }
        out.value = best_score;
        out.argmax_word = tokens[best];
        return out;
    }
    double peak = 0.0;
    for (const auto& [t, raw] : out.per_word) peak = std::max(peak, std::max(raw, 0.0));
    if (peak == 0.0) return out;
    double sum = 0.0;  // scaled by the peak so large p cannot overflow
    for (const auto& [t, raw] : out.per_word) {
        double c = std::max(raw, 0.0) / peak;
        if (c > 0.0) sum += std::pow(c, p);
    }
    out.value = peak * std::pow(sum, 1.0 / p);
    return out;
}

// Left-to-right recursion max(acc, score(w_t)) from 0. Exists to be checked
// against sentence_score(..., inf).
inline double recursive_score_check(const AteTable& table,
                                    const std::vector<Token>& tokens) {
    double acc = 0.0;
    for (const auto& t : tokens) acc = std::max(acc, table.ate_of(t));
    return acc;
}

}  // namespace wordcause
