#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "wordcause/error.hpp"
#include "wordcause/rng.hpp"
#include "wordcause/token.hpp"

namespace wordcause {

struct LabeledExample {
    std::string id;
    std::string raw;
    std::vector<Token> tokens;  // tokenize(raw) under the dataset's tokenizer
    int label = 0;              // binary attribute, 0 or 1
};

struct Dataset {
    std::string name;
    std::vector<LabeledExample> examples;
    nlohmann::json provenance;  // source, adapter, tokenizer config, seed

    std::size_t size() const { return examples.size(); }
    bool empty() const { return examples.empty(); }
};

inline nlohmann::json tokenizer_config_json(const TokenizerConfig& cfg) {
    return {{"lowercase", cfg.lowercase},
            {"strip_punctuation", cfg.strip_punctuation},
            {"stopwords", cfg.stopwords}};
}

// Per-word sentence-membership counts over a dataset. doc_freq counts
// sentences containing the word (a repeated word counts once); attr_freq
// counts the label-1 subset. Only words meeting min_count are retained.
struct Vocabulary {
    std::vector<Token> words;  // retained, sorted byte-wise
    std::unordered_map<Token, std::uint64_t> doc_freq;   // retained words only
    std::unordered_map<Token, std::uint64_t> attr_freq;  // retained words only
    std::uint64_t min_count = 1;

    std::size_t size() const { return words.size(); }

    bool contains(const Token& w) const { return doc_freq.contains(w); }

    std::uint64_t doc(const Token& w) const {
        auto it = doc_freq.find(w);
        return it == doc_freq.end() ? 0 : it->second;
    }

    std::uint64_t attr(const Token& w) const {
        auto it = attr_freq.find(w);
        return it == attr_freq.end() ? 0 : it->second;
    }

    // Binds models and tables to one exact vocabulary (words + counts).
    std::string hash() const {
        std::uint64_t h = fnv1a64("wordcause-vocab-v1");
        h = mix_seed(h, min_count);
        for (const auto& w : words) {
            h = mix_seed(h, w.text);
            h = mix_seed(h, doc(w));
            h = mix_seed(h, attr(w));
        }
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx",
                      static_cast<unsigned long long>(h));
        return std::string(buf);
    }

    nlohmann::json to_json() const {
        nlohmann::json jwords = nlohmann::json::array();
        nlohmann::json jdoc = nlohmann::json::array();
        nlohmann::json jattr = nlohmann::json::array();
        for (const auto& w : words) {
            jwords.push_back(w.text);
            jdoc.push_back(doc(w));
            jattr.push_back(attr(w));
        }
        return {{"min_count", min_count},
                {"words", jwords},
                {"doc_freq", jdoc},
                {"attr_freq", jattr}};
    }

    static Vocabulary from_json(const nlohmann::json& j) {
        Vocabulary v;
        v.min_count = j.at("min_count").get<std::uint64_t>();
        const auto& jwords = j.at("words");
        const auto& jdoc = j.at("doc_freq");
        const auto& jattr = j.at("attr_freq");
        if (jwords.size() != jdoc.size() || jwords.size() != jattr.size()) {
            throw DataError("vocabulary arrays have mismatched lengths");
        }
        for (std::size_t i = 0; i < jwords.size(); ++i) {
            Token w(jwords[i].get<std::string>());
            v.words.push_back(w);
            v.doc_freq[w] = jdoc[i].get<std::uint64_t>();
            v.attr_freq[w] = jattr[i].get<std::uint64_t>();
        }
        return v;
    }
};

inline Vocabulary build_vocabulary(const Dataset& dataset,
                                   std::uint64_t min_count = 1) {
    if (min_count < 1) throw ConfigError("min_count must be >= 1");
    std::unordered_map<Token, std::uint64_t> doc, attr;
    std::unordered_set<Token> seen;
    for (const auto& ex : dataset.examples) {
        seen.clear();
        for (const auto& t : ex.tokens) seen.insert(t);
        for (const auto& t : seen) {
            ++doc[t];
            if (ex.label == 1) ++attr[t];
            else attr.try_emplace(t, 0);
        }
    }
    Vocabulary v;
    v.min_count = min_count;
    for (auto& [w, n] : doc) {
        if (n >= min_count) {
            v.words.push_back(w);
            v.doc_freq[w] = n;
            v.attr_freq[w] = attr[w];
        }
    }
    std::sort(v.words.begin(), v.words.end());
    return v;
}

// Stratified split: each class is shuffled with its own derived stream and
// cut at round(fraction * class size). Original example order is preserved
// within each side.
inline std::pair<Dataset, Dataset> split(const Dataset& dataset,
                                         double train_fraction,
                                         std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw ConfigError("train_fraction must be in (0,1)");
    }
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < dataset.examples.size(); ++i) {
        by_class[dataset.examples[i].label].push_back(i);
    }
    std::vector<bool> in_train(dataset.examples.size(), false);
    for (auto& [label, idx] : by_class) {
        auto n_train = static_cast<std::size_t>(
            std::llround(train_fraction * static_cast<double>(idx.size())));
        if (n_train == 0 || n_train == idx.size()) {
            throw DataError("class too small to stratify (label " +
                            std::to_string(label) + ", n=" +
                            std::to_string(idx.size()) + ")");
        }
        RngStream rng(derive_seed(seed, "split", static_cast<std::uint64_t>(label)));
        rng.shuffle(idx);
        for (std::size_t k = 0; k < n_train; ++k) in_train[idx[k]] = true;
    }
    Dataset train, eval;
    train.name = dataset.name + "-train";
    eval.name = dataset.name + "-eval";
    for (std::size_t i = 0; i < dataset.examples.size(); ++i) {
        (in_train[i] ? train : eval).examples.push_back(dataset.examples[i]);
    }
    nlohmann::json prov = dataset.provenance;
    prov["split"] = {{"train_fraction", train_fraction}, {"seed", seed}};
    prov["split"]["side"] = "train";
    train.provenance = prov;
    prov["split"]["side"] = "eval";
    eval.provenance = prov;
    return {std::move(train), std::move(eval)};
}

}  // namespace wordcause
