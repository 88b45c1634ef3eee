#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "wordcause/corpus.hpp"
#include "wordcause/error.hpp"
#include "wordcause/rng.hpp"
#include "wordcause/token.hpp"

namespace wordcause {

// Recipe for a corpus with planted causal and spuriously-correlated words.
// Toxic sentences carry one causal word plus neutral fillers and, with
// probability cooccur_rate, one spurious word. Non-toxic sentences carry
// fillers and, with probability spurious_in_nontoxic_prob, one spurious
// word; never a causal word. The label is causal-word presence, optionally
// flipped with probability label_noise.
struct SynthSpec {
    std::size_t n_sentences = 1000;
    std::vector<Token> causal_lexicon;
    std::vector<Token> spurious_lexicon;
    std::vector<Token> neutral_lexicon;
    double cooccur_rate = 0.8;              // rho
    double spurious_in_nontoxic_prob = 0.5;
    double toxic_fraction = 0.3;
    std::pair<std::size_t, std::size_t> length_range{4, 10};
    double label_noise = 0.0;
    std::uint64_t seed = 1;

    void validate() const {
        if (n_sentences == 0) throw ConfigError("n_sentences must be positive");
        if (causal_lexicon.empty() || spurious_lexicon.empty() ||
            neutral_lexicon.empty()) {
            throw ConfigError("lexicons must be non-empty");
        }
        std::unordered_set<Token> seen;
        for (const auto* lex :
             {&causal_lexicon, &spurious_lexicon, &neutral_lexicon}) {
            for (const auto& w : *lex) {
                if (!seen.insert(w).second) {
                    throw ConfigError("lexicons must be pairwise disjoint: '" +
                                      w.text + "' repeats");
                }
            }
        }
        if (length_range.first < 2 || length_range.second < length_range.first) {
            throw ConfigError(
                "length_range infeasible: need min >= 2 (one causal plus one "
                "spurious slot) and min <= max");
        }
        if (!(toxic_fraction > 0.0 && toxic_fraction < 1.0)) {
            throw ConfigError("toxic_fraction must be in (0,1)");
        }
        for (double p : {cooccur_rate, spurious_in_nontoxic_prob, label_noise}) {
            if (p < 0.0 || p > 1.0) throw ConfigError("rates must be in [0,1]");
        }
    }

    nlohmann::json to_json() const {
        auto lex = [](const std::vector<Token>& v) {
            nlohmann::json a = nlohmann::json::array();
            for (const auto& w : v) a.push_back(w.text);
            return a;
        };
        return {{"n_sentences", n_sentences},
                {"causal", lex(causal_lexicon)},
                {"spurious", lex(spurious_lexicon)},
                {"neutral", lex(neutral_lexicon)},
                {"cooccur_rate", cooccur_rate},
                {"spurious_in_nontoxic_prob", spurious_in_nontoxic_prob},
                {"toxic_fraction", toxic_fraction},
                {"length_range", {length_range.first, length_range.second}},
                {"label_noise", label_noise},
                {"seed", seed}};
    }

    // Lexicons accept either an explicit word array or an integer count,
    // in which case words are generated ("causal01", ...).
    static SynthSpec from_json(const nlohmann::json& j) {
        SynthSpec s;
        auto lex = [&](const char* key, const char* prefix) {
            std::vector<Token> out;
            if (!j.contains(key)) throw ConfigError(std::string("missing lexicon: ") + key);
            const auto& v = j.at(key);
            if (v.is_number_unsigned() || v.is_number_integer()) {
                auto n = v.get<std::size_t>();
                for (std::size_t i = 0; i < n; ++i) {
                    char buf[32];
                    std::snprintf(buf, sizeof buf, "%s%02zu", prefix, i);
                    out.emplace_back(std::string(buf));
                }
            } else {
                for (const auto& w : v) out.emplace_back(w.get<std::string>());
            }
            return out;
        };
        s.causal_lexicon = lex("causal", "causal");
        s.spurious_lexicon = lex("spurious", "spur");
        s.neutral_lexicon = lex("neutral", "filler");
        if (j.contains("n_sentences")) s.n_sentences = j["n_sentences"].get<std::size_t>();
        if (j.contains("cooccur_rate")) s.cooccur_rate = j["cooccur_rate"].get<double>();
        if (j.contains("spurious_in_nontoxic_prob"))
            s.spurious_in_nontoxic_prob = j["spurious_in_nontoxic_prob"].get<double>();
        if (j.contains("toxic_fraction")) s.toxic_fraction = j["toxic_fraction"].get<double>();
        if (j.contains("length_range")) {
            s.length_range = {j["length_range"][0].get<std::size_t>(),
                              j["length_range"][1].get<std::size_t>()};
        }
        if (j.contains("label_noise")) s.label_noise = j["label_noise"].get<double>();
        if (j.contains("seed")) s.seed = j["seed"].get<std::uint64_t>();
        return s;
    }
};

inline std::vector<Token> make_lexicon(const std::string& prefix, std::size_t n) {
    std::vector<Token> out;
    for (std::size_t i = 0; i < n; ++i) {
        char buf[48];
        std::snprintf(buf, sizeof buf, "%s%02zu", prefix.c_str(), i);
        out.emplace_back(std::string(buf));
    }
    return out;
}

inline Dataset generate_synthetic(const SynthSpec& spec) {
    spec.validate();
    const std::size_t n = spec.n_sentences;
    auto n_toxic = static_cast<std::size_t>(
        std::llround(spec.toxic_fraction * static_cast<double>(n)));
    n_toxic = std::min(std::max<std::size_t>(n_toxic, 1), n - 1);

    std::vector<int> toxic(n, 0);
    std::fill(toxic.begin(), toxic.begin() + static_cast<long>(n_toxic), 1);
    RngStream order_rng(derive_seed(spec.seed, "synth", "order"));
    order_rng.shuffle(toxic);

    Dataset d;
    d.name = "synthetic";
    d.examples.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        RngStream rng(derive_seed(spec.seed, "synth", "sentence", i));
        std::size_t len = rng.next_in(spec.length_range.first, spec.length_range.second);
        std::vector<Token> toks;
        toks.reserve(len);
        if (toxic[i]) {
            toks.push_back(spec.causal_lexicon[rng.next_below(spec.causal_lexicon.size())]);
            if (rng.next_bernoulli(spec.cooccur_rate)) {
                toks.push_back(spec.spurious_lexicon[rng.next_below(spec.spurious_lexicon.size())]);
            }
        } else if (rng.next_bernoulli(spec.spurious_in_nontoxic_prob)) {
            toks.push_back(spec.spurious_lexicon[rng.next_below(spec.spurious_lexicon.size())]);
        }
        while (toks.size() < len) {
            toks.push_back(spec.neutral_lexicon[rng.next_below(spec.neutral_lexicon.size())]);
        }
        rng.shuffle(toks);
        int label = toxic[i];
        if (spec.label_noise > 0.0 && rng.next_bernoulli(spec.label_noise)) {
            label = 1 - label;
        }
        LabeledExample ex;
        char buf[24];
        std::snprintf(buf, sizeof buf, "synth-%06zu", i);
        ex.id = buf;
        ex.tokens = std::move(toks);
        ex.raw = join(ex.tokens);
        ex.label = label;
        d.examples.push_back(std::move(ex));
    }
    d.provenance = {{"source", "generate_synthetic"},
                    {"adapter", "synth"},
                    {"spec", spec.to_json()}};
    return d;
}

}  // namespace wordcause
