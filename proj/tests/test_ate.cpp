#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "support/oracle.hpp"
#include "support/testutil.hpp"
#include "wordcause/ate.hpp"
#include "wordcause/estimator.hpp"
#include "wordcause/naive_bayes.hpp"
#include "wordcause/synth.hpp"
#include "wordcause/table_io.hpp"

using namespace wordcause;
using testutil::ScopedTempDir;
using testutil::slurp;
using testutil::spit;
using testutil::toy_dataset;

namespace {

Dataset toy() { return toy_dataset({{"bad dog", 1}, {"good dog", 0}}); }

struct ToyWorld {
    Dataset d = toy();
    Vocabulary vocab;
    MaxWordSentenceModel est;
    ToyWorld() : vocab(build_vocabulary(d, 1)), est(vocab, 0.0) {}
};

// predict == c everywhere
class ConstantEstimator final : public AttributeEstimator {
public:
    explicit ConstantEstimator(double c, std::string vocab_hash)
        : c_(c), vocab_hash_(std::move(vocab_hash)) {}
    std::string name() const override { return "Const"; }
    std::string kind() const override { return "const"; }
    std::string vocab_hash() const override { return vocab_hash_; }
    double predict(std::span<const Token>) const override { return c_; }
    nlohmann::json to_json() const override { return {{"kind", "const"}, {"c", c_}}; }
    using AttributeEstimator::predict;

private:
    double c_;
    std::string vocab_hash_;
};

AteTable table_from(std::initializer_list<std::pair<const char*, double>> items,
                    double default_ate = 0.0) {
    AteTable t;
    t.default_ate = default_ate;
    for (const auto& [w, a] : items) {
        AteEntry e;
        e.word = Token(w);
        e.ate = a;
        e.support = 1;
        t.entries[e.word] = e;
    }
    return t;
}

}  // namespace

TEST_CASE("treatment effect is the prediction difference under one swap") {
    ToyWorld w;
    std::vector<Token> bad_dog{"bad", "dog"};
    std::vector<Token> good_dog{"good", "dog"};
    REQUIRE(treatment_effect(w.est, bad_dog, 0, Token("good")) == 0.5);
    REQUIRE(treatment_effect(w.est, good_dog, 1, Token("bad")) == -0.5);
    // swapping in a word with the same score is a no-op
    auto d2 = toy_dataset({{"bad dog", 1}, {"good dog", 0}, {"evil dog", 1}});
    MaxWordSentenceModel est2(build_vocabulary(d2, 1), 0.0);
    REQUIRE(treatment_effect(est2, bad_dog, 0, Token("evil")) == 0.0);

    REQUIRE_THROWS_AS(treatment_effect(w.est, bad_dog, 5, Token("x")), ConfigError);
    REQUIRE_THROWS_AS(treatment_effect(w.est, bad_dog, 0, Token("bad")), ConfigError);
}

TEST_CASE("word effects on the toy corpus match the hand enumeration") {
    ToyWorld w;
    UniformReplacer replacer(w.vocab);
    AteConfig cfg;
    cfg.min_support = 1;

    auto bad = word_ate(w.est, w.d, replacer, Token("bad"), cfg);
    REQUIRE(bad.ate == Catch::Approx(0.5).margin(1e-15));
    REQUIRE(bad.support == 1);
    REQUIRE(bad.mc_stderr == 0.0);

    auto dog = word_ate(w.est, w.d, replacer, Token("dog"), cfg);
    REQUIRE(dog.ate == Catch::Approx(0.0).margin(1e-15));
    REQUIRE(dog.support == 2);

    auto good = word_ate(w.est, w.d, replacer, Token("good"), cfg);
    REQUIRE(good.ate == Catch::Approx(-0.25).margin(1e-15));

    // a constant estimator nulls every effect
    ConstantEstimator flat(0.7, w.vocab.hash());
    for (const char* word : {"bad", "good", "dog"}) {
        REQUIRE(word_ate(flat, w.d, replacer, Token(word), cfg).ate == 0.0);
    }

    AteConfig strict;
    strict.min_support = 3;
    REQUIRE_THROWS_WITH(word_ate(w.est, w.d, replacer, Token("dog"), strict),
                        Catch::Matchers::ContainsSubstring("insufficient support"));
}

TEST_CASE("word effects match the brute-force oracle on the toy corpus") {
    ToyWorld w;
    UniformReplacer replacer(w.vocab);
    AteConfig cfg;
    cfg.min_support = 1;
    for (const char* word : {"bad", "good", "dog"}) {
        auto mine = word_ate(w.est, w.d, replacer, Token(word), cfg);
        auto ref = oracle::word_ate(w.est, w.d, w.vocab, Token(word));
        REQUIRE(ref.has_value());
        REQUIRE(mine.ate == Catch::Approx(ref->ate).margin(1e-12));
        REQUIRE(mine.support == ref->n_occurrences);
    }
}

TEST_CASE("table build covers retained words and respects min_support") {
    ToyWorld w;
    UniformReplacer replacer(w.vocab);
    AteConfig cfg;
    cfg.min_support = 1;
    AteBuildReport report;
    auto table = build_ate_table(w.est, w.d, w.vocab, replacer, cfg, &report);
    REQUIRE(table.entries.size() == 3);
    REQUIRE(table.ate_of(Token("bad")) == Catch::Approx(0.5));
    REQUIRE(table.ate_of(Token("dog")) == Catch::Approx(0.0).margin(1e-15));
    REQUIRE(table.ate_of(Token("good")) == Catch::Approx(-0.25));
    REQUIRE(table.ate_of(Token("absent")) == 0.0);
    REQUIRE(report.n_scored == 3);

    AteConfig gated;
    gated.min_support = 2;
    AteBuildReport report2;
    auto table2 = build_ate_table(w.est, w.d, w.vocab, replacer, gated, &report2);
    REQUIRE(table2.entries.size() == 1);
    REQUIRE(table2.find(Token("dog")) != nullptr);
    REQUIRE(report2.omitted.size() == 2);

    ConstantEstimator mismatched(0.5, "deadbeefdeadbeef");
    REQUIRE_THROWS_WITH(build_ate_table(mismatched, w.d, w.vocab, replacer, cfg),
                        Catch::Matchers::ContainsSubstring("mismatch"));
}

TEST_CASE("table build is deterministic across thread counts") {
    SynthSpec spec;
    spec.n_sentences = 300;
    spec.causal_lexicon = make_lexicon("c", 5);
    spec.spurious_lexicon = make_lexicon("s", 5);
    spec.neutral_lexicon = make_lexicon("n", 15);
    spec.seed = 91;
    auto d = generate_synthetic(spec);
    auto vocab = build_vocabulary(d, 1);
    MaxWordSentenceModel est(vocab, 0.0);
    auto wm = train_word_model(d, 1, 0.0);
    FilteredReplacer replacer(std::make_unique<UniformReplacer>(vocab), wm, 8);
    AteConfig cfg;
    cfg.min_support = 2;
    cfg.seed = 17;
    cfg.exact_enumeration_threshold = 4;  // forces the Monte-Carlo path
    cfg.mc_samples = 8;

    auto t1 = build_ate_table(est, d, vocab, replacer, cfg, nullptr, 1);
    auto t4 = build_ate_table(est, d, vocab, replacer, cfg, nullptr, 4);
    REQUIRE(t1.entries.size() == t4.entries.size());
    for (const auto& [word, e1] : t1.entries) {
        const AteEntry* e4 = t4.find(word);
        REQUIRE(e4 != nullptr);
        REQUIRE(e1.ate == e4->ate);  // identical streams, identical bits
        REQUIRE(e1.mc_stderr == e4->mc_stderr);
        REQUIRE(e1.n_fallbacks == e4->n_fallbacks);
    }
}

TEST_CASE("table files round-trip and rebuilds are byte-identical") {
    ToyWorld w;
    UniformReplacer replacer(w.vocab);
    AteConfig cfg;
    cfg.min_support = 1;
    ScopedTempDir tmp;
    setenv("SOURCE_DATE_EPOCH", "1700000000", 1);
    auto a = build_ate_table(w.est, w.d, w.vocab, replacer, cfg);
    save_table(a, tmp.file("a.json"));
    auto b = build_ate_table(w.est, w.d, w.vocab, replacer, cfg);
    save_table(b, tmp.file("b.json"));
    unsetenv("SOURCE_DATE_EPOCH");
    REQUIRE(slurp(tmp.file("a.json")) == slurp(tmp.file("b.json")));

    auto loaded = load_table(tmp.file("a.json"));
    REQUIRE(loaded.default_ate == a.default_ate);
    REQUIRE(loaded.entries.size() == a.entries.size());
    for (const auto& [word, e] : a.entries) {
        const AteEntry* l = loaded.find(word);
        REQUIRE(l != nullptr);
        REQUIRE(l->ate == e.ate);
        REQUIRE(l->support == e.support);
        REQUIRE(l->mc_stderr == e.mc_stderr);
        REQUIRE(l->n_fallbacks == e.n_fallbacks);
    }

    spit(tmp.file("junk.json"), "{}");
    REQUIRE_THROWS_WITH(load_table(tmp.file("junk.json")),
                        Catch::Matchers::ContainsSubstring("unrecognized table header"));
}

TEST_CASE("csv export preserves scores to 12 significant digits") {
    ToyWorld w;
    UniformReplacer replacer(w.vocab);
    AteConfig cfg;
    cfg.min_support = 1;
    auto table = build_ate_table(w.est, w.d, w.vocab, replacer, cfg);
    // plant an awkward value
    table.entries[Token("bad")].ate = 0.123456789012345;
    ScopedTempDir tmp;
    export_table_csv(table, tmp.file("t.csv"));
    auto back = import_table_csv(tmp.file("t.csv"));
    for (const auto& [word, e] : table.entries) {
        const AteEntry* r = back.find(word);
        REQUIRE(r != nullptr);
        REQUIRE(r->ate == Catch::Approx(e.ate).epsilon(1e-12));
        REQUIRE(r->support == e.support);
    }
}

TEST_CASE("table/estimator provenance is enforced") {
    ToyWorld w;
    UniformReplacer replacer(w.vocab);
    AteConfig cfg;
    cfg.min_support = 1;
    auto table = build_ate_table(w.est, w.d, w.vocab, replacer, cfg);
    REQUIRE_NOTHROW(require_table_matches(table, w.est));
    ConstantEstimator other(0.5, w.vocab.hash());
    REQUIRE_THROWS_AS(require_table_matches(table, other), ConfigError);
}

TEST_CASE("sentence scores aggregate clamped word scores") {
    auto table = table_from({{"bad", 0.5}, {"dog", 0.0}});
    std::vector<Token> s{"bad", "dog"};

    auto inf = sentence_score(table, s, kInfiniteOrder);
    REQUIRE(inf.value == 0.5);
    REQUIRE(inf.argmax_word == Token("bad"));
    REQUIRE(inf.per_word.size() == 2);

    auto l1 = sentence_score(table, s, 1.0);
    REQUIRE(l1.value == Catch::Approx(0.5));

    std::vector<Token> dogs{"dog", "dog"};
    for (double p : {1.0, 2.0, 64.0}) {
        REQUIRE(sentence_score(table, dogs, p).value == 0.0);
    }
    REQUIRE(sentence_score(table, dogs, kInfiniteOrder).value == 0.0);

    auto empty = sentence_score(table, {}, kInfiniteOrder);
    REQUIRE(empty.value == 0.0);
    REQUIRE(!empty.argmax_word.has_value());

    REQUIRE_THROWS_AS(sentence_score(table, s, 0.0), ConfigError);
    REQUIRE_THROWS_AS(sentence_score(table, s, -2.0), ConfigError);

    // negative scores are clamped for aggregation but kept in per_word
    std::vector<Token> s2{"meh"};
    auto sc = sentence_score(table_from({{"meh", -0.4}}), s2, kInfiniteOrder);
    REQUIRE(sc.value == 0.0);
    REQUIRE(sc.per_word[0].second == -0.4);
}

TEST_CASE("recursive scoring equals the max aggregation") {
    auto table = table_from({{"bad", 0.5}, {"dog", 0.0}, {"meh", -0.3}});
    std::vector<Token> s{"bad", "dog"};
    REQUIRE(recursive_score_check(table, s) == 0.5);
    REQUIRE(recursive_score_check(table, {}) == 0.0);

    RngStream rng(3);
    std::vector<Token> pool{Token("bad"), Token("dog"), Token("meh"), Token("oov")};
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<Token> sent;
        for (std::size_t i = 0, n = rng.next_below(12); i < n; ++i) {
            sent.push_back(pool[rng.next_below(pool.size())]);
        }
        double rec = recursive_score_check(table, sent);
        double agg = sentence_score(table, sent, kInfiniteOrder).value;
        REQUIRE(rec == agg);
        // max is permutation-free
        std::vector<Token> shuffled = sent;
        rng.shuffle(shuffled);
        REQUIRE(sentence_score(table, shuffled, kInfiniteOrder).value == agg);
    }
}

TEST_CASE("threshold behavior and norm limits on fuzzed tables") {
    RngStream rng(29);
    for (int trial = 0; trial < 300; ++trial) {
        // random table over a small pool, random sentence, random threshold
        AteTable table;
        table.default_ate = 0.0;
        std::vector<Token> pool;
        std::size_t n_words = 2 + rng.next_below(10);
        for (std::size_t i = 0; i < n_words; ++i) {
            Token w("w" + std::to_string(i));
            pool.push_back(w);
            AteEntry e;
            e.word = w;
            e.ate = 2.0 * rng.next_unit() - 1.0;  // [-1, 1]
            e.support = 1;
            table.entries[w] = e;
        }
        pool.push_back(Token("oov"));
        std::vector<Token> sent;
        for (std::size_t i = 0, n = rng.next_below(20); i < n; ++i) {
            sent.push_back(pool[rng.next_below(pool.size())]);
        }
        double c = 0.02 + 0.98 * rng.next_unit();  // threshold in (0, 1]

        auto inf = sentence_score(table, sent, kInfiniteOrder);
        bool any_at_least_c = false;
        double max_clamped = 0.0;
        for (const auto& t : sent) {
            double a = table.ate_of(t);
            any_at_least_c = any_at_least_c || a >= c;
            max_clamped = std::max(max_clamped, std::max(a, 0.0));
        }
        if (any_at_least_c) {
            REQUIRE(inf.value >= c);
        } else {
            REQUIRE(inf.value < c);
        }

        // L64 stays within 0.05 of the max, and within the norm bounds
        auto l64 = sentence_score(table, sent, 64.0);
        REQUIRE(std::abs(l64.value - inf.value) <= 0.05);
        REQUIRE(l64.value >= inf.value - 1e-12);
        if (!sent.empty()) {
            double cap = std::pow(static_cast<double>(sent.size()), 1.0 / 64.0) *
                         max_clamped;
            REQUIRE(l64.value <= cap + 1e-12);
        }
        REQUIRE(inf.value >= 0.0);
        REQUIRE(inf.value <= 1.0);
    }
}

TEST_CASE("sampled inner means converge to the enumerated value") {
    SynthSpec spec;
    spec.n_sentences = 120;
    spec.causal_lexicon = make_lexicon("c", 4);
    spec.spurious_lexicon = make_lexicon("s", 4);
    spec.neutral_lexicon = make_lexicon("n", 10);
    spec.seed = 101;
    auto d = generate_synthetic(spec);
    auto vocab = build_vocabulary(d, 1);
    MaxWordSentenceModel est(vocab, 0.0);
    UniformReplacer replacer(vocab);

    // a handful of positions with genuinely varying replacement outcomes
    int checked = 0;
    RngStream pick(7);
    for (int attempt = 0; attempt < 200 && checked < 5; ++attempt) {
        const auto& ex = d.examples[pick.next_below(d.size())];
        std::size_t i = pick.next_below(ex.tokens.size());
        auto dist = replacer.enumerate(ex.tokens, i);
        double mu = 0.0, sigma2 = 0.0;
        std::vector<Token> scratch = ex.tokens;
        std::vector<double> values;
        for (const auto& ww : dist.words) {
            scratch[i] = ww.word;
            values.push_back(est.predict(scratch));
            mu += ww.weight * values.back();
        }
        for (std::size_t j = 0; j < values.size(); ++j) {
            sigma2 += dist.words[j].weight * (values[j] - mu) * (values[j] - mu);
        }
        if (sigma2 < 1e-4) continue;
        ++checked;

        const int reps = 200;
        for (std::size_t k : {4u, 16u, 64u}) {
            double sq_err = 0.0;
            for (int r = 0; r < reps; ++r) {
                RngStream rng(derive_seed(900 + attempt, k, r));
                auto draws = replacer.sample(ex.tokens, i, k, rng);
                double m = 0.0;
                for (const auto& ww : draws.words) {
                    scratch[i] = ww.word;
                    m += ww.weight * est.predict(scratch);
                }
                sq_err += (m - mu) * (m - mu);
            }
            double empirical = std::sqrt(sq_err / reps);
            double expected = std::sqrt(sigma2 / static_cast<double>(k));
            REQUIRE(empirical >= 0.5 * expected);
            REQUIRE(empirical <= 2.0 * expected);
        }
    }
    REQUIRE(checked == 5);
}

TEST_CASE("monte-carlo stderr lands near the true sampling error") {
    ToyWorld w;
    UniformReplacer replacer(w.vocab);
    AteConfig cfg;
    cfg.min_support = 1;
    cfg.exact_enumeration_threshold = 0;  // force sampling
    cfg.mc_samples = 64;
    cfg.seed = 5;
    auto entry = word_ate(w.est, w.d, replacer, Token("good"), cfg);
    REQUIRE(!std::isnan(entry.mc_stderr));
    REQUIRE(entry.mc_stderr > 0.0);
    REQUIRE(entry.mc_stderr < 0.2);
    // sampled estimate still lands near the enumerated value
    REQUIRE(entry.ate == Catch::Approx(-0.25).margin(5 * entry.mc_stderr + 0.01));
}
