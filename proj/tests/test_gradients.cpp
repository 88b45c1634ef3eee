#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "support/testutil.hpp"
#include "wordcause/linear.hpp"
#include "wordcause/mlp.hpp"
#include "wordcause/synth.hpp"

using namespace wordcause;
using testutil::toy_dataset;

namespace {

// Random sparse instances over `dim` features.
struct Instance {
    std::vector<BowVector> xs;
    std::vector<int> ys;
};

Instance random_instance(std::size_t n, std::size_t dim, std::uint64_t seed) {
    Instance inst;
    RngStream rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        BowVector x;
        for (std::uint32_t j = 0; j < dim; ++j) {
            if (rng.next_bernoulli(0.4)) {
                x.entries.push_back({j, rng.next_bernoulli(0.5) ? 1.0 : 2.0});
            }
        }
        inst.xs.push_back(std::move(x));
        inst.ys.push_back(rng.next_bernoulli(0.5) ? 1 : 0);
    }
    return inst;
}

double rel_error(const std::vector<double>& a, const std::vector<double>& b) {
    double num = 0.0, da = 0.0, db = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += (a[i] - b[i]) * (a[i] - b[i]);
        da += a[i] * a[i];
        db += b[i] * b[i];
    }
    return std::sqrt(num) / std::max({std::sqrt(da), std::sqrt(db), 1e-12});
}

}  // namespace

TEST_CASE("logistic gradient matches central finite differences") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        auto inst = random_instance(24, 10, seed);
        RngStream rng(seed + 100);
        LinearParams p;
        p.weights.resize(10);
        for (double& w : p.weights) w = 2.0 * rng.next_unit() - 1.0;
        p.bias = 2.0 * rng.next_unit() - 1.0;
        double l2 = 1e-3;

        LinearParams g = logistic_gradient(p, inst.xs, inst.ys, l2);

        const double h = 1e-6;
        std::vector<double> analytic = g.weights;
        analytic.push_back(g.bias);
        std::vector<double> fd;
        for (std::size_t j = 0; j <= p.weights.size(); ++j) {
            LinearParams lo = p, hi = p;
            if (j < p.weights.size()) {
                lo.weights[j] -= h;
                hi.weights[j] += h;
            } else {
                lo.bias -= h;
                hi.bias += h;
            }
            fd.push_back((logistic_loss(hi, inst.xs, inst.ys, l2) -
                          logistic_loss(lo, inst.xs, inst.ys, l2)) /
                         (2.0 * h));
        }
        REQUIRE(rel_error(analytic, fd) <= 1e-4);
    }
}

TEST_CASE("mlp gradient matches central finite differences") {
    for (std::uint64_t seed : {4u, 5u}) {
        auto inst = random_instance(16, 10, seed);
        auto sizes = detail::mlp_layer_sizes(10, {6, 4});
        MlpParams p;
        RngStream rng(seed + 200);
        for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
            p.W.push_back(std::vector<double>(sizes[l + 1] * sizes[l]));
            p.b.push_back(std::vector<double>(sizes[l + 1]));
            for (double& w : p.W.back()) w = rng.next_unit() - 0.5;
            for (double& b : p.b.back()) b = rng.next_unit() - 0.5;
        }
        double l2 = 1e-3;
        MlpParams g = mlp_gradient(p, sizes, inst.xs, inst.ys, l2);
        std::vector<double> analytic = mlp_flatten(g);

        std::vector<double> theta = mlp_flatten(p);
        std::vector<double> fd(theta.size());
        const double h = 1e-6;
        MlpParams scratch = p;
        for (std::size_t j = 0; j < theta.size(); ++j) {
            double orig = theta[j];
            theta[j] = orig + h;
            mlp_unflatten(theta, scratch);
            double up = mlp_loss(scratch, sizes, inst.xs, inst.ys, l2);
            theta[j] = orig - h;
            mlp_unflatten(theta, scratch);
            double down = mlp_loss(scratch, sizes, inst.xs, inst.ys, l2);
            theta[j] = orig;
            fd[j] = (up - down) / (2.0 * h);
        }
        REQUIRE(rel_error(analytic, fd) <= 1e-3);
    }
}

TEST_CASE("logistic regression separates a separable two-word corpus") {
    std::vector<std::pair<std::string, int>> rows;
    for (int i = 0; i < 40; ++i) {
        rows.push_back({"vile filler", 1});
        rows.push_back({"kind filler", 0});
    }
    auto d = toy_dataset(rows);
    auto v = build_vocabulary(d, 1);
    LinearConfig cfg;
    cfg.epochs = 50;
    auto lr = train_logistic_regression(d, v, cfg);
    std::size_t correct = 0;
    for (const auto& ex : d.examples) {
        correct += (lr.predict(ex.tokens) >= 0.5 ? 1 : 0) == ex.label;
    }
    REQUIRE(correct == d.size());
}

TEST_CASE("strong l2 shrinks logistic weights toward the prior") {
    std::vector<std::pair<std::string, int>> rows;
    for (int i = 0; i < 30; ++i) rows.push_back({"vile mess here", 1});
    for (int i = 0; i < 70; ++i) rows.push_back({"kind calm words", 0});
    auto d = toy_dataset(rows);
    auto v = build_vocabulary(d, 1);
    LinearConfig cfg;
    cfg.epochs = 100;
    cfg.learning_rate = 0.02;  // keep lr*l2 < 2 so the l2 pull converges
    cfg.l2 = 40.0;
    auto lr = train_logistic_regression(d, v, cfg);
    for (double w : lr.params().weights) REQUIRE(std::abs(w) < 0.05);
    // with weights pinned near zero every sentence lands near the prior logit
    double spread = std::abs(lr.predict(std::vector<Token>{"vile"}) -
                             lr.predict(std::vector<Token>{"kind"}));
    REQUIRE(spread < 0.05);
    REQUIRE(lr.predict(std::vector<Token>{"calm"}) ==
            Catch::Approx(0.3).margin(0.15));
}

TEST_CASE("svm attains positive margins on a separable corpus") {
    std::vector<std::pair<std::string, int>> rows;
    for (int i = 0; i < 40; ++i) {
        rows.push_back({"vile filler", 1});
        rows.push_back({"kind filler", 0});
    }
    auto d = toy_dataset(rows);
    auto v = build_vocabulary(d, 1);
    LinearConfig cfg;
    cfg.epochs = 60;
    auto svm = train_linear_svm(d, v, cfg);
    for (const auto& ex : d.examples) {
        double t = ex.label == 1 ? 1.0 : -1.0;
        REQUIRE(t * svm.margin(ex.tokens) > 0.0);
    }
}

TEST_CASE("svm probability is the logistic link on the margin") {
    auto d = toy_dataset({{"a x", 1}, {"b x", 0}, {"a y", 1}, {"b y", 0}});
    auto v = build_vocabulary(d, 1);
    LinearConfig cfg;
    cfg.epochs = 10;
    auto svm = train_linear_svm(d, v, cfg);
    REQUIRE(sigmoid(0.0) == 0.5);  // zero margin -> probability one half
    for (const auto& probe :
         {std::vector<Token>{"x", "y"}, std::vector<Token>{"a"}, std::vector<Token>{}}) {
        REQUIRE(svm.predict(probe) == sigmoid(svm.margin(probe)));
    }
}

TEST_CASE("flipping labels negates the learned svm margins") {
    SynthSpec spec;
    spec.n_sentences = 200;
    spec.causal_lexicon = make_lexicon("c", 3);
    spec.spurious_lexicon = make_lexicon("s", 3);
    spec.neutral_lexicon = make_lexicon("n", 8);
    spec.seed = 55;
    auto d = generate_synthetic(spec);
    auto flipped = d;
    for (auto& ex : flipped.examples) ex.label = 1 - ex.label;

    auto v = build_vocabulary(d, 1);
    auto v_flipped = build_vocabulary(flipped, 1);
    LinearConfig cfg;
    cfg.epochs = 8;
    cfg.seed = 9;
    auto a = train_linear_svm(d, v, cfg);
    auto b = train_linear_svm(flipped, v_flipped, cfg);
    // zero init and a label-independent shuffle make the runs exact mirrors
    for (const auto& ex : d.examples) {
        REQUIRE(b.margin(ex.tokens) == -a.margin(ex.tokens));
    }
}

TEST_CASE("mlp learns a two-word interaction that logistic regression cannot") {
    // label = exactly one of {alpha, beta} present (xor)
    std::vector<std::pair<std::string, int>> rows;
    for (int i = 0; i < 50; ++i) {
        rows.push_back({"alpha pad", 1});
        rows.push_back({"beta pad", 1});
        rows.push_back({"alpha beta pad", 0});
        rows.push_back({"pad pad", 0});
    }
    auto d = toy_dataset(rows);
    auto v = build_vocabulary(d, 1);

    LinearConfig lin;
    lin.epochs = 100;
    auto lr = train_logistic_regression(d, v, lin);
    std::size_t lr_correct = 0;
    for (const auto& ex : d.examples) {
        lr_correct += (lr.predict(ex.tokens) >= 0.5 ? 1 : 0) == ex.label;
    }
    double lr_acc = static_cast<double>(lr_correct) / static_cast<double>(d.size());
    REQUIRE(lr_acc <= 0.80);  // linearly inseparable

    MlpConfig mc;
    mc.hidden_sizes = {20, 10, 5};
    mc.epochs = 300;
    mc.learning_rate = 0.1;
    mc.seed = 12;
    auto mlp = train_mlp(d, v, mc);
    std::size_t mlp_correct = 0;
    for (const auto& ex : d.examples) {
        mlp_correct += (mlp.predict(ex.tokens) >= 0.5 ? 1 : 0) == ex.label;
    }
    double mlp_acc = static_cast<double>(mlp_correct) / static_cast<double>(d.size());
    REQUIRE(mlp_acc >= 0.95);
}

TEST_CASE("degenerate training configs are rejected") {
    auto d = toy_dataset({{"bad dog", 1}, {"good dog", 0}});
    auto v = build_vocabulary(d, 1);
    MlpConfig none;
    none.hidden_sizes = {};
    REQUIRE_THROWS_AS(train_mlp(d, v, none), ConfigError);

    LinearConfig wild;
    wild.learning_rate = 1e200;  // l2 term overflows -> non-finite loss
    wild.epochs = 3;
    REQUIRE_THROWS_WITH(train_logistic_regression(d, v, wild),
                        Catch::Matchers::ContainsSubstring("non-finite training loss"));
}
