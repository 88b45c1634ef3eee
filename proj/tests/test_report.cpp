#include <catch2/catch_amalgamated.hpp>

#include "support/testutil.hpp"
#include "wordcause/report.hpp"
#include "wordcause/synth.hpp"

using namespace wordcause;
using testutil::ScopedTempDir;
using testutil::slurp;
using testutil::spit;
using testutil::toy_dataset;

namespace {

AteTable table_from(std::initializer_list<std::pair<const char*, double>> items) {
    AteTable t;
    for (const auto& [w, a] : items) {
        AteEntry e;
        e.word = Token(w);
        e.ate = a;
        e.support = 10;
        t.entries[e.word] = e;
    }
    return t;
}

GroupSpec groups_of(std::initializer_list<const char*> names) {
    GroupSpec g;
    for (const char* n : names) g.groups.push_back({n, {Token(n)}});
    return g;
}

std::vector<ReportRow> synthetic_rows(const std::vector<std::string>& models,
                                      const std::vector<std::string>& groups) {
    std::vector<ReportRow> rows;
    double v = 0.1;
    for (const auto& m : models) {
        for (const auto& g : groups) {
            ReportRow r;
            r.model = m;
            r.group = g;
            r.pred = v;
            r.ate = v / 2;
            r.diff = r.pred - r.ate;
            r.pred_term_only = r.pred;
            r.pred_corpus_mean = r.pred;
            r.n_sentences = 3;
            rows.push_back(r);
            v += 0.01;
        }
    }
    return rows;
}

}  // namespace

TEST_CASE("group report compares estimator predictions with table scores") {
    // estimator whose per-term prediction equals the table score -> diff 0
    auto d = toy_dataset({{"bad dog", 1}, {"good dog", 0}});
    auto vocab = build_vocabulary(d, 1);
    MaxWordSentenceModel est(vocab, 0.0);
    auto table = table_from({{"bad", 1.0}, {"good", 0.0}, {"dog", 0.5}});

    auto rows = group_report(est, table, d, groups_of({"bad", "dog"}),
                             PredMode::term_only);
    REQUIRE(rows.size() == 2);
    for (const auto& r : rows) {
        REQUIRE(r.diff == 0.0);  // pred([w]) == table ate by construction
        REQUIRE(r.pred_mode == PredMode::term_only);
    }

    // term never in the corpus: term-only falls back to the default score
    auto rows2 = group_report(est, table, d, groups_of({"ghost"}),
                              PredMode::term_only);
    REQUIRE(rows2[0].pred == 0.0);   // estimator default for OOV
    REQUIRE(rows2[0].ate == 0.0);    // table default
    REQUIRE(rows2[0].n_sentences == 0);
    REQUIRE(!rows2[0].no_support);

    // corpus-mean without support is flagged and pred omitted
    auto rows3 = group_report(est, table, d, groups_of({"ghost"}),
                              PredMode::corpus_mean);
    REQUIRE(rows3[0].no_support);
    REQUIRE(std::isnan(rows3[0].pred));

    // corpus-mean over sentences containing the term
    auto rows4 = group_report(est, table, d, groups_of({"dog"}),
                              PredMode::corpus_mean);
    REQUIRE(rows4[0].n_sentences == 2);
    REQUIRE(*rows4[0].pred_corpus_mean == Catch::Approx(0.75));  // (1.0 + 0.5)/2
}

TEST_CASE("theorem check counts violations against the bound") {
    auto table = table_from({{"spur0", 0.10}, {"spur1", 0.30}, {"spur2", 0.24}});
    auto rep = theorem_check(table, {Token("spur0"), Token("spur1"), Token("spur2")},
                             /*eps_multiplier=*/0.0);
    REQUIRE(rep.n_spurious_checked == 3);
    REQUIRE(rep.n_violations == 1);  // 0.30 > 0.25
    REQUIRE(rep.max_spurious_ate == Catch::Approx(0.30));
    REQUIRE(rep.bound == 0.25);

    // missing words count separately, never as violations
    auto rep2 = theorem_check(table, {Token("spur0"), Token("never-scored")}, 0.0);
    REQUIRE(rep2.n_missing == 1);
    REQUIRE(rep2.n_violations == 0);

    auto rep3 = theorem_check(table, {}, 0.0);
    REQUIRE(rep3.n_spurious_checked == 0);
    REQUIRE(rep3.n_violations == 0);

    // the sampling allowance moves the cutoff
    AteTable noisy = table_from({{"spur9", 0.27}});
    noisy.entries[Token("spur9")].mc_stderr = 0.01;
    REQUIRE(theorem_check(noisy, {Token("spur9")}, 3.0).n_violations == 0);
    REQUIRE(theorem_check(noisy, {Token("spur9")}, 0.0).n_violations == 1);
}

TEST_CASE("the scalar variance bound holds on a dense grid") {
    REQUIRE(max_bernoulli_variance(10000) <= 0.25);
}

TEST_CASE("emit_tables orders rows and is byte-deterministic") {
    auto rows = synthetic_rows({"NB", "LR", "SVM", "MaxWord", "NN1Layer5",
                                "NN2Layer105", "NN3Layer20105"},
                               {"african", "black", "female", "gay", "hispanic"});
    REQUIRE(rows.size() == 35);
    ScopedTempDir tmp;
    emit_tables(rows, tmp.file("a.csv"), ReportFormat::csv);

    // shuffle the input; emission re-sorts
    RngStream rng(4);
    rng.shuffle(rows);
    emit_tables(rows, tmp.file("b.csv"), ReportFormat::csv);
    REQUIRE(slurp(tmp.file("a.csv")) == slurp(tmp.file("b.csv")));

    auto first_lines = slurp(tmp.file("a.csv"));
    REQUIRE(first_lines.rfind("model,group,pred,ate,diff,pred_mode,n_sentences\n", 0) == 0);
    REQUIRE(first_lines.find("LR,african") < first_lines.find("LR,black"));
    REQUIRE(first_lines.find("LR,african") < first_lines.find("NB,african"));
}

TEST_CASE("markdown output flags negative diffs") {
    ReportRow r;
    r.model = "NN1Layer5";
    r.group = "african";
    r.pred = 0.0;
    r.ate = 0.003;
    r.diff = r.pred - r.ate;
    r.pred_term_only = r.pred;
    ScopedTempDir tmp;
    emit_tables({r}, tmp.file("t.md"), ReportFormat::markdown);
    auto text = slurp(tmp.file("t.md"));
    REQUIRE(text.find("-0.003") != std::string::npos);
    REQUIRE(text.find("(-)") != std::string::npos);

    r.ate = -0.1;
    r.diff = r.pred - r.ate;
    emit_tables({r}, tmp.file("t2.md"), ReportFormat::markdown);
    REQUIRE(slurp(tmp.file("t2.md")).find("(+)") != std::string::npos);
}

TEST_CASE("emission re-derives diff and rejects inconsistent rows") {
    auto rows = synthetic_rows({"LR"}, {"african"});
    rows[0].diff = 0.999;  // corrupted
    ScopedTempDir tmp;
    REQUIRE_THROWS_AS(emit_tables(rows, tmp.file("x.csv"), ReportFormat::csv),
                      InternalError);
}

TEST_CASE("report csv round-trips to six decimals") {
    auto rows = synthetic_rows({"LR", "NB"}, {"african", "gay"});
    rows[0].pred = 0.2014567891;
    rows[0].ate = 0.0987654321;
    rows[0].diff = rows[0].pred - rows[0].ate;
    ScopedTempDir tmp;
    emit_tables(rows, tmp.file("r.csv"), ReportFormat::csv);

    std::ifstream in(tmp.file("r.csv"));
    std::string header, line;
    std::getline(in, header);
    bool found = false;
    while (std::getline(in, line)) {
        std::istringstream ss(line);
        std::string model, group, pred, ate, diff;
        std::getline(ss, model, ',');
        std::getline(ss, group, ',');
        std::getline(ss, pred, ',');
        std::getline(ss, ate, ',');
        std::getline(ss, diff, ',');
        if (model == "LR" && group == "african") {
            found = true;
            REQUIRE(std::stod(pred) == Catch::Approx(0.2014567891).margin(1e-6));
            REQUIRE(std::stod(ate) == Catch::Approx(0.0987654321).margin(1e-6));
        }
    }
    REQUIRE(found);
}

TEST_CASE("plot data flattens rows into long-format records") {
    auto lr_rows = synthetic_rows({"LR"}, {"african", "black", "female", "gay",
                                           "hispanic"});
    lr_rows[3].ate = 0.167;  // gay row carries the table value through
    lr_rows[3].diff = lr_rows[3].pred - lr_rows[3].ate;
    std::map<std::string, std::vector<ReportRow>> by_dataset{
        {"corpus-a", lr_rows}, {"corpus-b", lr_rows}};
    ScopedTempDir tmp;
    emit_plot_data(by_dataset, tmp.file("plot.csv"));

    std::ifstream in(tmp.file("plot.csv"));
    std::string line;
    std::getline(in, line);
    REQUIRE(line == "dataset,model,group,metric,value");
    std::size_t records = 0;
    bool gay_ate_seen = false;
    while (std::getline(in, line)) {
        ++records;
        if (line.rfind("corpus-a,LR,gay,ate,", 0) == 0) {
            gay_ate_seen = true;
            REQUIRE(std::stod(line.substr(line.rfind(',') + 1)) ==
                    Catch::Approx(0.167).margin(1e-9));
        }
    }
    REQUIRE(records == 20);  // 2 datasets x 5 groups x 2 metrics
    REQUIRE(gay_ate_seen);
}

TEST_CASE("group spec files load and normalize terms") {
    ScopedTempDir tmp;
    spit(tmp.file("groups.jsonl"),
         "{\"name\":\"african\",\"terms\":[\"African\"]}\n"
         "{\"name\":\"women\",\"terms\":[\"Female\",\"Woman\"]}\n");
    auto g = GroupSpec::load(tmp.file("groups.jsonl"));
    REQUIRE(g.groups.size() == 2);
    REQUIRE(g.groups[0].terms[0] == Token("african"));
    REQUIRE(g.groups[1].terms.size() == 2);

    auto defaults = GroupSpec::defaults();
    REQUIRE(defaults.groups.size() == 5);
    REQUIRE(defaults.groups[0].name == "african");

    spit(tmp.file("bad.jsonl"), "{\"name\":\"x\",\"terms\":[\"two words\"]}\n");
    REQUIRE_THROWS_AS(GroupSpec::load(tmp.file("bad.jsonl")), ConfigError);
}
