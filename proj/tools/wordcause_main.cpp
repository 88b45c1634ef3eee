// wordcause: perturbation-based causal word scoring for labeled text.
//
// Pipeline subcommands: synth -> train -> ate -> score/report, plus verify,
// which runs the spurious-correlate bound harness on generated corpora.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "wordcause/ate.hpp"
#include "wordcause/config.hpp"
#include "wordcause/error.hpp"
#include "wordcause/ingest.hpp"
#include "wordcause/model_io.hpp"
#include "wordcause/pipeline.hpp"
#include "wordcause/report.hpp"
#include "wordcause/synth.hpp"
#include "wordcause/table_io.hpp"

namespace fs = std::filesystem;
using namespace wordcause;

namespace {

struct SplitOutcome {
    Dataset full, train, eval;
};

SplitOutcome load_and_split(const RunConfig& cfg) {
    SplitOutcome out;
    out.full = ingest_dataset(cfg);
    auto parts = split(out.full, cfg.split.train_fraction, cfg.split.seed);
    out.train = std::move(parts.first);
    out.eval = std::move(parts.second);
    return out;
}

const Dataset& ate_dataset(const RunConfig& cfg, const SplitOutcome& s) {
    if (cfg.ate_dataset == "train") return s.train;
    if (cfg.ate_dataset == "eval") return s.eval;
    if (cfg.ate_dataset == "full") return s.full;
    throw ConfigError("ate.dataset must be train, eval, or full");
}

int cmd_synth(const std::string& spec_path, const std::string& out_dir) {
    std::ifstream in(spec_path);
    if (!in) throw ConfigError("cannot open synth spec: " + spec_path);
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ConfigError("synth spec is not valid JSON");
    SynthSpec spec = SynthSpec::from_json(j);
    Dataset d = generate_synthetic(spec);

    ensure_run_layout(out_dir);
    fs::path corpus_dir = fs::path(out_dir) / "corpus";
    write_jsonl(d, (corpus_dir / "synth.jsonl").string());

    nlohmann::json manifest = spec.to_json();
    manifest["n_generated"] = d.size();
    std::ofstream mf(corpus_dir / "synth.manifest.json");
    mf << manifest.dump(2) << '\n';

    std::cout << "wrote " << d.size() << " sentences to "
              << (corpus_dir / "synth.jsonl").string() << '\n';
    return 0;
}

int cmd_train(RunConfig cfg) {
    ensure_run_layout(cfg.out_dir);
    write_resolved_config(cfg);
    auto data = load_and_split(cfg);
    Vocabulary vocab = build_vocabulary(data.train, cfg.estimator.min_count);
    auto est = train_estimator(cfg, data.train, vocab);
    save_model(*est, model_path(cfg));
    std::printf("trained %s on %zu sentences (vocab %zu); held-out accuracy %.4f\n",
                est->name().c_str(), data.train.size(), vocab.size(),
                accuracy(*est, data.eval));
    std::cout << "model: " << model_path(cfg) << '\n';
    return 0;
}

int cmd_ate(RunConfig cfg, std::string model_file) {
    ensure_run_layout(cfg.out_dir);
    if (model_file.empty()) model_file = model_path(cfg);
    auto data = load_and_split(cfg);
    Vocabulary vocab = build_vocabulary(data.train, cfg.estimator.min_count);
    auto est = load_model(model_file, vocab.hash());

    WordAttributeModel word_model(vocab, cfg.estimator.default_score);
    auto replacer = make_replacer(cfg, vocab, word_model);

    AteBuildReport report;
    AteTable table = build_ate_table(*est, ate_dataset(cfg, data), vocab,
                                     *replacer, cfg.ate, &report, cfg.ate_threads);

    fs::path base = fs::path(cfg.out_dir) / "tables" / cfg.estimator.kind;
    save_table(table, base.string() + ".json");
    export_table_csv(table, base.string() + ".csv");
    std::ofstream rep(base.string() + ".build.json");
    rep << report.to_json().dump(2) << '\n';

    std::printf("scored %zu words (%zu below min_support, %zu filter fallbacks)\n",
                report.n_scored, report.omitted.size(), report.n_fallbacks);
    std::cout << "table: " << base.string() + ".json" << '\n';
    if (report.n_scored == 0) {
        std::cerr << "warning: no word met min_support " << cfg.ate.min_support
                  << "; the table is empty\n";
    }
    return 0;
}

int cmd_score(const std::string& table_file, const std::string& input,
              const std::string& p_text, const TokenizerConfig& tok) {
    double p;
    if (p_text == "inf" || p_text == "Inf" || p_text == "INF") {
        p = kInfiniteOrder;
    } else {
        try {
            p = std::stod(p_text);
        } catch (const std::exception&) {
            throw ConfigError("cannot parse aggregation order: " + p_text);
        }
    }
    if (std::isnan(p) || p <= 0.0) {
        throw ConfigError("aggregation order p must be positive (or inf)");
    }
    AteTable table = load_table(table_file);

    std::ifstream file;
    std::istream* in = &std::cin;
    if (!input.empty() && input != "-") {
        file.open(input);
        if (!file) throw DataError("cannot open input: " + input);
        in = &file;
    }
    std::string line;
    while (std::getline(*in, line)) {
        auto tokens = tokenize(line, tok);
        SentenceScore s = sentence_score(table, tokens, p);
        std::printf("%.6g\t%s\n", s.value,
                    s.argmax_word ? s.argmax_word->text.c_str() : "-");
    }
    return 0;
}

int cmd_report(RunConfig cfg, bool strict) {
    ensure_run_layout(cfg.out_dir);
    auto data = load_and_split(cfg);
    Vocabulary vocab = build_vocabulary(data.train, cfg.estimator.min_count);
    auto est = load_model(model_path(cfg), vocab.hash());
    fs::path table_base = fs::path(cfg.out_dir) / "tables" / cfg.estimator.kind;
    AteTable table = load_table(table_base.string() + ".json");
    if (strict) require_table_matches(table, *est);

    GroupSpec groups = cfg.report.groups_path.empty()
                           ? GroupSpec::defaults(cfg.tokenizer)
                           : GroupSpec::load(cfg.report.groups_path, cfg.tokenizer);
    auto rows = group_report(*est, table, data.eval, groups, cfg.report.pred_mode);

    fs::path out = fs::path(cfg.out_dir) / "reports";
    for (const auto& f : cfg.report.formats) {
        ReportFormat fmt = report_format_from_string(f);
        const char* ext = fmt == ReportFormat::csv      ? ".csv"
                          : fmt == ReportFormat::jsonl  ? ".jsonl"
                                                        : ".md";
        emit_tables(rows, (out / ("report" + std::string(ext))).string(), fmt);
    }
    std::map<std::string, std::vector<ReportRow>> by_dataset{{data.full.name, rows}};
    emit_plot_data(by_dataset, (out / "plot_data.csv").string());

    for (const auto& r : rows) {
        if (r.no_support) {
            std::printf("%-10s %-10s pred: no support   ate %.3f\n",
                        r.model.c_str(), r.group.c_str(), r.ate);
        } else {
            std::printf("%-10s %-10s pred %.3f  ate %.3f  diff %+.3f\n",
                        r.model.c_str(), r.group.c_str(), r.pred, r.ate, r.diff);
        }
    }

    if (!cfg.report.theorem_manifest.empty()) {
        std::ifstream mf(cfg.report.theorem_manifest);
        if (!mf) throw DataError("cannot open manifest: " + cfg.report.theorem_manifest);
        nlohmann::json manifest = nlohmann::json::parse(mf);
        std::vector<Token> spurious;
        for (const auto& w : manifest.at("spurious")) {
            spurious.emplace_back(w.get<std::string>());
        }
        TheoremReport theorem = theorem_check(table, spurious);
        std::ofstream tf(out / "theorem.json");
        tf << theorem.to_json().dump(2) << '\n';
        std::printf("bound check: %zu spurious words, max ate %.4f, %zu violation(s)\n",
                    theorem.n_spurious_checked, theorem.max_spurious_ate,
                    theorem.n_violations);
        if (theorem.n_violations > 0) return 2;
    }
    return 0;
}

int cmd_verify(std::size_t n_runs, std::size_t n_sentences,
               const std::vector<double>& rhos, std::uint64_t base_seed,
               const std::string& out_file) {
    double worst_p = max_bernoulli_variance();
    std::printf("scalar bound: max p(1-p) over grid = %.6f (<= 0.25: %s)\n",
                worst_p, worst_p <= 0.25 ? "yes" : "NO");
    if (worst_p > 0.25) return 3;

    std::size_t violations = 0;
    nlohmann::json runs = nlohmann::json::array();
    for (std::size_t r = 0; r < n_runs; ++r) {
        SynthSpec spec;
        spec.n_sentences = n_sentences;
        spec.causal_lexicon = make_lexicon("causal", 10);
        spec.spurious_lexicon = make_lexicon("spur", 10);
        spec.neutral_lexicon = make_lexicon("filler", 50);
        spec.cooccur_rate = rhos[r % rhos.size()];
        spec.spurious_in_nontoxic_prob = 0.75;
        spec.toxic_fraction = 0.3;
        spec.length_range = {4, 10};
        spec.seed = base_seed + r;

        Dataset d = generate_synthetic(spec);
        Vocabulary vocab = build_vocabulary(d, 1);
        MaxWordSentenceModel est(vocab, 0.0);
        WordAttributeModel wm(vocab, 0.0);
        ReplacementConfig rc;
        rc.kind = "uniform";
        rc.assumption1_filter = true;
        auto replacer = make_local_replacer(rc, vocab, wm);
        AteConfig ac;
        ac.min_support = 5;
        ac.exact_enumeration_threshold = vocab.size();  // always exact
        ac.seed = spec.seed;
        AteTable table = build_ate_table(est, d, vocab, *replacer, ac, nullptr, 0);

        TheoremReport rep = theorem_check(table, spec.spurious_lexicon, 0.0);
        violations += rep.n_violations;
        std::printf("run %2zu: seed %llu rho %.2f  spurious checked %zu  max ate %.4f  %s\n",
                    r, static_cast<unsigned long long>(spec.seed),
                    spec.cooccur_rate, rep.n_spurious_checked,
                    rep.max_spurious_ate,
                    rep.n_violations == 0 ? "ok" : "VIOLATION");
        nlohmann::json jr = rep.to_json();
        jr["seed"] = spec.seed;
        jr["rho"] = spec.cooccur_rate;
        runs.push_back(std::move(jr));
    }
    if (!out_file.empty()) {
        std::ofstream out(out_file);
        if (!out) throw DataError("cannot write " + out_file);
        out << nlohmann::json{{"runs", runs}, {"violations", violations}}.dump(2)
            << '\n';
    }
    std::printf("verify: %zu run(s), %zu violation(s)\n", n_runs, violations);
    return violations == 0 ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"causal word-effect scoring for labeled text corpora"};
    app.require_subcommand(1);

    std::string config_path, out_override, spec_path, model_file;
    std::string table_file, input = "-", p_text = "inf";
    bool no_strict = false;
    std::size_t verify_runs = 21, verify_n = 2000;
    std::vector<double> verify_rhos{0.5, 0.8, 1.0};
    std::uint64_t verify_seed = 1000;
    std::string verify_out;

    auto* synth = app.add_subcommand("synth", "generate a synthetic corpus");
    synth->add_option("--spec", spec_path, "synth spec JSON file")->required();
    synth->add_option("--out", out_override, "output directory")->required();

    auto* train = app.add_subcommand("train", "ingest, split, and train a model");
    train->add_option("--config", config_path, "run config JSON")->required();
    train->add_option("--out", out_override, "override output directory");

    auto* ate = app.add_subcommand("ate", "build the word score table");
    ate->add_option("--config", config_path, "run config JSON")->required();
    ate->add_option("--out", out_override, "override output directory");
    ate->add_option("--model", model_file, "model file (default: from the run layout)");

    auto* score = app.add_subcommand("score", "score sentences from a file or stdin");
    score->add_option("--table", table_file, "score table JSON")->required();
    score->add_option("--input", input, "input file ('-' = stdin)");
    score->add_option("--p", p_text, "aggregation order (positive number or 'inf')");
    score->add_option("--config", config_path,
                      "run config JSON (for the tokenizer settings)");

    auto* report = app.add_subcommand("report", "group report, plot data, bound check");
    report->add_option("--config", config_path, "run config JSON")->required();
    report->add_option("--out", out_override, "override output directory");
    report->add_flag("--no-strict", no_strict, "skip the table/model provenance check");

    auto* verify = app.add_subcommand("verify", "bound harness on generated corpora");
    verify->add_option("--runs", verify_runs, "number of runs (distinct seeds)");
    verify->add_option("--n", verify_n, "sentences per corpus");
    verify->add_option("--rho", verify_rhos, "cooccurrence rates to cycle through");
    verify->add_option("--seed", verify_seed, "base seed");
    verify->add_option("--out", verify_out, "write the JSON report here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        auto load_cfg = [&] {
            RunConfig cfg = RunConfig::load(config_path);
            cfg.apply_env_overrides();
            if (!out_override.empty()) cfg.out_dir = out_override;
            return cfg;
        };
        if (synth->parsed()) return cmd_synth(spec_path, out_override);
        if (train->parsed()) return cmd_train(load_cfg());
        if (ate->parsed()) return cmd_ate(load_cfg(), model_file);
        if (score->parsed()) {
            TokenizerConfig tok;
            if (!config_path.empty()) tok = RunConfig::load(config_path).tokenizer;
            return cmd_score(table_file, input, p_text, tok);
        }
        if (report->parsed()) return cmd_report(load_cfg(), !no_strict);
        if (verify->parsed()) {
            return cmd_verify(verify_runs, verify_n, verify_rhos, verify_seed,
                              verify_out);
        }
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 3;
    }
    return 1;
}
