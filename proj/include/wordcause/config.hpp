#pragma once

#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "wordcause/ate.hpp"
#include "wordcause/bow.hpp"
#include "wordcause/error.hpp"
#include "wordcause/ingest.hpp"
#include "wordcause/linear.hpp"
#include "wordcause/mlp.hpp"
#include "wordcause/remote.hpp"
#include "wordcause/replace.hpp"
#include "wordcause/report.hpp"
#include "wordcause/token.hpp"

namespace wordcause {

// Resolved run configuration. Every field has a default; stage seeds are
// derived from the master seed unless given explicitly. The resolved config
// (minus out_dir) is echoed into the output directory so a run can be
// reproduced from its own artifacts.
struct RunConfig {
    std::uint64_t seed = 1;
    std::string out_dir = "runs/out";

    struct DatasetConfig {
        std::string source;
        std::string adapter = "jsonl";  // jsonl | olid_tsv | csv
        CsvColumnMap csv_columns{"text", "label"};
        std::map<std::string, int> label_map;
    } dataset;

    TokenizerConfig tokenizer;

    struct SplitConfig {
        double train_fraction = 0.8;
        std::uint64_t seed = 0;  // derived when not set explicitly
    } split;

    struct EstimatorConfig {
        std::string kind = "lr";  // maxword | nb | lr | svm | mlp
        std::uint64_t min_count = 1;
        double default_score = 0.0;
        double nb_alpha = 1.0;
        LinearConfig lr;
        LinearConfig svm;
        MlpConfig mlp;
    } estimator;

    ReplacementConfig replacer;
    RemoteConfig remote;
    AteConfig ate;
    std::string ate_dataset = "train";  // train | eval | full
    unsigned ate_threads = 0;           // 0 = hardware concurrency

    struct ReportConfig {
        std::string groups_path;  // empty = built-in default groups
        PredMode pred_mode = PredMode::term_only;
        std::vector<std::string> formats{"csv", "jsonl", "markdown"};
        std::string theorem_manifest;  // synthetic manifest for the bound check
    } report;

    static RunConfig from_json(const nlohmann::json& j);
    static RunConfig load(const std::string& path);

    nlohmann::json to_json() const;

    void apply_env_overrides() {
        if (const char* s = std::getenv("WORDCAUSE_SEED")) {
            seed = std::strtoull(s, nullptr, 10);
        }
        if (const char* o = std::getenv("WORDCAUSE_OUT")) {
            out_dir = o;
        }
    }
};

inline RunConfig RunConfig::from_json(const nlohmann::json& j) {
    RunConfig c;
    if (!j.is_object()) throw ConfigError("run config must be a JSON object");
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("out_dir")) c.out_dir = j["out_dir"].get<std::string>();

    if (j.contains("dataset")) {
        const auto& d = j["dataset"];
        if (d.contains("source")) c.dataset.source = d["source"].get<std::string>();
        if (d.contains("adapter")) c.dataset.adapter = d["adapter"].get<std::string>();
        if (d.contains("csv")) {
            const auto& v = d["csv"];
            if (v.contains("text_column"))
                c.dataset.csv_columns.text_column = v["text_column"].get<std::string>();
            if (v.contains("label_column"))
                c.dataset.csv_columns.label_column = v["label_column"].get<std::string>();
            if (v.contains("label_map")) {
                for (auto it = v["label_map"].begin(); it != v["label_map"].end(); ++it) {
                    c.dataset.label_map[it.key()] = it.value().get<int>();
                }
            }
        }
    }

    if (j.contains("tokenizer")) {
        const auto& t = j["tokenizer"];
        if (t.contains("lowercase")) c.tokenizer.lowercase = t["lowercase"].get<bool>();
        if (t.contains("strip_punctuation"))
            c.tokenizer.strip_punctuation = t["strip_punctuation"].get<bool>();
        if (t.contains("stopwords")) {
            for (const auto& w : t["stopwords"]) {
                c.tokenizer.stopwords.insert(w.get<std::string>());
            }
        }
    }

    c.split.seed = derive_seed(c.seed, "split");
    if (j.contains("split")) {
        const auto& s = j["split"];
        if (s.contains("train_fraction"))
            c.split.train_fraction = s["train_fraction"].get<double>();
        if (s.contains("seed")) c.split.seed = s["seed"].get<std::uint64_t>();
    }

    std::uint64_t train_seed = derive_seed(c.seed, "train");
    c.estimator.lr.seed = train_seed;
    c.estimator.svm.seed = train_seed;
    c.estimator.mlp.seed = train_seed;
    if (j.contains("estimator")) {
        const auto& e = j["estimator"];
        if (e.contains("kind")) c.estimator.kind = e["kind"].get<std::string>();
        if (e.contains("min_count"))
            c.estimator.min_count = e["min_count"].get<std::uint64_t>();
        if (e.contains("default_score"))
            c.estimator.default_score = e["default_score"].get<double>();
        if (e.contains("nb") && e["nb"].contains("alpha"))
            c.estimator.nb_alpha = e["nb"]["alpha"].get<double>();
        if (e.contains("lr")) {
            auto base = e["lr"];
            if (!base.contains("seed")) base["seed"] = train_seed;
            c.estimator.lr = LinearConfig::from_json(base);
        }
        if (e.contains("svm")) {
            auto base = e["svm"];
            if (!base.contains("seed")) base["seed"] = train_seed;
            c.estimator.svm = LinearConfig::from_json(base);
        }
        if (e.contains("mlp")) {
            auto base = e["mlp"];
            if (!base.contains("seed")) base["seed"] = train_seed;
            c.estimator.mlp = MlpConfig::from_json(base);
        }
    }

    c.replacer.seed = derive_seed(c.seed, "replace");
    if (j.contains("replacer")) {
        const auto& r = j["replacer"];
        if (r.contains("kind")) c.replacer.kind = r["kind"].get<std::string>();
        if (r.contains("k")) c.replacer.k = r["k"].get<std::size_t>();
        if (r.contains("exact_enumeration_threshold"))
            c.replacer.exact_enumeration_threshold =
                r["exact_enumeration_threshold"].get<std::size_t>();
        if (r.contains("assumption1_filter"))
            c.replacer.assumption1_filter = r["assumption1_filter"].get<bool>();
        if (r.contains("max_resamples"))
            c.replacer.max_resamples = r["max_resamples"].get<std::size_t>();
        if (r.contains("seed")) c.replacer.seed = r["seed"].get<std::uint64_t>();
        if (r.contains("remote")) {
            const auto& m = r["remote"];
            if (m.contains("endpoint")) c.remote.endpoint = m["endpoint"].get<std::string>();
            if (m.contains("timeout_ms")) c.remote.timeout_ms = m["timeout_ms"].get<int>();
            if (m.contains("attempts")) c.remote.attempts = m["attempts"].get<int>();
        }
    }

    c.ate.seed = derive_seed(c.seed, "ate");
    if (j.contains("ate")) {
        const auto& a = j["ate"];
        if (a.contains("min_support")) c.ate.min_support = a["min_support"].get<std::size_t>();
        if (a.contains("exact_enumeration_threshold"))
            c.ate.exact_enumeration_threshold =
                a["exact_enumeration_threshold"].get<std::size_t>();
        if (a.contains("mc_samples")) c.ate.mc_samples = a["mc_samples"].get<std::size_t>();
        if (a.contains("seed")) c.ate.seed = a["seed"].get<std::uint64_t>();
        if (a.contains("default_ate")) c.ate.default_ate = a["default_ate"].get<double>();
        if (a.contains("dataset")) c.ate_dataset = a["dataset"].get<std::string>();
        if (a.contains("threads")) c.ate_threads = a["threads"].get<unsigned>();
    }

    if (j.contains("report")) {
        const auto& r = j["report"];
        if (r.contains("groups")) c.report.groups_path = r["groups"].get<std::string>();
        if (r.contains("pred_mode"))
            c.report.pred_mode = pred_mode_from_string(r["pred_mode"].get<std::string>());
        if (r.contains("formats"))
            c.report.formats = r["formats"].get<std::vector<std::string>>();
        if (r.contains("theorem_manifest"))
            c.report.theorem_manifest = r["theorem_manifest"].get<std::string>();
    }
    return c;
}

inline RunConfig RunConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open run config: " + path);
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ConfigError("run config is not valid JSON: " + path);
    return from_json(j);
}

inline nlohmann::json RunConfig::to_json() const {
    nlohmann::json label_map = nlohmann::json::object();
    for (const auto& [k, v] : dataset.label_map) label_map[k] = v;
    return {
        {"seed", seed},
        {"dataset",
         {{"source", dataset.source},
          {"adapter", dataset.adapter},
          {"csv",
           {{"text_column", dataset.csv_columns.text_column},
            {"label_column", dataset.csv_columns.label_column},
            {"label_map", label_map}}}}},
        {"tokenizer", tokenizer_config_json(tokenizer)},
        {"split", {{"train_fraction", split.train_fraction}, {"seed", split.seed}}},
        {"estimator",
         {{"kind", estimator.kind},
          {"min_count", estimator.min_count},
          {"default_score", estimator.default_score},
          {"nb", {{"alpha", estimator.nb_alpha}}},
          {"lr", estimator.lr.to_json()},
          {"svm", estimator.svm.to_json()},
          {"mlp", estimator.mlp.to_json()}}},
        {"replacer",
         [&] {
             auto r = replacer.to_json();
             r["remote"] = remote.to_json();
             return r;
         }()},
        {"ate",
         {{"min_support", ate.min_support},
          {"exact_enumeration_threshold", ate.exact_enumeration_threshold},
          {"mc_samples", ate.mc_samples},
          {"seed", ate.seed},
          {"default_ate", ate.default_ate},
          {"dataset", ate_dataset},
          {"threads", ate_threads}}},
        {"report",
         {{"groups", report.groups_path},
          {"pred_mode", to_string(report.pred_mode)},
          {"formats", report.formats},
          {"theorem_manifest", report.theorem_manifest}}}};
}

}  // namespace wordcause
