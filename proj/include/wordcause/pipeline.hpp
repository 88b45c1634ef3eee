#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "wordcause/config.hpp"
#include "wordcause/corpus.hpp"
#include "wordcause/estimator.hpp"
#include "wordcause/ingest.hpp"
#include "wordcause/linear.hpp"
#include "wordcause/mlp.hpp"
#include "wordcause/model_io.hpp"
#include "wordcause/naive_bayes.hpp"
#include "wordcause/remote.hpp"
#include "wordcause/replace.hpp"

namespace wordcause {

inline Dataset ingest_dataset(const RunConfig& cfg) {
    const auto& d = cfg.dataset;
    if (d.source.empty()) throw ConfigError("dataset.source is not set");
    if (d.adapter == "jsonl") return ingest_jsonl(d.source, cfg.tokenizer);
    if (d.adapter == "olid_tsv") return ingest_olid_tsv(d.source, cfg.tokenizer);
    if (d.adapter == "csv") {
        if (d.label_map.empty()) {
            throw ConfigError("csv adapter needs dataset.csv.label_map");
        }
        return ingest_csv_mapped(d.source, d.csv_columns, d.label_map, cfg.tokenizer);
    }
    throw ConfigError("unknown dataset adapter: " + d.adapter);
}

inline std::unique_ptr<AttributeEstimator> train_estimator(
    const RunConfig& cfg, const Dataset& train, const Vocabulary& vocab) {
    const auto& e = cfg.estimator;
    if (e.kind == "maxword") {
        return std::make_unique<MaxWordSentenceModel>(vocab, e.default_score);
    }
    if (e.kind == "nb") {
        return std::make_unique<NaiveBayesModel>(
            train_naive_bayes(train, vocab, e.nb_alpha));
    }
    if (e.kind == "lr") {
        return std::make_unique<LogisticRegressionModel>(
            train_logistic_regression(train, vocab, e.lr));
    }
    if (e.kind == "svm") {
        return std::make_unique<LinearSvmModel>(train_linear_svm(train, vocab, e.svm));
    }
    if (e.kind == "mlp") {
        return std::make_unique<MlpModel>(train_mlp(train, vocab, e.mlp));
    }
    throw ConfigError("unknown estimator kind: " + e.kind);
}

// Replacer stack per config; remote endpoints keep the Assumption-1 filter
// wrapper when configured.
inline std::unique_ptr<ReplacementModel> make_replacer(
    const RunConfig& cfg, const Vocabulary& vocab,
    const WordAttributeModel& word_model) {
    if (cfg.replacer.kind == "remote") {
        if (cfg.remote.endpoint.empty()) {
            throw ConfigError("remote replacer needs replacer.remote.endpoint");
        }
        std::unique_ptr<ReplacementModel> base =
            std::make_unique<RemoteReplacer>(cfg.remote, cfg.replacer.k);
        if (cfg.replacer.assumption1_filter) {
            return std::make_unique<FilteredReplacer>(std::move(base), word_model,
                                                      cfg.replacer.max_resamples);
        }
        return base;
    }
    return make_local_replacer(cfg.replacer, vocab, word_model);
}

inline double accuracy(const AttributeEstimator& est, const Dataset& d) {
    if (d.empty()) return 0.0;
    std::size_t hit = 0;
    for (const auto& ex : d.examples) {
        int pred = est.predict(ex.tokens) >= 0.5 ? 1 : 0;
        if (pred == ex.label) ++hit;
    }
    return static_cast<double>(hit) / static_cast<double>(d.size());
}

// Fixed output layout relied on by the pipeline stages and tests.
inline void ensure_run_layout(const std::string& out_dir) {
    namespace fs = std::filesystem;
    for (const char* sub : {"", "corpus", "models", "tables", "reports"}) {
        fs::create_directories(fs::path(out_dir) / sub);
    }
}

inline void write_resolved_config(const RunConfig& cfg) {
    std::ofstream out(std::filesystem::path(cfg.out_dir) / "config.resolved.json");
    if (!out) throw DataError("cannot write resolved config into " + cfg.out_dir);
    out << cfg.to_json().dump(2) << '\n';
}

inline std::string model_path(const RunConfig& cfg) {
    return (std::filesystem::path(cfg.out_dir) / "models" /
            (cfg.estimator.kind + ".json"))
        .string();
}

inline std::string table_path(const RunConfig& cfg) {
    return (std::filesystem::path(cfg.out_dir) / "tables" /
            (cfg.estimator.kind + ".json"))
        .string();
}

}  // namespace wordcause
