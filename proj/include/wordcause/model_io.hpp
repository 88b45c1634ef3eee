#pragma once

#include <fstream>
#include <memory>
#include <optional>
#include <string>

#include <json.hpp>

#include "wordcause/error.hpp"
#include "wordcause/estimator.hpp"
#include "wordcause/linear.hpp"
#include "wordcause/mlp.hpp"
#include "wordcause/naive_bayes.hpp"

namespace wordcause {

inline constexpr const char* kModelFormat = "wordcause-model";
inline constexpr int kModelVersion = 1;

// Single-file model format: a versioned JSON header (format, version, kind,
// vocab_hash) wrapping the model's own payload. Doubles round-trip exactly
// (shortest-representation serialization), so save -> load -> predict is
// bit-identical to the original model.
inline void save_model(const AttributeEstimator& est, const std::string& path) {
    nlohmann::json j = est.to_json();
    j["format"] = kModelFormat;
    j["version"] = kModelVersion;
    j["name"] = est.name();
    j["vocab_hash"] = est.vocab_hash();
    std::ofstream out(path);
    if (!out) throw DataError("cannot write model file: " + path);
    out << j.dump(2) << '\n';
}

// expected_vocab_hash, when given, must match the stored hash; use it when
// loading a model to score against artifacts built for a specific vocabulary.
inline std::unique_ptr<AttributeEstimator> load_model(
    const std::string& path,
    const std::optional<std::string>& expected_vocab_hash = std::nullopt) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open model file: " + path);
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("format") ||
        j["format"] != kModelFormat || !j.contains("kind")) {
        throw DataError("unrecognized model header in " + path);
    }
    if (j.at("version").get<int>() > kModelVersion) {
        throw DataError("model file " + path + " has a newer format version");
    }
    std::string kind = j["kind"].get<std::string>();
    std::unique_ptr<AttributeEstimator> est;
    if (kind == "maxword") est = MaxWordSentenceModel::from_json(j);
    else if (kind == "nb") est = NaiveBayesModel::from_json(j);
    else if (kind == "lr") est = LogisticRegressionModel::from_json(j);
    else if (kind == "svm") est = LinearSvmModel::from_json(j);
    else if (kind == "mlp") est = MlpModel::from_json(j);
    else throw DataError("unknown model kind '" + kind + "' in " + path);

    if (j.contains("vocab_hash") &&
        j["vocab_hash"].get<std::string>() != est->vocab_hash()) {
        throw DataError("model file " + path +
                        " is internally inconsistent (vocabulary hash)");
    }
    if (expected_vocab_hash && *expected_vocab_hash != est->vocab_hash()) {
        throw ConfigError("vocabulary hash mismatch loading " + path +
                          ": expected " + *expected_vocab_hash + ", found " +
                          est->vocab_hash());
    }
    return est;
}

}  // namespace wordcause
