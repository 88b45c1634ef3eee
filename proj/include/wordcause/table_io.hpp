#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "wordcause/ate.hpp"
#include "wordcause/error.hpp"

namespace wordcause {

inline constexpr const char* kTableFormat = "wordcause-ate-table";
inline constexpr int kTableVersion = 1;

inline void save_table(const AteTable& table, const std::string& path) {
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& [word, e] : table.entries) {
        entries.push_back({{"word", word.text},
                           {"ate", e.ate},
                           {"support", e.support},
                           {"mc_stderr", e.mc_stderr},
                           {"n_fallbacks", e.n_fallbacks}});
    }
    nlohmann::json j{{"format", kTableFormat},
                     {"version", kTableVersion},
                     {"default_ate", table.default_ate},
                     {"metadata", table.metadata},
                     {"entries", entries}};
    std::ofstream out(path);
    if (!out) throw DataError("cannot write table file: " + path);
    out << j.dump(2) << '\n';
}

inline AteTable load_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open table file: " + path);
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("format") ||
        j["format"] != kTableFormat) {
        throw DataError("unrecognized table header in " + path);
    }
    if (j.at("version").get<int>() > kTableVersion) {
        throw DataError("table file " + path + " has a newer format version");
    }
    AteTable t;
    t.default_ate = j.at("default_ate").get<double>();
    t.metadata = j.value("metadata", nlohmann::json::object());
    for (const auto& e : j.at("entries")) {
        AteEntry entry;
        entry.word = Token(e.at("word").get<std::string>());
        entry.ate = e.at("ate").get<double>();
        entry.support = e.at("support").get<std::size_t>();
        entry.mc_stderr = e.at("mc_stderr").get<double>();
        entry.n_fallbacks = e.at("n_fallbacks").get<std::size_t>();
        t.entries[entry.word] = std::move(entry);
    }
    return t;
}

// Errors when the table was built for a different trained model.
inline void require_table_matches(const AteTable& table,
                                  const AttributeEstimator& estimator) {
    if (!table.metadata.contains("estimator_hash")) {
        throw DataError("table has no estimator hash; cannot verify provenance");
    }
    std::string have = table.metadata["estimator_hash"].get<std::string>();
    if (have != estimator.fingerprint()) {
        throw ConfigError("table was built with estimator " + have +
                          ", not " + estimator.fingerprint());
    }
}

// Human-readable tabular form. %.17g keeps 12+ significant digits across a
// round-trip.
inline void export_table_csv(const AteTable& table, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write table export: " + path);
    out << "word,ate,support,mc_stderr,n_fallbacks\n";
    char buf[64];
    for (const auto& [word, e] : table.entries) {
        std::snprintf(buf, sizeof buf, "%.17g,%zu,%.17g,%zu", e.ate, e.support,
                      e.mc_stderr, e.n_fallbacks);
        out << word.text << ',' << buf << '\n';
    }
}

inline AteTable import_table_csv(const std::string& path, double default_ate = 0.0) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open table export: " + path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("word,ate,", 0) != 0) {
        throw DataError("unrecognized table export header in " + path);
    }
    AteTable t;
    t.default_ate = default_ate;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string word, ate, support, stderr_s, fallbacks;
        if (!std::getline(row, word, ',') || !std::getline(row, ate, ',') ||
            !std::getline(row, support, ',') || !std::getline(row, stderr_s, ',') ||
            !std::getline(row, fallbacks)) {
            throw DataError("short row at line " + std::to_string(lineno) +
                            " of " + path);
        }
        AteEntry e;
        e.word = Token(word);
        e.ate = std::stod(ate);
        e.support = static_cast<std::size_t>(std::stoull(support));
        e.mc_stderr = std::stod(stderr_s);
        e.n_fallbacks = static_cast<std::size_t>(std::stoull(fallbacks));
        t.entries[e.word] = std::move(e);
    }
    return t;
}

}  // namespace wordcause
