#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "wordcause/corpus.hpp"
#include "wordcause/error.hpp"
#include "wordcause/token.hpp"

namespace wordcause {

namespace detail {

inline void require_unique_ids(const Dataset& d) {
    std::unordered_set<std::string> seen;
    for (const auto& ex : d.examples) {
        if (!seen.insert(ex.id).second) {
            throw DataError("duplicate example id '" + ex.id + "' in " + d.name);
        }
    }
}

}  // namespace detail

// Canonical corpus format: one JSON record per line with fields
// text (string) and label (0/1); id optional.
inline Dataset ingest_jsonl(const std::string& path,
                            const TokenizerConfig& tok = {}) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open corpus file: " + path);
    Dataset d;
    d.name = std::filesystem::path(path).filename().string();
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            throw DataError("malformed record at line " + std::to_string(lineno) +
                            " of " + path);
        }
        if (!j.contains("text") || !j["text"].is_string()) {
            throw DataError("missing text field at line " + std::to_string(lineno));
        }
        if (!j.contains("label") || !j["label"].is_number_integer()) {
            throw DataError("missing integer label at line " + std::to_string(lineno));
        }
        int label = j["label"].get<int>();
        if (label != 0 && label != 1) {
            throw DataError("label out of range at line " + std::to_string(lineno));
        }
        std::string text = j["text"].get<std::string>();
        if (text.empty()) {
            throw DataError("empty text at line " + std::to_string(lineno));
        }
        LabeledExample ex;
        ex.id = j.contains("id") ? j["id"].get<std::string>()
                                 : "line-" + std::to_string(lineno);
        ex.raw = std::move(text);
        ex.tokens = tokenize(ex.raw, tok);
        ex.label = label;
        d.examples.push_back(std::move(ex));
    }
    d.provenance = {{"source", path},
                    {"adapter", "jsonl"},
                    {"tokenizer", tokenizer_config_json(tok)}};
    detail::require_unique_ids(d);
    return d;
}

namespace detail {

inline std::vector<std::string> split_tsv_row(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    for (char c : line) {
        if (c == '\t') {
            out.push_back(std::move(cell));
            cell.clear();
        } else if (c != '\r') {
            cell.push_back(c);
        }
    }
    out.push_back(std::move(cell));
    return out;
}

// RFC 4180 CSV reader: quoted fields, doubled quotes, embedded commas and
// newlines. Returns rows of cells.
inline std::vector<std::vector<std::string>> read_csv(std::istream& in) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string cell;
    bool quoted = false;
    bool any = false;
    int c;
    auto end_cell = [&] {
        row.push_back(std::move(cell));
        cell.clear();
    };
    auto end_row = [&] {
        end_cell();
        rows.push_back(std::move(row));
        row.clear();
        any = false;
    };
    while ((c = in.get()) != EOF) {
        char ch = static_cast<char>(c);
        if (quoted) {
            if (ch == '"') {
                if (in.peek() == '"') {
                    cell.push_back('"');
                    in.get();
                } else {
                    quoted = false;
                }
            } else {
                cell.push_back(ch);
            }
            continue;
        }
        switch (ch) {
            case '"':
                quoted = true;
                any = true;
                break;
            case ',':
                end_cell();
                any = true;
                break;
            case '\r':
                break;
            case '\n':
                if (any || !cell.empty() || !row.empty()) end_row();
                break;
            default:
                cell.push_back(ch);
                any = true;
        }
    }
    if (any || !cell.empty() || !row.empty()) end_row();
    return rows;
}

}  // namespace detail

// OLID-style TSV: header row with at least id, tweet, subtask_a columns;
// subtask_a OFF -> 1, NOT -> 0. Blank tweets are skipped with a warning
// (real TSVs are dirty); the skip count lands in provenance.
inline Dataset ingest_olid_tsv(const std::string& path,
                               const TokenizerConfig& tok = {}) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open corpus file: " + path);
    std::string header;
    if (!std::getline(in, header)) throw DataError("empty file: " + path);
    auto cols = detail::split_tsv_row(header);
    auto col_of = [&](const std::string& name) {
        for (std::size_t i = 0; i < cols.size(); ++i) {
            if (cols[i] == name) return i;
        }
        throw DataError("missing column " + name + " in " + path);
    };
    std::size_t id_col = col_of("id");
    std::size_t text_col = col_of("tweet");
    std::size_t label_col = col_of("subtask_a");

    Dataset d;
    d.name = std::filesystem::path(path).filename().string();
    std::string line;
    std::size_t skipped = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto cells = detail::split_tsv_row(line);
        std::size_t need = std::max({id_col, text_col, label_col}) + 1;
        if (cells.size() < need) {
            throw DataError("short row in " + path + " (id column missing)");
        }
        const std::string& id = cells[id_col];
        const std::string& text = cells[text_col];
        const std::string& raw_label = cells[label_col];
        if (text.empty()) {
            ++skipped;
            std::cerr << "warning: skipping row " << id << " with empty text\n";
            continue;
        }
        int label;
        if (raw_label == "OFF") label = 1;
        else if (raw_label == "NOT") label = 0;
        else throw DataError("unknown subtask_a value '" + raw_label +
                             "' at row id " + id);
        LabeledExample ex;
        ex.id = id;
        ex.raw = text;
        ex.tokens = tokenize(ex.raw, tok);
        ex.label = label;
        d.examples.push_back(std::move(ex));
    }
    d.provenance = {{"source", path},
                    {"adapter", "olid_tsv"},
                    {"skipped_empty", skipped},
                    {"tokenizer", tokenizer_config_json(tok)}};
    detail::require_unique_ids(d);
    return d;
}

struct CsvColumnMap {
    std::string text_column;
    std::string label_column;
};

// Generic mapped-CSV adapter: column_map names the text/label columns,
// label_map sends raw label strings to {0,1}.
inline Dataset ingest_csv_mapped(const std::string& path,
                                 const CsvColumnMap& column_map,
                                 const std::map<std::string, int>& label_map,
                                 const TokenizerConfig& tok = {}) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open corpus file: " + path);
    auto rows = detail::read_csv(in);
    if (rows.empty()) throw DataError("empty file: " + path);
    const auto& header = rows[0];
    auto col_of = [&](const std::string& name) {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) return i;
        }
        throw DataError("missing column " + name + " in " + path);
    };
    std::size_t text_col = col_of(column_map.text_column);
    std::size_t label_col = col_of(column_map.label_column);

    Dataset d;
    d.name = std::filesystem::path(path).filename().string();
    std::size_t skipped = 0;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& cells = rows[r];
        if (cells.size() <= std::max(text_col, label_col)) {
            throw DataError("short row " + std::to_string(r) + " in " + path);
        }
        const std::string& text = cells[text_col];
        const std::string& raw_label = cells[label_col];
        if (text.empty()) {
            ++skipped;
            std::cerr << "warning: skipping row " << r << " with empty text\n";
            continue;
        }
        auto it = label_map.find(raw_label);
        if (it == label_map.end()) {
            throw DataError("unmapped label value '" + raw_label + "' at row " +
                            std::to_string(r));
        }
        if (it->second != 0 && it->second != 1) {
            throw ConfigError("label_map must map into {0,1}");
        }
        LabeledExample ex;
        ex.id = "row-" + std::to_string(r);
        ex.raw = text;
        ex.tokens = tokenize(ex.raw, tok);
        ex.label = it->second;
        d.examples.push_back(std::move(ex));
    }
    d.provenance = {{"source", path},
                    {"adapter", "csv"},
                    {"text_column", column_map.text_column},
                    {"label_column", column_map.label_column},
                    {"skipped_empty", skipped},
                    {"tokenizer", tokenizer_config_json(tok)}};
    return d;
}

// Writes the canonical one-record-per-line corpus format.
inline void write_jsonl(const Dataset& d, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write corpus file: " + path);
    for (const auto& ex : d.examples) {
        nlohmann::json j{{"id", ex.id}, {"text", ex.raw}, {"label", ex.label}};
        out << j.dump() << '\n';
    }
}

}  // namespace wordcause
