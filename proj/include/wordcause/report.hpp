#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "wordcause/ate.hpp"
#include "wordcause/corpus.hpp"
#include "wordcause/error.hpp"
#include "wordcause/estimator.hpp"
#include "wordcause/token.hpp"

namespace wordcause {

// Protected-group terms to audit. Terms are normalized by the active
// tokenizer; multi-word terms are rejected.
struct GroupSpec {
    struct Group {
        std::string name;
        std::vector<Token> terms;
    };
    std::vector<Group> groups;

    static GroupSpec defaults(const TokenizerConfig& tok = {}) {
        GroupSpec g;
        for (const char* name : {"african", "black", "female", "gay", "hispanic"}) {
            g.groups.push_back({name, {normalize_term(name, tok)}});
        }
        return g;
    }

    // One JSON record per line: {"name": ..., "terms": [...]}
    static GroupSpec load(const std::string& path, const TokenizerConfig& tok = {}) {
        std::ifstream in(path);
        if (!in) throw DataError("cannot open group spec: " + path);
        GroupSpec g;
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty()) continue;
            nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
            if (j.is_discarded() || !j.contains("name") || !j.contains("terms")) {
                throw DataError("malformed group record at line " +
                                std::to_string(lineno) + " of " + path);
            }
            Group grp;
            grp.name = j["name"].get<std::string>();
            for (const auto& t : j["terms"]) {
                grp.terms.push_back(normalize_term(t.get<std::string>(), tok));
            }
            if (grp.terms.empty()) {
                throw DataError("group '" + grp.name + "' has no terms");
            }
            g.groups.push_back(std::move(grp));
        }
        if (g.groups.empty()) throw DataError("group spec is empty: " + path);
        return g;
    }

    static Token normalize_term(const std::string& raw, const TokenizerConfig& tok) {
        auto toks = tokenize(raw, tok);
        if (toks.size() != 1) {
            throw ConfigError("group term '" + raw +
                              "' does not normalize to a single word");
        }
        return toks[0];
    }
};

enum class PredMode { term_only, corpus_mean };

inline std::string to_string(PredMode m) {
    return m == PredMode::term_only ? "term_only" : "corpus_mean";
}

inline PredMode pred_mode_from_string(const std::string& s) {
    if (s == "term_only") return PredMode::term_only;
    if (s == "corpus_mean") return PredMode::corpus_mean;
    throw ConfigError("unknown pred_mode: " + s);
}

// One (model, group) comparison. Both prediction modes are always computed;
// `pred`/`diff` reflect the displayed mode.
struct ReportRow {
    std::string model;
    std::string group;
    double pred = 0.0;
    double ate = 0.0;
    double diff = 0.0;  // pred - ate; positive means the score table is
                        // below the classifier (bias mitigation)
    PredMode pred_mode = PredMode::term_only;
    double pred_term_only = 0.0;
    std::optional<double> pred_corpus_mean;
    std::size_t n_sentences = 0;  // evaluation sentences containing a term
    bool no_support = false;      // corpus-mean requested without support
};

// Classifier prediction vs table score per group. term_only predicts on the
// bare single-token sentence [term]; corpus_mean averages predictions over
// evaluation sentences containing any of the group's terms.
inline std::vector<ReportRow> group_report(const AttributeEstimator& estimator,
                                           const AteTable& table,
                                           const Dataset& dataset,
                                           const GroupSpec& spec,
                                           PredMode mode = PredMode::term_only) {
    std::vector<ReportRow> rows;
    for (const auto& group : spec.groups) {
        ReportRow row;
        row.model = estimator.name();
        row.group = group.name;
        row.pred_mode = mode;

        double term_pred = 0.0;
        double ate = 0.0;
        for (const auto& term : group.terms) {
            std::vector<Token> single{term};
            term_pred += estimator.predict(single);
            ate += table.ate_of(term);
        }
        term_pred /= static_cast<double>(group.terms.size());
        ate /= static_cast<double>(group.terms.size());
        row.pred_term_only = term_pred;
        row.ate = ate;

        double corpus_sum = 0.0;
        std::size_t matched = 0;
        for (const auto& ex : dataset.examples) {
            bool has_term = false;
            for (const auto& t : ex.tokens) {
                for (const auto& term : group.terms) {
                    if (t == term) {
                        has_term = true;
                        break;
                    }
                }
                if (has_term) break;
            }
            if (has_term) {
                corpus_sum += estimator.predict(ex.tokens);
                ++matched;
            }
        }
        row.n_sentences = matched;
        if (matched > 0) {
            row.pred_corpus_mean = corpus_sum / static_cast<double>(matched);
        }

        if (mode == PredMode::term_only) {
            row.pred = row.pred_term_only;
        } else if (row.pred_corpus_mean) {
            row.pred = *row.pred_corpus_mean;
        } else {
            row.no_support = true;  // pred omitted
            row.pred = std::numeric_limits<double>::quiet_NaN();
        }
        row.diff = row.pred - row.ate;
        rows.push_back(std::move(row));
    }
    return rows;
}

struct TheoremWordCheck {
    Token word;
    double ate = 0.0;
    double epsilon = 0.0;
    bool violation = false;
    bool missing = false;
};

struct TheoremReport {
    std::size_t n_spurious_checked = 0;
    std::size_t n_violations = 0;
    std::size_t n_missing = 0;  // dropped by the support filter; not violations
    double max_spurious_ate = 0.0;
    double bound = 0.25;
    double eps_multiplier = 3.0;
    std::vector<TheoremWordCheck> details;

    nlohmann::json to_json() const {
        nlohmann::json d = nlohmann::json::array();
        for (const auto& c : details) {
            d.push_back({{"word", c.word.text},
                         {"ate", c.ate},
                         {"epsilon", c.epsilon},
                         {"violation", c.violation},
                         {"missing", c.missing}});
        }
        return {{"n_spurious_checked", n_spurious_checked},
                {"n_violations", n_violations},
                {"n_missing", n_missing},
                {"max_spurious_ate", max_spurious_ate},
                {"bound", bound},
                {"eps_multiplier", eps_multiplier},
                {"details", d}};
    }
};

// Checks ATE(w) <= bound + eps for every planted spurious word, with eps =
// eps_multiplier * mc_stderr per word (zero under full enumeration).
inline TheoremReport theorem_check(const AteTable& table,
                                   const std::vector<Token>& planted_spurious,
                                   double eps_multiplier = 3.0,
                                   double bound = 0.25) {
    TheoremReport rep;
    rep.bound = bound;
    rep.eps_multiplier = eps_multiplier;
    for (const auto& word : planted_spurious) {
        TheoremWordCheck check;
        check.word = word;
        const AteEntry* e = table.find(word);
        if (!e) {
            check.missing = true;
            ++rep.n_missing;
        } else {
            check.ate = e->ate;
            check.epsilon = eps_multiplier * e->mc_stderr;
            check.violation = e->ate > bound + check.epsilon;
            ++rep.n_spurious_checked;
            if (check.violation) ++rep.n_violations;
            rep.max_spurious_ate = std::max(rep.max_spurious_ate, e->ate);
        }
        rep.details.push_back(std::move(check));
    }
    return rep;
}

// The scalar fact behind the bound: p(1-p) <= 0.25 on [0,1].
inline double max_bernoulli_variance(std::size_t grid_points = 10000) {
    double worst = 0.0;
    for (std::size_t i = 0; i <= grid_points; ++i) {
        double p = static_cast<double>(i) / static_cast<double>(grid_points);
        worst = std::max(worst, p * (1.0 - p));
    }
    return worst;
}

enum class ReportFormat { csv, jsonl, markdown };

inline ReportFormat report_format_from_string(const std::string& s) {
    if (s == "csv") return ReportFormat::csv;
    if (s == "jsonl") return ReportFormat::jsonl;
    if (s == "markdown" || s == "md") return ReportFormat::markdown;
    throw ConfigError("unknown report format: " + s);
}

namespace detail {

inline std::string fmt6(double v) {
    if (std::isnan(v)) return "";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

inline std::vector<ReportRow> sorted_rows(std::vector<ReportRow> rows) {
    std::sort(rows.begin(), rows.end(), [](const ReportRow& a, const ReportRow& b) {
        return std::tie(a.model, a.group) < std::tie(b.model, b.group);
    });
    // diff is re-derived at emission; a mismatch means the rows were edited
    for (auto& r : rows) {
        if (!r.no_support) {
            double d = r.pred - r.ate;
            if (d != r.diff) throw InternalError("report row diff != pred - ate");
            r.diff = d;
        }
    }
    return rows;
}

inline const char* diff_flag(double diff) {
    if (diff > 0.0) return "(+)";
    if (diff < 0.0) return "(-)";
    return "(0)";
}

}  // namespace detail

// Writes rows ordered by (model, group). Markdown flags the diff sign:
// (+) mitigation (table below classifier), (-) amplification.
inline void emit_tables(const std::vector<ReportRow>& rows,
                        const std::string& path, ReportFormat format) {
    auto sorted = detail::sorted_rows(rows);
    std::ofstream out(path);
    if (!out) throw DataError("cannot write report: " + path);
    switch (format) {
        case ReportFormat::csv: {
            out << "model,group,pred,ate,diff,pred_mode,n_sentences\n";
            for (const auto& r : sorted) {
                out << r.model << ',' << r.group << ',' << detail::fmt6(r.pred)
                    << ',' << detail::fmt6(r.ate) << ',' << detail::fmt6(r.diff)
                    << ',' << to_string(r.pred_mode) << ',' << r.n_sentences
                    << '\n';
            }
            break;
        }
        case ReportFormat::jsonl: {
            for (const auto& r : sorted) {
                nlohmann::json j{{"model", r.model},
                                 {"group", r.group},
                                 {"ate", r.ate},
                                 {"pred_mode", to_string(r.pred_mode)},
                                 {"pred_term_only", r.pred_term_only},
                                 {"n_sentences", r.n_sentences},
                                 {"no_support", r.no_support}};
                if (!r.no_support) {
                    j["pred"] = r.pred;
                    j["diff"] = r.diff;
                }
                if (r.pred_corpus_mean) j["pred_corpus_mean"] = *r.pred_corpus_mean;
                out << j.dump() << '\n';
            }
            break;
        }
        case ReportFormat::markdown: {
            out << "| Model | Group | Pred | ATE | Diff |\n";
            out << "|---|---|---|---|---|\n";
            for (const auto& r : sorted) {
                out << "| " << r.model << " | " << r.group << " | ";
                if (r.no_support) {
                    out << "no support | " << detail::fmt6(r.ate) << " | |\n";
                } else {
                    out << detail::fmt6(r.pred) << " | " << detail::fmt6(r.ate)
                        << " | " << detail::fmt6(r.diff) << ' '
                        << detail::diff_flag(r.diff) << " |\n";
                }
            }
            break;
        }
    }
}

// Long-format plot records (dataset, model, group, metric, value) with
// metric in {pred, ate}; values pass through unchanged. No plotting happens
// in-process.
inline void emit_plot_data(
    const std::map<std::string, std::vector<ReportRow>>& rows_by_dataset,
    const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write plot data: " + path);
    out << "dataset,model,group,metric,value\n";
    char buf[40];
    auto put = [&](const std::string& ds, const ReportRow& r, const char* metric,
                   double v) {
        std::snprintf(buf, sizeof buf, "%.9g", v);
        out << ds << ',' << r.model << ',' << r.group << ',' << metric << ','
            << buf << '\n';
    };
    for (const auto& [ds, rows] : rows_by_dataset) {
        for (const auto& r : detail::sorted_rows(rows)) {
            if (!r.no_support) put(ds, r, "pred", r.pred);
            put(ds, r, "ate", r.ate);
        }
    }
}

}  // namespace wordcause
