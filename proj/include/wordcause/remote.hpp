#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "wordcause/error.hpp"
#include "wordcause/replace.hpp"
#include "wordcause/token.hpp"

namespace wordcause {

struct RemoteConfig {
    std::string endpoint;     // e.g. http://127.0.0.1:8901
    int timeout_ms = 2000;
    int attempts = 2;

    nlohmann::json to_json() const {
        return {{"endpoint", endpoint},
                {"timeout_ms", timeout_ms},
                {"attempts", attempts}};
    }
};

// Fetches replacement candidates from an external service.
//
//   request:  POST /v1/replacements {"tokens": [...], "mask_index": i, "k": k}
//   response: 200 {"candidates": [{"word": ..., "weight": ...}, ...]}
//
// Server weights need not be normalized; the client removes the original
// word and renormalizes. Transport failures retry up to cfg.attempts and
// surface as NetworkError; anything off-protocol is a ProtocolError.
inline CandidateSet remote_candidates(const RemoteConfig& cfg,
                                      const std::vector<Token>& tokens,
                                      std::size_t i, std::size_t k) {
    if (i >= tokens.size()) {
        throw ConfigError("mask_index out of range for remote replacement");
    }
    nlohmann::json body;
    body["tokens"] = nlohmann::json::array();
    for (const auto& t : tokens) body["tokens"].push_back(t.text);
    body["mask_index"] = i;
    body["k"] = k;
    const std::string payload = body.dump();

    httplib::Result res;
    std::string last_error = "unknown transport error";
    int attempts = std::max(1, cfg.attempts);
    for (int attempt = 0; attempt < attempts; ++attempt) {
        httplib::Client client(cfg.endpoint);
        client.set_connection_timeout(std::chrono::milliseconds(cfg.timeout_ms));
        client.set_read_timeout(std::chrono::milliseconds(cfg.timeout_ms));
        client.set_write_timeout(std::chrono::milliseconds(cfg.timeout_ms));
        res = client.Post("/v1/replacements", payload, "application/json");
        if (res) break;
        last_error = httplib::to_string(res.error());
    }
    if (!res) {
        throw NetworkError(cfg.endpoint, attempts, last_error);
    }
    if (res->status < 200 || res->status >= 300) {
        std::string detail = "status " + std::to_string(res->status);
        auto err = nlohmann::json::parse(res->body, nullptr, false);
        if (err.is_object() && err.contains("error") && err["error"].is_string()) {
            detail += ": " + err["error"].get<std::string>();
        }
        throw ProtocolError("replacement service error (" + detail + ")");
    }
    auto j = nlohmann::json::parse(res->body, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("candidates") ||
        !j["candidates"].is_array()) {
        throw ProtocolError("malformed replacement response (no candidates array)");
    }
    CandidateSet out;
    double total = 0.0;
    for (const auto& c : j["candidates"]) {
        if (!c.is_object() || !c.contains("word") || !c["word"].is_string() ||
            !c.contains("weight") || !c["weight"].is_number()) {
            throw ProtocolError("malformed candidate record in replacement response");
        }
        Token w(c["word"].get<std::string>());
        double weight = c["weight"].get<double>();
        if (weight <= 0.0) {
            throw ProtocolError("non-positive candidate weight in replacement response");
        }
        if (w == tokens[i]) continue;  // self-replacement removed client-side
        out.words.push_back({std::move(w), weight});
        total += weight;
    }
    if (out.words.empty() || total <= 0.0) {
        throw ProtocolError("replacement response has no usable candidates");
    }
    for (auto& ww : out.words) ww.weight /= total;
    return out;
}

// ReplacementModel adapter for the remote service. The support is unknown
// ahead of time, so the returned candidate set is treated as the replacement
// distribution itself (exact, zero sampling error).
class RemoteReplacer final : public ReplacementModel {
public:
    explicit RemoteReplacer(RemoteConfig cfg, std::size_t k = 16)
        : cfg_(std::move(cfg)), k_(k) {}

    std::string name() const override { return "remote(" + cfg_.endpoint + ")"; }

    std::optional<std::size_t> support_size(const std::vector<Token>&,
                                            std::size_t) const override {
        return std::nullopt;
    }

    CandidateSet enumerate(const std::vector<Token>& tokens,
                           std::size_t i) const override {
        return remote_candidates(cfg_, tokens, i, k_);
    }

    CandidateSet sample(const std::vector<Token>& tokens, std::size_t i,
                        std::size_t k, RngStream&) const override {
        return remote_candidates(cfg_, tokens, i, k);
    }

    const RemoteConfig& config() const { return cfg_; }

private:
    RemoteConfig cfg_;
    std::size_t k_;
};

}  // namespace wordcause
