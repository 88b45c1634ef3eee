// Minimal replacement-service stub speaking the /v1/replacements protocol.
// Serves a unigram distribution over a corpus vocabulary when --corpus is
// given, otherwise a small fixed candidate list. Useful for exercising the
// remote replacer without a real masked-language model.

#include <csignal>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <httplib.h>
#include <json.hpp>

#include "wordcause/corpus.hpp"
#include "wordcause/ingest.hpp"

using namespace wordcause;

int main(int argc, char** argv) {
    CLI::App app{"replacement-service stub"};
    int port = 8901;
    std::string host = "127.0.0.1";
    std::string corpus;
    app.add_option("--port", port, "listen port");
    app.add_option("--host", host, "bind address");
    app.add_option("--corpus", corpus, "jsonl corpus for a unigram distribution");
    CLI11_PARSE(app, argc, argv);

    nlohmann::json canned = nlohmann::json::array();
    if (!corpus.empty()) {
        Dataset d = ingest_jsonl(corpus);
        Vocabulary v = build_vocabulary(d, 1);
        for (const auto& w : v.words) {
            canned.push_back({{"word", w.text},
                              {"weight", static_cast<double>(v.doc(w))}});
        }
    } else {
        canned = {{{"word", "good"}, {"weight", 0.7}},
                  {{"word", "fine"}, {"weight", 0.2}},
                  {{"word", "bad"}, {"weight", 0.1}}};
    }

    httplib::Server server;
    server.Post("/v1/replacements", [&](const httplib::Request& req,
                                        httplib::Response& res) {
        auto body = nlohmann::json::parse(req.body, nullptr, false);
        if (body.is_discarded() || !body.contains("tokens") ||
            !body.contains("mask_index")) {
            res.status = 400;
            res.set_content(nlohmann::json{{"error", "bad request"}}.dump(),
                            "application/json");
            return;
        }
        std::size_t k = body.value("k", canned.size());
        nlohmann::json out = nlohmann::json::array();
        for (const auto& c : canned) {
            if (out.size() >= k) break;
            out.push_back(c);
        }
        res.set_content(nlohmann::json{{"candidates", out}}.dump(),
                        "application/json");
    });

    std::cout << "replacement stub listening on http://" << host << ':' << port
              << std::endl;
    if (!server.listen(host, port)) {
        std::cerr << "error: cannot bind " << host << ':' << port << '\n';
        return 2;
    }
    return 0;
}
