#pragma once

#include <cstdint>
#include <functional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "wordcause/rng.hpp"

namespace wordcause {

// A normalized word: lowercased, whitespace-free, with leading/trailing
// punctuation stripped. Compares byte-wise.
struct Token {
    std::string text;

    Token() = default;
    explicit Token(std::string t) : text(std::move(t)) {}
    Token(const char* t) : text(t) {}

    bool empty() const { return text.empty(); }

    auto operator<=>(const Token&) const = default;
};

inline std::string to_string(const Token& t) { return t.text; }

struct TokenizerConfig {
    bool lowercase = true;
    bool strip_punctuation = true;
    std::set<std::string> stopwords;  // applied post-normalization; empty = off

    bool operator==(const TokenizerConfig&) const = default;
};

namespace detail {

// Decodes one UTF-8 codepoint starting at s[i]; advances i. Invalid bytes
// are passed through as single codepoints so dirty corpora never throw.
inline char32_t decode_utf8(std::string_view s, std::size_t& i) {
    unsigned char b0 = static_cast<unsigned char>(s[i]);
    std::size_t len = 1;
    char32_t cp = b0;
    if (b0 >= 0xF0) {
        len = 4;
        cp = b0 & 0x07u;
    } else if (b0 >= 0xE0) {
        len = 3;
        cp = b0 & 0x0Fu;
    } else if (b0 >= 0xC0) {
        len = 2;
        cp = b0 & 0x1Fu;
    }
    if (len == 1 || i + len > s.size()) {
        ++i;
        return b0;
    }
    for (std::size_t k = 1; k < len; ++k) {
        unsigned char bk = static_cast<unsigned char>(s[i + k]);
        if ((bk & 0xC0u) != 0x80u) {  // truncated sequence: emit lead byte
            ++i;
            return b0;
        }
        cp = (cp << 6) | (bk & 0x3Fu);
    }
    i += len;
    return cp;
}

inline void encode_utf8(char32_t cp, std::string& out) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

inline bool is_separator(char32_t cp) {
    switch (cp) {
        case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20:
        case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
        case 0x202F: case 0x205F: case 0x3000:
            return true;
        default:
            return cp >= 0x2000 && cp <= 0x200A;
    }
}

inline bool is_strippable_punct(char32_t cp) {
    if (cp < 0x80) {
        return (cp >= 0x21 && cp <= 0x2F) || (cp >= 0x3A && cp <= 0x40) ||
               (cp >= 0x5B && cp <= 0x60) || (cp >= 0x7B && cp <= 0x7E);
    }
    // Latin-1 inverted marks, guillemets, and the general punctuation block.
    return cp == 0xA1 || cp == 0xAB || cp == 0xBB || cp == 0xBF ||
           (cp >= 0x2010 && cp <= 0x2027) || (cp >= 0x2030 && cp <= 0x205E);
}

inline char32_t ascii_lower(char32_t cp) {
    return (cp >= 'A' && cp <= 'Z') ? cp + 32 : cp;
}

}  // namespace detail

// Splits on Unicode whitespace, strips leading/trailing punctuation from each
// chunk, lowercases (ASCII range), and drops configured stopwords. Interior
// punctuation is kept ("don't" stays one token). Deterministic; empty input
// yields an empty list.
inline std::vector<Token> tokenize(std::string_view text,
                                   const TokenizerConfig& cfg = {}) {
    std::vector<Token> out;
    std::vector<char32_t> chunk;
    auto flush = [&] {
        if (chunk.empty()) return;
        std::size_t b = 0, e = chunk.size();
        if (cfg.strip_punctuation) {
            while (b < e && detail::is_strippable_punct(chunk[b])) ++b;
            while (e > b && detail::is_strippable_punct(chunk[e - 1])) --e;
        }
        if (b < e) {
            std::string word;
            for (std::size_t k = b; k < e; ++k) detail::encode_utf8(chunk[k], word);
            if (!cfg.stopwords.contains(word)) out.emplace_back(std::move(word));
        }
        chunk.clear();
    };
    std::size_t i = 0;
    while (i < text.size()) {
        char32_t cp = detail::decode_utf8(text, i);
        if (detail::is_separator(cp)) {
            flush();
        } else {
            chunk.push_back(cfg.lowercase ? detail::ascii_lower(cp) : cp);
        }
    }
    flush();
    return out;
}

inline std::string join(const std::vector<Token>& tokens) {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) out.push_back(' ');
        out += tokens[i].text;
    }
    return out;
}

}  // namespace wordcause

template <>
struct std::hash<wordcause::Token> {
    std::size_t operator()(const wordcause::Token& t) const noexcept {
        return static_cast<std::size_t>(wordcause::fnv1a64(t.text));
    }
};
