#include "subsel/text.hpp"

#include <cstdint>

namespace subsel {
namespace {

bool is_unicode_space(std::uint32_t cp) {
    switch (cp) {
        case 0x09: case 0x0a: case 0x0b: case 0x0c: case 0x0d: case 0x20:
        case 0x85: case 0xa0: case 0x1680:
        case 0x2028: case 0x2029: case 0x202f: case 0x205f: case 0x3000:
            return true;
        default:
            return cp >= 0x2000 && cp <= 0x200a;
    }
}

bool is_ascii_punct(char c) {
    return (c >= '!' && c <= '/') || (c >= ':' && c <= '@') ||
           (c >= '[' && c <= '`') || (c >= '{' && c <= '~');
}

// Decodes one UTF-8 code point at i; malformed bytes are treated as Latin-1.
std::uint32_t decode_utf8(const std::string& s, size_t& i) {
    unsigned char c = static_cast<unsigned char>(s[i]);
    if (c < 0x80) { i += 1; return c; }
    auto cont = [&](size_t j) {
        return j < s.size() && (static_cast<unsigned char>(s[j]) & 0xc0) == 0x80;
    };
    if ((c & 0xe0) == 0xc0 && cont(i + 1)) {
        std::uint32_t cp = (c & 0x1fu) << 6 | (s[i + 1] & 0x3fu);
        i += 2;
        return cp;
    }
    if ((c & 0xf0) == 0xe0 && cont(i + 1) && cont(i + 2)) {
        std::uint32_t cp = (c & 0x0fu) << 12 | (s[i + 1] & 0x3fu) << 6 | (s[i + 2] & 0x3fu);
        i += 3;
        return cp;
    }
    if ((c & 0xf8) == 0xf0 && cont(i + 1) && cont(i + 2) && cont(i + 3)) {
        std::uint32_t cp = (c & 0x07u) << 18 | (s[i + 1] & 0x3fu) << 12 |
                           (s[i + 2] & 0x3fu) << 6 | (s[i + 3] & 0x3fu);
        i += 4;
        return cp;
    }
    i += 1;
    return c;
}

void strip_punct(std::string& tok) {
    size_t b = 0, e = tok.size();
    while (b < e && is_ascii_punct(tok[b])) ++b;
    while (e > b && is_ascii_punct(tok[e - 1])) --e;
    tok = tok.substr(b, e - b);
}

}  // namespace

std::string stem_token(const std::string& token) {
    auto ends_with = [&](const char* suf) {
        std::string s(suf);
        return token.size() > s.size() &&
               token.compare(token.size() - s.size(), s.size(), s) == 0;
    };
    if (ends_with("sses")) return token.substr(0, token.size() - 2);
    if (ends_with("ies")) return token.substr(0, token.size() - 2);
    if (ends_with("ss")) return token;
    if (ends_with("ing") && token.size() > 5) return token.substr(0, token.size() - 3);
    if (ends_with("ed") && token.size() > 4) return token.substr(0, token.size() - 2);
    if (token.size() > 1 && token.back() == 's') return token.substr(0, token.size() - 1);
    return token;
}

TokenSeq tokenize(const std::string& text, const TokenizeOptions& opts) {
    TokenSeq out;
    std::string cur;
    auto flush = [&] {
        if (cur.empty()) return;
        strip_punct(cur);
        if (!cur.empty()) {
            if (opts.stem) cur = stem_token(cur);
            if (!cur.empty()) out.push_back(cur);
        }
        cur.clear();
    };
    size_t i = 0;
    while (i < text.size()) {
        size_t start = i;
        std::uint32_t cp = decode_utf8(text, i);
        if (is_unicode_space(cp)) {
            flush();
        } else {
            for (size_t j = start; j < i; ++j) {
                char c = text[j];
                if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
                cur.push_back(c);
            }
        }
    }
    flush();
    return out;
}

std::string join_tokens(const TokenSeq& tokens) {
    std::string s;
    for (size_t i = 0; i < tokens.size(); ++i) {
        if (i) s.push_back(' ');
        s += tokens[i];
    }
    return s;
}

}  // namespace subsel
