#pragma once

#include <string>
#include <vector>

namespace subsel {

// Ordered list of lowercase word tokens. Invariant: no empty tokens.
using TokenSeq = std::vector<std::string>;

struct TokenizeOptions {
    // Optional suffix-stripping stemmer for parity experiments; off by default.
    bool stem = false;
};

// Lowercase (ASCII), split on Unicode whitespace, strip leading/trailing
// ASCII punctuation from each token, drop tokens that become empty.
TokenSeq tokenize(const std::string& text, const TokenizeOptions& opts = {});

// Crude suffix stripper: sses->ss, ies->i, trailing s (not ss), ed, ing.
std::string stem_token(const std::string& token);

std::string join_tokens(const TokenSeq& tokens);

}  // namespace subsel
