#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "subsel/corpus.hpp"
#include "subsel/text.hpp"

namespace subsel {

// Token ids assigned in first-seen order; one extra id past the end stands
// for unknown tokens.
class Vocabulary {
public:
    int add(const std::string& token);
    int lookup(const std::string& token) const;  // unk_id() when absent
    int unk_id() const { return static_cast<int>(tokens_.size()); }
    std::size_t size() const { return tokens_.size(); }          // known tokens
    std::size_t size_with_unk() const { return tokens_.size() + 1; }
    const std::vector<std::string>& tokens() const { return tokens_; }

    std::vector<int> encode(const TokenSeq& seq) const;

    static Vocabulary from_corpus(const std::vector<ProductRecord>& records);

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, int> index_;
};

}  // namespace subsel
