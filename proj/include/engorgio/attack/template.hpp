#pragma once

#include "engorgio/dims.hpp"
#include "engorgio/lm/vocab.hpp"

#include <span>
#include <string_view>

namespace engorgio::attack {

// Context layout used during optimization:
//
//   [prefix][t free rows][infix][s - m - t free rows]
//
// m = |prefix| + |infix| hard tokens, s = total context length. With an
// empty prefix and infix this is the plain base-model case.
struct PromptTemplate {
    TokenSeq prefix;
    TokenSeq infix;
    std::size_t prompt_length = 32;   // t
    std::size_t context_length = 128; // s

    static PromptTemplate from_text(const lm::Vocab& vocab, std::string_view prefix, std::string_view infix,
                                    std::size_t prompt_length, std::size_t context_length);

    std::size_t hard_count() const { return prefix.size() + infix.size(); }
    std::size_t free_count() const { return context_length - hard_count(); }

    // Throws ConfigError unless 1 <= t <= s - m and s <= max_context.
    void validate(const ModelDims& dims) const;

    // Context position of free row r.
    std::size_t free_position(std::size_t row) const;

    // prefix + prompt + infix: what is sent to the model at test time.
    TokenSeq wrap(std::span<const Token> prompt) const;
};

} // namespace engorgio::attack
