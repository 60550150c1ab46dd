#include "engorgio/attack/template.hpp"

#include "engorgio/error.hpp"

#include <string>

namespace engorgio::attack {

PromptTemplate PromptTemplate::from_text(const lm::Vocab& vocab, std::string_view prefix, std::string_view infix,
                                         std::size_t prompt_length, std::size_t context_length) {
    return PromptTemplate{vocab.encode(prefix), vocab.encode(infix), prompt_length, context_length};
}

void PromptTemplate::validate(const ModelDims& dims) const {
    if (context_length > dims.max_context) {
        throw ConfigError("template: context_length " + std::to_string(context_length) + " exceeds model context " +
                          std::to_string(dims.max_context));
    }
    if (hard_count() >= context_length) {
        throw ConfigError("template: prefix + infix leave no free positions");
    }
    if (prompt_length < 1 || prompt_length > free_count()) {
        throw ConfigError("template: prompt_length must lie in [1, " + std::to_string(free_count()) + "]");
    }
    for (Token t : prefix) {
        if (t < 0 || static_cast<std::size_t>(t) >= dims.vocab) {
            throw ConfigError("template: prefix token out of range");
        }
    }
    for (Token t : infix) {
        if (t < 0 || static_cast<std::size_t>(t) >= dims.vocab) {
            throw ConfigError("template: infix token out of range");
        }
    }
}

std::size_t PromptTemplate::free_position(std::size_t row) const {
    return row < prompt_length ? prefix.size() + row : hard_count() + row;
}

TokenSeq PromptTemplate::wrap(std::span<const Token> prompt) const {
    TokenSeq out(prefix);
    out.insert(out.end(), prompt.begin(), prompt.end());
    out.insert(out.end(), infix.begin(), infix.end());
    return out;
}

} // namespace engorgio::attack
