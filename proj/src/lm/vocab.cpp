#include "engorgio/lm/vocab.hpp"

#include "engorgio/error.hpp"

#include <algorithm>
#include <string>

namespace engorgio::lm {

Vocab Vocab::default_charset() {
    std::string chars = " ";
    for (char c = 'a'; c <= 'z'; ++c) {
        chars += c;
    }
    for (char c = 'A'; c <= 'Z'; ++c) {
        chars += c;
    }
    chars += ".,!?:;'-";
    return Vocab(std::move(chars));
}

Vocab::Vocab(std::string chars) : chars_(std::move(chars)) {
    std::fill(std::begin(index_), std::end(index_), -1);
    if (chars_.empty()) {
        throw ConfigError("vocab: empty character set");
    }
    for (std::size_t i = 0; i < chars_.size(); ++i) {
        const auto u = static_cast<unsigned char>(chars_[i]);
        if (u < 0x20 || u > 0x7e) {
            throw ConfigError("vocab: non-printable character code " + std::to_string(u));
        }
        if (index_[u] != -1) {
            throw ConfigError(std::string("vocab: duplicate character '") + chars_[i] + "'");
        }
        index_[u] = static_cast<int>(kNumControl + i);
    }
}

bool Vocab::covers(char c) const { return index_[static_cast<unsigned char>(c)] != -1; }

TokenSeq Vocab::encode(std::string_view text) const {
    TokenSeq out;
    out.reserve(text.size());
    std::string missing;
    for (char c : text) {
        const int idx = index_[static_cast<unsigned char>(c)];
        if (idx < 0) {
            if (missing.find(c) == std::string::npos) {
                missing += c;
            }
            continue;
        }
        out.push_back(static_cast<Token>(idx));
    }
    if (!missing.empty()) {
        std::string listed;
        for (char c : missing) {
            if (!listed.empty()) {
                listed += ", ";
            }
            const auto u = static_cast<unsigned char>(c);
            if (u >= 0x20 && u <= 0x7e) {
                listed += std::string("'") + c + "'";
            } else {
                listed += "\\x" + std::to_string(u);
            }
        }
        throw TokenizeError("uncovered characters: " + listed);
    }
    return out;
}

std::string Vocab::decode(std::span<const Token> tokens) const {
    std::string out;
    out.reserve(tokens.size());
    for (Token t : tokens) {
        if (is_control(t) || t < 0 || static_cast<std::size_t>(t) >= size()) {
            continue;
        }
        out += chars_[static_cast<std::size_t>(t) - kNumControl];
    }
    return out;
}

std::string Vocab::token_string(Token t) const {
    switch (t) {
    case kPad: return "<pad>";
    case kBos: return "<bos>";
    case kEos: return "<eos>";
    default: break;
    }
    if (t < 0 || static_cast<std::size_t>(t) >= size()) {
        return "<unk>";
    }
    return std::string(1, chars_[static_cast<std::size_t>(t) - kNumControl]);
}

} // namespace engorgio::lm
