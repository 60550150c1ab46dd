#pragma once

#include "engorgio/dims.hpp"

#include <span>
#include <string>
#include <string_view>

namespace engorgio::lm {

// Character-level vocabulary. Indices 0..2 are the PAD, BOS and EOS control
// tokens; the rest map one-to-one onto printable ASCII characters.
class Vocab {
public:
    static constexpr Token kPad = 0;
    static constexpr Token kBos = 1;
    static constexpr Token kEos = 2;
    static constexpr std::size_t kNumControl = 3;

    // 64 entries: controls, space, a-z, A-Z and ".,!?:;'-".
    static Vocab default_charset();

    // chars must be unique, printable and non-empty.
    explicit Vocab(std::string chars);

    std::size_t size() const { return kNumControl + chars_.size(); }
    Token pad() const { return kPad; }
    Token bos() const { return kBos; }
    Token eos() const { return kEos; }
    bool is_control(Token t) const { return t >= 0 && t < static_cast<Token>(kNumControl); }
    bool covers(char c) const;

    // Throws TokenizeError listing every uncovered character.
    TokenSeq encode(std::string_view text) const;
    // Control tokens are skipped.
    std::string decode(std::span<const Token> tokens) const;

    // Display form of one token ("<eos>" for controls).
    std::string token_string(Token t) const;

    const std::string& chars() const { return chars_; }

    bool operator==(const Vocab&) const = default;

private:
    std::string chars_;
    int index_[256];
};

} // namespace engorgio::lm
