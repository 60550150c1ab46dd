#pragma once

#include "engorgio/dims.hpp"
#include "engorgio/lm/vocab.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace engorgio::lm {

inline constexpr std::size_t kMinSentenceChars = 8;
inline constexpr std::size_t kMaxSentenceChars = 48;

struct CorpusStyle {
    double invented_name_rate = 0.12;
    double conjunction_rate = 0.3;
    double punctuated_rate = 1.0;
    // Share of lines that repeat one short syllable group, e.g. "Ha ha ha ha!".
    double chant_rate = 0.0;
    std::size_t chant_max_chars = kMaxSentenceChars;
};

// Short declarative sentences over the default charset, each 8..48 chars.
// Invented proper names keep the per-line perplexity spread realistic.
std::vector<std::string> synthesize_corpus(std::size_t lines, std::uint64_t seed, const CorpusStyle& style = {});

// UTF-8 text, one document per line. Blank lines and trailing '\r' are dropped.
std::vector<std::string> read_corpus(const std::filesystem::path& path);
void write_corpus(const std::filesystem::path& path, std::span<const std::string> lines);

// Tokenizes every line and appends EOS.
std::vector<TokenSeq> encode_corpus(const Vocab& vocab, std::span<const std::string> lines);

struct CorpusSplit {
    std::vector<std::string> train;
    std::vector<std::string> heldout;
};

// Deterministic shuffle-and-split.
CorpusSplit split_corpus(std::span<const std::string> lines, double heldout_fraction, std::uint64_t seed);

} // namespace engorgio::lm
