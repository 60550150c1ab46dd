#include "engorgio/lm/corpus.hpp"

#include "engorgio/error.hpp"
#include "engorgio/rng.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <string_view>

namespace engorgio::lm {

namespace {

constexpr std::array<std::string_view, 16> kSubjects = {
    "the cat",  "a dog",     "my friend", "the old man", "she",       "he",     "we",       "they",
    "the bird", "a child",   "the king",  "our teacher", "the girl",  "a fox",  "the baker", "my sister"};
constexpr std::array<std::string_view, 16> kNames = {"Anna", "Bob", "Tom", "Mia", "Leo", "Ella", "Sam", "Nora",
                                                     "Max",  "Ivy", "Ben", "Zoe", "Eli", "Ada",  "Kim", "Ray"};
constexpr std::array<std::string_view, 16> kTransitive = {
    "sees",   "likes",    "finds", "wants", "helps", "paints", "reads", "opens",
    "cleans", "carries", "feeds", "calls", "hears", "draws",  "buys",  "visits"};
constexpr std::array<std::string_view, 8> kIntransitive = {"sleeps", "sings",  "laughs", "waits",
                                                           "runs",   "smiles", "sits",   "dances"};
constexpr std::array<std::string_view, 16> kObjects = {
    "the house", "a red ball", "the sea",    "an apple", "the book", "the park", "a small boat", "the door",
    "the moon",  "a letter",   "the garden", "a cake",   "the road", "the tree", "a blue cup",   "the window"};
constexpr std::array<std::string_view, 12> kAdverbials = {
    "today", "at night", "in the rain", "with joy", "again", "every day",
    "at noon", "slowly", "by the lake", "at home", "now", "in town"};
constexpr std::array<std::string_view, 6> kEndings = {".", ".", ".", ".", "!", "?"};

template <std::size_t N>
std::string_view pick(const std::array<std::string_view, N>& words, Rng& rng) {
    return words[rng.index(N)];
}

// Made-up name, e.g. "Kovarin": capitalized consonant/vowel alternation.
std::string invented_name(Rng& rng) {
    static constexpr std::string_view kConsonants = "bcdfghjklmnprstvwz";
    static constexpr std::string_view kVowels = "aeiou";
    const std::size_t len = 4 + rng.index(5);
    std::string out;
    for (std::size_t i = 0; i < len; ++i) {
        const std::string_view set = (i % 2 == 0) ? kConsonants : kVowels;
        out += set[rng.index(set.size())];
    }
    out[0] = static_cast<char>(out[0] - 'a' + 'A');
    return out;
}

std::string subject(Rng& rng, const CorpusStyle& style) {
    const double u = rng.uniform();
    if (u < style.invented_name_rate) {
        return invented_name(rng);
    }
    if (u < style.invented_name_rate + 0.18) {
        return std::string(pick(kNames, rng));
    }
    return std::string(pick(kSubjects, rng));
}

std::string clause(Rng& rng, const CorpusStyle& style) {
    std::string s = subject(rng, style);
    if (rng.uniform() < 0.7) {
        s += " ";
        s += pick(kTransitive, rng);
        s += " ";
        s += pick(kObjects, rng);
    } else {
        s += " ";
        s += pick(kIntransitive, rng);
    }
    if (rng.uniform() < 0.4) {
        s += " ";
        s += pick(kAdverbials, rng);
    }
    return s;
}

std::string sentence(Rng& rng, const CorpusStyle& style) {
    std::string s = clause(rng, style);
    if (rng.uniform() < style.conjunction_rate) {
        s += rng.uniform() < 0.5 ? " and " : ", but ";
        s += clause(rng, style);
    }
    if (rng.uniform() < style.punctuated_rate) {
        s += pick(kEndings, rng);
    }
    if (s[0] >= 'a' && s[0] <= 'z') {
        s[0] = static_cast<char>(s[0] - 'a' + 'A');
    }
    return s;
}

std::string chant(Rng& rng, const CorpusStyle& style) {
    static constexpr std::string_view kConsonants = "bcdfghjklmnprstvwz";
    static constexpr std::string_view kVowels = "aeiou";
    std::string unit;
    const std::size_t syllables = 1 + rng.index(2);
    for (std::size_t i = 0; i < syllables; ++i) {
        unit += kConsonants[rng.index(kConsonants.size())];
        unit += kVowels[rng.index(kVowels.size())];
    }
    const std::size_t target = kMinSentenceChars + rng.index(style.chant_max_chars - kMinSentenceChars);
    std::string s = unit;
    while (s.size() + 1 + unit.size() + 1 <= target) {
        s += " ";
        s += unit;
    }
    s += rng.uniform() < 0.5 ? "!" : ".";
    s[0] = static_cast<char>(s[0] - 'a' + 'A');
    return s;
}

} // namespace

std::vector<std::string> synthesize_corpus(std::size_t lines, std::uint64_t seed, const CorpusStyle& style) {
    if (style.chant_rate > 0.0 && style.chant_max_chars <= kMinSentenceChars) {
        throw ConfigError("corpus: chant_max_chars must exceed " + std::to_string(kMinSentenceChars));
    }
    Rng rng(seed);
    std::vector<std::string> out;
    out.reserve(lines);
    const std::size_t max_chars = std::max(kMaxSentenceChars, style.chant_max_chars);
    while (out.size() < lines) {
        std::string s = rng.uniform() < style.chant_rate ? chant(rng, style) : sentence(rng, style);
        if (s.size() >= kMinSentenceChars && s.size() <= max_chars) {
            out.push_back(std::move(s));
        }
    }
    return out;
}

std::vector<std::string> read_corpus(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open corpus file " + path.string());
    }
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (!line.empty()) {
            lines.push_back(line);
        }
    }
    return lines;
}

void write_corpus(const std::filesystem::path& path, std::span<const std::string> lines) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write corpus file " + path.string());
    }
    for (const std::string& l : lines) {
        out << l << '\n';
    }
}

std::vector<TokenSeq> encode_corpus(const Vocab& vocab, std::span<const std::string> lines) {
    std::vector<TokenSeq> out;
    out.reserve(lines.size());
    for (std::size_t i = 0; i < lines.size(); ++i) {
        TokenSeq seq;
        try {
            seq = vocab.encode(lines[i]);
        } catch (const TokenizeError& e) {
            throw TokenizeError("corpus line " + std::to_string(i + 1) + ": " + e.what());
        }
        seq.push_back(vocab.eos());
        out.push_back(std::move(seq));
    }
    return out;
}

CorpusSplit split_corpus(std::span<const std::string> lines, double heldout_fraction, std::uint64_t seed) {
    if (heldout_fraction < 0.0 || heldout_fraction >= 1.0) {
        throw ConfigError("corpus split: heldout_fraction must lie in [0, 1)");
    }
    std::vector<std::size_t> order(lines.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    Rng rng(seed);
    // Fisher-Yates
    for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[rng.index(i)]);
    }
    const auto n_held = static_cast<std::size_t>(heldout_fraction * static_cast<double>(lines.size()));
    CorpusSplit split;
    for (std::size_t i = 0; i < order.size(); ++i) {
        (i < n_held ? split.heldout : split.train).push_back(lines[order[i]]);
    }
    return split;
}

} // namespace engorgio::lm
