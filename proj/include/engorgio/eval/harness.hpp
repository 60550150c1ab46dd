#pragma once

#include "engorgio/lm/inference.hpp"
#include "engorgio/lm/model.hpp"
#include "engorgio/rng.hpp"

#include <cstdint>
#include <functional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace engorgio::eval {

struct EvalConfig {
    std::size_t n_samples = 100;
    // mode, temperature and seed base; sample i decodes with seed base + i
    lm::DecodeConfig decode;
    // Total length cap; 0 means the model's context window.
    std::size_t max_length = 0;
    // Worker threads; results do not depend on it.
    std::size_t jobs = 1;

    void validate() const;
};

struct SampleRecord {
    std::size_t index = 0;
    std::uint64_t seed = 0;
    std::size_t total_len = 0;
    std::size_t output_len = 0;
    lm::StopReason stop_reason = lm::StopReason::MaxLength;
};

struct EvalReport {
    std::size_t max_length = 0;
    std::vector<SampleRecord> samples;
    double avg_len = 0.0;         // prompt + output
    double avg_output_len = 0.0;
    double avg_rate = 0.0;        // fraction reaching max_length
    std::size_t eos_stops = 0;
    std::size_t max_length_stops = 0;
};

// Fills the aggregate fields of a report from its samples.
EvalReport aggregate(std::vector<SampleRecord> samples, std::size_t max_length);

EvalReport evaluate_prompt(const lm::Model& model, std::span<const Token> prompt, const EvalConfig& config);

// Sample i uses prompts[i % prompts.size()].
EvalReport evaluate_prompt_set(const lm::Model& model, std::span<const TokenSeq> prompts, const EvalConfig& config);

std::vector<EvalReport> sweep(const lm::Model& model, std::span<const Token> prompt, std::span<const double> temperatures,
                              const EvalConfig& config);

enum class BaselineKind { Normal, Special };

std::string baseline_kind_name(BaselineKind kind);
BaselineKind parse_baseline_kind(const std::string& name);

inline constexpr std::string_view kSpecialInstruction = "output longer";

// Normal: length-t prefixes of distinct corpus lines with at least t-2
// characters. Special: the instruction followed by corpus text (or the
// instruction repeated), cut to t tokens.
std::vector<TokenSeq> baseline_prompts(BaselineKind kind, const lm::Vocab& vocab, std::span<const std::string> corpus,
                                       std::size_t t, std::size_t count, Rng& rng);

struct SpongeConfig {
    std::size_t prompt_length = 32;
    std::size_t budget = 200;              // candidate evaluations
    std::size_t samples_per_estimate = 5;
};

struct SpongeResult {
    TokenSeq prompt;
    double best_score = 0.0;              // mean total length over the estimate samples
    std::vector<double> best_so_far;      // one entry per evaluated candidate
};

// Hill-climb over prompts: start from a random prompt, mutate one position
// per candidate, keep the candidate when its estimated mean length improves.
SpongeResult sponge_search(const lm::Model& model, const SpongeConfig& sponge, const EvalConfig& config, Rng& rng);

struct FilterReport {
    std::vector<double> attack_ppl;
    std::vector<double> legit_ppl;
    double threshold = 0.0;  // lowest attack perplexity
    double fpr = 0.0;        // legit share with ppl >= threshold

    double fpr_at(double threshold) const;
};

FilterReport perplexity_filter_eval(const lm::Model& model, std::span<const TokenSeq> legit,
                                    std::span<const TokenSeq> attack);

// One row per sample plus a trailing summary row.
void write_samples_csv(std::ostream& out, const EvalReport& report);

} // namespace engorgio::eval
