#pragma once

#include "engorgio/attack/optimize.hpp"
#include "engorgio/cost/service.hpp"
#include "engorgio/dims.hpp"
#include "engorgio/eval/harness.hpp"
#include "engorgio/lm/corpus.hpp"
#include "engorgio/lm/train.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace engorgio::cli {

struct TrainSection {
    ModelDims dims;
    lm::TrainConfig config;  // seed is derived from the top-level seed
    std::size_t corpus_lines = 2000;
    double heldout_fraction = 0.2;
    lm::CorpusStyle style;
};

struct EvalSection {
    // "bundle" | "normal" | "special" | "sponge"
    std::string source = "bundle";
    std::size_t n_samples = 100;
    std::string mode = "sample";
    double temperature = 0.1;
    std::size_t max_length = 0;
    std::size_t jobs = 1;
    std::size_t n_prompts = 100;
    eval::SpongeConfig sponge;  // prompt_length follows attack.prompt_length
    // Deployment-time prefix/infix; unset means the bundle's own.
    std::optional<std::string> deploy_prefix;
    std::optional<std::string> deploy_infix;
    std::vector<double> temperatures{0.1, 0.3, 0.5, 0.7};
    std::string tag;
};

struct ServiceSection {
    cost::ServiceModel model;
    std::vector<std::int64_t> grid_attackers{0, 1, 2, 5};
    std::vector<std::int64_t> grid_capacities{1, 2, 4, 8};
    std::vector<std::size_t> flops_out_lens;  // empty: 0..S-t in steps of 8
};

struct ExperimentConfig {
    std::uint64_t seed = 0;
    std::string output_dir = "out";
    // Empty paths resolve inside output_dir.
    std::string model;
    std::string corpus;
    std::string heldout;
    std::string bundle;
    TrainSection train;
    attack::AttackConfig attack;
    EvalSection eval;
    ServiceSection service;
    std::vector<std::string> report_inputs;

    std::filesystem::path out_path() const { return output_dir; }
    std::filesystem::path model_path() const;
    std::filesystem::path heldout_path() const;
    std::filesystem::path bundle_path() const;

    attack::AttackConfig attack_config() const;  // with derived seed
    lm::TrainConfig train_config() const;        // with derived seed
    eval::EvalConfig eval_config() const;        // with derived seed base
};

// Strict reader: unknown keys and wrong types throw ConfigError naming the
// dotted field path. Missing keys keep their defaults.
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& c);

ExperimentConfig load_config(const std::filesystem::path& path);

} // namespace engorgio::cli
