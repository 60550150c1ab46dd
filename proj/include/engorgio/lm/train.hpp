#pragma once

#include "engorgio/lm/model.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace engorgio::lm {

struct TrainConfig {
    std::size_t steps = 1500;
    std::size_t batch_size = 8;
    double learning_rate = 3e-3;
    std::size_t warmup_steps = 50;
    // Cosine decay floor as a fraction of the peak rate.
    double min_lr_ratio = 0.1;
    double grad_clip = 1.0;
    // Place each training sequence at a random offset inside the context
    // window so every learned position receives gradient.
    bool position_offset_augment = false;
    // Concatenate whole sequences (EOS-separated) into full-context windows
    // instead of training on one sequence per example. Overrides the offset
    // augmentation.
    bool pack_sequences = false;
    std::uint64_t seed = 0;

    void validate() const;
};

using TrainCallback = std::function<void(std::size_t step, double loss)>;

// Next-token cross-entropy training with Adam. Returns the mean per-token
// loss of every step's minibatch. Each sequence must end with EOS and fit in
// the context window.
std::vector<double> train(Model& model, std::span<const TokenSeq> corpus, const TrainConfig& config,
                          const TrainCallback& on_step = {});

// Mean per-token cross-entropy of the whole corpus (positions 2..n).
double corpus_loss(const Model& model, std::span<const TokenSeq> corpus);

} // namespace engorgio::lm
