#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace engorgio {

using Token = std::int32_t;
using TokenSeq = std::vector<Token>;

// Architecture record of the decoder-only model. Shared by the model
// itself, its checkpoint format and the FLOPs accounting.
struct ModelDims {
    std::size_t vocab = 64;
    std::size_t hidden = 64;
    std::size_t layers = 2;
    std::size_t heads = 2;
    std::size_t max_context = 128;
    std::size_t mlp_ratio = 4;

    std::size_t head_dim() const { return hidden / heads; }
    std::size_t mlp_hidden() const { return hidden * mlp_ratio; }

    // Throws ConfigError naming the offending field.
    void validate() const;

    bool operator==(const ModelDims&) const = default;
};

} // namespace engorgio
