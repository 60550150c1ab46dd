#pragma once

#include "engorgio/autodiff/tensor.hpp"
#include "engorgio/dims.hpp"
#include "engorgio/lm/model.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace engorgio::lm {

// Binary tensor container shared by model and proxy checkpoints:
//
//   magic     8 bytes  "ENGORGIO"
//   version   u32      1
//   kind      u32      1 = model, 2 = proxy distribution
//   dims      6 x u64  vocab, hidden, layers, heads, max_context, mlp_ratio
//   count     u64      number of tensors
//   tensors   count x { rank: u32, extent: rank x u64, data: f64[] }
//
// All integers and floats are little-endian.
enum class ContainerKind : std::uint32_t { Model = 1, Proxy = 2 };

inline constexpr std::uint32_t kContainerVersion = 1;

struct TensorContainer {
    ContainerKind kind = ContainerKind::Model;
    ModelDims dims;
    std::vector<ad::Tensor> tensors;
};

void write_container(const std::filesystem::path& path, const TensorContainer& container);
TensorContainer read_container(const std::filesystem::path& path);

// Path of the JSON sidecar next to a binary checkpoint ("x.bin" -> "x.bin.json").
std::filesystem::path sidecar_path(const std::filesystem::path& path);

// Writes the binary container plus a JSON sidecar holding dims, vocabulary
// and the parameter name/shape table.
void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

} // namespace engorgio::lm
