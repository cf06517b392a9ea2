#pragma once

#include <filesystem>

#include "filmnet/nn/network.hpp"

namespace filmnet::nn {

/// "THKW1\0", u32 length + NetworkConfig JSON, the parameter arrays as f64 in
/// declaration order, the accumulators in the same order, then the u32 epoch
/// counter. Little-endian.
void save_checkpoint(const std::filesystem::path& path, const ModelWeights<double>& w);
ModelWeights<double> load_checkpoint(const std::filesystem::path& path);

/// Byte buffer versions of the above.
std::string serialize_checkpoint(const ModelWeights<double>& w);
ModelWeights<double> deserialize_checkpoint(const std::string& bytes, const std::string& source = "checkpoint");

/// Per-tensor comparison of two checkpoints with the same architecture.
struct CheckpointDiff {
  bool same_config = false;
  bool conv_identical = false;
  bool heads_identical = false;
  double max_abs_conv = 0.0;
  double max_abs_heads = 0.0;
};

CheckpointDiff diff_checkpoints(const ModelWeights<double>& a, const ModelWeights<double>& b);

/// Bitwise equality of every parameter, accumulator and the epoch counter.
bool bit_identical(const ModelWeights<double>& a, const ModelWeights<double>& b);

}  // namespace filmnet::nn
