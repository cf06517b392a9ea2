#pragma once

#include <array>
#include <string>
#include <vector>

namespace filmnet::nn {

/// Single-task (thickness only) or multitask (thickness plus n and k heads).
enum class TaskMode { stl, mtl };

enum Head : int { kHeadD = 0, kHeadN = 1, kHeadK = 2 };
inline constexpr int kHeadCount = 3;

/// Valid convolution (stride 1) followed by non-overlapping max pooling that
/// drops any remainder.
struct ConvStage {
  int kernel = 1;
  int filters = 1;
  int pool = 1;

  friend bool operator==(const ConvStage&, const ConvStage&) = default;
};

struct NetworkConfig {
  int in_channels = 2;
  int in_length = 651;
  std::vector<ConvStage> conv{{8, 512, 3}, {5, 128, 3}, {3, 64, 2}, {3, 32, 2}};
  std::vector<int> d_head{2048, 1024, 512, 1};
  std::vector<int> n_head{2048, 1024, 651};
  std::vector<int> k_head{2048, 1024, 651};
  double dropout = 0.3;
  TaskMode mode = TaskMode::stl;
  std::array<double, 3> loss_weights{1.0, 1.0, 1.0};

  /// Four conv/pool stages and the dense heads listed above.
  static NetworkConfig full_scale(TaskMode mode = TaskMode::stl);

  bool head_active(int head) const { return head == kHeadD || mode == TaskMode::mtl; }
  const std::vector<int>& head_widths(int head) const;

  /// Convolution output length of every stage (before pooling).
  std::vector<int> conv_lengths() const;
  /// Pooled length of every stage.
  std::vector<int> pooled_lengths() const;
  int flatten_size() const;

  /// Throws ConfigError when a stage collapses to zero length, when widths are
  /// non-positive, or when the d head does not end in one unit / n, k heads
  /// do not end in in_length units.
  void validate() const;

  std::string to_json() const;
  static NetworkConfig from_json(const std::string& text);

  friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
};

}  // namespace filmnet::nn
