#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dawn/lifting.hpp"

namespace dawn {

/// Number of decomposition levels for a square input: floor(log2(i_s)) - 2,
/// so the final feature maps are no smaller than 4x4. Throws for i_s < 8.
int compute_levels(int64_t input_size);

struct DawnConfig {
  int64_t input_channels = 3;
  int64_t input_size = 32;
  /// Depth of the two initial Conv-BN-ReLU blocks; 0 removes the block and
  /// the lifting stack runs on the raw channels.
  int64_t init_channels = 16;
  /// Decomposition levels; kAutoLevels resolves to compute_levels(input_size).
  int levels = kAutoLevels;
  int kernel_size = 3;
  int hidden_layers = 1;
  int64_t num_classes = 10;

  static constexpr int kAutoLevels = -1;

  int resolved_levels() const;
  /// Channel count entering (and preserved through) the lifting stack.
  int64_t lifting_channels() const { return init_channels > 0 ? init_channels : input_channels; }
  /// Classifier input width: three pooled detail bands per level plus the
  /// final approximation band.
  int64_t head_width() const;
  void validate() const;
};

struct ParamBreakdown {
  int64_t initial = 0;
  std::vector<int64_t> per_level;
  int64_t classifier = 0;

  int64_t lifting() const;
  int64_t total() const;
};

/// Closed-form count of trainable scalars under this project's conventions:
/// initial convolutions carry no bias (batch norm follows), lifting
/// convolutions are biased, batch norm contributes scale and shift per
/// channel, the dense layer is biased.
ParamBreakdown param_count(const DawnConfig& config);

/// Reference parameter count reported for the original DAWN model when
/// (kernel_size, hidden_layers, levels) matches one of its published
/// 64-init / 100-class / 32px configurations.
std::optional<int64_t> published_reference_count(const DawnConfig& config);

template <class T>
struct ConvBnBlock {
  Tensor<T> conv_weight;  // bias-free, batch norm follows
  BatchNormState<T> bn;
};

/// The full classifier: initial Conv-BN-ReLU pair, stacked 2D lifting
/// levels, global-average-pooled detail head, dense + log-softmax.
template <class T>
class DawnModel {
 public:
  DawnModel() = default;

  /// Deterministic initialization from the seed: He-uniform conv/dense
  /// weights, zero biases, batch-norm scale 1 / shift 0.
  static DawnModel build(const DawnConfig& config, uint64_t seed);

  struct LevelOutput {
    Tensor<T> input;  // what entered this level; feeds the mean-preservation term
    typename Lifting2D<T>::Subbands bands;
  };

  struct ForwardResult {
    Tensor<T> log_probs;                   // [B, num_classes]
    std::vector<LevelOutput> levels;       // one entry per decomposition level
  };

  /// Training mode uses batch statistics in the initial block's batch norm
  /// and updates its running stats; eval mode is a pure function.
  ForwardResult forward(const Tensor<T>& batch, bool training);

  const DawnConfig& config() const { return config_; }
  bool has_initial_block() const { return config_.init_channels > 0; }

  /// Trainable parameters in a fixed, deterministic order; names are unique
  /// dotted paths.
  std::vector<Parameter<T>> parameters() const;

  struct BufferRef {
    std::string name;
    std::vector<T>* data;
  };
  /// Non-trainable state (batch-norm running stats); checkpointed alongside
  /// the parameters.
  std::vector<BufferRef> buffers();

  /// One line per parameter: name, shape, element count; deterministic order
  /// for diffing. Ends with the total.
  std::string describe() const;
  int64_t parameter_total() const;

  std::vector<Lifting2D<T>>& levels() { return levels_; }
  const std::vector<Lifting2D<T>>& levels() const { return levels_; }

 private:
  DawnConfig config_;
  ConvBnBlock<T> block1_, block2_;
  std::vector<Lifting2D<T>> levels_;
  Tensor<T> fc_weight_, fc_bias_;
};

}  // namespace dawn
