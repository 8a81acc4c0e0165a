#pragma once

#include <string>
#include <vector>

#include "dawn/tensor.hpp"

namespace dawn {

enum class Direction { horizontal, vertical };

/// BCHW axis a direction analyzes: horizontal steps work along W, vertical
/// along H.
inline int direction_axis(Direction d) { return d == Direction::horizontal ? 3 : 2; }

/// Trainable predictor/updater network: directional convolutions with
/// reflection padding, a depth-doubling convolution, and a 1x1 output
/// convolution back to the input depth. All strides are 1. With
/// `linear_mode` the relu/tanh activations are replaced by the identity,
/// which turns the network into a plain linear filter.
template <class T>
class PredictorUpdater {
 public:
  struct Conv {
    Tensor<T> weight;
    Tensor<T> bias;
  };

  PredictorUpdater() = default;
  PredictorUpdater(Direction direction, int64_t channels, int kernel_size, int hidden_layers,
                   bool linear_mode, Rng& rng);

  /// Zero-initialized variant; applying it yields zero everywhere, giving the
  /// lazy wavelet when used for both P and U.
  static PredictorUpdater zeros(Direction direction, int64_t channels, int kernel_size,
                                int hidden_layers, bool linear_mode);

  /// Spatial shape is preserved: each directional convolution is preceded by
  /// k-1 reflection padding along the analysis direction (split floor/ceil).
  Tensor<T> apply(const Tensor<T>& input) const;

  Direction direction() const { return direction_; }
  int64_t channels() const { return channels_; }
  int kernel_size() const { return kernel_size_; }
  int hidden_layers() const { return hidden_layers_; }
  bool linear_mode() const { return linear_mode_; }
  void set_linear_mode(bool on) { linear_mode_ = on; }

  /// convs()[0..h-2] keep depth C, convs()[h-1] expands to 2C; conv_out is
  /// the 1x1 back to C.
  std::vector<Conv>& convs() { return convs_; }
  const std::vector<Conv>& convs() const { return convs_; }
  Conv& conv_out() { return out_; }
  const Conv& conv_out() const { return out_; }

  void collect_parameters(const std::string& prefix, std::vector<Parameter<T>>& out) const;
  int64_t parameter_count() const;

 private:
  Direction direction_ = Direction::horizontal;
  int64_t channels_ = 0;
  int kernel_size_ = 3;
  int hidden_layers_ = 1;
  bool linear_mode_ = false;
  std::vector<Conv> convs_;
  Conv out_;
};

/// One directional lifting step: update the even polyphase samples from the
/// odd ones, then predict the odd samples from the approximation.
///   c = x_e + U(x_o)
///   d = x_o - P(c)
/// The inverse reverses the ladder exactly for arbitrary P and U.
template <class T>
struct LiftingStep {
  Direction direction = Direction::horizontal;
  PredictorUpdater<T> updater;
  PredictorUpdater<T> predictor;

  LiftingStep() = default;
  LiftingStep(Direction direction, int64_t channels, int kernel_size, int hidden_layers,
              bool linear_mode, Rng& rng);

  struct Bands {
    Tensor<T> approx;  // c
    Tensor<T> detail;  // d
  };

  Bands forward(const Tensor<T>& input) const;
  Tensor<T> inverse(const Tensor<T>& approx, const Tensor<T>& detail) const;

  void collect_parameters(const std::string& prefix, std::vector<Parameter<T>>& out) const;
};

/// One 2D decomposition level: a horizontal lifting step followed by two
/// independent vertical steps, producing LL/LH/HL/HH at half the spatial
/// size. First sub-band letter is the horizontal band, second the vertical.
template <class T>
struct Lifting2D {
  LiftingStep<T> horizontal;
  LiftingStep<T> vertical_low;
  LiftingStep<T> vertical_high;

  Lifting2D() = default;
  Lifting2D(int64_t channels, int kernel_size, int hidden_layers, bool linear_mode, Rng& rng);

  struct Subbands {
    Tensor<T> ll, lh, hl, hh;
  };

  Subbands forward(const Tensor<T>& input) const;
  Tensor<T> inverse(const Subbands& bands) const;

  void collect_parameters(const std::string& prefix, std::vector<Parameter<T>>& out) const;
};

/// Reconstruction-quality metrics of one step on one input, reported as
/// plain numbers and never added to a training objective. loss_p is the
/// squared prediction residual (equal to the squared detail coefficients);
/// loss_u measures how far the updater is from the even/odd difference.
template <class T>
struct StepDiagnostics {
  double loss_p = 0;
  double loss_u = 0;
};

template <class T>
StepDiagnostics<T> diagnostic_losses(const LiftingStep<T>& step, const Tensor<T>& input);

}  // namespace dawn
