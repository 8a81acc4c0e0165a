#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dawn {

using Shape = std::vector<int64_t>;

int64_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

/// Deterministic random stream. Wraps a fixed 64-bit generator and maps its
/// output to floating point by hand so results are identical across standard
/// library implementations.
class Rng {
 public:
  explicit Rng(uint64_t seed);

  uint64_t next_u64();
  /// Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi);
  /// Standard normal via Box-Muller.
  double normal();
 private:
  uint64_t state_[4];
};

/// Reverse-mode autodiff is recorded only while grad mode is on.
bool grad_enabled();

struct NoGradGuard {
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

/// Dense row-major tensor with optional gradient tracking. Copies are
/// shallow (shared node); ops build a reverse-mode graph while grad mode
/// is on and any operand requires a gradient.
template <class T>
class Tensor {
 public:
  struct Node {
    Shape shape;
    std::vector<T> value;
    std::vector<T> grad;  // allocated on first use
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward_fn;

    void ensure_grad() {
      if (grad.size() != value.size()) grad.assign(value.size(), T(0));
    }
  };

  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, T value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<T> data, bool requires_grad = false);
  static Tensor scalar(T value, bool requires_grad = false);
  /// Uniform fill in [lo, hi).
  static Tensor uniform(Shape shape, T lo, T hi, Rng& rng, bool requires_grad = false);
  static Tensor randn(Shape shape, T stddev, Rng& rng, bool requires_grad = false);
  /// He/Kaiming uniform: bound sqrt(6 / fan_in).
  static Tensor he_uniform(Shape shape, int64_t fan_in, Rng& rng, bool requires_grad = true);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return checked()->shape; }
  int ndim() const { return static_cast<int>(checked()->shape.size()); }
  int64_t dim(int i) const { return checked()->shape.at(static_cast<size_t>(i)); }
  int64_t numel() const { return static_cast<int64_t>(checked()->value.size()); }

  std::span<T> data() { return {checked()->value.data(), checked()->value.size()}; }
  std::span<const T> data() const { return {checked()->value.data(), checked()->value.size()}; }
  T item() const;

  bool requires_grad() const { return defined() && node_->requires_grad; }
  void set_requires_grad(bool value);
  /// Gradient buffer; allocates (zeroed) on first access.
  std::span<T> grad();
  std::span<const T> grad() const;
  void zero_grad();

  /// Reverse pass from a scalar tensor. Gradients accumulate additively into
  /// every reachable tensor with requires_grad set.
  void backward();

  /// Throws if any value is NaN or infinite. `what` names the tensor in the
  /// error message.
  void check_finite(const char* what) const;

  /// Deep copy of values; the copy is a leaf with no history.
  Tensor clone() const;

  std::shared_ptr<Node> node() const { return node_; }
  static Tensor wrap(std::shared_ptr<Node> node) {
    Tensor t;
    t.node_ = std::move(node);
    return t;
  }

 private:
  const std::shared_ptr<Node>& checked() const {
    if (!node_) throw std::runtime_error("use of undefined tensor");
    return node_;
  }

  std::shared_ptr<Node> node_;
};

/// Named trainable tensor. Names are dotted paths, unique within a model.
template <class T>
struct Parameter {
  std::string name;
  Tensor<T> tensor;
};

// ---- differentiable operations -------------------------------------------

/// Cross-correlation (no kernel flip), no implicit padding.
/// input [B,C,H,W], weight [F,C,kh,kw], optional bias [F].
template <class T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias,
                 int stride_h = 1, int stride_w = 1);

/// Reflection padding on the spatial dims, border sample not repeated:
/// pad 1 left of [a,b,c] gives [b,a,b,c]. Each pad amount must be smaller
/// than the corresponding extent.
template <class T>
Tensor<T> reflect_pad(const Tensor<T>& input, int top, int bottom, int left, int right);

template <class T>
Tensor<T> zero_pad(const Tensor<T>& input, int top, int bottom, int left, int right);

/// Mean over non-overlapping p x p windows; H and W must be divisible by p.
template <class T>
Tensor<T> avg_pool(const Tensor<T>& input, int p);

/// [B,C,H,W] -> [B,C], mean over all spatial positions.
template <class T>
Tensor<T> global_avg_pool(const Tensor<T>& input);

template <class T>
struct BatchNormState {
  Tensor<T> scale;  // gamma, trainable
  Tensor<T> shift;  // beta, trainable
  std::vector<T> running_mean;
  std::vector<T> running_var;
  T momentum = T(0.1);
  T eps = T(1e-5);

  static BatchNormState make(int64_t channels);
};

/// Training mode normalizes with batch statistics (over B*H*W per channel)
/// and updates running stats; eval mode uses running stats. Training mode
/// requires B*H*W >= 2.
template <class T>
Tensor<T> batch_norm(const Tensor<T>& input, BatchNormState<T>& state, bool training);

template <class T>
Tensor<T> relu(const Tensor<T>& input);

template <class T>
Tensor<T> tanh_act(const Tensor<T>& input);

/// input [B,N] * weight [P,N]^T + bias [P] -> [B,P].
template <class T>
Tensor<T> dense(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias);

/// Row-wise, max-subtracted for stability.
template <class T>
Tensor<T> log_softmax(const Tensor<T>& input);

template <class T>
Tensor<T> concat(const std::vector<Tensor<T>>& inputs, int axis);

/// Even-indexed (0,2,4,...) slices along `axis`; extent must be even.
template <class T>
Tensor<T> take_even(const Tensor<T>& input, int axis);

template <class T>
Tensor<T> take_odd(const Tensor<T>& input, int axis);

template <class T>
std::pair<Tensor<T>, Tensor<T>> split_even_odd(const Tensor<T>& input, int axis);

/// Inverse of split_even_odd: interleaves even/odd along `axis`.
template <class T>
Tensor<T> interleave(const Tensor<T>& even, const Tensor<T>& odd, int axis);

template <class T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);

template <class T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);

template <class T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);

template <class T>
Tensor<T> scale(const Tensor<T>& a, T factor);

template <class T>
Tensor<T> sum(const Tensor<T>& a);

template <class T>
Tensor<T> mean_all(const Tensor<T>& a);

template <class T>
Tensor<T> sum_squares(const Tensor<T>& a);

/// Sum of the Huber penalty: x^2/2 for |x| <= delta, delta*(|x|-delta/2) above.
template <class T>
Tensor<T> huber_sum(const Tensor<T>& a, T delta);

/// Mean over the batch of -log_probs[b, labels[b]].
template <class T>
Tensor<T> nll_loss(const Tensor<T>& log_probs, const std::vector<int>& labels);

}  // namespace dawn
