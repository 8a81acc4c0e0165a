#pragma once

#include <functional>
#include <string>
#include <vector>

#include "dawn/data.hpp"
#include "dawn/model.hpp"

namespace dawn {

struct TrainConfig {
  double lr = 0.03;
  double momentum = 0.9;
  int64_t batch_size = 64;
  int epochs = 1;
  std::vector<int> decay_epochs;  // strictly increasing, within [1, epochs]
  double decay_factor = 0.1;
  double lambda1 = 0.1;  // Huber weight on the detail bands
  double lambda2 = 0.1;  // mean-preservation weight
  double huber_delta = 1.0;
  uint64_t seed = 0;
  double grad_clip = 0.0;  // global-norm clip; 0 disables
  AugmentPolicy augment;

  void validate() const;
};

/// Step-decay schedule: lr * decay_factor^(decay epochs reached). Epochs are
/// 1-based.
double lr_at(int epoch, const TrainConfig& config);

struct LossBreakdown {
  double total = 0;
  double cross_entropy = 0;
  double huber_reg = 0;  // lambda1 * sum of per-level terms
  double mean_reg = 0;   // lambda2 * sum of per-level terms
  std::vector<double> per_level_huber;  // unweighted
  std::vector<double> per_level_mean;   // unweighted
};

template <class T>
struct LossResult {
  Tensor<T> total;  // scalar graph node, backward-ready
  LossBreakdown breakdown;
};

/// Squared difference between the mean of a level's input and the mean of
/// its approximation band, both over all batch/channel/spatial elements.
template <class T>
Tensor<T> mean_reg_term(const Tensor<T>& level_input, const Tensor<T>& level_ll);

/// Cross-entropy plus the wavelet regularizers: lambda1 times the per-batch
/// mean Huber sum of each level's detail bands, lambda2 times the squared
/// difference between the means of each level's input and its approximation
/// band. Gradients flow through every term.
template <class T>
LossResult<T> composite_loss(const typename DawnModel<T>::ForwardResult& forward,
                             const std::vector<int>& labels, const TrainConfig& config);

/// Classical momentum: v = momentum * v + g; theta -= lr * v. No dampening,
/// no weight decay.
template <class T>
class SgdMomentum {
 public:
  SgdMomentum(std::vector<Parameter<T>> params, double lr, double momentum);

  void set_lr(double lr) { lr_ = lr; }
  double lr() const { return lr_; }
  void zero_grad();
  /// Optionally rescales gradients to a global norm bound first (0 = off).
  void step(double grad_clip = 0.0);

  const std::vector<std::vector<T>>& velocity() const { return velocity_; }

 private:
  std::vector<Parameter<T>> params_;
  std::vector<std::vector<T>> velocity_;
  double lr_;
  double momentum_;
};

struct EpochStats {
  int epoch = 0;
  double lr = 0;
  LossBreakdown loss;  // batch means
  double train_acc = 0;
  double test_acc = 0;
  double wall_seconds = 0;  // elapsed since training started
};

struct History {
  std::vector<EpochStats> epochs;

  static const char* csv_header();
  std::string to_csv() const;
  void write_csv(const std::string& path) const;
};

struct TrainOptions {
  /// When set, history.csv, best.ckpt and final.ckpt are written here.
  std::string out_dir;
  /// Injectable clock (seconds); keeps the CSV reproducible under test.
  std::function<double()> clock;
  bool verbose = false;
  /// Stop once this test accuracy is reached (0 disables early stop).
  double stop_at_test_acc = 0.0;
};

/// Full training loop: seeded shuffling, optional augmentation, composite
/// loss, SGD with momentum and step decay, per-epoch train/test accuracy.
/// Deterministic for a fixed seed in single-threaded execution. A non-finite
/// loss aborts with a diagnostic naming the offending term.
History train(DawnModel<float>& model, const Dataset& train_set, const Dataset& test_set,
              const TrainConfig& config, const TrainOptions& options = {});

/// Top-1 accuracy in eval mode.
double evaluate(DawnModel<float>& model, const Dataset& dataset);

/// Per-class accuracy in eval mode; entry i is the accuracy over samples of
/// class i (nan-free: classes without samples report 0).
std::vector<double> per_class_accuracy(DawnModel<float>& model, const Dataset& dataset);

}  // namespace dawn
