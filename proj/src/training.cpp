#include "dawn/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>

#include "dawn/checkpoint.hpp"

namespace dawn {

void TrainConfig::validate() const {
  if (lr <= 0) throw std::invalid_argument("train config: lr must be positive");
  if (momentum < 0 || momentum >= 1)
    throw std::invalid_argument("train config: momentum must be in [0,1)");
  if (batch_size < 1) throw std::invalid_argument("train config: batch_size must be >= 1");
  if (epochs < 1) throw std::invalid_argument("train config: epochs must be >= 1");
  if (decay_factor <= 0 || decay_factor > 1)
    throw std::invalid_argument("train config: decay_factor must be in (0,1]");
  if (lambda1 < 0 || lambda2 < 0)
    throw std::invalid_argument("train config: lambda weights must be >= 0");
  if (huber_delta <= 0) throw std::invalid_argument("train config: huber_delta must be positive");
  for (size_t i = 0; i < decay_epochs.size(); ++i) {
    if (decay_epochs[i] < 1 || decay_epochs[i] > epochs)
      throw std::invalid_argument("train config: decay epoch " +
                                  std::to_string(decay_epochs[i]) + " outside [1," +
                                  std::to_string(epochs) + "]");
    if (i > 0 && decay_epochs[i] <= decay_epochs[i - 1])
      throw std::invalid_argument("train config: decay epochs must be strictly increasing");
  }
}

double lr_at(int epoch, const TrainConfig& config) {
  if (epoch < 1) throw std::invalid_argument("lr_at: epoch must be >= 1");
  int drops = 0;
  for (int e : config.decay_epochs)
    if (e <= epoch) ++drops;
  return config.lr * std::pow(config.decay_factor, drops);
}

template <class T>
Tensor<T> mean_reg_term(const Tensor<T>& level_input, const Tensor<T>& level_ll) {
  Tensor<T> diff = sub(mean_all(level_input), mean_all(level_ll));
  return mul(diff, diff);
}

template Tensor<float> mean_reg_term(const Tensor<float>&, const Tensor<float>&);
template Tensor<double> mean_reg_term(const Tensor<double>&, const Tensor<double>&);

template <class T>
LossResult<T> composite_loss(const typename DawnModel<T>::ForwardResult& forward,
                             const std::vector<int>& labels, const TrainConfig& config) {
  LossResult<T> result;
  Tensor<T> total = nll_loss(forward.log_probs, labels);
  result.breakdown.cross_entropy = static_cast<double>(total.item());

  Tensor<T> huber_total, mean_total;
  for (const auto& level : forward.levels) {
    // Per-element mean of the Huber penalty over the concatenated detail
    // bands; keeps the lambda scale independent of batch size and level
    // resolution.
    const int64_t detail_count =
        level.bands.lh.numel() + level.bands.hl.numel() + level.bands.hh.numel();
    Tensor<T> h = scale(add(add(huber_sum(level.bands.lh, static_cast<T>(config.huber_delta)),
                                huber_sum(level.bands.hl, static_cast<T>(config.huber_delta))),
                            huber_sum(level.bands.hh, static_cast<T>(config.huber_delta))),
                        T(1) / static_cast<T>(detail_count));
    result.breakdown.per_level_huber.push_back(static_cast<double>(h.item()));
    huber_total = huber_total.defined() ? add(huber_total, h) : h;

    Tensor<T> m = mean_reg_term(level.input, level.bands.ll);
    result.breakdown.per_level_mean.push_back(static_cast<double>(m.item()));
    mean_total = mean_total.defined() ? add(mean_total, m) : m;
  }

  if (huber_total.defined() && config.lambda1 > 0)
    total = add(total, scale(huber_total, static_cast<T>(config.lambda1)));
  if (mean_total.defined() && config.lambda2 > 0)
    total = add(total, scale(mean_total, static_cast<T>(config.lambda2)));

  double huber_sum_value = 0, mean_sum_value = 0;
  for (double v : result.breakdown.per_level_huber) huber_sum_value += v;
  for (double v : result.breakdown.per_level_mean) mean_sum_value += v;
  result.breakdown.huber_reg = config.lambda1 * huber_sum_value;
  result.breakdown.mean_reg = config.lambda2 * mean_sum_value;
  result.breakdown.total = static_cast<double>(total.item());
  result.total = total;
  return result;
}

template LossResult<float> composite_loss(const DawnModel<float>::ForwardResult&,
                                          const std::vector<int>&, const TrainConfig&);
template LossResult<double> composite_loss(const DawnModel<double>::ForwardResult&,
                                           const std::vector<int>&, const TrainConfig&);

template <class T>
SgdMomentum<T>::SgdMomentum(std::vector<Parameter<T>> params, double lr, double momentum)
    : params_(std::move(params)), lr_(lr), momentum_(momentum) {
  velocity_.reserve(params_.size());
  for (const auto& p : params_)
    velocity_.emplace_back(static_cast<size_t>(p.tensor.numel()), T(0));
}

template <class T>
void SgdMomentum<T>::zero_grad() {
  for (auto& p : params_) p.tensor.zero_grad();
}

template <class T>
void SgdMomentum<T>::step(double grad_clip) {
  if (grad_clip > 0) {
    double norm_sq = 0;
    for (auto& p : params_)
      for (T g : p.tensor.grad()) norm_sq += static_cast<double>(g) * static_cast<double>(g);
    const double norm = std::sqrt(norm_sq);
    if (norm > grad_clip) {
      const T factor = static_cast<T>(grad_clip / norm);
      for (auto& p : params_)
        for (T& g : p.tensor.grad()) g *= factor;
    }
  }
  for (size_t i = 0; i < params_.size(); ++i) {
    auto grad = params_[i].tensor.grad();
    auto values = params_[i].tensor.data();
    auto& vel = velocity_[i];
    const T m = static_cast<T>(momentum_);
    const T lr = static_cast<T>(lr_);
    for (size_t j = 0; j < vel.size(); ++j) {
      vel[j] = m * vel[j] + grad[j];
      values[j] -= lr * vel[j];
    }
  }
}

template class SgdMomentum<float>;
template class SgdMomentum<double>;

// ---- history ---------------------------------------------------------------------

const char* History::csv_header() {
  return "epoch,lr,loss_total,loss_ce,loss_huber,loss_mean,train_acc,test_acc,wall_seconds";
}

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace

std::string History::to_csv() const {
  std::string out = csv_header();
  out += '\n';
  for (const auto& e : epochs) {
    out += std::to_string(e.epoch);
    out += ',';
    out += fmt_double(e.lr);
    out += ',';
    out += fmt_double(e.loss.total);
    out += ',';
    out += fmt_double(e.loss.cross_entropy);
    out += ',';
    out += fmt_double(e.loss.huber_reg);
    out += ',';
    out += fmt_double(e.loss.mean_reg);
    out += ',';
    out += fmt_double(e.train_acc);
    out += ',';
    out += fmt_double(e.test_acc);
    out += ',';
    out += fmt_double(e.wall_seconds);
    out += '\n';
  }
  return out;
}

void History::write_csv(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  os << to_csv();
}

// ---- loops ------------------------------------------------------------------------

namespace {

uint64_t derive_stream(uint64_t seed, uint64_t tag, uint64_t index) {
  uint64_t mix = seed ^ (tag * 0x9e3779b97f4a7c15ULL);
  mix = mix * 0x100000001b3ULL ^ index;
  return mix;
}

int argmax_row(const float* row, int64_t width) {
  int best = 0;
  for (int64_t i = 1; i < width; ++i)
    if (row[i] > row[best]) best = static_cast<int>(i);
  return best;
}

struct AccuracyCounts {
  std::vector<int64_t> correct, total;
};

AccuracyCounts eval_counts(DawnModel<float>& model, const Dataset& dataset) {
  NoGradGuard guard;
  const int64_t classes = dataset.num_classes();
  AccuracyCounts counts{std::vector<int64_t>(static_cast<size_t>(classes), 0),
                        std::vector<int64_t>(static_cast<size_t>(classes), 0)};
  const int64_t n = dataset.size();
  const int64_t step = 64;
  for (int64_t start = 0; start < n; start += step) {
    std::vector<int64_t> idx;
    for (int64_t i = start; i < std::min(n, start + step); ++i) idx.push_back(i);
    auto batch = dataset.gather_images(idx);
    auto labels = dataset.gather_labels(idx);
    auto out = model.forward(batch, false);
    const int64_t width = out.log_probs.dim(1);
    for (size_t r = 0; r < idx.size(); ++r) {
      const int pred =
          argmax_row(out.log_probs.data().data() + static_cast<int64_t>(r) * width, width);
      const auto cls = static_cast<size_t>(labels[r]);
      ++counts.total[cls];
      if (pred == labels[r]) ++counts.correct[cls];
    }
  }
  return counts;
}

}  // namespace

double evaluate(DawnModel<float>& model, const Dataset& dataset) {
  if (dataset.size() == 0) throw std::invalid_argument("evaluate: empty dataset");
  auto counts = eval_counts(model, dataset);
  const double correct = static_cast<double>(
      std::accumulate(counts.correct.begin(), counts.correct.end(), int64_t(0)));
  return correct / static_cast<double>(dataset.size());
}

std::vector<double> per_class_accuracy(DawnModel<float>& model, const Dataset& dataset) {
  auto counts = eval_counts(model, dataset);
  std::vector<double> out(counts.total.size(), 0.0);
  for (size_t i = 0; i < out.size(); ++i)
    if (counts.total[i] > 0)
      out[i] = static_cast<double>(counts.correct[i]) / static_cast<double>(counts.total[i]);
  return out;
}

History train(DawnModel<float>& model, const Dataset& train_set, const Dataset& test_set,
              const TrainConfig& config, const TrainOptions& options) {
  config.validate();
  train_set.validate();
  test_set.validate();
  if (train_set.size() == 0) throw std::invalid_argument("train: empty training set");
  if (train_set.num_classes() != model.config().num_classes)
    throw std::invalid_argument("train: dataset has " + std::to_string(train_set.num_classes()) +
                                " classes, model expects " +
                                std::to_string(model.config().num_classes));

  auto clock = options.clock;
  if (!clock) {
    const auto start = std::chrono::steady_clock::now();
    clock = [start]() {
      return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    };
  }
  const double time_zero = clock();

  SgdMomentum<float> optimizer(model.parameters(), config.lr, config.momentum);
  const int64_t n = train_set.size();
  History history;
  double best_test_acc = -1;

  if (!options.out_dir.empty()) std::filesystem::create_directories(options.out_dir);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    optimizer.set_lr(lr_at(epoch, config));

    // seed-determined order, independent of any earlier RNG consumption
    std::vector<int64_t> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), int64_t(0));
    Rng shuffle_rng(derive_stream(config.seed, 0x51, static_cast<uint64_t>(epoch)));
    for (int64_t i = n - 1; i > 0; --i) {
      const int64_t j = static_cast<int64_t>(shuffle_rng.next_u64() %
                                             static_cast<uint64_t>(i + 1));
      std::swap(order[static_cast<size_t>(i)], order[static_cast<size_t>(j)]);
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.lr = optimizer.lr();
    int64_t correct = 0;
    int64_t batches = 0;

    for (int64_t start = 0; start < n; start += config.batch_size) {
      const int64_t batch_index = start / config.batch_size;
      std::vector<int64_t> idx(order.begin() + start,
                               order.begin() + std::min(n, start + config.batch_size));
      Tensor<float> images = train_set.gather_images(idx);
      if (config.augment.active()) {
        Rng aug_rng = augment_stream(config.seed, epoch, batch_index);
        images = augment_batch(images, config.augment, aug_rng);
      }
      const std::vector<int> labels = train_set.gather_labels(idx);

      optimizer.zero_grad();
      auto forward = model.forward(images, true);
      auto loss = composite_loss<float>(forward, labels, config);

      if (!std::isfinite(loss.breakdown.total)) {
        std::string term = "total";
        if (!std::isfinite(loss.breakdown.cross_entropy)) term = "cross_entropy";
        for (size_t l = 0; l < loss.breakdown.per_level_huber.size(); ++l)
          if (!std::isfinite(loss.breakdown.per_level_huber[l]))
            term = "huber level " + std::to_string(l);
        for (size_t l = 0; l < loss.breakdown.per_level_mean.size(); ++l)
          if (!std::isfinite(loss.breakdown.per_level_mean[l]))
            term = "mean level " + std::to_string(l);
        throw std::runtime_error("non-finite loss term '" + term + "' at epoch " +
                                 std::to_string(epoch) + ", batch " +
                                 std::to_string(batch_index));
      }

      loss.total.backward();
      optimizer.step(config.grad_clip);

      stats.loss.total += loss.breakdown.total;
      stats.loss.cross_entropy += loss.breakdown.cross_entropy;
      stats.loss.huber_reg += loss.breakdown.huber_reg;
      stats.loss.mean_reg += loss.breakdown.mean_reg;
      if (stats.loss.per_level_huber.size() < loss.breakdown.per_level_huber.size()) {
        stats.loss.per_level_huber.resize(loss.breakdown.per_level_huber.size(), 0.0);
        stats.loss.per_level_mean.resize(loss.breakdown.per_level_mean.size(), 0.0);
      }
      for (size_t l = 0; l < loss.breakdown.per_level_huber.size(); ++l) {
        stats.loss.per_level_huber[l] += loss.breakdown.per_level_huber[l];
        stats.loss.per_level_mean[l] += loss.breakdown.per_level_mean[l];
      }

      const int64_t width = forward.log_probs.dim(1);
      for (size_t r = 0; r < idx.size(); ++r)
        if (argmax_row(forward.log_probs.data().data() + static_cast<int64_t>(r) * width,
                       width) == labels[r])
          ++correct;
      ++batches;
    }

    const double inv_batches = 1.0 / static_cast<double>(batches);
    stats.loss.total *= inv_batches;
    stats.loss.cross_entropy *= inv_batches;
    stats.loss.huber_reg *= inv_batches;
    stats.loss.mean_reg *= inv_batches;
    for (auto& v : stats.loss.per_level_huber) v *= inv_batches;
    for (auto& v : stats.loss.per_level_mean) v *= inv_batches;
    stats.train_acc = static_cast<double>(correct) / static_cast<double>(n);
    stats.test_acc = test_set.size() > 0 ? evaluate(model, test_set) : 0.0;
    stats.wall_seconds = clock() - time_zero;
    history.epochs.push_back(stats);

    if (options.verbose) {
      std::printf("epoch %3d lr %.5g loss %.5f ce %.5f train %.4f test %.4f (%.1fs)\n",
                  stats.epoch, stats.lr, stats.loss.total, stats.loss.cross_entropy,
                  stats.train_acc, stats.test_acc, stats.wall_seconds);
      std::fflush(stdout);
    }

    if (!options.out_dir.empty() && stats.test_acc > best_test_acc) {
      best_test_acc = stats.test_acc;
      save_checkpoint(model, options.out_dir + "/best.ckpt");
    }
    if (options.stop_at_test_acc > 0 && stats.test_acc >= options.stop_at_test_acc) break;
  }

  if (!options.out_dir.empty()) {
    save_checkpoint(model, options.out_dir + "/final.ckpt");
    history.write_csv(options.out_dir + "/history.csv");
  }
  return history;
}

}  // namespace dawn
