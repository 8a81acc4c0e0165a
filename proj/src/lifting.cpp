#include "dawn/lifting.hpp"

namespace dawn {

namespace {

Shape conv_weight_shape(Direction d, int64_t out_c, int64_t in_c, int k) {
  return d == Direction::horizontal ? Shape{out_c, in_c, 1, k} : Shape{out_c, in_c, k, 1};
}

}  // namespace

template <class T>
PredictorUpdater<T>::PredictorUpdater(Direction direction, int64_t channels, int kernel_size,
                                      int hidden_layers, bool linear_mode, Rng& rng)
    : direction_(direction),
      channels_(channels),
      kernel_size_(kernel_size),
      hidden_layers_(hidden_layers),
      linear_mode_(linear_mode) {
  if (channels < 1) throw std::invalid_argument("predictor/updater: channels must be >= 1");
  if (kernel_size < 1) throw std::invalid_argument("predictor/updater: kernel size must be >= 1");
  if (hidden_layers < 1) throw std::invalid_argument("predictor/updater: hidden layers must be >= 1");
  const int64_t C = channels;
  for (int i = 0; i < hidden_layers; ++i) {
    const bool expand = (i == hidden_layers - 1);
    const int64_t out_c = expand ? 2 * C : C;
    Conv conv;
    conv.weight = Tensor<T>::he_uniform(conv_weight_shape(direction, out_c, C, kernel_size),
                                        C * kernel_size, rng);
    conv.bias = Tensor<T>::zeros({out_c}, true);
    convs_.push_back(std::move(conv));
  }
  out_.weight = Tensor<T>::he_uniform({C, 2 * C, 1, 1}, 2 * C, rng);
  out_.bias = Tensor<T>::zeros({C}, true);
}

template <class T>
PredictorUpdater<T> PredictorUpdater<T>::zeros(Direction direction, int64_t channels,
                                               int kernel_size, int hidden_layers,
                                               bool linear_mode) {
  Rng rng(0);
  PredictorUpdater pu(direction, channels, kernel_size, hidden_layers, linear_mode, rng);
  for (auto& conv : pu.convs_) {
    std::fill(conv.weight.data().begin(), conv.weight.data().end(), T(0));
    std::fill(conv.bias.data().begin(), conv.bias.data().end(), T(0));
  }
  std::fill(pu.out_.weight.data().begin(), pu.out_.weight.data().end(), T(0));
  std::fill(pu.out_.bias.data().begin(), pu.out_.bias.data().end(), T(0));
  return pu;
}

template <class T>
Tensor<T> PredictorUpdater<T>::apply(const Tensor<T>& input) const {
  if (input.ndim() != 4 || input.dim(1) != channels_)
    throw std::invalid_argument("predictor/updater: expected [B," + std::to_string(channels_) +
                                ",h,w] input, got " + shape_str(input.shape()));
  const int pad_lo = (kernel_size_ - 1) / 2;
  const int pad_hi = kernel_size_ - 1 - pad_lo;
  Tensor<T> x = input;
  for (const auto& conv : convs_) {
    if (kernel_size_ > 1) {
      x = direction_ == Direction::horizontal ? reflect_pad(x, 0, 0, pad_lo, pad_hi)
                                              : reflect_pad(x, pad_lo, pad_hi, 0, 0);
    }
    x = conv2d(x, conv.weight, conv.bias);
    if (!linear_mode_) x = relu(x);
  }
  x = conv2d(x, out_.weight, out_.bias);
  if (!linear_mode_) x = tanh_act(x);
  return x;
}

template <class T>
void PredictorUpdater<T>::collect_parameters(const std::string& prefix,
                                             std::vector<Parameter<T>>& out) const {
  for (size_t i = 0; i < convs_.size(); ++i) {
    const std::string base = prefix + ".conv" + std::to_string(i + 1);
    out.push_back({base + ".weight", convs_[i].weight});
    out.push_back({base + ".bias", convs_[i].bias});
  }
  out.push_back({prefix + ".conv_out.weight", out_.weight});
  out.push_back({prefix + ".conv_out.bias", out_.bias});
}

template <class T>
int64_t PredictorUpdater<T>::parameter_count() const {
  int64_t n = 0;
  for (const auto& conv : convs_) n += conv.weight.numel() + conv.bias.numel();
  return n + out_.weight.numel() + out_.bias.numel();
}

template <class T>
LiftingStep<T>::LiftingStep(Direction direction, int64_t channels, int kernel_size,
                            int hidden_layers, bool linear_mode, Rng& rng)
    : direction(direction),
      updater(direction, channels, kernel_size, hidden_layers, linear_mode, rng),
      predictor(direction, channels, kernel_size, hidden_layers, linear_mode, rng) {}

template <class T>
typename LiftingStep<T>::Bands LiftingStep<T>::forward(const Tensor<T>& input) const {
  if (updater.direction() != direction || predictor.direction() != direction ||
      updater.channels() != predictor.channels())
    throw std::logic_error("lifting step: updater and predictor must share direction and channels");
  const int axis = direction_axis(direction);
  auto [even, odd] = split_even_odd(input, axis);
  Tensor<T> approx = add(even, updater.apply(odd));
  Tensor<T> detail = sub(odd, predictor.apply(approx));
  return {approx, detail};
}

template <class T>
Tensor<T> LiftingStep<T>::inverse(const Tensor<T>& approx, const Tensor<T>& detail) const {
  if (approx.shape() != detail.shape())
    throw std::invalid_argument("lifting inverse: band shapes differ, " +
                                shape_str(approx.shape()) + " vs " + shape_str(detail.shape()));
  const int axis = direction_axis(direction);
  Tensor<T> odd = add(detail, predictor.apply(approx));
  Tensor<T> even = sub(approx, updater.apply(odd));
  return interleave(even, odd, axis);
}

template <class T>
void LiftingStep<T>::collect_parameters(const std::string& prefix,
                                        std::vector<Parameter<T>>& out) const {
  updater.collect_parameters(prefix + ".updater", out);
  predictor.collect_parameters(prefix + ".predictor", out);
}

template <class T>
Lifting2D<T>::Lifting2D(int64_t channels, int kernel_size, int hidden_layers, bool linear_mode,
                        Rng& rng)
    : horizontal(Direction::horizontal, channels, kernel_size, hidden_layers, linear_mode, rng),
      vertical_low(Direction::vertical, channels, kernel_size, hidden_layers, linear_mode, rng),
      vertical_high(Direction::vertical, channels, kernel_size, hidden_layers, linear_mode, rng) {}

template <class T>
typename Lifting2D<T>::Subbands Lifting2D<T>::forward(const Tensor<T>& input) const {
  auto h = horizontal.forward(input);
  auto low = vertical_low.forward(h.approx);
  auto high = vertical_high.forward(h.detail);
  return {low.approx, low.detail, high.approx, high.detail};
}

template <class T>
Tensor<T> Lifting2D<T>::inverse(const Subbands& bands) const {
  if (bands.ll.shape() != bands.lh.shape() || bands.ll.shape() != bands.hl.shape() ||
      bands.ll.shape() != bands.hh.shape())
    throw std::invalid_argument("lifting2d inverse: sub-band shapes differ");
  Tensor<T> low = vertical_low.inverse(bands.ll, bands.lh);
  Tensor<T> high = vertical_high.inverse(bands.hl, bands.hh);
  return horizontal.inverse(low, high);
}

template <class T>
void Lifting2D<T>::collect_parameters(const std::string& prefix,
                                      std::vector<Parameter<T>>& out) const {
  horizontal.collect_parameters(prefix + ".horizontal", out);
  vertical_low.collect_parameters(prefix + ".vertical_low", out);
  vertical_high.collect_parameters(prefix + ".vertical_high", out);
}

template <class T>
StepDiagnostics<T> diagnostic_losses(const LiftingStep<T>& step, const Tensor<T>& input) {
  NoGradGuard guard;
  const int axis = direction_axis(step.direction);
  auto [even, odd] = split_even_odd(input, axis);
  Tensor<T> updated = step.updater.apply(odd);
  Tensor<T> approx = add(even, updated);
  Tensor<T> predicted = step.predictor.apply(approx);

  StepDiagnostics<T> out;
  out.loss_p = static_cast<double>(sum_squares(sub(predicted, odd)).item());
  out.loss_u = static_cast<double>(sum_squares(sub(updated, sub(odd, even))).item());
  return out;
}

#define DAWN_INSTANTIATE_LIFTING(T)                                                     \
  template class PredictorUpdater<T>;                                                   \
  template struct LiftingStep<T>;                                                       \
  template struct Lifting2D<T>;                                                         \
  template StepDiagnostics<T> diagnostic_losses(const LiftingStep<T>&, const Tensor<T>&);

DAWN_INSTANTIATE_LIFTING(float)
DAWN_INSTANTIATE_LIFTING(double)

#undef DAWN_INSTANTIATE_LIFTING

}  // namespace dawn
