#include <doctest.h>

#include <cmath>
#include <vector>

#include "dawn/lifting.hpp"

using dawn::Direction;
using dawn::Lifting2D;
using dawn::LiftingStep;
using dawn::PredictorUpdater;
using dawn::Rng;
using dawn::Tensor;
using F = Tensor<float>;

namespace {

// Linear-mode network whose composite map copies the center tap: conv1
// routes channel c into output channel c with a 1 at the center, conv_out
// selects it back.
template <class T>
PredictorUpdater<T> center_copy_pu(Direction dir, int64_t C, int k) {
  auto pu = PredictorUpdater<T>::zeros(dir, C, k, 1, true);
  auto w1 = pu.convs()[0].weight.data();
  for (int64_t c = 0; c < C; ++c) w1[(c * C + c) * k + (k - 1) / 2] = T(1);
  auto wo = pu.conv_out().weight.data();
  for (int64_t c = 0; c < C; ++c) wo[c * 2 * C + c] = T(1);
  return pu;
}

template <class T>
LiftingStep<T> make_step(Direction dir, PredictorUpdater<T> updater,
                         PredictorUpdater<T> predictor) {
  LiftingStep<T> step;
  step.direction = dir;
  step.updater = std::move(updater);
  step.predictor = std::move(predictor);
  return step;
}

float max_abs_diff(const F& a, const F& b) {
  REQUIRE(a.shape() == b.shape());
  float m = 0;
  for (int64_t i = 0; i < a.numel(); ++i)
    m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

// Independent linear filter-bank evaluation of a linear-mode
// predictor/updater: direct nested loops with explicit reflected indexing,
// sharing no code with the conv/pad ops.
std::vector<float> linear_pu_reference(const PredictorUpdater<float>& pu,
                                       const std::vector<float>& x, int64_t C, int64_t H,
                                       int64_t W) {
  REQUIRE(pu.linear_mode());
  const int k = pu.kernel_size();
  const bool horiz = pu.direction() == Direction::horizontal;
  const int pad_lo = (k - 1) / 2;
  auto reflect = [](int64_t i, int64_t n) {
    if (i < 0) return -i;
    if (i >= n) return 2 * n - 2 - i;
    return i;
  };

  std::vector<float> cur = x;
  int64_t cur_c = C;
  for (const auto& conv : pu.convs()) {
    const int64_t out_c = conv.weight.shape()[0];
    std::vector<float> next(static_cast<size_t>(out_c * H * W), 0.0f);
    for (int64_t f = 0; f < out_c; ++f)
      for (int64_t y = 0; y < H; ++y)
        for (int64_t xx = 0; xx < W; ++xx) {
          double acc = conv.bias.data()[f];
          for (int64_t c = 0; c < cur_c; ++c)
            for (int t = 0; t < k; ++t) {
              int64_t sy = horiz ? y : reflect(y + t - pad_lo, H);
              int64_t sx = horiz ? reflect(xx + t - pad_lo, W) : xx;
              acc += conv.weight.data()[(f * cur_c + c) * k + t] * cur[(c * H + sy) * W + sx];
            }
          next[(f * H + y) * W + xx] = static_cast<float>(acc);
        }
    cur = std::move(next);
    cur_c = out_c;
  }
  std::vector<float> out(static_cast<size_t>(C * H * W));
  for (int64_t f = 0; f < C; ++f)
    for (int64_t i = 0; i < H * W; ++i) {
      double acc = pu.conv_out().bias.data()[f];
      for (int64_t c = 0; c < cur_c; ++c)
        acc += pu.conv_out().weight.data()[f * cur_c + c] * cur[c * H * W + i];
      out[f * H * W + i] = static_cast<float>(acc);
    }
  return out;
}

}  // namespace

TEST_CASE("split_even_odd examples") {
  F row = F::from({1, 1, 1, 6}, {0, 1, 2, 3, 4, 5});
  auto [even, odd] = dawn::split_even_odd(row, 3);
  CHECK(std::vector<float>(even.data().begin(), even.data().end()) ==
        std::vector<float>{0, 2, 4});
  CHECK(std::vector<float>(odd.data().begin(), odd.data().end()) == std::vector<float>{1, 3, 5});

  F merged = dawn::interleave(even, odd, 3);
  CHECK(max_abs_diff(merged, row) == 0.0f);

  F five = F::zeros({1, 1, 1, 5});
  CHECK_THROWS(dawn::split_even_odd(five, 3));
  CHECK_THROWS(dawn::split_even_odd(F::zeros({1, 1, 1, 0}), 3));
}

TEST_CASE("apply_pu zero network and shape contract") {
  auto zero = PredictorUpdater<float>::zeros(Direction::horizontal, 2, 3, 1, true);
  Rng rng(1);
  F x = F::uniform({2, 2, 4, 6}, -1.0f, 1.0f, rng);
  F out = zero.apply(x);
  CHECK(out.shape() == x.shape());
  for (float v : out.data()) CHECK(v == 0.0f);

  for (int h = 1; h <= 3; ++h) {
    Rng r2(h);
    PredictorUpdater<float> pu(Direction::vertical, 3, 3, h, false, r2);
    F y = F::uniform({1, 3, 8, 4}, -1.0f, 1.0f, r2);
    CHECK(pu.apply(y).shape() == y.shape());
  }

  CHECK_THROWS(zero.apply(F::zeros({1, 5, 4, 4})));
}

TEST_CASE("apply_pu center-copy composite is the identity") {
  for (auto dir : {Direction::horizontal, Direction::vertical}) {
    auto pu = center_copy_pu<float>(dir, 3, 3);
    Rng rng(7);
    F x = F::uniform({2, 3, 4, 4}, -2.0f, 2.0f, rng);
    CHECK(max_abs_diff(pu.apply(x), x) < 1e-6f);
  }
}

TEST_CASE("lifting step hand-worked examples") {
  auto step = make_step(Direction::horizontal,
                        PredictorUpdater<float>::zeros(Direction::horizontal, 1, 3, 1, true),
                        center_copy_pu<float>(Direction::horizontal, 1, 3));
  F x = F::from({1, 1, 1, 4}, {1, 2, 3, 4});
  auto bands = step.forward(x);
  CHECK(std::vector<float>(bands.approx.data().begin(), bands.approx.data().end()) ==
        std::vector<float>{1, 3});
  CHECK(std::vector<float>(bands.detail.data().begin(), bands.detail.data().end()) ==
        std::vector<float>{1, 1});

  // inverse of the same bands recovers the signal
  F back = step.inverse(bands.approx, bands.detail);
  CHECK(max_abs_diff(back, x) == 0.0f);

  // explicit bands
  F c = F::from({1, 1, 1, 2}, {1, 3});
  F d = F::from({1, 1, 1, 2}, {1, 1});
  CHECK(max_abs_diff(step.inverse(c, d), x) == 0.0f);

  CHECK_THROWS(step.inverse(c, F::zeros({1, 1, 1, 3})));
}

TEST_CASE("lazy wavelet degeneracy") {
  auto step = make_step(Direction::horizontal,
                        PredictorUpdater<float>::zeros(Direction::horizontal, 2, 3, 1, false),
                        PredictorUpdater<float>::zeros(Direction::horizontal, 2, 3, 1, false));
  Rng rng(3);
  F x = F::uniform({1, 2, 2, 8}, -1.0f, 1.0f, rng);
  auto bands = step.forward(x);
  auto [even, odd] = dawn::split_even_odd(x, 3);
  CHECK(max_abs_diff(bands.approx, even) == 0.0f);
  CHECK(max_abs_diff(bands.detail, odd) == 0.0f);

  // zero bands through zero networks invert to the zero signal
  F back = step.inverse(F::zeros({1, 2, 2, 4}), F::zeros({1, 2, 2, 4}));
  for (float v : back.data()) CHECK(v == 0.0f);
}

TEST_CASE("constant input yields zero details under center-copy predictor") {
  auto step = make_step(Direction::horizontal,
                        PredictorUpdater<float>::zeros(Direction::horizontal, 1, 3, 1, true),
                        center_copy_pu<float>(Direction::horizontal, 1, 3));
  F x = F::full({1, 1, 2, 6}, 0.8f);
  auto bands = step.forward(x);
  for (float v : bands.detail.data()) CHECK(v == doctest::Approx(0.0f));

  auto diag = dawn::diagnostic_losses(step, x);
  CHECK(diag.loss_p == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(diag.loss_u == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("perfect reconstruction across 100 randomized trials") {
  Rng rng(42);
  float worst_step = 0, worst_2d = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int64_t C = 1 + static_cast<int64_t>(rng.next_u64() % 3);
    const int64_t H = 2 * (1 + static_cast<int64_t>(rng.next_u64() % 4));
    const int64_t W = 2 * (2 + static_cast<int64_t>(rng.next_u64() % 3));
    const auto dir = (trial % 2 == 0) ? Direction::horizontal : Direction::vertical;

    LiftingStep<float> step(dir, C, 3, 1 + trial % 2, false, rng);
    F x = F::uniform({2, C, std::max<int64_t>(H, 4), std::max<int64_t>(W, 4)}, -1.0f, 1.0f, rng);
    auto bands = step.forward(x);
    worst_step = std::max(worst_step, max_abs_diff(step.inverse(bands.approx, bands.detail), x));

    Lifting2D<float> level(C, 3, 1, false, rng);
    F y = F::uniform({1, C, H + 2, W + 2}, -1.0f, 1.0f, rng);
    auto sub = level.forward(y);
    worst_2d = std::max(worst_2d, max_abs_diff(level.inverse(sub), y));
  }
  CHECK(worst_step < 1e-5f);
  CHECK(worst_2d < 1e-5f);
}

TEST_CASE("lifting2d shapes and constant-image decomposition") {
  Rng rng(9);
  Lifting2D<float> level(3, 3, 1, false, rng);
  F x = F::uniform({2, 3, 32, 32}, 0.0f, 1.0f, rng);
  auto sub = level.forward(x);
  const dawn::Shape half{2, 3, 16, 16};
  CHECK(sub.ll.shape() == half);
  CHECK(sub.lh.shape() == half);
  CHECK(sub.hl.shape() == half);
  CHECK(sub.hh.shape() == half);

  CHECK_THROWS(level.forward(F::zeros({1, 3, 31, 32})));

  // lazy split with center-copy predictors: constant image -> constant LL,
  // zero details
  Lifting2D<float> lazy;
  lazy.horizontal = make_step(Direction::horizontal,
                              PredictorUpdater<float>::zeros(Direction::horizontal, 1, 3, 1, true),
                              center_copy_pu<float>(Direction::horizontal, 1, 3));
  lazy.vertical_low = make_step(Direction::vertical,
                                PredictorUpdater<float>::zeros(Direction::vertical, 1, 3, 1, true),
                                center_copy_pu<float>(Direction::vertical, 1, 3));
  lazy.vertical_high = make_step(Direction::vertical,
                                 PredictorUpdater<float>::zeros(Direction::vertical, 1, 3, 1, true),
                                 center_copy_pu<float>(Direction::vertical, 1, 3));
  F c = F::full({1, 1, 8, 8}, 0.6f);
  auto csub = lazy.forward(c);
  for (float v : csub.ll.data()) CHECK(v == doctest::Approx(0.6f));
  for (float v : csub.lh.data()) CHECK(v == doctest::Approx(0.0f));
  for (float v : csub.hl.data()) CHECK(v == doctest::Approx(0.0f));
  for (float v : csub.hh.data()) CHECK(v == doctest::Approx(0.0f));
}

TEST_CASE("smallest legal input round-trips with 1x1 kernels") {
  Rng rng(17);
  Lifting2D<float> level(1, 1, 1, false, rng);
  F x = F::uniform({1, 1, 2, 2}, -1.0f, 1.0f, rng);
  auto sub = level.forward(x);
  CHECK(sub.ll.shape() == dawn::Shape{1, 1, 1, 1});
  CHECK(max_abs_diff(level.inverse(sub), x) < 1e-6f);

  // inverse doubles the sub-band shape
  CHECK(level.inverse(sub).shape() == dawn::Shape{1, 1, 2, 2});
}

TEST_CASE("three stacked levels reconstruct") {
  Rng rng(23);
  std::vector<Lifting2D<float>> levels;
  for (int i = 0; i < 3; ++i) levels.emplace_back(2, 3, 1, false, rng);
  F x = F::uniform({1, 2, 32, 32}, -1.0f, 1.0f, rng);

  std::vector<Lifting2D<float>::Subbands> stack;
  F cur = x;
  for (auto& level : levels) {
    stack.push_back(level.forward(cur));
    cur = stack.back().ll;
  }
  CHECK(cur.shape() == dawn::Shape{1, 2, 4, 4});

  F rec = stack.back().ll;
  for (int i = 2; i >= 0; --i) {
    auto bands = stack[static_cast<size_t>(i)];
    bands.ll = rec;
    rec = levels[static_cast<size_t>(i)].inverse(bands);
  }
  CHECK(max_abs_diff(rec, x) < 1e-5f);
}

TEST_CASE("diagnostic losses match their algebraic identities") {
  Rng rng(31);
  for (int trial = 0; trial < 5; ++trial) {
    LiftingStep<float> step(Direction::vertical, 2, 3, 1, false, rng);
    F x = F::uniform({1, 2, 8, 4}, -1.0f, 1.0f, rng);
    auto bands = step.forward(x);
    double sum_d2 = 0;
    for (float v : bands.detail.data()) sum_d2 += static_cast<double>(v) * v;
    auto diag = dawn::diagnostic_losses(step, x);
    CHECK(diag.loss_p == doctest::Approx(sum_d2).epsilon(1e-4));
  }

  // zero updater on a constant input: x_o - x_e vanishes, so loss_u is zero
  auto step = make_step(Direction::horizontal,
                        PredictorUpdater<float>::zeros(Direction::horizontal, 1, 3, 1, false),
                        center_copy_pu<float>(Direction::horizontal, 1, 3));
  auto diag = dawn::diagnostic_losses(step, F::full({1, 1, 2, 8}, 0.3f));
  CHECK(diag.loss_u == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("gradients reach every predictor and updater parameter") {
  Rng rng(57);
  Lifting2D<float> level(2, 3, 1, false, rng);
  std::vector<dawn::Parameter<float>> params;
  level.collect_parameters("level0", params);
  CHECK(params.size() == 6 * 4);  // 3 steps x 2 operators x (conv1 + conv_out) x (w + b)

  F x = F::uniform({2, 2, 8, 8}, -1.0f, 1.0f, rng);
  auto sub = level.forward(x);
  auto loss = dawn::add(dawn::add(dawn::sum_squares(sub.ll), dawn::sum_squares(sub.lh)),
                        dawn::add(dawn::sum_squares(sub.hl), dawn::sum_squares(sub.hh)));
  for (auto& p : params) p.tensor.zero_grad();
  loss.backward();
  for (auto& p : params) {
    bool all_zero = true;
    for (float g : p.tensor.grad())
      if (g != 0.0f) {
        all_zero = false;
        break;
      }
    INFO("parameter ", p.name);
    CHECK_FALSE(all_zero);
  }
}

TEST_CASE("linear mode equals an independent filter-bank oracle") {
  Rng rng(71);
  for (int trial = 0; trial < 8; ++trial) {
    const auto dir = (trial % 2 == 0) ? Direction::horizontal : Direction::vertical;
    const int64_t C = 1 + trial % 2;
    PredictorUpdater<float> pu(dir, C, 3, 1, true, rng);
    // reference works on one image at a time
    F x = F::uniform({1, C, 8, 8}, -1.0f, 1.0f, rng);
    auto ref = linear_pu_reference(pu, {x.data().begin(), x.data().end()}, C, 8, 8);
    F got = pu.apply(x);
    float worst = 0;
    for (int64_t i = 0; i < got.numel(); ++i)
      worst = std::max(worst, std::abs(got.data()[i] - ref[static_cast<size_t>(i)]));
    CHECK(worst < 1e-5f);

    // full linear step against the oracle ladder
    LiftingStep<float> step(dir, C, 3, 1, true, rng);
    auto bands = step.forward(x);
    const int axis = dawn::direction_axis(dir);
    auto [even, odd] = dawn::split_even_odd(x, axis);
    const auto eshape = even.shape();
    auto u_ref = linear_pu_reference(step.updater, {odd.data().begin(), odd.data().end()}, C,
                                     eshape[2], eshape[3]);
    std::vector<float> c_ref(u_ref.size());
    for (size_t i = 0; i < c_ref.size(); ++i) c_ref[i] = even.data()[i] + u_ref[i];
    auto p_ref = linear_pu_reference(step.predictor, c_ref, C, eshape[2], eshape[3]);
    float worst_c = 0, worst_d = 0;
    for (size_t i = 0; i < c_ref.size(); ++i) {
      worst_c = std::max(worst_c, std::abs(bands.approx.data()[i] - c_ref[i]));
      worst_d =
          std::max(worst_d, std::abs(bands.detail.data()[i] - (odd.data()[i] - p_ref[i])));
    }
    CHECK(worst_c < 1e-5f);
    CHECK(worst_d < 1e-5f);
  }
}

TEST_CASE("channel count is preserved through lifting") {
  Rng rng(83);
  for (int64_t C : {1, 3, 5}) {
    Lifting2D<float> level(C, 3, 1, false, rng);
    F x = F::uniform({1, C, 8, 8}, -1.0f, 1.0f, rng);
    auto sub = level.forward(x);
    CHECK(sub.ll.dim(1) == C);
    CHECK(sub.hh.dim(1) == C);
  }
}
