#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "dawn/grad_check.hpp"
#include "dawn/training.hpp"

using dawn::DawnConfig;
using dawn::DawnModel;
using dawn::Rng;
using dawn::Tensor;
using dawn::TrainConfig;
using F = Tensor<float>;
using D = Tensor<double>;

namespace {

TrainConfig cifar_schedule() {
  TrainConfig cfg;
  cfg.lr = 0.03;
  cfg.epochs = 300;
  cfg.decay_epochs = {150, 255};
  cfg.decay_factor = 0.1;
  return cfg;
}

// Tiny synthetic classification set: class = brightest quadrant.
dawn::Dataset quadrant_set(int64_t n, int64_t size, uint64_t seed) {
  Rng rng(seed);
  dawn::Dataset ds;
  ds.split = "train";
  ds.class_names = {"tl", "tr", "bl", "br"};
  std::vector<float> pixels;
  for (int64_t i = 0; i < n; ++i) {
    const int cls = static_cast<int>(i % 4);
    ds.labels.push_back(cls);
    std::vector<float> plane(static_cast<size_t>(size * size));
    for (int64_t y = 0; y < size; ++y)
      for (int64_t x = 0; x < size; ++x) {
        const int quadrant = (y < size / 2 ? 0 : 2) + (x < size / 2 ? 0 : 1);
        const double base = quadrant == cls ? 0.8 : 0.2;
        plane[static_cast<size_t>(y * size + x)] =
            static_cast<float>(std::clamp(base + 0.05 * rng.normal(), 0.0, 1.0));
      }
    for (int c = 0; c < 3; ++c) pixels.insert(pixels.end(), plane.begin(), plane.end());
  }
  ds.images = Tensor<float>::from({n, 3, size, size}, std::move(pixels));
  return ds;
}

}  // namespace

TEST_CASE("huber_sum examples") {
  CHECK(dawn::huber_sum(F::zeros({4}), 1.0f).item() == doctest::Approx(0.0f));
  CHECK(dawn::huber_sum(F::from({1}, {0.5f}), 1.0f).item() == doctest::Approx(0.125f));
  CHECK(dawn::huber_sum(F::from({2}, {2.0f, -3.0f}), 1.0f).item() == doctest::Approx(4.0f));
}

TEST_CASE("mean_reg_term examples") {
  F a = F::full({1, 1, 2, 2}, 0.7f);
  CHECK(dawn::mean_reg_term(a, F::full({1, 1, 1, 1}, 0.7f)).item() == doctest::Approx(0.0f));

  F ones = F::full({2, 2}, 1.0f);
  F halves = F::full({4}, 0.5f);
  CHECK(dawn::mean_reg_term(ones, halves).item() == doctest::Approx(0.25f));

  // homogeneity: scaling both tensors by c scales the term by c^2
  Rng rng(3);
  F x = F::uniform({1, 2, 4, 4}, 0.0f, 1.0f, rng);
  F y = F::uniform({1, 2, 2, 2}, 0.0f, 1.0f, rng);
  const float base = dawn::mean_reg_term(x, y).item();
  const float scaled = dawn::mean_reg_term(dawn::scale(x, 3.0f), dawn::scale(y, 3.0f)).item();
  CHECK(scaled == doctest::Approx(9.0f * base).epsilon(1e-4));
}

TEST_CASE("cross entropy examples") {
  F uniform = dawn::log_softmax(F::full({1, 10}, 0.0f));
  CHECK(dawn::nll_loss(uniform, {3}).item() == doctest::Approx(std::log(10.0f)).epsilon(1e-6));

  std::vector<float> confident(5, -30.0f);
  confident[2] = 0.0f;
  F lp = dawn::log_softmax(F::from({1, 5}, confident));
  CHECK(dawn::nll_loss(lp, {2}).item() == doctest::Approx(0.0f).epsilon(1e-4));

  // two-sample batch averages the per-sample losses
  F two = dawn::log_softmax(F::from({2, 2}, {0.0f, 1.0f, 0.0f, 1.0f}));
  const float l0 = dawn::nll_loss(dawn::log_softmax(F::from({1, 2}, {0.0f, 1.0f})), {0}).item();
  const float l1 = dawn::nll_loss(dawn::log_softmax(F::from({1, 2}, {0.0f, 1.0f})), {1}).item();
  CHECK(dawn::nll_loss(two, {0, 1}).item() == doctest::Approx(0.5f * (l0 + l1)).epsilon(1e-6));

  CHECK_THROWS(dawn::nll_loss(two, {0, 5}));
}

TEST_CASE("sgd momentum examples") {
  auto make_param = [](float v) {
    auto t = F::from({1}, {v}, true);
    t.grad()[0] = 1.0f;
    return t;
  };

  // momentum 0 is plain gradient descent
  {
    auto p = make_param(0.0f);
    dawn::SgdMomentum<float> opt({{"p", p}}, 0.1, 0.0);
    opt.step();
    CHECK(p.data()[0] == doctest::Approx(-0.1f));
  }

  // two steps with constant unit gradient, momentum 0.9, lr 1
  {
    auto p = make_param(0.0f);
    dawn::SgdMomentum<float> opt({{"p", p}}, 1.0, 0.9);
    opt.step();
    CHECK(p.data()[0] == doctest::Approx(-1.0f));
    p.grad()[0] = 1.0f;
    opt.step();
    CHECK(p.data()[0] == doctest::Approx(-2.9f));
  }

  // zero gradient leaves parameters unchanged while velocity decays
  {
    auto p = make_param(0.5f);
    dawn::SgdMomentum<float> opt({{"p", p}}, 1.0, 0.5);
    opt.step();  // builds velocity 1, p -> -0.5
    p.grad()[0] = 0.0f;
    opt.step();  // velocity 0.5, p -> -1.0
    CHECK(opt.velocity()[0][0] == doctest::Approx(0.5f));
    const float before = p.data()[0];
    p.grad()[0] = 0.0f;
    opt.step();
    CHECK(p.data()[0] == doctest::Approx(before - 0.25f));
  }
}

TEST_CASE("lr schedule follows the published breakpoints") {
  auto cfg = cifar_schedule();
  CHECK(lr_at(1, cfg) == doctest::Approx(0.03));
  CHECK(lr_at(149, cfg) == doctest::Approx(0.03));
  CHECK(lr_at(150, cfg) == doctest::Approx(0.003));
  CHECK(lr_at(254, cfg) == doctest::Approx(0.003));
  CHECK(lr_at(255, cfg) == doctest::Approx(0.0003));
  CHECK(lr_at(300, cfg) == doctest::Approx(0.0003));

  TrainConfig kth;
  kth.lr = 0.03;
  kth.epochs = 90;
  kth.decay_epochs = {30, 60};
  CHECK(lr_at(29, kth) == doctest::Approx(0.03));
  CHECK(lr_at(30, kth) == doctest::Approx(0.003));
  CHECK(lr_at(60, kth) == doctest::Approx(0.0003));

  TrainConfig flat;
  flat.lr = 0.05;
  flat.epochs = 10;
  for (int e = 1; e <= 10; ++e) CHECK(lr_at(e, flat) == doctest::Approx(0.05));

  // non-increasing with exactly |decay_epochs| drops
  int drops = 0;
  for (int e = 2; e <= cfg.epochs; ++e) {
    CHECK(lr_at(e, cfg) <= lr_at(e - 1, cfg));
    if (lr_at(e, cfg) < lr_at(e - 1, cfg)) ++drops;
  }
  CHECK(drops == 2);

  CHECK_THROWS(lr_at(0, cfg));
  TrainConfig bad = cfg;
  bad.decay_epochs = {150, 150};
  CHECK_THROWS(bad.validate());
  bad.decay_epochs = {400};
  CHECK_THROWS(bad.validate());
}

TEST_CASE("composite loss degenerates to cross entropy") {
  DawnConfig mc;
  mc.input_channels = 3;
  mc.input_size = 16;
  mc.init_channels = 4;
  mc.levels = 2;
  mc.num_classes = 4;
  auto model = DawnModel<float>::build(mc, 5);
  Rng rng(9);
  F batch = F::uniform({2, 3, 16, 16}, 0.0f, 1.0f, rng);
  auto fwd = model.forward(batch, false);

  TrainConfig tc;
  tc.lambda1 = 0;
  tc.lambda2 = 0;
  auto loss = dawn::composite_loss<float>(fwd, {0, 1}, tc);
  CHECK(loss.breakdown.total == doctest::Approx(loss.breakdown.cross_entropy));
  CHECK(loss.breakdown.huber_reg == doctest::Approx(0.0));
  CHECK(loss.breakdown.mean_reg == doctest::Approx(0.0));
}

TEST_CASE("composite loss matches an independent scalar recomputation") {
  DawnConfig mc;
  mc.input_channels = 3;
  mc.input_size = 16;
  mc.init_channels = 4;
  mc.levels = 2;
  mc.num_classes = 4;
  auto model = DawnModel<float>::build(mc, 15);
  Rng rng(19);
  F batch = F::uniform({3, 3, 16, 16}, 0.0f, 1.0f, rng);
  auto fwd = model.forward(batch, false);
  const std::vector<int> labels{0, 2, 3};

  TrainConfig tc;
  tc.lambda1 = 0.1;
  tc.lambda2 = 0.1;
  tc.huber_delta = 1.0;
  auto loss = dawn::composite_loss<float>(fwd, labels, tc);

  // recompute every term from raw buffers
  double ce = 0;
  for (size_t b = 0; b < labels.size(); ++b)
    ce -= fwd.log_probs.data()[static_cast<int64_t>(b) * 4 + labels[b]];
  ce /= static_cast<double>(labels.size());

  auto huber = [](double x, double delta) {
    const double ax = std::abs(x);
    return ax <= delta ? 0.5 * x * x : delta * (ax - 0.5 * delta);
  };
  auto mean_of = [](const F& t) {
    double s = 0;
    for (float v : t.data()) s += v;
    return s / static_cast<double>(t.numel());
  };

  double expected = ce;
  for (const auto& level : fwd.levels) {
    double h = 0;
    int64_t elements = 0;
    for (const F* band : {&level.bands.lh, &level.bands.hl, &level.bands.hh}) {
      for (float v : band->data()) h += huber(v, tc.huber_delta);
      elements += band->numel();
    }
    h /= static_cast<double>(elements);
    const double m = std::pow(mean_of(level.input) - mean_of(level.bands.ll), 2.0);
    expected += tc.lambda1 * h + tc.lambda2 * m;
  }
  CHECK(loss.breakdown.total ==
        doctest::Approx(expected).epsilon(1e-5));

  // additivity of the breakdown itself
  double reassembled = loss.breakdown.cross_entropy;
  for (size_t l = 0; l < loss.breakdown.per_level_huber.size(); ++l)
    reassembled +=
        tc.lambda1 * loss.breakdown.per_level_huber[l] + tc.lambda2 * loss.breakdown.per_level_mean[l];
  CHECK(loss.breakdown.total == doctest::Approx(reassembled).epsilon(1e-6));
}

TEST_CASE("full-model gradient check in 64-bit mode") {
  DawnConfig mc;
  mc.input_channels = 3;
  mc.input_size = 16;
  mc.init_channels = 4;
  mc.levels = 2;
  mc.kernel_size = 3;
  mc.hidden_layers = 1;
  mc.num_classes = 4;
  auto model = DawnModel<double>::build(mc, 77);

  Rng rng(78);
  D batch = D::uniform({2, 3, 16, 16}, 0.0, 1.0, rng);
  const std::vector<int> labels{1, 3};
  TrainConfig tc;

  auto params = model.parameters();
  auto f = [&]() {
    auto fwd = model.forward(batch, false);  // eval mode keeps running stats frozen
    return dawn::composite_loss<double>(fwd, labels, tc).total;
  };
  Rng srng(79);
  auto report = dawn::grad_check<double>(f, params, 1e-5, 60, srng);
  CHECK(report.max_rel_err < 1e-3);
}

TEST_CASE("one epoch on a four-sample set yields a finite history row") {
  auto train_set = quadrant_set(4, 16, 11);
  auto test_set = quadrant_set(4, 16, 12);
  test_set.split = "test";

  DawnConfig mc;
  mc.input_channels = 3;
  mc.input_size = 16;
  mc.init_channels = 4;
  mc.levels = 2;
  mc.num_classes = 4;
  auto model = DawnModel<float>::build(mc, 1);

  TrainConfig tc;
  tc.batch_size = 2;
  tc.epochs = 1;
  tc.seed = 5;
  auto history = dawn::train(model, train_set, test_set, tc);
  REQUIRE(history.epochs.size() == 1);
  const auto& row = history.epochs[0];
  CHECK(std::isfinite(row.loss.total));
  CHECK(std::isfinite(row.loss.cross_entropy));
  CHECK(std::isfinite(row.train_acc));
  CHECK(std::isfinite(row.test_acc));
  CHECK(row.epoch == 1);
  CHECK(row.lr == doctest::Approx(0.03));
}

TEST_CASE("memorized set evaluates to full accuracy") {
  // random images with random labels: memorization only
  Rng rng(21);
  dawn::Dataset train_set;
  train_set.split = "train";
  train_set.class_names = {"a", "b", "c", "d"};
  std::vector<float> pixels;
  for (int i = 0; i < 8; ++i) {
    train_set.labels.push_back(static_cast<int>(rng.next_u64() % 4));
    for (int64_t p = 0; p < 3 * 16 * 16; ++p)
      pixels.push_back(static_cast<float>(rng.uniform()));
  }
  train_set.images = Tensor<float>::from({8, 3, 16, 16}, std::move(pixels));

  DawnConfig mc;
  mc.input_channels = 3;
  mc.input_size = 16;
  mc.init_channels = 4;
  mc.levels = 2;
  mc.num_classes = 4;
  auto model = DawnModel<float>::build(mc, 2);

  TrainConfig tc;
  tc.batch_size = 8;
  tc.epochs = 200;
  tc.lr = 0.05;
  tc.seed = 3;
  dawn::TrainOptions options;
  options.stop_at_test_acc = 1.0;
  auto history = dawn::train(model, train_set, train_set, tc, options);
  CHECK(dawn::evaluate(model, train_set) == doctest::Approx(1.0));
  CHECK(history.epochs.back().test_acc == doctest::Approx(1.0));
}

TEST_CASE("training is deterministic for a fixed seed") {
  auto train_set = quadrant_set(8, 16, 31);
  auto test_set = quadrant_set(4, 16, 32);
  test_set.split = "test";

  DawnConfig mc;
  mc.input_channels = 3;
  mc.input_size = 16;
  mc.init_channels = 4;
  mc.levels = 1;
  mc.num_classes = 4;

  TrainConfig tc;
  tc.batch_size = 4;
  tc.epochs = 3;
  tc.seed = 44;
  tc.augment.pad = 2;
  tc.augment.random_crop = true;
  tc.augment.mirror = true;

  dawn::TrainOptions options;
  options.clock = []() { return 0.0; };

  auto run = [&]() {
    auto model = DawnModel<float>::build(mc, 9);
    return dawn::train(model, train_set, test_set, tc, options).to_csv();
  };
  const std::string a = run();
  const std::string b = run();
  CHECK(a == b);
  CHECK(a.find("epoch,lr,loss_total") == 0);
}

TEST_CASE("non-finite parameters abort with a named term") {
  auto train_set = quadrant_set(4, 16, 41);

  DawnConfig mc;
  mc.input_channels = 3;
  mc.input_size = 16;
  mc.init_channels = 4;
  mc.levels = 1;
  mc.num_classes = 4;
  auto model = DawnModel<float>::build(mc, 4);
  // poison the classifier so the first loss is NaN
  for (auto& p : model.parameters())
    if (p.name == "classifier.weight")
      p.tensor.data()[0] = std::numeric_limits<float>::quiet_NaN();

  TrainConfig tc;
  tc.batch_size = 4;
  tc.epochs = 1;
  try {
    dawn::train(model, train_set, train_set, tc);
    CHECK(false);
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("non-finite") != std::string::npos);
    CHECK(std::string(e.what()).find("epoch 1") != std::string::npos);
  }
}
