// Command-line interface for the adaptive wavelet network: train, evaluate,
// count parameters, export sub-band decompositions, and run gradient checks.
#include <CLI11.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "dawn/checkpoint.hpp"
#include "dawn/data.hpp"
#include "dawn/grad_check.hpp"
#include "dawn/image_io.hpp"
#include "dawn/toml.hpp"
#include "dawn/training.hpp"

namespace fs = std::filesystem;
using dawn::DawnConfig;
using dawn::DawnModel;
using dawn::Tensor;

namespace {

struct RunSpec {
  // data
  std::string dataset = "synth";  // synth | cifar10 | cifar100 | folder
  std::string data_dir;
  std::string test_dir;
  int64_t synth_per_class = 50;
  uint64_t data_seed = 7;
  bool normalize = false;
  // model
  int64_t init_channels = 16;
  int64_t levels = -1;  // -1 = auto
  int64_t kernel_size = 3;
  int64_t hidden_layers = 1;
  int64_t input_size = 32;
  int64_t classes = 0;  // 0 = taken from the dataset
  // training
  double lr = 0.03;
  double momentum = 0.9;
  int64_t batch_size = 64;
  int64_t epochs = 90;
  std::vector<int64_t> decay_epochs;
  double decay_factor = 0.1;
  double lambda1 = 0.1;
  double lambda2 = 0.1;
  double huber_delta = 1.0;
  double grad_clip = 0.0;
  uint64_t seed = 0;
  bool augment = false;
  // run
  std::string out_dir = "dawn_run";
  std::string recipe;
  std::string config_path;
};

void apply_config_file(RunSpec& spec, const std::string& path) {
  dawn::TomlDoc doc = dawn::TomlDoc::parse_file(path);
  spec.dataset = doc.get_string("data.dataset", spec.dataset);
  spec.data_dir = doc.get_string("data.dir", spec.data_dir);
  spec.test_dir = doc.get_string("data.test_dir", spec.test_dir);
  spec.synth_per_class = doc.get_int("data.synth_per_class", spec.synth_per_class);
  spec.data_seed = static_cast<uint64_t>(doc.get_int("data.seed", static_cast<int64_t>(spec.data_seed)));
  spec.normalize = doc.get_bool("data.normalize", spec.normalize);

  spec.init_channels = doc.get_int("model.init_channels", spec.init_channels);
  spec.levels = doc.get_int("model.levels", spec.levels);
  spec.kernel_size = doc.get_int("model.kernel_size", spec.kernel_size);
  spec.hidden_layers = doc.get_int("model.hidden_layers", spec.hidden_layers);
  spec.input_size = doc.get_int("model.input_size", spec.input_size);
  spec.classes = doc.get_int("model.classes", spec.classes);

  spec.lr = doc.get_double("train.lr", spec.lr);
  spec.momentum = doc.get_double("train.momentum", spec.momentum);
  spec.batch_size = doc.get_int("train.batch_size", spec.batch_size);
  spec.epochs = doc.get_int("train.epochs", spec.epochs);
  spec.decay_epochs = doc.get_int_array("train.decay_epochs", spec.decay_epochs);
  spec.decay_factor = doc.get_double("train.decay_factor", spec.decay_factor);
  spec.lambda1 = doc.get_double("train.lambda1", spec.lambda1);
  spec.lambda2 = doc.get_double("train.lambda2", spec.lambda2);
  spec.huber_delta = doc.get_double("train.huber_delta", spec.huber_delta);
  spec.grad_clip = doc.get_double("train.grad_clip", spec.grad_clip);
  spec.seed = static_cast<uint64_t>(doc.get_int("train.seed", static_cast<int64_t>(spec.seed)));
  spec.augment = doc.get_bool("train.augment", spec.augment);

  spec.out_dir = doc.get_string("run.out_dir", spec.out_dir);
  spec.recipe = doc.get_string("run.recipe", spec.recipe);
}

void apply_recipe(RunSpec& spec) {
  if (spec.recipe.empty()) return;
  if (spec.recipe == "cifar") {
    spec.epochs = 300;
    spec.decay_epochs = {150, 255};
    spec.batch_size = 64;
    spec.lr = 0.03;
    spec.momentum = 0.9;
    spec.augment = true;
    spec.input_size = 32;
  } else if (spec.recipe == "kth") {
    spec.epochs = 90;
    spec.decay_epochs = {30, 60};
    spec.batch_size = 16;
    spec.lr = 0.03;
    spec.momentum = 0.9;
    spec.augment = true;
    spec.input_size = 224;
  } else {
    throw CLI::ValidationError("--recipe", "unknown recipe '" + spec.recipe +
                                               "' (expected cifar or kth)");
  }
}

std::string fmt_double(double v) {
  char buf[40];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);  // shortest round-trip
  (void)ec;
  return std::string(buf, end);
}

std::string resolved_toml(const RunSpec& spec, int resolved_levels) {
  std::string out;
  out += "[data]\n";
  out += "dataset = \"" + spec.dataset + "\"\n";
  out += "dir = \"" + spec.data_dir + "\"\n";
  out += "test_dir = \"" + spec.test_dir + "\"\n";
  out += "synth_per_class = " + std::to_string(spec.synth_per_class) + "\n";
  out += "seed = " + std::to_string(spec.data_seed) + "\n";
  out += std::string("normalize = ") + (spec.normalize ? "true" : "false") + "\n\n";
  out += "[model]\n";
  out += "init_channels = " + std::to_string(spec.init_channels) + "\n";
  out += "levels = " + std::to_string(resolved_levels) + "\n";
  out += "kernel_size = " + std::to_string(spec.kernel_size) + "\n";
  out += "hidden_layers = " + std::to_string(spec.hidden_layers) + "\n";
  out += "input_size = " + std::to_string(spec.input_size) + "\n";
  out += "classes = " + std::to_string(spec.classes) + "\n\n";
  out += "[train]\n";
  out += "lr = " + fmt_double(spec.lr) + "\n";
  out += "momentum = " + fmt_double(spec.momentum) + "\n";
  out += "batch_size = " + std::to_string(spec.batch_size) + "\n";
  out += "epochs = " + std::to_string(spec.epochs) + "\n";
  out += "decay_epochs = [";
  for (size_t i = 0; i < spec.decay_epochs.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(spec.decay_epochs[i]);
  }
  out += "]\n";
  out += "decay_factor = " + fmt_double(spec.decay_factor) + "\n";
  out += "lambda1 = " + fmt_double(spec.lambda1) + "\n";
  out += "lambda2 = " + fmt_double(spec.lambda2) + "\n";
  out += "huber_delta = " + fmt_double(spec.huber_delta) + "\n";
  out += "grad_clip = " + fmt_double(spec.grad_clip) + "\n";
  out += "seed = " + std::to_string(spec.seed) + "\n";
  out += std::string("augment = ") + (spec.augment ? "true" : "false") + "\n\n";
  out += "[run]\n";
  out += "out_dir = \"" + spec.out_dir + "\"\n";
  return out;
}

std::string default_data_dir(const RunSpec& spec) {
  if (!spec.data_dir.empty()) return spec.data_dir;
  if (const char* env = std::getenv("DAWN_DATA_DIR")) return env;
  return "";
}

std::pair<dawn::Dataset, dawn::Dataset> load_datasets(const RunSpec& spec) {
  if (spec.dataset == "synth")
    return dawn::synth_textures(spec.synth_per_class, spec.input_size, spec.data_seed);
  if (spec.dataset == "cifar10" || spec.dataset == "cifar100") {
    const std::string dir = default_data_dir(spec);
    if (dir.empty())
      throw std::runtime_error("CIFAR needs --data-dir or the DAWN_DATA_DIR environment variable");
    return dawn::load_cifar(dir, spec.dataset == "cifar10" ? 10 : 100);
  }
  if (spec.dataset == "folder") {
    const std::string dir = default_data_dir(spec);
    if (dir.empty())
      throw std::runtime_error("folder datasets need --data-dir or DAWN_DATA_DIR");
    dawn::Dataset train = dawn::load_image_folder(dir, spec.input_size);
    if (!spec.test_dir.empty()) {
      dawn::Dataset test = dawn::load_image_folder(spec.test_dir, spec.input_size);
      test.split = "test";
      return {std::move(train), std::move(test)};
    }
    // no separate test folder: every fifth image (per load order) held out
    dawn::Dataset test;
    test.split = "test";
    test.class_names = train.class_names;
    std::vector<int64_t> train_idx, test_idx;
    for (int64_t i = 0; i < train.size(); ++i)
      (i % 5 == 4 ? test_idx : train_idx).push_back(i);
    test.images = train.gather_images(test_idx);
    test.labels = train.gather_labels(test_idx);
    dawn::Dataset pruned;
    pruned.split = "train";
    pruned.class_names = train.class_names;
    pruned.images = train.gather_images(train_idx);
    pruned.labels = train.gather_labels(train_idx);
    return {std::move(pruned), std::move(test)};
  }
  throw std::runtime_error("unknown dataset '" + spec.dataset +
                           "' (expected synth, cifar10, cifar100 or folder)");
}

DawnConfig model_config(const RunSpec& spec) {
  DawnConfig cfg;
  cfg.input_channels = 3;
  cfg.input_size = spec.input_size;
  cfg.init_channels = spec.init_channels;
  cfg.levels = spec.levels < 0 ? DawnConfig::kAutoLevels : static_cast<int>(spec.levels);
  cfg.kernel_size = static_cast<int>(spec.kernel_size);
  cfg.hidden_layers = static_cast<int>(spec.hidden_layers);
  cfg.num_classes = spec.classes;
  return cfg;
}

dawn::TrainConfig train_config(const RunSpec& spec) {
  dawn::TrainConfig tc;
  tc.lr = spec.lr;
  tc.momentum = spec.momentum;
  tc.batch_size = spec.batch_size;
  tc.epochs = static_cast<int>(spec.epochs);
  for (int64_t e : spec.decay_epochs) tc.decay_epochs.push_back(static_cast<int>(e));
  tc.decay_factor = spec.decay_factor;
  tc.lambda1 = spec.lambda1;
  tc.lambda2 = spec.lambda2;
  tc.huber_delta = spec.huber_delta;
  tc.grad_clip = spec.grad_clip;
  tc.seed = spec.seed;
  if (spec.augment) {
    tc.augment.pad = 4;
    tc.augment.random_crop = true;
    tc.augment.mirror = true;
  }
  return tc;
}

int cmd_train(RunSpec spec, bool dry_run) {
  auto [train_set, test_set] = load_datasets(spec);
  if (spec.classes == 0) spec.classes = train_set.num_classes();
  if (spec.normalize) dawn::normalize_datasets(train_set, test_set);

  DawnConfig cfg = model_config(spec);
  cfg.validate();
  auto model = DawnModel<float>::build(cfg, spec.seed);

  fs::create_directories(spec.out_dir);
  {
    std::ofstream os(fs::path(spec.out_dir) / "resolved.toml");
    os << resolved_toml(spec, cfg.resolved_levels());
  }
  if (dry_run) {
    std::printf("resolved config written to %s/resolved.toml\n", spec.out_dir.c_str());
    return 0;
  }

  std::printf("training on %lld images (%lld test), %lld classes, %lld parameters\n",
              static_cast<long long>(train_set.size()), static_cast<long long>(test_set.size()),
              static_cast<long long>(train_set.num_classes()),
              static_cast<long long>(model.parameter_total()));

  dawn::TrainOptions options;
  options.out_dir = spec.out_dir;
  options.verbose = true;
  auto history = dawn::train(model, train_set, test_set, train_config(spec), options);

  std::printf("final test accuracy %.4f; artifacts in %s\n",
              history.epochs.back().test_acc, spec.out_dir.c_str());
  return 0;
}

int cmd_eval(RunSpec spec, const std::string& checkpoint) {
  auto [train_set, test_set] = load_datasets(spec);
  if (spec.classes == 0) spec.classes = train_set.num_classes();
  if (spec.normalize) dawn::normalize_datasets(train_set, test_set);

  DawnConfig cfg = model_config(spec);
  auto model = DawnModel<float>::build(cfg, spec.seed);
  dawn::load_checkpoint(model, checkpoint);

  const double top1 = dawn::evaluate(model, test_set);
  const auto per_class = dawn::per_class_accuracy(model, test_set);
  std::printf("top-1 accuracy %.4f on %lld images\n", top1,
              static_cast<long long>(test_set.size()));
  for (size_t c = 0; c < per_class.size(); ++c)
    std::printf("  %-24s %.4f\n", test_set.class_names[c].c_str(), per_class[c]);
  return 0;
}

int cmd_params(RunSpec spec, bool describe) {
  if (spec.classes == 0) spec.classes = 10;
  DawnConfig cfg = model_config(spec);
  auto breakdown = dawn::param_count(cfg);

  if (describe) {
    auto model = DawnModel<float>::build(cfg, spec.seed);
    std::fputs(model.describe().c_str(), stdout);
    std::printf("\n");
  }

  std::printf("initial     %10lld\n", static_cast<long long>(breakdown.initial));
  for (size_t t = 0; t < breakdown.per_level.size(); ++t)
    std::printf("level%-6zu %10lld\n", t, static_cast<long long>(breakdown.per_level[t]));
  std::printf("classifier  %10lld\n", static_cast<long long>(breakdown.classifier));
  std::printf("total       %10lld\n", static_cast<long long>(breakdown.total()));

  if (auto reference = dawn::published_reference_count(cfg)) {
    const double deviation = 100.0 * (static_cast<double>(breakdown.total() - *reference)) /
                             static_cast<double>(*reference);
    std::printf("reference   %10lld (deviation %+.2f%%)\n",
                static_cast<long long>(*reference), deviation);
  }
  return 0;
}

// one image [1,3,s,s] from a file, gray replicated
Tensor<float> load_input_image(const std::string& path) {
  dawn::Image img = dawn::read_image(path);
  if (img.width != img.height)
    throw std::runtime_error(path + ": decompose expects a square image, got " +
                             std::to_string(img.width) + "x" + std::to_string(img.height));
  const int64_t s = img.width;
  std::vector<float> data;
  data.reserve(static_cast<size_t>(3 * s * s));
  for (int64_t c = 0; c < 3; ++c) {
    const int64_t src = img.channels == 3 ? c : 0;
    data.insert(data.end(), img.pixels.begin() + src * s * s,
                img.pixels.begin() + (src + 1) * s * s);
  }
  return Tensor<float>::from({1, 3, s, s}, std::move(data));
}

std::vector<float> luma(const Tensor<float>& t) {
  const int64_t c = t.dim(1), h = t.dim(2), w = t.dim(3);
  std::vector<float> out(static_cast<size_t>(h * w), 0.0f);
  const float* px = t.data().data();
  for (int64_t ch = 0; ch < c; ++ch)
    for (int64_t i = 0; i < h * w; ++i) out[static_cast<size_t>(i)] += px[ch * h * w + i];
  for (auto& v : out) v /= static_cast<float>(c);
  return out;
}

void write_band_image(const std::string& path, const Tensor<float>& band, bool detail,
                      double detail_scale) {
  auto gray = luma(band);
  if (detail) {
    // sign-preserving mid-gray mapping, scaled then clamped
    for (auto& v : gray)
      v = std::clamp(0.5f + static_cast<float>(detail_scale) * v, 0.0f, 1.0f);
  } else {
    float lo = gray[0], hi = gray[0];
    for (float v : gray) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    const float range = hi - lo > 1e-12f ? hi - lo : 1.0f;
    for (auto& v : gray) v = (v - lo) / range;
  }
  dawn::write_pgm(path, gray, band.dim(3), band.dim(2));
}

int cmd_decompose(RunSpec spec, const std::string& input, const std::string& checkpoint,
                  double detail_scale) {
  Tensor<float> image = load_input_image(input);
  spec.input_size = image.dim(2);
  if (spec.classes == 0) spec.classes = 10;

  DawnConfig cfg = model_config(spec);
  cfg.validate();
  auto model = DawnModel<float>::build(cfg, spec.seed);
  if (!checkpoint.empty()) dawn::load_checkpoint(model, checkpoint);

  fs::create_directories(spec.out_dir);
  dawn::NoGradGuard guard;

  auto result = model.forward(image, false);
  // reconstruct from the final approximation and the recorded details
  Tensor<float> reconstructed = result.levels.empty() ? image : Tensor<float>{};
  if (!result.levels.empty()) {
    Tensor<float> cur = result.levels.back().bands.ll;
    for (size_t t = result.levels.size(); t-- > 0;) {
      auto bands = result.levels[t].bands;
      bands.ll = cur;
      cur = model.levels()[t].inverse(bands);
    }
    reconstructed = cur;
  }
  const Tensor<float>& stack_input =
      result.levels.empty() ? image : result.levels.front().input;

  float max_err = 0;
  for (int64_t i = 0; i < stack_input.numel(); ++i)
    max_err = std::max(max_err,
                       std::abs(stack_input.data()[i] - reconstructed.data()[i]));

  for (size_t t = 0; t < result.levels.size(); ++t) {
    const auto& bands = result.levels[t].bands;
    const std::string base = (fs::path(spec.out_dir) / ("level" + std::to_string(t))).string();
    write_band_image(base + "_LL.pgm", bands.ll, false, detail_scale);
    write_band_image(base + "_LH.pgm", bands.lh, true, detail_scale);
    write_band_image(base + "_HL.pgm", bands.hl, true, detail_scale);
    write_band_image(base + "_HH.pgm", bands.hh, true, detail_scale);
  }
  write_band_image((fs::path(spec.out_dir) / "reconstruction.pgm").string(), reconstructed,
                   false, detail_scale);
  {
    std::ofstream os(fs::path(spec.out_dir) / "reconstruction_error.txt");
    os << fmt_double(max_err) << "\n";
  }
  std::printf("wrote %zu sub-band images to %s\n", result.levels.size() * 4,
              spec.out_dir.c_str());
  std::printf("reconstruction max abs error %.3g\n", static_cast<double>(max_err));
  return 0;
}

int cmd_gradcheck(uint64_t seed, int64_t samples) {
  using D = Tensor<double>;
  dawn::Rng rng(seed);
  bool all_ok = true;
  auto report_line = [&](const char* name, const dawn::GradCheckReport& report, double tol) {
    const bool ok = report.ok(tol);
    all_ok = all_ok && ok;
    std::printf("%-28s max rel err %.3g over %lld coords  %s\n", name, report.max_rel_err,
                static_cast<long long>(report.coords_checked), ok ? "PASS" : "FAIL");
  };

  {  // convolution stack
    D x = D::uniform({2, 3, 8, 8}, -1.0, 1.0, rng, true);
    D w = D::uniform({4, 3, 3, 3}, -0.5, 0.5, rng, true);
    D b = D::uniform({4}, -0.5, 0.5, rng, true);
    std::vector<dawn::Parameter<double>> params{{"x", x}, {"w", w}, {"b", b}};
    auto f = [&]() { return dawn::sum_squares(dawn::tanh_act(dawn::conv2d(x, w, b))); };
    auto r = dawn::grad_check<double>(f, params, 1e-5, samples, rng);
    report_line("conv2d+tanh", r, 1e-3);
  }
  {  // dense + log-softmax + nll
    D x = D::uniform({4, 6}, -1.0, 1.0, rng, true);
    D w = D::uniform({5, 6}, -0.5, 0.5, rng, true);
    D b = D::uniform({5}, -0.5, 0.5, rng, true);
    std::vector<dawn::Parameter<double>> params{{"x", x}, {"w", w}, {"b", b}};
    auto f = [&]() {
      return dawn::nll_loss(dawn::log_softmax(dawn::dense(x, w, b)), {0, 1, 2, 3});
    };
    auto r = dawn::grad_check<double>(f, params, 1e-5, samples, rng);
    report_line("dense+log_softmax+nll", r, 1e-3);
  }
  {  // one lifting level against a sub-band energy objective
    dawn::Lifting2D<double> level(2, 3, 1, false, rng);
    std::vector<dawn::Parameter<double>> params;
    level.collect_parameters("level0", params);
    D x = D::uniform({1, 2, 8, 8}, -1.0, 1.0, rng);
    auto f = [&]() {
      auto sub = level.forward(x);
      return dawn::add(dawn::add(dawn::sum_squares(sub.ll), dawn::sum_squares(sub.lh)),
                       dawn::add(dawn::sum_squares(sub.hl), dawn::sum_squares(sub.hh)));
    };
    auto r = dawn::grad_check<double>(f, params, 1e-5, samples, rng);
    report_line("lifting2d", r, 1e-3);
  }
  {  // full composite objective on a toy model
    DawnConfig cfg;
    cfg.input_channels = 3;
    cfg.input_size = 16;
    cfg.init_channels = 4;
    cfg.levels = 2;
    cfg.num_classes = 4;
    auto model = DawnModel<double>::build(cfg, seed);
    auto params = model.parameters();
    D batch = D::uniform({2, 3, 16, 16}, 0.0, 1.0, rng);
    dawn::TrainConfig tc;
    auto f = [&]() {
      auto fwd = model.forward(batch, false);
      return dawn::composite_loss<double>(fwd, {1, 3}, tc).total;
    };
    auto r = dawn::grad_check<double>(f, params, 1e-5, samples, rng);
    report_line("composite loss (full model)", r, 1e-3);
  }
  {  // perfect reconstruction sweep
    float worst = 0;
    dawn::Rng frng(seed + 1);
    for (int trial = 0; trial < 100; ++trial) {
      dawn::Lifting2D<float> level(2, 3, 1, false, frng);
      auto x = Tensor<float>::uniform({1, 2, 16, 16}, -1.0f, 1.0f, frng);
      auto sub = level.forward(x);
      auto back = level.inverse(sub);
      for (int64_t i = 0; i < x.numel(); ++i)
        worst = std::max(worst, std::abs(back.data()[i] - x.data()[i]));
    }
    const bool ok = worst < 1e-5f;
    all_ok = all_ok && ok;
    std::printf("%-28s max abs err %.3g over 100 trials   %s\n", "perfect reconstruction",
                static_cast<double>(worst), ok ? "PASS" : "FAIL");
  }

  std::printf("%s\n", all_ok ? "all gradient checks passed" : "GRADIENT CHECKS FAILED");
  return all_ok ? 0 : 1;
}

void add_model_options(CLI::App* cmd, RunSpec& spec) {
  cmd->add_option("--init-channels", spec.init_channels, "depth of the initial conv block (0 = none)");
  cmd->add_option("--levels", spec.levels, "decomposition levels (-1 = auto)");
  cmd->add_option("--kernel-size,-k", spec.kernel_size, "predictor/updater kernel size");
  cmd->add_option("--hidden-layers", spec.hidden_layers, "convolutions before the 1x1 output conv");
  cmd->add_option("--input-size", spec.input_size, "square input size in pixels");
  cmd->add_option("--classes", spec.classes, "class count (0 = from dataset)");
  cmd->add_option("--seed", spec.seed, "seed for initialization and training");
}

void add_data_options(CLI::App* cmd, RunSpec& spec) {
  cmd->add_option("--dataset", spec.dataset, "synth | cifar10 | cifar100 | folder");
  cmd->add_option("--data-dir", spec.data_dir, "dataset directory (or DAWN_DATA_DIR)");
  cmd->add_option("--test-dir", spec.test_dir, "separate test folder for folder datasets");
  cmd->add_option("--synth-per-class", spec.synth_per_class, "training images per synthetic class");
  cmd->add_option("--data-seed", spec.data_seed, "seed for synthetic data");
  cmd->add_flag("--normalize", spec.normalize, "standardize channels with train statistics");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deep adaptive wavelet network"};
  app.require_subcommand(1);

  RunSpec spec;
  std::string checkpoint, input_image;
  double detail_scale = 10.0;
  bool describe = false;
  bool dry_run = false;
  uint64_t gc_seed = 1;
  int64_t gc_samples = 120;

  // the config file loads first so explicit flags override it
  for (int i = 1; i + 1 < argc; ++i)
    if (std::string(argv[i]) == "--config") spec.config_path = argv[i + 1];
  if (!spec.config_path.empty()) {
    try {
      apply_config_file(spec, spec.config_path);
      apply_recipe(spec);
    } catch (const std::exception& e) {
      std::fprintf(stderr, "error: %s\n", e.what());
      return 1;
    }
  }

  auto* train_cmd = app.add_subcommand("train", "train a model");
  train_cmd->add_option("--config", spec.config_path, "TOML config file");
  train_cmd->add_option("--recipe", spec.recipe, "preset: cifar (300 epochs) or kth (90 epochs)");
  add_data_options(train_cmd, spec);
  add_model_options(train_cmd, spec);
  train_cmd->add_option("--lr", spec.lr, "initial learning rate");
  train_cmd->add_option("--momentum", spec.momentum, "SGD momentum");
  train_cmd->add_option("--batch-size", spec.batch_size, "batch size");
  train_cmd->add_option("--epochs", spec.epochs, "epochs");
  train_cmd->add_option("--decay-epochs", spec.decay_epochs, "epochs at which lr decays");
  train_cmd->add_option("--decay-factor", spec.decay_factor, "lr decay factor");
  train_cmd->add_option("--lambda1", spec.lambda1, "detail Huber weight");
  train_cmd->add_option("--lambda2", spec.lambda2, "mean-preservation weight");
  train_cmd->add_option("--huber-delta", spec.huber_delta, "Huber threshold");
  train_cmd->add_option("--grad-clip", spec.grad_clip, "global-norm gradient clip (0 = off)");
  train_cmd->add_flag("--augment,!--no-augment", spec.augment, "random crop + mirror");
  train_cmd->add_option("--out", spec.out_dir, "output directory");
  train_cmd->add_flag("--dry-run", dry_run, "resolve and write the config, then exit");

  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  eval_cmd->add_option("--config", spec.config_path, "TOML config file");
  eval_cmd->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  add_data_options(eval_cmd, spec);
  add_model_options(eval_cmd, spec);

  auto* params_cmd = app.add_subcommand("params", "count trainable parameters");
  params_cmd->add_option("--config", spec.config_path, "TOML config file");
  add_model_options(params_cmd, spec);
  params_cmd->add_flag("--describe", describe, "list every parameter");

  auto* decompose_cmd = app.add_subcommand("decompose", "export sub-band images");
  decompose_cmd->add_option("--config", spec.config_path, "TOML config file");
  decompose_cmd->add_option("--input", input_image, "square PGM or PNG image")->required();
  decompose_cmd->add_option("--checkpoint", checkpoint, "checkpoint file (optional)");
  decompose_cmd->add_option("--detail-scale", detail_scale, "detail magnification");
  decompose_cmd->add_option("--out", spec.out_dir, "output directory");
  add_model_options(decompose_cmd, spec);

  auto* gradcheck_cmd = app.add_subcommand("gradcheck", "run gradient and inversion checks");
  gradcheck_cmd->add_option("--seed", gc_seed, "seed");
  gradcheck_cmd->add_option("--samples", gc_samples, "coordinates per check");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    std::fprintf(stderr, "%s", app.help().c_str());
    return 2;
  }

  // decompose without weights defaults to a raw-image wavelet view
  if (decompose_cmd->parsed() && checkpoint.empty() && spec.config_path.empty() &&
      decompose_cmd->count("--init-channels") == 0)
    spec.init_channels = 0;

  try {
    apply_recipe(spec);
    if (train_cmd->parsed()) return cmd_train(spec, dry_run);
    if (eval_cmd->parsed()) return cmd_eval(spec, checkpoint);
    if (params_cmd->parsed()) return cmd_params(spec, describe);
    if (decompose_cmd->parsed()) return cmd_decompose(spec, input_image, checkpoint, detail_scale);
    if (gradcheck_cmd->parsed()) return cmd_gradcheck(gc_seed, gc_samples);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
