#include "dawn/model.hpp"

#include <array>
#include <sstream>

namespace dawn {

int compute_levels(int64_t input_size) {
  if (input_size < 8)
    throw std::invalid_argument("compute_levels: input size " + std::to_string(input_size) +
                                " is below 8; no level keeps the 4x4 feature-map floor");
  int log2_floor = 0;
  for (int64_t v = input_size; v > 1; v >>= 1) ++log2_floor;
  return log2_floor - 2;
}

int DawnConfig::resolved_levels() const {
  return levels == kAutoLevels ? compute_levels(input_size) : levels;
}

int64_t DawnConfig::head_width() const {
  const int64_t c = lifting_channels();
  return 3 * resolved_levels() * c + c;
}

void DawnConfig::validate() const {
  if (input_channels < 1) throw std::invalid_argument("config: input_channels must be >= 1");
  if (init_channels < 0) throw std::invalid_argument("config: init_channels must be >= 0");
  if (num_classes < 2) throw std::invalid_argument("config: num_classes must be >= 2");
  if (kernel_size < 1) throw std::invalid_argument("config: kernel_size must be >= 1");
  if (hidden_layers < 1) throw std::invalid_argument("config: hidden_layers must be >= 1");
  const int max_levels = compute_levels(input_size);
  const int l = resolved_levels();
  if (l < 0 || l > max_levels)
    throw std::invalid_argument("config: levels " + std::to_string(l) + " outside [0," +
                                std::to_string(max_levels) + "] for input size " +
                                std::to_string(input_size));
  if (l > 0 && input_size % (int64_t(1) << l) != 0)
    throw std::invalid_argument("config: input size " + std::to_string(input_size) +
                                " not divisible by 2^" + std::to_string(l));
}

ParamBreakdown param_count(const DawnConfig& config) {
  config.validate();
  ParamBreakdown out;
  const int64_t c = config.lifting_channels();
  const int64_t k = config.kernel_size;
  const int64_t h = config.hidden_layers;

  if (config.init_channels > 0) {
    const int64_t d = config.init_channels;
    out.initial = config.input_channels * d * 9 + 2 * d + d * d * 9 + 2 * d;
  }

  // One predictor/updater: (h-1) depth-keeping convolutions, the expansion
  // to 2C, and the 1x1 back to C, all biased. Six of them per level.
  const int64_t pu = (h - 1) * (c * c * k + c) + (2 * c * c * k + 2 * c) + (2 * c * c + c);
  out.per_level.assign(static_cast<size_t>(config.resolved_levels()), 6 * pu);

  out.classifier = config.head_width() * config.num_classes + config.num_classes;
  return out;
}

int64_t ParamBreakdown::lifting() const {
  int64_t n = 0;
  for (int64_t v : per_level) n += v;
  return n;
}

int64_t ParamBreakdown::total() const { return initial + lifting() + classifier; }

std::optional<int64_t> published_reference_count(const DawnConfig& config) {
  if (config.init_channels != 64 || config.num_classes != 100 || config.input_size != 32 ||
      config.input_channels != 3)
    return std::nullopt;
  struct Row {
    int k, h, l;
    int64_t count;
  };
  static constexpr std::array<Row, 10> rows{{{3, 1, 3, 734628},
                                             {1, 1, 3, 439716},
                                             {2, 1, 3, 587172},
                                             {4, 1, 3, 882084},
                                             {3, 2, 3, 918564},
                                             {3, 3, 3, 1140900},
                                             {3, 4, 3, 1363236},
                                             {3, 1, 0, 45348},
                                             {3, 1, 1, 275108},
                                             {3, 1, 2, 504868}}};
  for (const auto& row : rows)
    if (row.k == config.kernel_size && row.h == config.hidden_layers &&
        row.l == config.resolved_levels())
      return row.count;
  return std::nullopt;
}

template <class T>
DawnModel<T> DawnModel<T>::build(const DawnConfig& config, uint64_t seed) {
  config.validate();
  DawnModel model;
  model.config_ = config;
  model.config_.levels = config.resolved_levels();

  Rng rng(seed);
  if (config.init_channels > 0) {
    const int64_t cin = config.input_channels, d = config.init_channels;
    model.block1_.conv_weight = Tensor<T>::he_uniform({d, cin, 3, 3}, cin * 9, rng);
    model.block1_.bn = BatchNormState<T>::make(d);
    model.block2_.conv_weight = Tensor<T>::he_uniform({d, d, 3, 3}, d * 9, rng);
    model.block2_.bn = BatchNormState<T>::make(d);
  }

  const int64_t c = config.lifting_channels();
  for (int t = 0; t < model.config_.levels; ++t)
    model.levels_.emplace_back(c, config.kernel_size, config.hidden_layers, false, rng);

  const int64_t width = config.head_width();
  model.fc_weight_ = Tensor<T>::he_uniform({config.num_classes, width}, width, rng);
  model.fc_bias_ = Tensor<T>::zeros({config.num_classes}, true);
  return model;
}

template <class T>
typename DawnModel<T>::ForwardResult DawnModel<T>::forward(const Tensor<T>& batch, bool training) {
  if (batch.ndim() != 4 || batch.dim(1) != config_.input_channels ||
      batch.dim(2) != config_.input_size || batch.dim(3) != config_.input_size)
    throw std::invalid_argument("forward: expected [B," + std::to_string(config_.input_channels) +
                                "," + std::to_string(config_.input_size) + "," +
                                std::to_string(config_.input_size) + "] batch, got " +
                                shape_str(batch.shape()));

  Tensor<T> x = batch;
  if (has_initial_block()) {
    x = relu(batch_norm(conv2d(zero_pad(x, 1, 1, 1, 1), block1_.conv_weight, Tensor<T>{}),
                        block1_.bn, training));
    x = relu(batch_norm(conv2d(zero_pad(x, 1, 1, 1, 1), block2_.conv_weight, Tensor<T>{}),
                        block2_.bn, training));
  }

  ForwardResult result;
  std::vector<Tensor<T>> pooled;
  for (auto& level : levels_) {
    LevelOutput out;
    out.input = x;
    out.bands = level.forward(x);
    pooled.push_back(global_avg_pool(out.bands.lh));
    pooled.push_back(global_avg_pool(out.bands.hl));
    pooled.push_back(global_avg_pool(out.bands.hh));
    x = out.bands.ll;
    result.levels.push_back(std::move(out));
  }
  pooled.push_back(global_avg_pool(x));  // final approximation band

  Tensor<T> head = pooled.size() == 1 ? pooled[0] : concat(pooled, 1);
  result.log_probs = log_softmax(dense(head, fc_weight_, fc_bias_));
  return result;
}

template <class T>
std::vector<Parameter<T>> DawnModel<T>::parameters() const {
  std::vector<Parameter<T>> out;
  if (has_initial_block()) {
    out.push_back({"initial.conv1.weight", block1_.conv_weight});
    out.push_back({"initial.bn1.scale", block1_.bn.scale});
    out.push_back({"initial.bn1.shift", block1_.bn.shift});
    out.push_back({"initial.conv2.weight", block2_.conv_weight});
    out.push_back({"initial.bn2.scale", block2_.bn.scale});
    out.push_back({"initial.bn2.shift", block2_.bn.shift});
  }
  for (size_t t = 0; t < levels_.size(); ++t)
    levels_[t].collect_parameters("level" + std::to_string(t), out);
  out.push_back({"classifier.weight", fc_weight_});
  out.push_back({"classifier.bias", fc_bias_});
  return out;
}

template <class T>
std::vector<typename DawnModel<T>::BufferRef> DawnModel<T>::buffers() {
  std::vector<BufferRef> out;
  if (has_initial_block()) {
    out.push_back({"initial.bn1.running_mean", &block1_.bn.running_mean});
    out.push_back({"initial.bn1.running_var", &block1_.bn.running_var});
    out.push_back({"initial.bn2.running_mean", &block2_.bn.running_mean});
    out.push_back({"initial.bn2.running_var", &block2_.bn.running_var});
  }
  return out;
}

template <class T>
std::string DawnModel<T>::describe() const {
  std::ostringstream os;
  int64_t total = 0;
  for (const auto& p : parameters()) {
    os << p.name << ' ' << shape_str(p.tensor.shape()) << ' ' << p.tensor.numel() << '\n';
    total += p.tensor.numel();
  }
  os << "total " << total << '\n';
  return os.str();
}

template <class T>
int64_t DawnModel<T>::parameter_total() const {
  int64_t total = 0;
  for (const auto& p : parameters()) total += p.tensor.numel();
  return total;
}

template class DawnModel<float>;
template class DawnModel<double>;

}  // namespace dawn
