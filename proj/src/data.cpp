#include "dawn/data.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "dawn/image_io.hpp"

namespace dawn {

namespace fs = std::filesystem;

Tensor<float> Dataset::gather_images(const std::vector<int64_t>& indices) const {
  const int64_t c = images.dim(1), h = images.dim(2), w = images.dim(3);
  const int64_t stride = c * h * w;
  std::vector<float> out(indices.size() * static_cast<size_t>(stride));
  for (size_t i = 0; i < indices.size(); ++i) {
    const int64_t row = indices[i];
    if (row < 0 || row >= size())
      throw std::out_of_range("dataset: index " + std::to_string(row) + " out of range");
    std::copy_n(images.data().data() + row * stride, stride,
                out.data() + static_cast<int64_t>(i) * stride);
  }
  return Tensor<float>::from({static_cast<int64_t>(indices.size()), c, h, w}, std::move(out));
}

std::vector<int> Dataset::gather_labels(const std::vector<int64_t>& indices) const {
  std::vector<int> out;
  out.reserve(indices.size());
  for (int64_t i : indices) out.push_back(labels.at(static_cast<size_t>(i)));
  return out;
}

void Dataset::validate() const {
  if (!images.defined() || images.ndim() != 4)
    throw std::runtime_error("dataset: images must be [N,C,H,W]");
  if (images.dim(2) != images.dim(3))
    throw std::runtime_error("dataset: images must be square, got " + shape_str(images.shape()));
  if (static_cast<int64_t>(labels.size()) != size())
    throw std::runtime_error("dataset: label count does not match image count");
  const int64_t classes = num_classes();
  for (int y : labels)
    if (y < 0 || y >= classes)
      throw std::runtime_error("dataset: label " + std::to_string(y) + " outside [0," +
                               std::to_string(classes) + ")");
}

// ---- CIFAR ------------------------------------------------------------------

namespace {

constexpr int64_t kCifarPixels = 3072;  // 3 * 32 * 32

void read_cifar_file(const std::string& path, int label_bytes, int64_t expected_records,
                     std::vector<float>& images, std::vector<int>& labels) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open CIFAR file " + path);
  is.seekg(0, std::ios::end);
  const int64_t file_size = static_cast<int64_t>(is.tellg());
  is.seekg(0);

  const int64_t record = label_bytes + kCifarPixels;
  if (file_size % record != 0)
    throw std::runtime_error(path + ": truncated record at byte offset " +
                             std::to_string(file_size - file_size % record) + " (file size " +
                             std::to_string(file_size) + ", record size " +
                             std::to_string(record) + ")");
  const int64_t records = file_size / record;
  if (records != expected_records)
    throw std::runtime_error(path + ": expected " + std::to_string(expected_records) +
                             " records, found " + std::to_string(records));

  std::vector<unsigned char> buf(static_cast<size_t>(record));
  const float inv = 1.0f / 255.0f;
  for (int64_t r = 0; r < records; ++r) {
    if (!is.read(reinterpret_cast<char*>(buf.data()), record))
      throw std::runtime_error(path + ": read error at record " + std::to_string(r));
    // CIFAR-100 stores coarse then fine; the fine label is the last label byte
    labels.push_back(buf[static_cast<size_t>(label_bytes - 1)]);
    for (int64_t i = 0; i < kCifarPixels; ++i)
      images.push_back(static_cast<float>(buf[static_cast<size_t>(label_bytes + i)]) * inv);
  }
}

std::vector<std::string> read_name_file(const fs::path& path, int64_t count,
                                        const std::string& prefix) {
  std::vector<std::string> names;
  std::ifstream is(path);
  if (is) {
    std::string line;
    while (std::getline(is, line)) {
      while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
      if (!line.empty()) names.push_back(line);
    }
  }
  if (static_cast<int64_t>(names.size()) != count) {
    names.clear();
    for (int64_t i = 0; i < count; ++i) names.push_back(prefix + std::to_string(i));
  }
  return names;
}

}  // namespace

std::pair<Dataset, Dataset> load_cifar(const std::string& dir, int variant) {
  if (variant != 10 && variant != 100)
    throw std::invalid_argument("load_cifar: variant must be 10 or 100");

  Dataset train, test;
  train.split = "train";
  test.split = "test";

  std::vector<float> train_pixels, test_pixels;
  if (variant == 10) {
    for (int i = 1; i <= 5; ++i)
      read_cifar_file(dir + "/data_batch_" + std::to_string(i) + ".bin", 1, 10000, train_pixels,
                      train.labels);
    read_cifar_file(dir + "/test_batch.bin", 1, 10000, test_pixels, test.labels);
    train.class_names = read_name_file(fs::path(dir) / "batches.meta.txt", 10, "class_");
  } else {
    read_cifar_file(dir + "/train.bin", 2, 50000, train_pixels, train.labels);
    read_cifar_file(dir + "/test.bin", 2, 10000, test_pixels, test.labels);
    train.class_names = read_name_file(fs::path(dir) / "fine_label_names.txt", 100, "class_");
  }
  test.class_names = train.class_names;

  train.images = Tensor<float>::from({static_cast<int64_t>(train.labels.size()), 3, 32, 32},
                                     std::move(train_pixels));
  test.images = Tensor<float>::from({static_cast<int64_t>(test.labels.size()), 3, 32, 32},
                                    std::move(test_pixels));
  train.validate();
  test.validate();
  return {std::move(train), std::move(test)};
}

// ---- image folders -------------------------------------------------------------

Dataset load_image_folder(const std::string& dir, int64_t size) {
  if (!fs::is_directory(dir)) throw std::runtime_error(dir + " is not a directory");

  std::vector<std::string> classes;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_directory()) classes.push_back(entry.path().filename().string());
  std::sort(classes.begin(), classes.end());
  if (classes.empty()) throw std::runtime_error(dir + ": no class subdirectories");

  Dataset out;
  out.split = "train";
  out.class_names = classes;
  std::vector<float> pixels;
  for (size_t ci = 0; ci < classes.size(); ++ci) {
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(fs::path(dir) / classes[ci])) {
      const std::string ext = entry.path().extension().string();
      if (ext == ".png" || ext == ".pgm" || ext == ".PNG" || ext == ".PGM")
        files.push_back(entry.path().string());
    }
    std::sort(files.begin(), files.end());
    if (files.empty())
      throw std::runtime_error(dir + "/" + classes[ci] + ": class directory has no images");
    for (const auto& file : files) {
      Image img = center_resize(read_image(file), size);
      for (int64_t c = 0; c < 3; ++c) {
        const int64_t src_c = img.channels == 3 ? c : 0;
        for (int64_t i = 0; i < size * size; ++i)
          pixels.push_back(img.pixels[static_cast<size_t>(src_c * size * size + i)]);
      }
      out.labels.push_back(static_cast<int>(ci));
    }
  }
  out.images = Tensor<float>::from({static_cast<int64_t>(out.labels.size()), 3, size, size},
                                   std::move(pixels));
  out.validate();
  return out;
}

// ---- synthetic textures -----------------------------------------------------------

namespace {

void synth_image(int cls, int64_t size, Rng& rng, std::vector<float>& out) {
  const double pi = 3.14159265358979323846;
  std::vector<float> plane(static_cast<size_t>(size * size));
  switch (cls) {
    case 0: {  // horizontal grating: intensity varies with the row only
      const double freq = rng.uniform(1.5, static_cast<double>(size) / 4.0);
      const double phase = rng.uniform(0.0, 2.0 * pi);
      const double amp = rng.uniform(0.25, 0.45);
      for (int64_t y = 0; y < size; ++y) {
        const float v = static_cast<float>(
            0.5 + amp * std::sin(2.0 * pi * freq * static_cast<double>(y) / size + phase));
        for (int64_t x = 0; x < size; ++x) plane[static_cast<size_t>(y * size + x)] = v;
      }
      break;
    }
    case 1: {  // vertical grating
      const double freq = rng.uniform(1.5, static_cast<double>(size) / 4.0);
      const double phase = rng.uniform(0.0, 2.0 * pi);
      const double amp = rng.uniform(0.25, 0.45);
      for (int64_t x = 0; x < size; ++x) {
        const float v = static_cast<float>(
            0.5 + amp * std::sin(2.0 * pi * freq * static_cast<double>(x) / size + phase));
        for (int64_t y = 0; y < size; ++y) plane[static_cast<size_t>(y * size + x)] = v;
      }
      break;
    }
    case 2: {  // checkerboard with a random period and contrast
      const int64_t period = 2 + static_cast<int64_t>(rng.next_u64() % 7);
      const float lo = static_cast<float>(rng.uniform(0.05, 0.35));
      const float hi = static_cast<float>(rng.uniform(0.65, 0.95));
      for (int64_t y = 0; y < size; ++y)
        for (int64_t x = 0; x < size; ++x)
          plane[static_cast<size_t>(y * size + x)] =
              ((y / period + x / period) % 2 == 0) ? lo : hi;
      break;
    }
    default: {  // clamped Gaussian noise
      for (auto& v : plane)
        v = static_cast<float>(std::clamp(0.5 + 0.2 * rng.normal(), 0.0, 1.0));
      break;
    }
  }
  for (int64_t c = 0; c < 3; ++c) out.insert(out.end(), plane.begin(), plane.end());
}

Dataset synth_split(const char* split, int64_t per_class, int64_t size, Rng& rng) {
  Dataset ds;
  ds.split = split;
  ds.class_names = {"grating_horizontal", "grating_vertical", "checkerboard", "noise"};
  std::vector<float> pixels;
  for (int cls = 0; cls < 4; ++cls)
    for (int64_t i = 0; i < per_class; ++i) {
      synth_image(cls, size, rng, pixels);
      ds.labels.push_back(cls);
    }
  ds.images = Tensor<float>::from({static_cast<int64_t>(ds.labels.size()), 3, size, size},
                                  std::move(pixels));
  ds.validate();
  return ds;
}

}  // namespace

std::pair<Dataset, Dataset> synth_textures(int64_t per_class, int64_t size, uint64_t seed) {
  if (size < 8 || size % 2 != 0)
    throw std::invalid_argument("synth_textures: size must be even and >= 8");
  if (per_class < 1) throw std::invalid_argument("synth_textures: per_class must be >= 1");
  Rng rng(seed);
  Dataset train = synth_split("train", per_class, size, rng);
  Dataset test = synth_split("test", std::max<int64_t>(1, per_class * 2 / 5), size, rng);
  return {std::move(train), std::move(test)};
}

void export_dataset_pgm(const Dataset& dataset, const std::string& dir) {
  fs::create_directories(dir);
  const int64_t c = dataset.images.dim(1), h = dataset.images.dim(2), w = dataset.images.dim(3);
  for (int64_t i = 0; i < dataset.size(); ++i) {
    std::vector<float> gray(static_cast<size_t>(h * w), 0.0f);
    const float* img = dataset.images.data().data() + i * c * h * w;
    for (int64_t ch = 0; ch < c; ++ch)
      for (int64_t p = 0; p < h * w; ++p) gray[static_cast<size_t>(p)] += img[ch * h * w + p];
    for (auto& v : gray) v /= static_cast<float>(c);
    const std::string name = dataset.split + "_" + std::to_string(i) + "_" +
                             dataset.class_names[static_cast<size_t>(
                                 dataset.labels[static_cast<size_t>(i)])] +
                             ".pgm";
    write_pgm((fs::path(dir) / name).string(), gray, w, h);
  }
}

void normalize_datasets(Dataset& train, Dataset& test) {
  const int64_t c = train.images.dim(1);
  const int64_t plane = train.images.dim(2) * train.images.dim(3);
  std::vector<double> mean(static_cast<size_t>(c), 0.0), var(static_cast<size_t>(c), 0.0);
  const float* px = train.images.data().data();
  const int64_t n = train.size();
  for (int64_t i = 0; i < n; ++i)
    for (int64_t ch = 0; ch < c; ++ch) {
      const float* p = px + (i * c + ch) * plane;
      for (int64_t j = 0; j < plane; ++j) mean[static_cast<size_t>(ch)] += p[j];
    }
  for (auto& m : mean) m /= static_cast<double>(n * plane);
  for (int64_t i = 0; i < n; ++i)
    for (int64_t ch = 0; ch < c; ++ch) {
      const float* p = px + (i * c + ch) * plane;
      for (int64_t j = 0; j < plane; ++j) {
        const double d = p[j] - mean[static_cast<size_t>(ch)];
        var[static_cast<size_t>(ch)] += d * d;
      }
    }
  for (auto& v : var) v = std::sqrt(v / static_cast<double>(n * plane) + 1e-8);

  for (Dataset* ds : {&train, &test}) {
    auto data = ds->images.data();
    const int64_t rows = ds->size();
    for (int64_t i = 0; i < rows; ++i)
      for (int64_t ch = 0; ch < c; ++ch) {
        float* p = data.data() + (i * c + ch) * plane;
        for (int64_t j = 0; j < plane; ++j)
          p[j] = static_cast<float>((p[j] - mean[static_cast<size_t>(ch)]) /
                                    var[static_cast<size_t>(ch)]);
      }
  }
}

// ---- augmentation -------------------------------------------------------------------

Tensor<float> flip_horizontal(const Tensor<float>& batch) {
  const int64_t n = batch.dim(0), c = batch.dim(1), h = batch.dim(2), w = batch.dim(3);
  std::vector<float> out(batch.data().size());
  const float* src = batch.data().data();
  for (int64_t i = 0; i < n * c * h; ++i)
    for (int64_t x = 0; x < w; ++x) out[static_cast<size_t>(i * w + x)] = src[i * w + (w - 1 - x)];
  return Tensor<float>::from(batch.shape(), std::move(out));
}

Tensor<float> augment_batch(const Tensor<float>& batch, const AugmentPolicy& policy, Rng& rng) {
  if (!policy.active()) return batch;
  const int64_t n = batch.dim(0), c = batch.dim(1), h = batch.dim(2), w = batch.dim(3);
  const int64_t pad = policy.pad;
  std::vector<float> out(batch.data().size(), 0.0f);
  const float* src = batch.data().data();

  for (int64_t img = 0; img < n; ++img) {
    int64_t dy = 0, dx = 0;
    if (policy.random_crop && pad > 0) {
      dy = static_cast<int64_t>(rng.next_u64() % static_cast<uint64_t>(2 * pad + 1));
      dx = static_cast<int64_t>(rng.next_u64() % static_cast<uint64_t>(2 * pad + 1));
    }
    const bool mirror = policy.mirror && (rng.next_u64() & 1u);
    for (int64_t ch = 0; ch < c; ++ch) {
      const float* sp = src + (img * c + ch) * h * w;
      float* op = out.data() + (img * c + ch) * h * w;
      for (int64_t y = 0; y < h; ++y) {
        const int64_t sy = y + dy - pad;  // position in the padded frame
        if (sy < 0 || sy >= h) continue;
        for (int64_t x = 0; x < w; ++x) {
          const int64_t sx = x + dx - pad;
          if (sx < 0 || sx >= w) continue;
          const int64_t ox = mirror ? (w - 1 - x) : x;
          op[y * w + ox] = sp[sy * w + sx];
        }
      }
    }
  }
  return Tensor<float>::from(batch.shape(), std::move(out));
}

Rng augment_stream(uint64_t seed, int epoch, int64_t batch_index) {
  uint64_t mix = seed;
  mix = mix * 0x100000001b3ULL ^ static_cast<uint64_t>(epoch);
  mix = mix * 0x100000001b3ULL ^ static_cast<uint64_t>(batch_index);
  return Rng(mix);
}

}  // namespace dawn
