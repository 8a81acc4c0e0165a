#include <doctest.h>

#include <zlib.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "dawn/data.hpp"
#include "dawn/image_io.hpp"

using dawn::Dataset;
using dawn::Rng;
using dawn::Tensor;
using F = Tensor<float>;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const char* name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void put_be32(std::string& out, uint32_t v) {
  out.push_back(static_cast<char>(v >> 24));
  out.push_back(static_cast<char>(v >> 16));
  out.push_back(static_cast<char>(v >> 8));
  out.push_back(static_cast<char>(v));
}

void png_chunk(std::string& out, const char* type, const std::string& data) {
  put_be32(out, static_cast<uint32_t>(data.size()));
  std::string body = std::string(type, 4) + data;
  out += body;
  put_be32(out, static_cast<uint32_t>(
                    crc32(0, reinterpret_cast<const Bytef*>(body.data()),
                          static_cast<uInt>(body.size()))));
}

// Minimal encoder for exercising the reader: 8-bit, filter 0 rows.
void write_test_png(const std::string& path, const std::vector<unsigned char>& interleaved,
                    int64_t width, int64_t height, int channels) {
  std::string raw;
  for (int64_t y = 0; y < height; ++y) {
    raw.push_back('\0');  // filter type 0
    raw.append(reinterpret_cast<const char*>(&interleaved[static_cast<size_t>(
                   y * width * channels)]),
               static_cast<size_t>(width * channels));
  }
  std::vector<unsigned char> compressed(compressBound(static_cast<uLong>(raw.size())));
  uLongf clen = static_cast<uLongf>(compressed.size());
  REQUIRE(compress2(compressed.data(), &clen, reinterpret_cast<const Bytef*>(raw.data()),
                    static_cast<uLong>(raw.size()), 6) == Z_OK);

  std::string ihdr;
  put_be32(ihdr, static_cast<uint32_t>(width));
  put_be32(ihdr, static_cast<uint32_t>(height));
  ihdr.push_back(8);  // bit depth
  ihdr.push_back(channels == 3 ? 2 : (channels == 1 ? 0 : 6));
  ihdr.push_back(0);
  ihdr.push_back(0);
  ihdr.push_back(0);

  std::string file("\x89PNG\r\n\x1a\n", 8);
  png_chunk(file, "IHDR", ihdr);
  png_chunk(file, "IDAT",
            std::string(reinterpret_cast<const char*>(compressed.data()), clen));
  png_chunk(file, "IEND", "");
  std::ofstream os(path, std::ios::binary);
  os << file;
}

void write_cifar10_file(const std::string& path, int64_t records, unsigned label_base) {
  std::ofstream os(path, std::ios::binary);
  std::vector<unsigned char> rec(3073);
  for (int64_t r = 0; r < records; ++r) {
    rec[0] = static_cast<unsigned char>((label_base + r) % 10);
    for (int64_t i = 0; i < 3072; ++i)
      rec[static_cast<size_t>(1 + i)] = static_cast<unsigned char>((r + i) % 256);
    os.write(reinterpret_cast<const char*>(rec.data()), 3073);
  }
}

}  // namespace

TEST_CASE("synth_textures construction and determinism") {
  auto [train, test] = dawn::synth_textures(50, 32, 7);
  CHECK(train.size() == 200);
  CHECK(test.size() == 80);
  CHECK(train.images.shape() == dawn::Shape{200, 3, 32, 32});
  CHECK(train.num_classes() == 4);

  // values stay in [0,1]
  for (float v : train.images.data()) {
    CHECK(v >= 0.0f);
    CHECK(v <= 1.0f);
  }

  // three channels replicate one plane
  for (int64_t i = 0; i < 32 * 32; ++i) {
    CHECK(train.images.data()[i] == train.images.data()[32 * 32 + i]);
    CHECK(train.images.data()[i] == train.images.data()[2 * 32 * 32 + i]);
  }

  // same seed, same data
  auto [train2, test2] = dawn::synth_textures(50, 32, 7);
  CHECK(std::memcmp(train.images.data().data(), train2.images.data().data(),
                    sizeof(float) * train.images.numel()) == 0);
  CHECK(std::memcmp(test.images.data().data(), test2.images.data().data(),
                    sizeof(float) * test.images.numel()) == 0);

  auto [train3, _] = dawn::synth_textures(50, 32, 8);
  CHECK(std::memcmp(train.images.data().data(), train3.images.data().data(),
                    sizeof(float) * train.images.numel()) != 0);

  CHECK_THROWS(dawn::synth_textures(50, 7, 1));  // odd size
  CHECK_THROWS(dawn::synth_textures(50, 6, 1));  // below the minimum
  CHECK_THROWS(dawn::synth_textures(0, 32, 1));
}

TEST_CASE("horizontal gratings are constant along rows") {
  auto [train, test] = dawn::synth_textures(10, 32, 3);
  for (int64_t img = 0; img < train.size(); ++img) {
    if (train.labels[static_cast<size_t>(img)] != 0) continue;
    const float* px = train.images.data().data() + img * 3 * 32 * 32;
    // column profile after averaging over rows must be flat
    std::array<double, 32> profile{};
    for (int64_t y = 0; y < 32; ++y)
      for (int64_t x = 0; x < 32; ++x) profile[static_cast<size_t>(x)] += px[y * 32 + x];
    double mean = 0;
    for (double v : profile) mean += v / 32.0;
    double var = 0;
    for (double v : profile) var += (v - mean / 1.0) * (v - mean) / 32.0;
    // each row-averaged column equals the global mean
    for (double v : profile) CHECK(std::abs(v - mean) < 1e-3);
    (void)var;
  }
}

TEST_CASE("synthetic classes separate under a fixed oriented-filter classifier") {
  auto [train, test] = dawn::synth_textures(50, 32, 7);

  // fixed rule set over hand-coded statistics: oriented gradient energy
  // splits the two grating classes, two-valuedness splits checkerboards
  // from noise (boards take exactly two intensities at any period)
  auto classify = [](const float* px) {
    double fy = 0, fx = 0;
    float lo = px[0], hi = px[0];
    for (int64_t i = 0; i < 32 * 32; ++i) {
      lo = std::min(lo, px[i]);
      hi = std::max(hi, px[i]);
    }
    double bimodal = 0;
    for (int64_t y = 0; y < 32; ++y)
      for (int64_t x = 0; x < 32; ++x) {
        const double v = px[y * 32 + x];
        if (y + 1 < 32) fy += std::abs(px[(y + 1) * 32 + x] - v);
        if (x + 1 < 32) fx += std::abs(px[y * 32 + x + 1] - v);
        if (v - lo < 0.02 || hi - v < 0.02) bimodal += 1;
      }
    const double ry = fy / (fy + fx + 1e-9);
    if (ry > 0.9) return 0;  // energy almost entirely vertical: horizontal grating
    if (ry < 0.1) return 1;
    return bimodal / (32.0 * 32.0) > 0.8 ? 2 : 3;
  };

  int64_t correct = 0;
  for (int64_t i = 0; i < test.size(); ++i)
    if (classify(test.images.data().data() + i * 3 * 32 * 32) ==
        test.labels[static_cast<size_t>(i)])
      ++correct;
  const double acc = static_cast<double>(correct) / static_cast<double>(test.size());
  CHECK(acc > 0.95);

  // the rules hold on the training split too
  int64_t train_correct = 0;
  for (int64_t i = 0; i < train.size(); ++i)
    if (classify(train.images.data().data() + i * 3 * 32 * 32) ==
        train.labels[static_cast<size_t>(i)])
      ++train_correct;
  CHECK(static_cast<double>(train_correct) / static_cast<double>(train.size()) > 0.95);
}

TEST_CASE("augmentation identities") {
  Rng rng(5);
  F batch = F::uniform({3, 3, 8, 8}, 0.0f, 1.0f, rng);

  dawn::AugmentPolicy off;
  Rng stream = dawn::augment_stream(1, 1, 0);
  F same = dawn::augment_batch(batch, off, stream);
  CHECK(std::memcmp(same.data().data(), batch.data().data(), sizeof(float) * batch.numel()) == 0);

  // mirroring twice is the identity
  F twice = dawn::flip_horizontal(dawn::flip_horizontal(batch));
  CHECK(std::memcmp(twice.data().data(), batch.data().data(), sizeof(float) * batch.numel()) == 0);

  dawn::AugmentPolicy policy;
  policy.pad = 2;
  policy.random_crop = true;
  policy.mirror = true;
  Rng s1 = dawn::augment_stream(9, 3, 7);
  F out = dawn::augment_batch(batch, policy, s1);
  CHECK(out.shape() == batch.shape());
  for (float v : out.data()) {
    CHECK(v >= 0.0f);
    CHECK(v <= 1.0f);
  }

  // fixed stream, fixed output
  Rng s2 = dawn::augment_stream(9, 3, 7);
  F out2 = dawn::augment_batch(batch, policy, s2);
  CHECK(std::memcmp(out.data().data(), out2.data().data(), sizeof(float) * out.numel()) == 0);

  Rng s3 = dawn::augment_stream(9, 3, 8);
  F out3 = dawn::augment_batch(batch, policy, s3);
  CHECK(std::memcmp(out.data().data(), out3.data().data(), sizeof(float) * out.numel()) != 0);
}

TEST_CASE("cifar-10 parsing") {
  TempDir dir("dawn_cifar_test");
  for (int i = 1; i <= 5; ++i)
    write_cifar10_file((dir.path / ("data_batch_" + std::to_string(i) + ".bin")).string(), 10000,
                       static_cast<unsigned>(i));
  write_cifar10_file((dir.path / "test_batch.bin").string(), 10000, 0);

  auto [train, test] = dawn::load_cifar(dir.path.string(), 10);
  CHECK(train.size() == 50000);
  CHECK(test.size() == 10000);
  CHECK(train.images.shape() == dawn::Shape{50000, 3, 32, 32});
  CHECK(train.num_classes() == 10);

  // labels cycle mod 10 per construction: histogram is exactly uniform
  std::array<int64_t, 10> histogram{};
  for (int y : train.labels) ++histogram[static_cast<size_t>(y)];
  for (int64_t h : histogram) CHECK(h == 5000);

  // first record of batch 1: label 1, pixel bytes (0+i) % 256 scaled
  CHECK(train.labels[0] == 1);
  CHECK(train.images.data()[0] == doctest::Approx(0.0f));
  CHECK(train.images.data()[1] == doctest::Approx(1.0f / 255.0f));
  CHECK(train.images.data()[255] == doctest::Approx(1.0f));

  for (float v : test.images.data()) {
    CHECK(v >= 0.0f);
    CHECK(v <= 1.0f);
  }
}

TEST_CASE("cifar error paths") {
  TempDir dir("dawn_cifar_err");
  CHECK_THROWS(dawn::load_cifar(dir.path.string(), 10));
  CHECK_THROWS(dawn::load_cifar(dir.path.string(), 50));

  // truncated file names the byte offset
  {
    std::ofstream os(dir.path / "data_batch_1.bin", std::ios::binary);
    std::vector<char> bytes(3073 * 2 + 100, 0);
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  try {
    dawn::load_cifar(dir.path.string(), 10);
    CHECK(false);
  } catch (const std::runtime_error& e) {
    const std::string message = e.what();
    CHECK(message.find("data_batch_1.bin") != std::string::npos);
    CHECK(message.find("byte offset 6146") != std::string::npos);
  }
}

TEST_CASE("cifar-100 fine labels") {
  TempDir dir("dawn_cifar100_test");
  auto write100 = [&](const std::string& name, int64_t records) {
    std::ofstream os(dir.path / name, std::ios::binary);
    std::vector<unsigned char> rec(3074);
    for (int64_t r = 0; r < records; ++r) {
      rec[0] = static_cast<unsigned char>(r % 20);   // coarse, ignored
      rec[1] = static_cast<unsigned char>(r % 100);  // fine
      for (int64_t i = 0; i < 3072; ++i)
        rec[static_cast<size_t>(2 + i)] = static_cast<unsigned char>(i % 251);
      os.write(reinterpret_cast<const char*>(rec.data()), 3074);
    }
  };
  write100("train.bin", 50000);
  write100("test.bin", 10000);

  auto [train, test] = dawn::load_cifar(dir.path.string(), 100);
  CHECK(train.size() == 50000);
  CHECK(train.num_classes() == 100);
  std::array<bool, 100> seen{};
  for (int y : train.labels) seen[static_cast<size_t>(y)] = true;
  for (bool s : seen) CHECK(s);
  CHECK(train.labels[7] == 7);
}

TEST_CASE("image folder loading") {
  TempDir dir("dawn_folder_test");
  fs::create_directories(dir.path / "stripes");
  fs::create_directories(dir.path / "dots");
  for (int i = 0; i < 3; ++i) {
    std::vector<float> gray(16 * 16, 0.25f * static_cast<float>(i + 1));
    dawn::write_pgm((dir.path / "stripes" / ("img" + std::to_string(i) + ".pgm")).string(), gray,
                    16, 16);
    std::vector<unsigned char> rgb(16 * 16 * 3);
    for (size_t p = 0; p < rgb.size(); ++p) rgb[p] = static_cast<unsigned char>((p + i) % 256);
    write_test_png((dir.path / "dots" / ("img" + std::to_string(i) + ".png")).string(), rgb, 16,
                   16, 3);
  }

  auto ds = dawn::load_image_folder(dir.path.string(), 16);
  CHECK(ds.size() == 6);
  CHECK(ds.class_names == std::vector<std::string>{"dots", "stripes"});
  CHECK(ds.images.shape() == dawn::Shape{6, 3, 16, 16});
  // classes sorted lexicographically: dots first
  CHECK(ds.labels == std::vector<int>{0, 0, 0, 1, 1, 1});

  // PGM gray replicated across channels
  CHECK(ds.images.data()[3 * 3 * 16 * 16] == doctest::Approx(0.25f).epsilon(0.01));

  // determinism
  auto ds2 = dawn::load_image_folder(dir.path.string(), 16);
  CHECK(std::memcmp(ds.images.data().data(), ds2.images.data().data(),
                    sizeof(float) * ds.images.numel()) == 0);

  fs::create_directories(dir.path / "empty_class");
  CHECK_THROWS(dawn::load_image_folder(dir.path.string(), 16));
}

TEST_CASE("png round trip through the reader") {
  TempDir dir("dawn_png_test");
  const int64_t w = 9, h = 7;
  std::vector<unsigned char> rgb(static_cast<size_t>(w * h * 3));
  Rng rng(13);
  for (auto& v : rgb) v = static_cast<unsigned char>(rng.next_u64() % 256);
  const std::string path = (dir.path / "t.png").string();
  write_test_png(path, rgb, w, h, 3);

  auto img = dawn::read_png(path);
  CHECK(img.width == w);
  CHECK(img.height == h);
  CHECK(img.channels == 3);
  for (int64_t y = 0; y < h; ++y)
    for (int64_t x = 0; x < w; ++x)
      for (int64_t c = 0; c < 3; ++c)
        CHECK(img.at(c, y, x) ==
              doctest::Approx(rgb[static_cast<size_t>((y * w + x) * 3 + c)] / 255.0f)
                  .epsilon(1e-6));

  // grayscale variant
  std::vector<unsigned char> gray(static_cast<size_t>(w * h), 200);
  write_test_png(path, gray, w, h, 1);
  auto gimg = dawn::read_png(path);
  CHECK(gimg.channels == 1);
  CHECK(gimg.at(0, 0, 0) == doctest::Approx(200.0f / 255.0f));

  CHECK_THROWS(dawn::read_png((dir.path / "missing.png").string()));
}

TEST_CASE("pgm round trip") {
  TempDir dir("dawn_pgm_test");
  std::vector<float> gray = {0.0f, 0.5f, 1.0f, 0.25f, 0.75f, 0.1f};
  const std::string path = (dir.path / "t.pgm").string();
  dawn::write_pgm(path, gray, 3, 2);
  auto img = dawn::read_pgm(path);
  CHECK(img.width == 3);
  CHECK(img.height == 2);
  for (size_t i = 0; i < gray.size(); ++i)
    CHECK(img.pixels[i] == doctest::Approx(gray[i]).epsilon(0.01));
}

TEST_CASE("center_resize keeps constants and sizes") {
  dawn::Image img;
  img.channels = 1;
  img.width = 20;
  img.height = 12;
  img.pixels.assign(20 * 12, 0.6f);
  auto out = dawn::center_resize(img, 8);
  CHECK(out.width == 8);
  CHECK(out.height == 8);
  for (float v : out.pixels) CHECK(v == doctest::Approx(0.6f));
}

TEST_CASE("dataset export writes one pgm per image") {
  TempDir dir("dawn_export_test");
  auto [train, test] = dawn::synth_textures(2, 16, 5);
  dawn::export_dataset_pgm(test, dir.path.string());
  int64_t count = 0;
  for (const auto& entry : fs::directory_iterator(dir.path)) {
    ++count;
    CHECK(entry.path().extension() == ".pgm");
  }
  CHECK(count == test.size());
}

// runs only when a real CIFAR-10 directory is supplied
TEST_CASE("real cifar-10 label histogram" * doctest::skip(std::getenv("DAWN_CIFAR_DIR") == nullptr)) {
  const char* dir = std::getenv("DAWN_CIFAR_DIR");
  auto [train, test] = dawn::load_cifar(dir, 10);
  std::array<int64_t, 10> train_hist{}, test_hist{};
  for (int y : train.labels) ++train_hist[static_cast<size_t>(y)];
  for (int y : test.labels) ++test_hist[static_cast<size_t>(y)];
  for (int64_t h : train_hist) CHECK(h == 5000);
  for (int64_t h : test_hist) CHECK(h == 1000);
}
