#include "dawn/image_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace dawn {

namespace {

std::vector<unsigned char> read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

int pgm_token(std::istream& is, const std::string& path) {
  // skips whitespace and '#' comment lines
  int c = is.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = is.get();
    } else if (!std::isspace(c)) {
      break;
    }
    c = is.get();
  }
  if (c == EOF) throw std::runtime_error(path + ": truncated PGM header");
  int value = 0;
  while (c != EOF && std::isdigit(c)) {
    value = value * 10 + (c - '0');
    c = is.get();
  }
  return value;
}

}  // namespace

Image read_pgm(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  char m0 = 0, m1 = 0;
  is.get(m0);
  is.get(m1);
  if (m0 != 'P' || m1 != '5') throw std::runtime_error(path + ": not a binary PGM (P5) file");
  const int64_t width = pgm_token(is, path);
  const int64_t height = pgm_token(is, path);
  const int64_t maxval = pgm_token(is, path);
  if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 255)
    throw std::runtime_error(path + ": unsupported PGM header");

  std::vector<unsigned char> raw(static_cast<size_t>(width * height));
  if (!is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size())))
    throw std::runtime_error(path + ": truncated PGM pixel data");

  Image img;
  img.channels = 1;
  img.width = width;
  img.height = height;
  img.pixels.resize(raw.size());
  const float inv = 1.0f / static_cast<float>(maxval);
  for (size_t i = 0; i < raw.size(); ++i) img.pixels[i] = static_cast<float>(raw[i]) * inv;
  return img;
}

void write_pgm(const std::string& path, const std::vector<float>& gray, int64_t width,
               int64_t height) {
  if (static_cast<int64_t>(gray.size()) != width * height)
    throw std::invalid_argument("write_pgm: pixel count does not match " + std::to_string(width) +
                                "x" + std::to_string(height));
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  os << "P5\n" << width << ' ' << height << "\n255\n";
  for (float v : gray) {
    const float clamped = std::min(1.0f, std::max(0.0f, v));
    os.put(static_cast<char>(std::lround(clamped * 255.0f)));
  }
  if (!os) throw std::runtime_error("error while writing " + path);
}

namespace {

uint32_t be32(const unsigned char* p) {
  return (static_cast<uint32_t>(p[0]) << 24) | (static_cast<uint32_t>(p[1]) << 16) |
         (static_cast<uint32_t>(p[2]) << 8) | static_cast<uint32_t>(p[3]);
}

int paeth(int a, int b, int c) {
  const int p = a + b - c;
  const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

}  // namespace

Image read_png(const std::string& path) {
  const auto file = read_file(path);
  static const unsigned char sig[8] = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
  if (file.size() < 8 || std::memcmp(file.data(), sig, 8) != 0)
    throw std::runtime_error(path + ": not a PNG file");

  int64_t width = 0, height = 0;
  int bit_depth = 0, color_type = 0, interlace = 0;
  std::vector<unsigned char> idat;

  size_t pos = 8;
  bool seen_end = false;
  while (pos + 8 <= file.size() && !seen_end) {
    const uint32_t len = be32(&file[pos]);
    if (pos + 12 + len > file.size()) throw std::runtime_error(path + ": truncated PNG chunk");
    const char* type = reinterpret_cast<const char*>(&file[pos + 4]);
    const unsigned char* data = &file[pos + 8];
    if (std::memcmp(type, "IHDR", 4) == 0) {
      if (len != 13) throw std::runtime_error(path + ": bad IHDR");
      width = be32(data);
      height = be32(data + 4);
      bit_depth = data[8];
      color_type = data[9];
      interlace = data[12];
    } else if (std::memcmp(type, "IDAT", 4) == 0) {
      idat.insert(idat.end(), data, data + len);
    } else if (std::memcmp(type, "IEND", 4) == 0) {
      seen_end = true;
    }
    pos += 12 + len;
  }
  if (width <= 0 || height <= 0) throw std::runtime_error(path + ": missing IHDR");
  if (bit_depth != 8) throw std::runtime_error(path + ": only 8-bit PNGs are supported");
  if (interlace != 0) throw std::runtime_error(path + ": interlaced PNGs are not supported");
  int64_t samples = 0;
  switch (color_type) {
    case 0: samples = 1; break;  // gray
    case 2: samples = 3; break;  // rgb
    case 4: samples = 2; break;  // gray + alpha
    case 6: samples = 4; break;  // rgba
    default:
      throw std::runtime_error(path + ": unsupported PNG color type " +
                               std::to_string(color_type));
  }

  const int64_t stride = width * samples;
  std::vector<unsigned char> raw(static_cast<size_t>((stride + 1) * height));
  {
    uLongf out_len = static_cast<uLongf>(raw.size());
    const int rc = uncompress(raw.data(), &out_len, idat.data(), static_cast<uLong>(idat.size()));
    if (rc != Z_OK || out_len != raw.size())
      throw std::runtime_error(path + ": PNG inflate failed");
  }

  // undo per-row filters in place
  std::vector<unsigned char> pixels(static_cast<size_t>(stride * height));
  const int64_t bpp = samples;
  for (int64_t y = 0; y < height; ++y) {
    const unsigned char filter = raw[static_cast<size_t>(y * (stride + 1))];
    const unsigned char* src = &raw[static_cast<size_t>(y * (stride + 1) + 1)];
    unsigned char* dst = &pixels[static_cast<size_t>(y * stride)];
    const unsigned char* prev = y > 0 ? &pixels[static_cast<size_t>((y - 1) * stride)] : nullptr;
    for (int64_t x = 0; x < stride; ++x) {
      const int a = x >= bpp ? dst[x - bpp] : 0;
      const int b = prev ? prev[x] : 0;
      const int c = (prev && x >= bpp) ? prev[x - bpp] : 0;
      int v = src[x];
      switch (filter) {
        case 0: break;
        case 1: v += a; break;
        case 2: v += b; break;
        case 3: v += (a + b) / 2; break;
        case 4: v += paeth(a, b, c); break;
        default: throw std::runtime_error(path + ": bad PNG filter type");
      }
      dst[x] = static_cast<unsigned char>(v & 0xff);
    }
  }

  const int64_t out_channels = (samples >= 3) ? 3 : 1;
  Image img;
  img.channels = out_channels;
  img.width = width;
  img.height = height;
  img.pixels.resize(static_cast<size_t>(out_channels * width * height));
  for (int64_t y = 0; y < height; ++y)
    for (int64_t x = 0; x < width; ++x) {
      const unsigned char* px = &pixels[static_cast<size_t>(y * stride + x * samples)];
      for (int64_t ch = 0; ch < out_channels; ++ch)
        img.pixels[static_cast<size_t>((ch * height + y) * width + x)] =
            static_cast<float>(px[ch]) / 255.0f;
    }
  return img;
}

Image read_image(const std::string& path) {
  auto ends_with = [&](const char* suffix) {
    const size_t n = std::strlen(suffix);
    return path.size() >= n &&
           std::equal(path.end() - static_cast<std::ptrdiff_t>(n), path.end(), suffix,
                      [](char a, char b) { return std::tolower(a) == b; });
  };
  if (ends_with(".pgm")) return read_pgm(path);
  if (ends_with(".png")) return read_png(path);
  throw std::runtime_error(path + ": unsupported image format (expected .pgm or .png)");
}

Image center_resize(const Image& image, int64_t size) {
  if (size < 1) throw std::invalid_argument("center_resize: size must be >= 1");
  const double scale =
      static_cast<double>(size) / static_cast<double>(std::min(image.width, image.height));
  const int64_t rw = std::max<int64_t>(size, static_cast<int64_t>(std::lround(image.width * scale)));
  const int64_t rh =
      std::max<int64_t>(size, static_cast<int64_t>(std::lround(image.height * scale)));

  Image out;
  out.channels = image.channels;
  out.width = size;
  out.height = size;
  out.pixels.resize(static_cast<size_t>(image.channels * size * size));

  const int64_t x0 = (rw - size) / 2, y0 = (rh - size) / 2;
  for (int64_t c = 0; c < image.channels; ++c)
    for (int64_t y = 0; y < size; ++y)
      for (int64_t x = 0; x < size; ++x) {
        // map through the virtual resized image back to source coordinates
        const double sy = (static_cast<double>(y + y0) + 0.5) * image.height / rh - 0.5;
        const double sx = (static_cast<double>(x + x0) + 0.5) * image.width / rw - 0.5;
        const int64_t fy = std::clamp<int64_t>(static_cast<int64_t>(std::floor(sy)), 0,
                                               image.height - 1);
        const int64_t fx =
            std::clamp<int64_t>(static_cast<int64_t>(std::floor(sx)), 0, image.width - 1);
        const int64_t fy1 = std::min<int64_t>(fy + 1, image.height - 1);
        const int64_t fx1 = std::min<int64_t>(fx + 1, image.width - 1);
        const double wy = std::clamp(sy - static_cast<double>(fy), 0.0, 1.0);
        const double wx = std::clamp(sx - static_cast<double>(fx), 0.0, 1.0);
        const double v = (1 - wy) * ((1 - wx) * image.at(c, fy, fx) + wx * image.at(c, fy, fx1)) +
                         wy * ((1 - wx) * image.at(c, fy1, fx) + wx * image.at(c, fy1, fx1));
        out.pixels[static_cast<size_t>((c * size + y) * size + x)] = static_cast<float>(v);
      }
  return out;
}

}  // namespace dawn
