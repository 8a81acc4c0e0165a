#include "dawn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace dawn {

namespace {

constexpr char kMagic[8] = {'D', 'A', 'W', 'N', 'C', 'K', 'P', 'T'};

void put_u32(std::ostream& os, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t get_u32(std::istream& is, const std::string& path) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4))
    throw std::runtime_error("checkpoint " + path + ": truncated file");
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

void put_f32(std::ostream& os, float v) { put_u32(os, std::bit_cast<uint32_t>(v)); }

float get_f32(std::istream& is, const std::string& path) {
  return std::bit_cast<float>(get_u32(is, path));
}

struct Entry {
  std::string name;
  Shape shape;
  std::vector<float> data;
};

void write_entry(std::ostream& os, const Entry& e) {
  put_u32(os, static_cast<uint32_t>(e.name.size()));
  os.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
  put_u32(os, static_cast<uint32_t>(e.shape.size()));
  for (int64_t d : e.shape) put_u32(os, static_cast<uint32_t>(d));
  for (float v : e.data) put_f32(os, v);
}

Entry read_entry(std::istream& is, const std::string& path) {
  Entry e;
  const uint32_t name_len = get_u32(is, path);
  if (name_len > 4096) throw std::runtime_error("checkpoint " + path + ": corrupt entry name");
  e.name.resize(name_len);
  if (!is.read(e.name.data(), name_len))
    throw std::runtime_error("checkpoint " + path + ": truncated file");
  const uint32_t ndim = get_u32(is, path);
  if (ndim > 8) throw std::runtime_error("checkpoint " + path + ": corrupt entry rank");
  int64_t n = 1;
  for (uint32_t i = 0; i < ndim; ++i) {
    int64_t d = get_u32(is, path);
    e.shape.push_back(d);
    n *= d;
  }
  e.data.resize(static_cast<size_t>(n));
  for (auto& v : e.data) v = get_f32(is, path);
  return e;
}

}  // namespace

template <class T>
void save_checkpoint(DawnModel<T>& model, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");

  auto params = model.parameters();
  auto bufs = model.buffers();
  os.write(kMagic, 8);
  put_u32(os, kCheckpointVersion);
  put_u32(os, static_cast<uint32_t>(params.size() + bufs.size()));
  for (const auto& p : params) {
    Entry e;
    e.name = p.name;
    e.shape = p.tensor.shape();
    e.data.assign(p.tensor.data().begin(), p.tensor.data().end());
    write_entry(os, e);
  }
  for (const auto& b : bufs) {
    Entry e;
    e.name = b.name;
    e.shape = {static_cast<int64_t>(b.data->size())};
    e.data.assign(b.data->begin(), b.data->end());
    write_entry(os, e);
  }
  if (!os) throw std::runtime_error("error while writing " + path);
}

template <class T>
void load_checkpoint(DawnModel<T>& model, const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint " + path);

  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0)
    throw std::runtime_error("checkpoint " + path + ": bad magic, not a checkpoint file");
  const uint32_t version = get_u32(is, path);
  if (version != kCheckpointVersion)
    throw std::runtime_error("checkpoint " + path + ": unsupported version " +
                             std::to_string(version) + " (expected " +
                             std::to_string(kCheckpointVersion) + ")");

  auto params = model.parameters();
  auto bufs = model.buffers();
  const uint32_t count = get_u32(is, path);
  if (count != params.size() + bufs.size())
    throw std::runtime_error("checkpoint " + path + ": has " + std::to_string(count) +
                             " entries, model expects " +
                             std::to_string(params.size() + bufs.size()));

  for (auto& p : params) {
    Entry e = read_entry(is, path);
    if (e.name != p.name)
      throw std::runtime_error("checkpoint " + path + ": expected parameter " + p.name +
                               ", found " + e.name);
    if (e.shape != p.tensor.shape())
      throw std::runtime_error("checkpoint " + path + ": parameter " + p.name + " has shape " +
                               shape_str(e.shape) + ", model expects " +
                               shape_str(p.tensor.shape()));
    auto dst = p.tensor.data();
    for (size_t i = 0; i < e.data.size(); ++i) dst[i] = static_cast<T>(e.data[i]);
  }
  for (auto& b : bufs) {
    Entry e = read_entry(is, path);
    if (e.name != b.name)
      throw std::runtime_error("checkpoint " + path + ": expected buffer " + b.name + ", found " +
                               e.name);
    if (e.data.size() != b.data->size())
      throw std::runtime_error("checkpoint " + path + ": buffer " + b.name + " has length " +
                               std::to_string(e.data.size()) + ", model expects " +
                               std::to_string(b.data->size()));
    for (size_t i = 0; i < e.data.size(); ++i) (*b.data)[i] = static_cast<T>(e.data[i]);
  }
}

template void save_checkpoint(DawnModel<float>&, const std::string&);
template void load_checkpoint(DawnModel<float>&, const std::string&);
template void save_checkpoint(DawnModel<double>&, const std::string&);
template void load_checkpoint(DawnModel<double>&, const std::string&);

}  // namespace dawn
