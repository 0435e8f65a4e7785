#include "nrtx/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace nrtx {

static constexpr char kMagic[8] = {'N', 'R', 'T', 'X', 'C', 'K', 'P', 'T'};
static constexpr uint32_t kVersion = 1;

// Serialization is explicitly little-endian; this build targets LE hosts.
static void put_u32(std::ostream& out, uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), 4);
}
static uint32_t get_u32(std::istream& in) {
  uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), 4);
  return v;
}

void write_checkpoint(const std::string& path, const std::vector<NamedTensor>& tensors) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out.write(kMagic, 8);
  put_u32(out, kVersion);
  put_u32(out, static_cast<uint32_t>(tensors.size()));
  for (auto& t : tensors) {
    if (t.data.size() != t.element_count())
      throw std::invalid_argument("tensor '" + t.name + "' dims mismatch data size");
    put_u32(out, static_cast<uint32_t>(t.name.size()));
    out.write(t.name.data(), t.name.size());
    put_u32(out, static_cast<uint32_t>(t.dims.size()));
    for (auto d : t.dims) put_u32(out, d);
    out.write(reinterpret_cast<const char*>(t.data.data()),
              static_cast<std::streamsize>(t.data.size() * sizeof(float)));
  }
  if (!out) throw std::runtime_error("short write: " + path);
}

std::vector<NamedTensor> read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0)
    throw std::runtime_error("not a checkpoint file: " + path);
  auto version = get_u32(in);
  if (version != kVersion)
    throw std::runtime_error("unsupported checkpoint version in " + path);
  auto count = get_u32(in);
  std::vector<NamedTensor> tensors(count);
  for (auto& t : tensors) {
    auto name_len = get_u32(in);
    t.name.resize(name_len);
    in.read(t.name.data(), name_len);
    auto rank = get_u32(in);
    t.dims.resize(rank);
    for (auto& d : t.dims) d = get_u32(in);
    t.data.resize(t.element_count());
    in.read(reinterpret_cast<char*>(t.data.data()),
            static_cast<std::streamsize>(t.data.size() * sizeof(float)));
    if (!in) throw std::runtime_error("truncated checkpoint: " + path);
  }
  return tensors;
}

const NamedTensor* find_tensor(const std::vector<NamedTensor>& tensors,
                               const std::string& name) {
  for (auto& t : tensors)
    if (t.name == name) return &t;
  return nullptr;
}

}  // namespace nrtx
