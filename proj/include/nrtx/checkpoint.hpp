#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace nrtx {

struct NamedTensor {
  std::string name;
  std::vector<uint32_t> dims;
  std::vector<float> data;

  size_t element_count() const {
    size_t n = 1;
    for (auto d : dims) n *= d;
    return n;
  }
};

// Checkpoint container: magic "NRTXCKPT", u32 version, u32 tensor count,
// then per tensor (u32 name length, name bytes, u32 rank, u32 dims[],
// little-endian f32 row-major data).
void write_checkpoint(const std::string& path, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> read_checkpoint(const std::string& path);

const NamedTensor* find_tensor(const std::vector<NamedTensor>& tensors,
                               const std::string& name);

}  // namespace nrtx
