#pragma once

#include <string>
#include <utility>
#include <vector>

#include "tmsc/tensor.hpp"

namespace tmsc {

// Named-tensor container format:
//   magic "TMSC" | u32 version | u32 tensor count |
//   per tensor: u32 name length | name bytes | u32 rank | u32 dims[rank] |
//               float32 payload
// All integers and floats little-endian. Writes are atomic (temp + rename).
constexpr uint32_t kCheckpointVersion = 1;

void write_tensor_file(const std::string& path,
                       const std::vector<std::pair<std::string, Tensor>>& entries);

std::vector<std::pair<std::string, Tensor>> read_tensor_file(const std::string& path);

}  // namespace tmsc
