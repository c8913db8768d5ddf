#pragma once

#include <string>
#include <utility>
#include <vector>

#include "sonobox/nn/layers.hpp"

namespace sonobox::nn {

// Binary tensor archive.  Layout, all integers little-endian:
//   magic "BBX1" | u32 version | u32 tensor count
//   per tensor: u32 name length | name bytes | u32 ndims | u32 dims[] |
//               f64 data, row-major
// Tensors are written in the order given, which save/load round-trips
// byte-identically.
inline constexpr char kCheckpointMagic[4] = {'B', 'B', 'X', '1'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::string& path, const std::vector<NamedParam>& state);
std::vector<std::pair<std::string, Tensor>> load_checkpoint(const std::string& path);

}  // namespace sonobox::nn
