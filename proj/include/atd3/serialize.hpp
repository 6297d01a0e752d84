#pragma once

#include "atd3/matrix.hpp"

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace atd3::num {

// Flat binary parameter file: "ATD3" magic, one version byte, a shape table
// (u32 count, then per tensor u16 name length + name + u32 rows + u32 cols),
// then all values as little-endian float64 in declaration order. A JSON
// manifest with the same names and shapes is written next to it ("<file>.json").

using NamedParams = std::vector<std::pair<std::string, const Matrix*>>;

void save_params(const std::filesystem::path& file, const NamedParams& params);

std::vector<std::pair<std::string, Matrix>> load_params(const std::filesystem::path& file);

}  // namespace atd3::num
