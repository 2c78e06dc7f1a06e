#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "purebox/core/types.hpp"

namespace purebox::nn {

// Flat binary tensor-list format shared by all checkpoint files.
void write_weights_file(const std::string& path, const std::vector<MatX>& weights);
std::vector<MatX> read_weights_file(const std::string& path);

}  // namespace purebox::nn
