#pragma once

#include <string>
#include <vector>

#include "purebox/core/types.hpp"

namespace purebox {

// Images travel between adapters and stores as binary PPM (P6, 8-bit RGB).
// Pixels quantize to 8 bits on encode and come back as values in [0,1].
std::vector<unsigned char> encode_ppm(const VecX& pixels, const ImageShape& shape);
VecX decode_ppm(const std::vector<unsigned char>& bytes, ImageShape& shape_out);

void write_ppm_file(const std::string& path, const VecX& pixels, const ImageShape& shape);
VecX read_ppm_file(const std::string& path, ImageShape& shape_out);

// Bilinear resample to the working resolution; channels are preserved.
VecX resize_bilinear(const VecX& pixels, const ImageShape& src, const ImageShape& dst);

}  // namespace purebox
