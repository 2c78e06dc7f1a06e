#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace purebox {

// Hex-encoded SHA-256 digest. Content hashes, config digests and eval-set
// digests all go through here.
std::string sha256_hex(const void* data, std::size_t size);
std::string sha256_hex(const std::string& data);
std::string sha256_hex(const std::vector<unsigned char>& data);

}  // namespace purebox
