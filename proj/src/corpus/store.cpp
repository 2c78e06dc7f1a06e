#include "purebox/corpus/store.hpp"

#include <filesystem>
#include <fstream>

#include "purebox/core/error.hpp"

namespace purebox::corpus {

namespace fs = std::filesystem;

void MemoryStore::put(const std::string& hash, const std::string&,
                      const std::vector<unsigned char>& bytes) {
  blobs_[hash] = bytes;
}

std::vector<unsigned char> MemoryStore::get(const std::string& hash) const {
  const auto it = blobs_.find(hash);
  if (it == blobs_.end()) raise(ErrorKind::UnknownHash, "not in store: " + hash);
  return it->second;
}

bool MemoryStore::contains(const std::string& hash) const { return blobs_.count(hash) > 0; }

DiskStore::DiskStore(std::string root) : root_(std::move(root)) {
  fs::create_directories(root_);
  // Rebuild the hash index from the on-disk layout.
  for (const auto& class_dir : fs::directory_iterator(root_)) {
    if (!class_dir.is_directory()) continue;
    for (const auto& file : fs::directory_iterator(class_dir.path())) {
      if (!file.is_regular_file()) continue;
      paths_[file.path().stem().string()] = file.path().string();
    }
  }
}

void DiskStore::put(const std::string& hash, const std::string& class_id,
                    const std::vector<unsigned char>& bytes) {
  const fs::path dir = fs::path(root_) / class_id;
  fs::create_directories(dir);
  const fs::path path = dir / (hash + ".ppm");
  std::ofstream f(path, std::ios::binary);
  if (!f) raise(ErrorKind::IoError, "cannot write " + path.string());
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  paths_[hash] = path.string();
}

std::vector<unsigned char> DiskStore::get(const std::string& hash) const {
  const auto it = paths_.find(hash);
  if (it == paths_.end()) raise(ErrorKind::UnknownHash, "not in store: " + hash);
  std::ifstream f(it->second, std::ios::binary);
  if (!f) raise(ErrorKind::IoError, "cannot read " + it->second);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

bool DiskStore::contains(const std::string& hash) const { return paths_.count(hash) > 0; }

}  // namespace purebox::corpus
