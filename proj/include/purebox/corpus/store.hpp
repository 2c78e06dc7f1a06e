#pragma once

#include <map>
#include <string>
#include <vector>

namespace purebox::corpus {

// Content-addressed image blob store.
class ImageStore {
 public:
  virtual ~ImageStore() = default;
  virtual void put(const std::string& hash, const std::string& class_id,
                   const std::vector<unsigned char>& bytes) = 0;
  virtual std::vector<unsigned char> get(const std::string& hash) const = 0;
  virtual bool contains(const std::string& hash) const = 0;
};

class MemoryStore : public ImageStore {
 public:
  void put(const std::string& hash, const std::string& class_id,
           const std::vector<unsigned char>& bytes) override;
  std::vector<unsigned char> get(const std::string& hash) const override;
  bool contains(const std::string& hash) const override;

 private:
  std::map<std::string, std::vector<unsigned char>> blobs_;
};

// Layout: <root>/<class_id>/<content_hash>.ppm
class DiskStore : public ImageStore {
 public:
  explicit DiskStore(std::string root);
  void put(const std::string& hash, const std::string& class_id,
           const std::vector<unsigned char>& bytes) override;
  std::vector<unsigned char> get(const std::string& hash) const override;
  bool contains(const std::string& hash) const override;

 private:
  std::string root_;
  std::map<std::string, std::string> paths_;  // hash -> file path
};

}  // namespace purebox::corpus
