#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "purebox/core/types.hpp"
#include "purebox/zoo/classifier.hpp"

namespace purebox::transfer {

enum class OracleKind { local_model, external_callable };

// Hard-label oracle over the target model. label_fn must be pure within an
// evaluation run.
struct TargetOracle {
  OracleKind kind = OracleKind::local_model;
  std::function<int(const VecX&)> label_fn;
  int num_classes = 0;
  std::vector<std::string> class_map;  // empty when unknown
  std::string name;

  int operator()(const VecX& pixels) const { return label_fn(pixels); }
};

TargetOracle make_local_oracle(const zoo::ClassifierHandle& model, std::string name = "local");

// --- external adapter wire format -----------------------------------------
// Request: little-endian float32 header {C,H,W} followed by C*H*W float32
// pixels. Response: the class index as an ASCII integer.
std::string encode_tensor_request(const VecX& pixels, const ImageShape& shape);
VecX decode_tensor_request(const std::string& body, ImageShape& shape_out);
int parse_label_response(const std::string& body);

// Persistent child process speaking the wire format on stdin/stdout.
class SubprocessOracle {
 public:
  explicit SubprocessOracle(const std::vector<std::string>& argv);
  ~SubprocessOracle();
  SubprocessOracle(const SubprocessOracle&) = delete;
  SubprocessOracle& operator=(const SubprocessOracle&) = delete;

  int classify(const VecX& pixels, const ImageShape& shape);
  TargetOracle as_oracle(int num_classes, ImageShape shape, std::string name = "subprocess");

 private:
  int child_pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
};

// POST <path> with the binary request body; response body is the ASCII label.
class HttpOracle {
 public:
  HttpOracle(std::string host, int port, std::string path);
  ~HttpOracle();

  int classify(const VecX& pixels, const ImageShape& shape);
  TargetOracle as_oracle(int num_classes, ImageShape shape, std::string name = "http");

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::string path_;
};

}  // namespace purebox::transfer
