#include "purebox/transfer/oracle.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <cstring>

#include "httplib.h"
#include "purebox/core/error.hpp"

namespace purebox::transfer {

TargetOracle make_local_oracle(const zoo::ClassifierHandle& model, std::string name) {
  TargetOracle oracle;
  oracle.kind = OracleKind::local_model;
  // The handle is captured by value; the network weights are shared and
  // frozen for the duration of the run.
  oracle.label_fn = [model](const VecX& pixels) { return model.predict_one(pixels); };
  oracle.num_classes = model.arch.num_classes;
  oracle.class_map = model.class_map;
  oracle.name = std::move(name);
  return oracle;
}

std::string encode_tensor_request(const VecX& pixels, const ImageShape& shape) {
  if (pixels.size() != shape.pixels()) {
    raise(ErrorKind::ShapeMismatch, "tensor request size mismatch");
  }
  const float header[3] = {static_cast<float>(shape.channels), static_cast<float>(shape.height),
                           static_cast<float>(shape.width)};
  std::string body(sizeof(header) + sizeof(float) * static_cast<std::size_t>(pixels.size()), '\0');
  std::memcpy(body.data(), header, sizeof(header));
  float* payload = reinterpret_cast<float*>(body.data() + sizeof(header));
  for (Eigen::Index i = 0; i < pixels.size(); ++i) payload[i] = static_cast<float>(pixels[i]);
  return body;
}

VecX decode_tensor_request(const std::string& body, ImageShape& shape_out) {
  if (body.size() < 12) raise(ErrorKind::IoError, "tensor request shorter than header");
  float header[3];
  std::memcpy(header, body.data(), sizeof(header));
  shape_out = ImageShape{static_cast<int>(header[0]), static_cast<int>(header[1]),
                         static_cast<int>(header[2])};
  const std::size_t need = 12 + sizeof(float) * static_cast<std::size_t>(shape_out.pixels());
  if (body.size() < need) raise(ErrorKind::IoError, "tensor request payload truncated");
  const float* payload = reinterpret_cast<const float*>(body.data() + 12);
  VecX pixels(shape_out.pixels());
  for (Eigen::Index i = 0; i < pixels.size(); ++i) pixels[i] = static_cast<Scalar>(payload[i]);
  return pixels;
}

int parse_label_response(const std::string& body) {
  try {
    return std::stoi(body);
  } catch (const std::exception&) {
    raise(ErrorKind::OracleFailure, "non-integer oracle response: '" + body + "'");
  }
}

// ------------------------------------------------------------- subprocess

SubprocessOracle::SubprocessOracle(const std::vector<std::string>& argv) {
  if (argv.empty()) raise(ErrorKind::ConfigInvalid, "subprocess oracle needs a command");
  int to_pipe[2], from_pipe[2];
  if (pipe(to_pipe) != 0 || pipe(from_pipe) != 0) {
    raise(ErrorKind::OracleFailure, "pipe() failed");
  }
  const pid_t pid = fork();
  if (pid < 0) raise(ErrorKind::OracleFailure, "fork() failed");
  if (pid == 0) {
    dup2(to_pipe[0], STDIN_FILENO);
    dup2(from_pipe[1], STDOUT_FILENO);
    close(to_pipe[0]);
    close(to_pipe[1]);
    close(from_pipe[0]);
    close(from_pipe[1]);
    std::vector<char*> args;
    for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
    args.push_back(nullptr);
    execvp(args[0], args.data());
    _exit(127);
  }
  child_pid_ = pid;
  to_child_ = to_pipe[1];
  from_child_ = from_pipe[0];
  close(to_pipe[0]);
  close(from_pipe[1]);
}

SubprocessOracle::~SubprocessOracle() {
  if (to_child_ >= 0) close(to_child_);
  if (from_child_ >= 0) close(from_child_);
  if (child_pid_ > 0) {
    int status = 0;
    waitpid(child_pid_, &status, 0);
  }
}

int SubprocessOracle::classify(const VecX& pixels, const ImageShape& shape) {
  const std::string request = encode_tensor_request(pixels, shape);
  std::size_t written = 0;
  while (written < request.size()) {
    const ssize_t n = write(to_child_, request.data() + written, request.size() - written);
    if (n <= 0) raise(ErrorKind::OracleFailure, "write to oracle child failed");
    written += static_cast<std::size_t>(n);
  }
  std::string line;
  char ch = 0;
  for (;;) {
    const ssize_t n = read(from_child_, &ch, 1);
    if (n <= 0) raise(ErrorKind::OracleFailure, "oracle child closed the stream");
    if (ch == '\n') break;
    line.push_back(ch);
  }
  return parse_label_response(line);
}

TargetOracle SubprocessOracle::as_oracle(int num_classes, ImageShape shape, std::string name) {
  TargetOracle oracle;
  oracle.kind = OracleKind::external_callable;
  oracle.num_classes = num_classes;
  oracle.name = std::move(name);
  oracle.label_fn = [this, shape](const VecX& pixels) { return classify(pixels, shape); };
  return oracle;
}

// ------------------------------------------------------------------ http

struct HttpOracle::Impl {
  httplib::Client client;
  Impl(const std::string& host, int port) : client(host, port) {
    client.set_connection_timeout(10);
    client.set_read_timeout(30);
  }
};

HttpOracle::HttpOracle(std::string host, int port, std::string path)
    : impl_(std::make_unique<Impl>(host, port)), path_(std::move(path)) {}

HttpOracle::~HttpOracle() = default;

int HttpOracle::classify(const VecX& pixels, const ImageShape& shape) {
  const std::string body = encode_tensor_request(pixels, shape);
  auto res = impl_->client.Post(path_, body, "application/octet-stream");
  if (!res || res->status != 200) {
    raise(ErrorKind::OracleFailure,
          "POST " + path_ + " failed: " + (res ? std::to_string(res->status) : "no response"));
  }
  return parse_label_response(res->body);
}

TargetOracle HttpOracle::as_oracle(int num_classes, ImageShape shape, std::string name) {
  TargetOracle oracle;
  oracle.kind = OracleKind::external_callable;
  oracle.num_classes = num_classes;
  oracle.name = std::move(name);
  oracle.label_fn = [this, shape](const VecX& pixels) { return classify(pixels, shape); };
  return oracle;
}

}  // namespace purebox::transfer
