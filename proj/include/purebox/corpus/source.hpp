#pragma once

#include <optional>
#include <string>
#include <vector>

#include "purebox/core/types.hpp"
#include "purebox/corpus/classes.hpp"

namespace purebox::corpus {

struct FetchedImage {
  std::vector<unsigned char> bytes;  // encoded image (binary PPM)
  std::optional<std::string> source_url;
};

// Pluggable image source. fetch() pages through the supply for one class and
// returns fewer than `count` items (possibly zero) when exhausted.
class SourceAdapter {
 public:
  virtual ~SourceAdapter() = default;
  virtual std::vector<FetchedImage> fetch(const ClassSpec& spec, long offset, long count) = 0;
  virtual std::string name() const = 0;
};

// Deterministic synthetic supply; `duplicates` trailing items repeat the
// first image byte-for-byte (used to exercise dedupe).
class MockSource : public SourceAdapter {
 public:
  MockSource(std::uint64_t seed, ImageShape shape, long supply, long duplicates = 0)
      : seed_(seed), shape_(shape), supply_(supply), duplicates_(duplicates) {}

  std::vector<FetchedImage> fetch(const ClassSpec& spec, long offset, long count) override;
  std::string name() const override { return "mock"; }

 private:
  std::uint64_t seed_;
  ImageShape shape_;
  long supply_;
  long duplicates_;
};

// Reads `<root>/<class_id>/*` (sorted by filename).
class LocalDirSource : public SourceAdapter {
 public:
  explicit LocalDirSource(std::string root) : root_(std::move(root)) {}
  std::vector<FetchedImage> fetch(const ClassSpec& spec, long offset, long count) override;
  std::string name() const override { return "local:" + root_; }

 private:
  std::string root_;
};

struct HttpFetchPolicy {
  int retries = 3;
  int retry_delay_ms = 100;
  double rate_limit_per_sec = 0;  // 0 disables throttling
};

// HTTP fetch contract: GET <prefix>/<class_id>/<index> returns one encoded
// image, 404 past the end of the supply. Retries transport failures before
// giving up with SourceUnavailable.
class HttpSource : public SourceAdapter {
 public:
  HttpSource(std::string host, int port, std::string path_prefix, HttpFetchPolicy policy = {})
      : host_(std::move(host)), port_(port), prefix_(std::move(path_prefix)), policy_(policy) {}

  std::vector<FetchedImage> fetch(const ClassSpec& spec, long offset, long count) override;
  std::string name() const override { return "http:" + host_; }

 private:
  std::string host_;
  int port_;
  std::string prefix_;
  HttpFetchPolicy policy_;
};

}  // namespace purebox::corpus
