#include "purebox/corpus/source.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <thread>

#include "httplib.h"
#include "purebox/core/error.hpp"
#include "purebox/core/image_io.hpp"
#include "purebox/corpus/synthetic.hpp"

namespace purebox::corpus {

namespace fs = std::filesystem;

std::vector<FetchedImage> MockSource::fetch(const ClassSpec& spec, long offset, long count) {
  std::vector<FetchedImage> out;
  for (long i = offset; i < std::min(offset + count, supply_); ++i) {
    // Trailing duplicate slots replay instance 0.
    const long instance = (i >= supply_ - duplicates_) ? 0 : i;
    const VecX pixels = render_synthetic_image(spec.rank - 1, instance, seed_, shape_);
    FetchedImage img;
    img.bytes = encode_ppm(pixels, shape_);
    img.source_url = "mock://" + spec.class_id + "/" + std::to_string(i);
    out.push_back(std::move(img));
  }
  return out;
}

std::vector<FetchedImage> LocalDirSource::fetch(const ClassSpec& spec, long offset, long count) {
  const fs::path dir = fs::path(root_) / spec.class_id;
  if (!fs::is_directory(dir)) {
    raise(ErrorKind::SourceUnavailable, "no directory " + dir.string());
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  std::vector<FetchedImage> out;
  for (long i = offset; i < std::min<long>(offset + count, static_cast<long>(files.size())); ++i) {
    std::ifstream f(files[static_cast<std::size_t>(i)], std::ios::binary);
    if (!f) raise(ErrorKind::SourceUnavailable, "unreadable file " + files[i].string());
    FetchedImage img;
    img.bytes.assign((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    img.source_url = "file://" + files[static_cast<std::size_t>(i)].string();
    out.push_back(std::move(img));
  }
  return out;
}

std::vector<FetchedImage> HttpSource::fetch(const ClassSpec& spec, long offset, long count) {
  httplib::Client client(host_, port_);
  client.set_connection_timeout(5);
  std::vector<FetchedImage> out;
  const auto min_interval =
      policy_.rate_limit_per_sec > 0
          ? std::chrono::duration<double>(1.0 / policy_.rate_limit_per_sec)
          : std::chrono::duration<double>(0);
  auto last = std::chrono::steady_clock::now() - min_interval;

  for (long i = offset; i < offset + count; ++i) {
    const std::string path = prefix_ + "/" + spec.class_id + "/" + std::to_string(i);
    httplib::Result res;
    int attempt = 0;
    for (;;) {
      if (min_interval.count() > 0) {
        std::this_thread::sleep_until(last + min_interval);
        last = std::chrono::steady_clock::now();
      }
      res = client.Get(path);
      if (res) break;
      if (++attempt > policy_.retries) {
        raise(ErrorKind::SourceUnavailable,
              "GET " + path + " failed after " + std::to_string(attempt) + " attempts");
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(policy_.retry_delay_ms));
    }
    if (res->status == 404) break;  // end of supply
    if (res->status != 200) {
      raise(ErrorKind::SourceUnavailable, "GET " + path + " -> " + std::to_string(res->status));
    }
    FetchedImage img;
    img.bytes.assign(res->body.begin(), res->body.end());
    img.source_url = "http://" + host_ + ":" + std::to_string(port_) + path;
    out.push_back(std::move(img));
  }
  return out;
}

}  // namespace purebox::corpus
