#include "purebox/corpus/manifest.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

#include "json.hpp"
#include "purebox/core/error.hpp"
#include "purebox/core/hash.hpp"

namespace purebox::corpus {

using nlohmann::json;

const char* to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::eval: return "eval";
  }
  return "eval";
}

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "val") return Split::val;
  if (s == "eval") return Split::eval;
  raise(ErrorKind::IoError, "unknown split name: " + s);
}

bool Manifest::has(const std::string& hash) const {
  return std::any_of(entries.begin(), entries.end(),
                     [&](const ManifestEntry& e) { return e.content_hash == hash; });
}

std::string manifest_to_json(const Manifest& manifest) {
  json root;
  root["entries"] = json::array();
  for (const auto& e : manifest.entries) {
    json item;
    item["content_hash"] = e.content_hash;
    item["source_url"] = e.source_url ? json(*e.source_url) : json(nullptr);
    item["class_id"] = e.class_id;
    item["split"] = to_string(e.split);
    item["curated"] = e.curated;
    root["entries"].push_back(std::move(item));
  }
  return root.dump(2);
}

Manifest manifest_from_json(const std::string& json_text) {
  Manifest m;
  const json root = json::parse(json_text);
  for (const auto& item : root.at("entries")) {
    ManifestEntry e;
    e.content_hash = item.at("content_hash").get<std::string>();
    if (!item.at("source_url").is_null()) e.source_url = item.at("source_url").get<std::string>();
    e.class_id = item.at("class_id").get<std::string>();
    e.split = split_from_string(item.at("split").get<std::string>());
    e.curated = item.at("curated").get<bool>();
    m.entries.push_back(std::move(e));
  }
  return m;
}

void save_manifest(const std::string& path, const Manifest& manifest) {
  std::ofstream f(path);
  if (!f) raise(ErrorKind::IoError, "cannot write manifest: " + path);
  f << manifest_to_json(manifest);
}

Manifest load_manifest(const std::string& path) {
  std::ifstream f(path);
  if (!f) raise(ErrorKind::IoError, "cannot read manifest: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return manifest_from_json(ss.str());
}

Manifest curate(const Manifest& manifest, const std::map<std::string, bool>& verdicts) {
  for (const auto& [hash, keep] : verdicts) {
    if (!manifest.has(hash)) raise(ErrorKind::UnknownHash, "verdict for unknown hash " + hash);
  }
  Manifest out;
  for (const auto& e : manifest.entries) {
    const auto it = verdicts.find(e.content_hash);
    if (it == verdicts.end()) {
      out.entries.push_back(e);
    } else if (it->second) {
      ManifestEntry kept = e;
      kept.curated = true;
      out.entries.push_back(std::move(kept));
    }
    // verdict false: dropped
  }
  return out;
}

std::map<std::string, bool> load_verdicts_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) raise(ErrorKind::IoError, "cannot read verdicts: " + path);
  std::map<std::string, bool> verdicts;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) raise(ErrorKind::IoError, "malformed verdict row: " + line);
    std::string hash = line.substr(0, comma);
    std::string value = line.substr(comma + 1);
    if (!value.empty() && value.back() == '\r') value.pop_back();
    if (hash == "hash" && value == "keep") continue;  // optional header
    if (value == "1" || value == "true" || value == "keep") {
      verdicts[hash] = true;
    } else if (value == "0" || value == "false" || value == "drop") {
      verdicts[hash] = false;
    } else {
      raise(ErrorKind::IoError, "unknown verdict value: " + value);
    }
  }
  return verdicts;
}

void save_verdicts_csv(const std::string& path, const std::map<std::string, bool>& verdicts) {
  std::ofstream f(path);
  if (!f) raise(ErrorKind::IoError, "cannot write verdicts: " + path);
  f << "hash,keep\n";
  for (const auto& [hash, keep] : verdicts) f << hash << "," << (keep ? 1 : 0) << "\n";
}

Manifest split_dataset(const Manifest& manifest, int per_class_train, int per_class_val,
                       std::uint64_t seed) {
  // Group curated entry indices per class; everything else defaults to eval.
  std::map<std::string, std::vector<std::size_t>> per_class;
  for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
    if (manifest.entries[i].curated) per_class[manifest.entries[i].class_id].push_back(i);
  }

  Manifest out = manifest;
  for (auto& e : out.entries) e.split = Split::eval;

  for (auto& [class_id, indices] : per_class) {
    const int need = per_class_train + per_class_val;
    if (static_cast<int>(indices.size()) < need) {
      raise(ErrorKind::InsufficientData,
            "class " + class_id + " has " + std::to_string(indices.size()) +
                " curated entries, needs " + std::to_string(need));
    }
    // Canonical order (by hash) plus a class-local seed keeps the draw
    // independent of entry insertion order and of other classes.
    std::sort(indices.begin(), indices.end(), [&](std::size_t a, std::size_t b) {
      return out.entries[a].content_hash < out.entries[b].content_hash;
    });
    const std::string tag = class_id + ":" + std::to_string(seed);
    const std::string digest = sha256_hex(tag);
    const std::uint64_t class_seed = std::stoull(digest.substr(0, 16), nullptr, 16);
    std::mt19937_64 rng(class_seed);
    std::shuffle(indices.begin(), indices.end(), rng);
    for (int i = 0; i < per_class_train; ++i) out.entries[indices[i]].split = Split::train;
    for (int i = 0; i < per_class_val; ++i) {
      out.entries[indices[per_class_train + i]].split = Split::val;
    }
  }
  return out;
}

}  // namespace purebox::corpus
