#pragma once

#include <map>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

namespace purebox::corpus {

enum class Split { train, val, eval };

const char* to_string(Split split);
Split split_from_string(const std::string& s);

struct ManifestEntry {
  std::string content_hash;  // sha-256 hex of the stored image bytes
  std::optional<std::string> source_url;
  std::string class_id;
  Split split = Split::eval;
  bool curated = false;
};

struct Manifest {
  std::vector<ManifestEntry> entries;

  bool has(const std::string& hash) const;
  std::size_t size() const { return entries.size(); }
};

// JSON persistence with the entry fields verbatim.
std::string manifest_to_json(const Manifest& manifest);
Manifest manifest_from_json(const std::string& json_text);
void save_manifest(const std::string& path, const Manifest& manifest);
Manifest load_manifest(const std::string& path);

// Curation: entries with a false verdict are dropped, survivors with a true
// verdict become curated; entries without a verdict pass through unchanged.
Manifest curate(const Manifest& manifest, const std::map<std::string, bool>& verdicts);

// Two-column CSV (hash, keep) used for human-in-the-loop curation verdicts.
std::map<std::string, bool> load_verdicts_csv(const std::string& path);
void save_verdicts_csv(const std::string& path, const std::map<std::string, bool>& verdicts);

// Per class: exactly per_class_train entries go to train and per_class_val to
// val (uniform without replacement, seeded); remaining curated entries go to
// eval. Uncurated entries are assigned eval.
Manifest split_dataset(const Manifest& manifest, int per_class_train, int per_class_val,
                       std::uint64_t seed);

}  // namespace purebox::corpus
