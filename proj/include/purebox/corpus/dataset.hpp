#pragma once

#include <string>
#include <vector>

#include "purebox/core/types.hpp"
#include "purebox/corpus/classes.hpp"
#include "purebox/corpus/manifest.hpp"
#include "purebox/corpus/source.hpp"
#include "purebox/corpus/store.hpp"

namespace purebox::corpus {

// Pulls up to `limit` new images for one class from the adapter into the
// store, deduplicating by content hash against the manifest. Returns the
// newly added entries (already appended to `manifest`).
std::vector<ManifestEntry> acquire_images(const ClassSpec& spec, SourceAdapter& source, long limit,
                                          ImageStore& store, Manifest& manifest);

// Materialized split: one flattened image per column.
struct DataSplit {
  MatX images;
  std::vector<int> labels;
  std::vector<std::string> refs;  // manifest content hashes

  int count() const { return static_cast<int>(labels.size()); }
  ImageSample sample(int i) const {
    return ImageSample{images.col(i), labels[static_cast<std::size_t>(i)],
                       refs[static_cast<std::size_t>(i)]};
  }
  std::vector<ImageSample> samples() const;
};

struct Dataset {
  ImageShape shape;
  std::vector<std::string> class_map;  // class_id per label index
  DataSplit train, val, eval;

  int num_classes() const { return static_cast<int>(class_map.size()); }
};

// Loads every manifest entry whose class is in `classes` (label = position in
// `classes`), decoded and resized to the working resolution.
Dataset load_dataset(const Manifest& manifest, const ImageStore& store,
                     const std::vector<ClassSpec>& classes, ImageShape working);

// One-vs-all relabeling: label 0 = `positive`, label 1 = balanced negatives
// drawn uniformly (seeded) from the remaining classes, per split.
Dataset load_one_vs_all(const Manifest& manifest, const ImageStore& store,
                        const ClassSpec& positive, const std::vector<ClassSpec>& all_classes,
                        ImageShape working, std::uint64_t seed);

}  // namespace purebox::corpus
