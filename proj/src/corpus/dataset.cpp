#include "purebox/corpus/dataset.hpp"

#include <algorithm>
#include <map>
#include <random>

#include "purebox/core/error.hpp"
#include "purebox/core/hash.hpp"
#include "purebox/core/image_io.hpp"

namespace purebox::corpus {

std::vector<ManifestEntry> acquire_images(const ClassSpec& spec, SourceAdapter& source, long limit,
                                          ImageStore& store, Manifest& manifest) {
  if (limit < 1) raise(ErrorKind::OutOfRange, "limit must be >= 1");

  std::vector<ManifestEntry> added;
  long offset = 0;
  long total_fetched = 0;
  const long page = std::max<long>(64, limit);
  while (static_cast<long>(added.size()) < limit) {
    const auto batch = source.fetch(spec, offset, page);
    if (batch.empty()) break;  // supply exhausted
    offset += static_cast<long>(batch.size());
    total_fetched += static_cast<long>(batch.size());
    for (const auto& img : batch) {
      if (static_cast<long>(added.size()) >= limit) break;
      const std::string hash = sha256_hex(img.bytes);
      if (manifest.has(hash)) continue;
      store.put(hash, spec.class_id, img.bytes);
      ManifestEntry entry;
      entry.content_hash = hash;
      entry.source_url = img.source_url;
      entry.class_id = spec.class_id;
      entry.split = Split::eval;
      entry.curated = false;
      manifest.entries.push_back(entry);
      added.push_back(entry);
    }
  }
  if (total_fetched == 0) {
    raise(ErrorKind::EmptyResult, "source " + source.name() + " returned no images for class " +
                                      spec.class_id);
  }
  return added;
}

std::vector<ImageSample> DataSplit::samples() const {
  std::vector<ImageSample> out;
  out.reserve(labels.size());
  for (int i = 0; i < count(); ++i) out.push_back(sample(i));
  return out;
}

namespace {

VecX load_pixels(const ImageStore& store, const std::string& hash, ImageShape working) {
  ImageShape native;
  const VecX pixels = decode_ppm(store.get(hash), native);
  VecX resized = resize_bilinear(pixels, native, working);
  // Pixel-box invariant holds for every loaded image.
  if (resized.minCoeff() < Scalar(0) || resized.maxCoeff() > Scalar(1)) {
    raise(ErrorKind::IoError, "pixels out of [0,1] after preprocessing: " + hash);
  }
  return resized;
}

DataSplit materialize(const std::vector<std::pair<const ManifestEntry*, int>>& items,
                      const ImageStore& store, ImageShape working) {
  DataSplit split;
  split.images.resize(working.pixels(), static_cast<Eigen::Index>(items.size()));
  split.labels.reserve(items.size());
  split.refs.reserve(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    split.images.col(static_cast<Eigen::Index>(i)) =
        load_pixels(store, items[i].first->content_hash, working);
    split.labels.push_back(items[i].second);
    split.refs.push_back(items[i].first->content_hash);
  }
  return split;
}

using Bucket = std::vector<std::pair<const ManifestEntry*, int>>;

// Canonical (label, hash) order keeps loading deterministic regardless of
// manifest entry order.
void sort_bucket(Bucket& b) {
  std::sort(b.begin(), b.end(), [](const auto& a, const auto& c) {
    if (a.second != c.second) return a.second < c.second;
    return a.first->content_hash < c.first->content_hash;
  });
}

}  // namespace

Dataset load_dataset(const Manifest& manifest, const ImageStore& store,
                     const std::vector<ClassSpec>& classes, ImageShape working) {
  std::map<std::string, int> label_of;
  for (std::size_t i = 0; i < classes.size(); ++i) {
    label_of[classes[i].class_id] = static_cast<int>(i);
  }

  Bucket train, val, eval;
  for (const auto& e : manifest.entries) {
    const auto it = label_of.find(e.class_id);
    if (it == label_of.end()) continue;
    Bucket& b = e.split == Split::train ? train : (e.split == Split::val ? val : eval);
    b.emplace_back(&e, it->second);
  }
  sort_bucket(train);
  sort_bucket(val);
  sort_bucket(eval);

  Dataset ds;
  ds.shape = working;
  for (const auto& c : classes) ds.class_map.push_back(c.class_id);
  ds.train = materialize(train, store, working);
  ds.val = materialize(val, store, working);
  ds.eval = materialize(eval, store, working);
  return ds;
}

Dataset load_one_vs_all(const Manifest& manifest, const ImageStore& store,
                        const ClassSpec& positive, const std::vector<ClassSpec>& all_classes,
                        ImageShape working, std::uint64_t seed) {
  std::mt19937_64 rng(seed);

  Dataset ds;
  ds.shape = working;
  ds.class_map = {positive.class_id, "__rest__"};

  for (Split split : {Split::train, Split::val, Split::eval}) {
    Bucket positives, negatives_pool;
    for (const auto& e : manifest.entries) {
      if (e.split != split) continue;
      if (e.class_id == positive.class_id) {
        positives.emplace_back(&e, 0);
      } else if (std::any_of(all_classes.begin(), all_classes.end(),
                             [&](const ClassSpec& c) { return c.class_id == e.class_id; })) {
        negatives_pool.emplace_back(&e, 1);
      }
    }
    sort_bucket(positives);
    // Stable order before sampling keeps the draw reproducible.
    std::sort(negatives_pool.begin(), negatives_pool.end(), [](const auto& a, const auto& b) {
      return a.first->content_hash < b.first->content_hash;
    });
    std::shuffle(negatives_pool.begin(), negatives_pool.end(), rng);
    const std::size_t take = std::min(positives.size(), negatives_pool.size());
    negatives_pool.resize(take);
    sort_bucket(negatives_pool);

    Bucket items = positives;
    items.insert(items.end(), negatives_pool.begin(), negatives_pool.end());
    DataSplit& target = split == Split::train ? ds.train : (split == Split::val ? ds.val : ds.eval);
    target = materialize(items, store, working);
  }
  return ds;
}

}  // namespace purebox::corpus
