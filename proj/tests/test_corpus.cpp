#include <algorithm>
#include <filesystem>
#include <set>
#include <thread>

#include "purebox/core/error.hpp"
#include "purebox/core/hash.hpp"
#include "purebox/core/image_io.hpp"
#include "purebox/corpus/classes.hpp"
#include "purebox/corpus/dataset.hpp"
#include "purebox/corpus/manifest.hpp"
#include "purebox/corpus/source.hpp"
#include "purebox/corpus/store.hpp"
#include "purebox/corpus/synthetic.hpp"

// httplib leaks libc resolver macros that clash with Eigen; keep it last.
#include "doctest.h"
#include "httplib.h"

using namespace purebox;
using namespace purebox::corpus;
using purebox::Error;

namespace {
const ImageShape kShape{3, 16, 16};

Manifest acquire_class(const ClassSpec& spec, SourceAdapter& src, long limit, ImageStore& store) {
  Manifest m;
  acquire_images(spec, src, limit, store, m);
  return m;
}
}  // namespace

TEST_CASE("canonical class list matches the published ordering") {
  const auto& classes = canonical_classes();
  REQUIRE(classes.size() == 25);
  CHECK(classes[0].class_id == "n04467665");
  CHECK(classes[1].class_id == "n04389033");
  CHECK(classes[24].class_id == "n01503061");
  for (std::size_t i = 0; i < classes.size(); ++i) {
    CHECK(classes[i].rank == static_cast<int>(i) + 1);
  }
  std::set<std::string> ids;
  for (const auto& c : classes) ids.insert(c.class_id);
  CHECK(ids.size() == 25);
}

TEST_CASE("select_class_subset takes rank prefixes and rejects bad k") {
  const auto& classes = canonical_classes();

  const auto two = select_class_subset(classes, 2);
  REQUIRE(two.size() == 2);
  CHECK(two[0].class_id == "n04467665");
  CHECK(two[1].class_id == "n04389033");

  const auto six = select_class_subset(classes, 6);
  REQUIRE(six.size() == 6);
  CHECK(six[5].class_id == "n01882714");

  const auto all = select_class_subset(classes, 25);
  CHECK(all.size() == 25);

  // prefix property: subset(j) is a prefix of subset(k) for j <= k
  for (int j = 1; j <= 25; j += 6) {
    for (int k = j; k <= 25; k += 5) {
      const auto a = select_class_subset(classes, j);
      const auto b = select_class_subset(classes, k);
      for (int i = 0; i < j; ++i) CHECK(a[i].class_id == b[i].class_id);
    }
  }

  CHECK_THROWS_AS(select_class_subset(classes, 0), Error);
  CHECK_THROWS_AS(select_class_subset(classes, 26), Error);
}

TEST_CASE("acquire dedupes by content hash and respects the limit") {
  const ClassSpec spec = canonical_classes()[0];
  MemoryStore store;

  SUBCASE("limit exceeds supply") {
    MockSource src(1, kShape, 5);
    Manifest m;
    const auto added = acquire_images(spec, src, 10, store, m);
    CHECK(added.size() == 5);
    CHECK(m.size() == 5);
    for (const auto& e : m.entries) {
      CHECK(e.class_id == spec.class_id);
      CHECK_FALSE(e.curated);
    }
  }
  SUBCASE("byte-identical images collapse") {
    MockSource src(1, kShape, 5, 1);  // last of 5 repeats the first
    Manifest m;
    const auto added = acquire_images(spec, src, 10, store, m);
    CHECK(added.size() == 4);
  }
  SUBCASE("large mock supply meets the limit exactly") {
    MockSource src(2, kShape, 2000);
    const ClassSpec tank = canonical_classes()[1];
    Manifest m;
    const auto added = acquire_images(tank, src, 1100, store, m);
    CHECK(added.size() == 1100);
  }
  SUBCASE("acquiring the same source twice is idempotent") {
    MockSource src(3, kShape, 20);
    Manifest m;
    acquire_images(spec, src, 20, store, m);
    std::set<std::string> first;
    for (const auto& e : m.entries) first.insert(e.content_hash);
    const auto again = acquire_images(spec, src, 20, store, m);
    CHECK(again.empty());
    std::set<std::string> second;
    for (const auto& e : m.entries) second.insert(e.content_hash);
    CHECK(first == second);
  }
  SUBCASE("empty supply raises EmptyResult") {
    MockSource src(4, kShape, 0);
    Manifest m;
    CHECK_THROWS_WITH_AS(acquire_images(spec, src, 5, store, m),
                         doctest::Contains("EmptyResult"), Error);
  }
}

TEST_CASE("curate drops rejected entries and marks survivors") {
  const ClassSpec spec = canonical_classes()[0];
  MemoryStore store;
  MockSource src(5, kShape, 1000);
  Manifest m = acquire_class(spec, src, 1000, store);
  REQUIRE(m.size() == 1000);

  SUBCASE("all verdicts true") {
    std::map<std::string, bool> verdicts;
    for (std::size_t i = 0; i < 4; ++i) verdicts[m.entries[i].content_hash] = true;
    Manifest small;
    small.entries.assign(m.entries.begin(), m.entries.begin() + 4);
    const Manifest out = curate(small, verdicts);
    CHECK(out.size() == 4);
    for (const auto& e : out.entries) CHECK(e.curated);
  }
  SUBCASE("one rejection") {
    Manifest small;
    small.entries.assign(m.entries.begin(), m.entries.begin() + 4);
    std::map<std::string, bool> verdicts;
    for (std::size_t i = 0; i < 4; ++i) verdicts[small.entries[i].content_hash] = i != 2;
    const Manifest out = curate(small, verdicts);
    CHECK(out.size() == 3);
  }
  SUBCASE("quarter of the data rejected") {
    std::map<std::string, bool> verdicts;
    for (std::size_t i = 0; i < m.entries.size(); ++i) {
      verdicts[m.entries[i].content_hash] = (i % 4) != 0;  // 25% false
    }
    const Manifest out = curate(m, verdicts);
    CHECK(out.size() == 750);
  }
  SUBCASE("verdict for unknown hash") {
    std::map<std::string, bool> verdicts{{"deadbeef", true}};
    CHECK_THROWS_WITH_AS(curate(m, verdicts), doctest::Contains("UnknownHash"), Error);
  }
  SUBCASE("entries without a verdict pass through unchanged") {
    std::map<std::string, bool> verdicts{{m.entries[0].content_hash, true}};
    const Manifest out = curate(m, verdicts);
    CHECK(out.size() == m.size());
    CHECK(out.entries[0].curated);
    CHECK_FALSE(out.entries[1].curated);
  }
}

namespace {
Manifest curated_class_manifest(const ClassSpec& spec, long n, ImageStore& store,
                                std::uint64_t seed = 7) {
  MockSource src(seed, kShape, n);
  Manifest m = acquire_class(spec, src, n, store);
  std::map<std::string, bool> verdicts;
  for (const auto& e : m.entries) verdicts[e.content_hash] = true;
  return curate(m, verdicts);
}
}  // namespace

TEST_CASE("split_dataset enforces quotas deterministically") {
  const auto& classes = canonical_classes();
  MemoryStore store;

  SUBCASE("paper-scale counts") {
    Manifest m = curated_class_manifest(classes[0], 1100, store);
    const Manifest out = split_dataset(m, 1000, 100, 7);
    int train = 0, val = 0, eval = 0;
    for (const auto& e : out.entries) {
      if (e.split == Split::train) ++train;
      else if (e.split == Split::val) ++val;
      else ++eval;
    }
    CHECK(train == 1000);
    CHECK(val == 100);
    CHECK(eval == 0);
  }
  SUBCASE("small counts and determinism") {
    Manifest m = curated_class_manifest(classes[0], 50, store);
    const Manifest a = split_dataset(m, 40, 10, 3);
    const Manifest b = split_dataset(m, 40, 10, 3);
    for (std::size_t i = 0; i < a.entries.size(); ++i) {
      CHECK(a.entries[i].split == b.entries[i].split);
    }
    const Manifest c = split_dataset(m, 40, 10, 4);
    bool any_diff = false;
    for (std::size_t i = 0; i < a.entries.size(); ++i) {
      if (a.entries[i].split != c.entries[i].split) any_diff = true;
    }
    CHECK(any_diff);
  }
  SUBCASE("insufficient data names the class") {
    Manifest m = curated_class_manifest(classes[1], 30, store);
    CHECK_THROWS_WITH_AS(split_dataset(m, 40, 10, 1),
                         doctest::Contains(classes[1].class_id.c_str()), Error);
  }
  SUBCASE("splits partition each class") {
    Manifest m = curated_class_manifest(classes[0], 60, store);
    for (auto& e : curated_class_manifest(classes[1], 60, store, 8).entries) {
      m.entries.push_back(e);
    }
    const Manifest out = split_dataset(m, 40, 10, 5);
    std::map<std::string, std::array<int, 3>> counts;
    for (const auto& e : out.entries) {
      counts[e.class_id][static_cast<int>(e.split)] += 1;
    }
    for (const auto& [cid, c] : counts) {
      CHECK(c[0] == 40);
      CHECK(c[1] == 10);
      CHECK(c[2] == 10);
    }
  }
}

TEST_CASE("manifest json and verdict csv round trips") {
  MemoryStore store;
  Manifest m = curated_class_manifest(canonical_classes()[2], 6, store);
  m.entries[0].split = Split::train;
  m.entries[1].split = Split::val;

  const std::string text = manifest_to_json(m);
  const Manifest back = manifest_from_json(text);
  REQUIRE(back.size() == m.size());
  for (std::size_t i = 0; i < m.entries.size(); ++i) {
    CHECK(back.entries[i].content_hash == m.entries[i].content_hash);
    CHECK(back.entries[i].class_id == m.entries[i].class_id);
    CHECK(back.entries[i].split == m.entries[i].split);
    CHECK(back.entries[i].curated == m.entries[i].curated);
    CHECK(back.entries[i].source_url == m.entries[i].source_url);
  }

  const auto tmp = std::filesystem::temp_directory_path() / "purebox_verdicts.csv";
  std::map<std::string, bool> verdicts{{m.entries[0].content_hash, true},
                                       {m.entries[1].content_hash, false}};
  save_verdicts_csv(tmp.string(), verdicts);
  CHECK(load_verdicts_csv(tmp.string()) == verdicts);
  std::filesystem::remove(tmp);
}

TEST_CASE("ppm codec and bilinear resize") {
  Rng rng(42);
  VecX img = rng.uniform_vec(kShape.pixels(), 0, 1);
  const auto bytes = encode_ppm(img, kShape);
  ImageShape shape;
  const VecX back = decode_ppm(bytes, shape);
  CHECK(shape == kShape);
  // 8-bit quantization: worst case half a step
  CHECK(linf_dist(back, img) <= 0.5 / 255.0 + 1e-12);

  const ImageShape small{3, 8, 8};
  const VecX resized = resize_bilinear(back, kShape, small);
  CHECK(resized.size() == small.pixels());
  CHECK(resized.minCoeff() >= 0.0);
  CHECK(resized.maxCoeff() <= 1.0);

  // constant image stays constant under resize
  VecX flat = VecX::Constant(kShape.pixels(), 0.25);
  const VecX flat_resized = resize_bilinear(flat, kShape, small);
  CHECK(linf_norm((flat_resized.array() - 0.25).matrix()) < 1e-12);
}

TEST_CASE("loaded datasets keep pixels in the unit box") {
  const auto classes = select_class_subset(canonical_classes(), 3);
  MemoryStore store;
  Manifest all;
  for (const auto& c : classes) {
    MockSource src(11, kShape, 30);
    acquire_images(c, src, 30, store, all);
  }
  std::map<std::string, bool> verdicts;
  for (const auto& e : all.entries) verdicts[e.content_hash] = true;
  all = split_dataset(curate(all, verdicts), 20, 5, 2);

  const Dataset ds = load_dataset(all, store, classes, ImageShape{3, 8, 8});
  CHECK(ds.train.count() == 60);
  CHECK(ds.val.count() == 15);
  CHECK(ds.eval.count() == 15);
  for (const MatX* images : {&ds.train.images, &ds.val.images, &ds.eval.images}) {
    CHECK(images->minCoeff() >= 0.0);
    CHECK(images->maxCoeff() <= 1.0);
  }
  CHECK(ds.class_map.size() == 3);
  const auto labels_seen = std::set<int>(ds.train.labels.begin(), ds.train.labels.end());
  CHECK(labels_seen == std::set<int>{0, 1, 2});
}

TEST_CASE("one-vs-all datasets are class balanced") {
  const auto classes = select_class_subset(canonical_classes(), 4);
  MemoryStore store;
  Manifest all;
  for (const auto& c : classes) {
    MockSource src(13, kShape, 24);
    acquire_images(c, src, 24, store, all);
  }
  std::map<std::string, bool> verdicts;
  for (const auto& e : all.entries) verdicts[e.content_hash] = true;
  all = split_dataset(curate(all, verdicts), 16, 4, 2);

  const Dataset ds = load_one_vs_all(all, store, classes[0], classes, ImageShape{3, 8, 8}, 99);
  CHECK(ds.class_map[0] == classes[0].class_id);
  int pos = 0, neg = 0;
  for (int l : ds.train.labels) (l == 0 ? pos : neg)++;
  CHECK(pos == 16);
  CHECK(neg == 16);
}

TEST_CASE("disk store and local directory source round trip") {
  const auto root = std::filesystem::temp_directory_path() / "purebox_store_test";
  std::filesystem::remove_all(root);
  const ClassSpec spec = canonical_classes()[0];
  {
    DiskStore store(root.string());
    MockSource src(21, kShape, 8);
    Manifest m;
    acquire_images(spec, src, 8, store, m);
    CHECK(m.size() == 8);
  }
  // A fresh DiskStore rebuilds its index by scanning the layout.
  DiskStore reopened(root.string());
  LocalDirSource local(root.string());
  MemoryStore copy_store;
  Manifest copy;
  const auto added = acquire_images(spec, local, 100, copy_store, copy);
  CHECK(added.size() == 8);
  for (const auto& e : copy.entries) {
    CHECK(reopened.contains(e.content_hash));
    CHECK(sha256_hex(copy_store.get(e.content_hash)) == e.content_hash);
  }
  std::filesystem::remove_all(root);
}

TEST_CASE("http source fetches pages and fails over to SourceUnavailable") {
  const ClassSpec spec = canonical_classes()[0];

  SUBCASE("serving loop") {
    httplib::Server server;
    MockSource backing(31, kShape, 6);
    server.Get(R"(/img/([^/]+)/(\d+))", [&](const httplib::Request& req, httplib::Response& res) {
      const long index = std::stol(req.matches[2].str());
      const auto batch = backing.fetch(spec, index, 1);
      if (batch.empty()) {
        res.status = 404;
        return;
      }
      res.set_content(std::string(batch[0].bytes.begin(), batch[0].bytes.end()), "image/x-ppm");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread thread([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    HttpSource src("127.0.0.1", port, "/img");
    MemoryStore store;
    Manifest m;
    const auto added = acquire_images(spec, src, 10, store, m);
    CHECK(added.size() == 6);

    server.stop();
    thread.join();
  }
  SUBCASE("unreachable host exhausts retries") {
    HttpFetchPolicy policy;
    policy.retries = 2;
    policy.retry_delay_ms = 10;
    HttpSource src("127.0.0.1", 1, "/img", policy);  // port 1: connection refused
    CHECK_THROWS_WITH_AS(src.fetch(spec, 0, 1), doctest::Contains("SourceUnavailable"), Error);
  }
}
