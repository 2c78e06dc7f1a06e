#include <cmath>
#include <filesystem>

#include "desk.hpp"
#include "doctest.h"
#include "purebox/nn/loss.hpp"
#include "purebox/zoo/arch.hpp"
#include "purebox/zoo/classifier.hpp"
#include "purebox/zoo/pgd.hpp"

using namespace purebox;
using namespace purebox::zoo;

TEST_CASE("learning rate schedule is exact") {
  TrainConfig cfg;  // defaults: 5e-4, /10 per 30 epochs
  CHECK(lr_at(cfg, 0) == doctest::Approx(5e-4).epsilon(1e-15));
  CHECK(lr_at(cfg, 29) == doctest::Approx(5e-4).epsilon(1e-15));
  CHECK(lr_at(cfg, 30) == doctest::Approx(5e-5).epsilon(1e-15));
  CHECK(lr_at(cfg, 31) == doctest::Approx(5e-5).epsilon(1e-15));
  CHECK(lr_at(cfg, 60) == doctest::Approx(5e-6).epsilon(1e-15));
}

TEST_CASE("best epoch is the first argmax of validation accuracy") {
  std::vector<EpochStats> record = {{1.0, 0.61, 0}, {0.8, 0.83, 0}, {0.7, 0.79, 0}};
  CHECK(best_epoch(record) == 1);
  record.push_back({0.6, 0.83, 0});  // tie keeps the earlier epoch
  CHECK(best_epoch(record) == 1);
}

TEST_CASE("every architecture family trains a step and records the schedule") {
  desk::DeskSpec spec;
  spec.n_classes = 2;
  spec.per_train = 24;
  spec.per_val = 8;
  spec.per_eval = 0;
  spec.shape = ImageShape{3, 8, 8};
  auto ds = desk::make_dataset(spec);

  for (ArchFamily family :
       {ArchFamily::small_cnn, ArchFamily::mobile_like, ArchFamily::dense_like,
        ArchFamily::res_like_A, ArchFamily::res_like_B, ArchFamily::vgg_like_A,
        ArchFamily::vgg_like_B}) {
    ArchSpec arch{family, 2, 0.5};
    TrainConfig cfg = desk::quick_train(3, 1);
    cfg.decay_period_epochs = 2;
    const auto handle = train_classifier(arch, ds, cfg);
    REQUIRE(handle.training_record.size() == 3);
    for (int e = 0; e < 3; ++e) {
      CHECK(handle.training_record[static_cast<std::size_t>(e)].learning_rate ==
            doctest::Approx(lr_at(cfg, e)).epsilon(1e-15));
    }
  }
}

TEST_CASE("dataset and arch class counts must agree") {
  desk::DeskSpec spec;
  spec.n_classes = 3;
  spec.per_train = 9;
  spec.per_val = 3;
  spec.shape = ImageShape{3, 8, 8};
  auto ds = desk::make_dataset(spec);
  ArchSpec arch{ArchFamily::small_cnn, 2, 1.0};
  CHECK_THROWS_WITH_AS(train_classifier(arch, ds, desk::quick_train(1, 0)),
                       doctest::Contains("DataMismatch"), Error);
}

namespace {

// Two linearly separable 2-d blobs rendered as images: the two coordinates
// drive the left/right halves of every channel.
corpus::Dataset blob_dataset(int per_class, int per_val, std::uint64_t seed) {
  const ImageShape shape{3, 8, 8};
  Rng rng(seed);
  corpus::Dataset ds;
  ds.shape = shape;
  ds.class_map = {"blob0", "blob1"};

  auto render = [&](double a, double b) {
    VecX img(shape.pixels());
    for (int c = 0; c < 3; ++c) {
      for (int y = 0; y < 8; ++y) {
        for (int x = 0; x < 8; ++x) {
          const double base = x < 4 ? a : b;
          img[c * 64 + y * 8 + x] =
              std::min(1.0, std::max(0.0, base + rng.normal(0, 0.02)));
        }
      }
    }
    return img;
  };
  auto fill = [&](corpus::DataSplit& split, int n) {
    split.images.resize(shape.pixels(), 2 * n);
    for (int i = 0; i < 2 * n; ++i) {
      const int label = i % 2;
      // class 0 centered at (0.30, 0.55), class 1 at (0.70, 0.45)
      const double a = (label == 0 ? 0.30 : 0.70) + rng.normal(0, 0.05);
      const double b = (label == 0 ? 0.55 : 0.45) + rng.normal(0, 0.05);
      split.images.col(i) = render(a, b);
      split.labels.push_back(label);
      split.refs.push_back("blob" + std::to_string(i));
    }
  };
  fill(ds.train, per_class);
  fill(ds.val, per_val);
  return ds;
}

// Independent oracle: logistic regression trained by plain gradient descent
// on the same flattened pixels.
double logistic_regression_accuracy(const corpus::Dataset& ds) {
  const Eigen::Index dim = ds.train.images.rows();
  VecX w = VecX::Zero(dim);
  double b = 0;
  const int n = ds.train.count();
  for (int it = 0; it < 500; ++it) {
    VecX gw = VecX::Zero(dim);
    double gb = 0;
    for (int i = 0; i < n; ++i) {
      const double z = ds.train.images.col(i).dot(w) + b;
      const double p = 1.0 / (1.0 + std::exp(-z));
      const double err = p - ds.train.labels[static_cast<std::size_t>(i)];
      gw += err * ds.train.images.col(i);
      gb += err;
    }
    w -= (0.5 / n) * gw;
    b -= (0.5 / n) * gb;
  }
  int correct = 0;
  for (int i = 0; i < ds.val.count(); ++i) {
    const double z = ds.val.images.col(i).dot(w) + b;
    const int pred = z > 0 ? 1 : 0;
    if (pred == ds.val.labels[static_cast<std::size_t>(i)]) ++correct;
  }
  return static_cast<double>(correct) / ds.val.count();
}

}  // namespace

TEST_CASE("small_cnn tracks a logistic-regression oracle on separable blobs") {
  const auto ds = blob_dataset(40, 20, 77);
  const double lr_oracle = logistic_regression_accuracy(ds);
  CHECK(lr_oracle >= 0.99);

  ArchSpec arch{ArchFamily::small_cnn, 2, 1.0};
  TrainConfig cfg = desk::quick_train(10, 5, 5e-3);
  const auto handle = train_classifier(arch, ds, cfg);
  const double best = handle.training_record[static_cast<std::size_t>(best_epoch(
                                                 handle.training_record))]
                          .val_accuracy;
  CHECK(best >= 0.95);  // within 0.04 of the oracle
}

TEST_CASE("training is deterministic for a fixed seed") {
  desk::DeskSpec spec;
  spec.n_classes = 2;
  spec.per_train = 20;
  spec.per_val = 8;
  spec.shape = ImageShape{3, 8, 8};
  const auto ds = desk::make_dataset(spec);
  ArchSpec arch{ArchFamily::small_cnn, 2, 1.0};
  const TrainConfig cfg = desk::quick_train(4, 9);

  const auto a = train_classifier(arch, ds, cfg);
  const auto b = train_classifier(arch, ds, cfg);
  REQUIRE(a.training_record.size() == b.training_record.size());
  for (std::size_t e = 0; e < a.training_record.size(); ++e) {
    CHECK(a.training_record[e].train_loss == b.training_record[e].train_loss);
    CHECK(a.training_record[e].val_accuracy == b.training_record[e].val_accuracy);
  }
}

TEST_CASE("checkpoint restore reproduces the recorded best accuracy") {
  desk::DeskSpec spec;
  spec.n_classes = 2;
  spec.per_train = 30;
  spec.per_val = 10;
  spec.shape = ImageShape{3, 8, 8};
  const auto ds = desk::make_dataset(spec);
  ArchSpec arch{ArchFamily::res_like_A, 2, 0.75};
  const auto handle = train_classifier(arch, ds, desk::quick_train(5, 3));

  const double recorded =
      handle.training_record[static_cast<std::size_t>(best_epoch(handle.training_record))]
          .val_accuracy;
  CHECK(std::abs(evaluate_accuracy(handle, ds.val) - recorded) < 1e-6);

  const auto dir = std::filesystem::temp_directory_path() / "purebox_ckpt_test";
  std::filesystem::remove_all(dir);
  save_checkpoint(dir.string(), handle, desk::quick_train(5, 3));
  const auto loaded = load_checkpoint(dir.string());
  CHECK(std::abs(evaluate_accuracy(loaded, ds.val) - recorded) < 1e-6);
  CHECK(loaded.arch.family == arch.family);
  CHECK(loaded.class_map == handle.class_map);
  CHECK(loaded.training_record.size() == handle.training_record.size());
  std::filesystem::remove_all(dir);
}

TEST_CASE("evaluate_accuracy handles zero perturbations and constant models") {
  desk::DeskSpec spec;
  spec.n_classes = 2;
  spec.per_train = 16;
  spec.per_val = 16;
  spec.shape = ImageShape{3, 8, 8};
  const auto ds = desk::make_dataset(spec);
  ArchSpec arch{ArchFamily::small_cnn, 2, 1.0};
  const auto handle = train_classifier(arch, ds, desk::quick_train(2, 1));

  const double clean = evaluate_accuracy(handle, ds.val);
  const VecX zero = VecX::Zero(spec.shape.pixels());
  CHECK(evaluate_accuracy(handle, ds.val, &zero) == clean);

  // zeroed weights make a constant classifier: chance level on a balanced set
  auto constant = handle.clone();
  std::vector<nn::ParamSlot> slots;
  constant.net->collect_params(slots);
  for (auto& s : slots) s.value->setZero();
  CHECK(evaluate_accuracy(constant, ds.val) == doctest::Approx(0.5));

  corpus::DataSplit empty;
  CHECK_THROWS_WITH_AS(evaluate_accuracy(handle, empty), doctest::Contains("EmptySplit"), Error);
}

TEST_CASE("input gradient matches central finite differences") {
  desk::DeskSpec spec;
  spec.n_classes = 2;
  spec.per_train = 8;
  spec.per_val = 4;
  spec.shape = ImageShape{3, 8, 8};
  const auto ds = desk::make_dataset(spec);
  ArchSpec arch{ArchFamily::small_cnn, 2, 0.5};
  const auto handle = train_classifier(arch, ds, desk::quick_train(1, 2));

  MatX x = ds.val.images.leftCols(2);
  const std::vector<int> labels(ds.val.labels.begin(), ds.val.labels.begin() + 2);
  const MatX grad = handle.input_loss_gradient(x, labels);

  Rng pick(123);
  const double h = 1e-6;
  for (int t = 0; t < 10; ++t) {
    const Eigen::Index i = pick.index(static_cast<int>(x.size()));
    const Scalar keep = x.data()[i];
    x.data()[i] = keep + h;
    const double up = nn::softmax_cross_entropy(handle.logits(x), labels).loss;
    x.data()[i] = keep - h;
    const double dn = nn::softmax_cross_entropy(handle.logits(x), labels).loss;
    x.data()[i] = keep;
    const double numeric = (up - dn) / (2 * h);
    const double rel = std::abs(numeric - grad.data()[i]) /
                       std::max({std::abs(numeric), std::abs(grad.data()[i]), 1e-8});
    CHECK(rel < 1e-3);
  }
}

TEST_CASE("pgd respects the ball, the box, and the zero-eps identity") {
  desk::DeskSpec spec;
  spec.n_classes = 2;
  spec.per_train = 8;
  spec.per_val = 4;
  spec.shape = ImageShape{3, 8, 8};
  const auto ds = desk::make_dataset(spec);
  ArchSpec arch{ArchFamily::small_cnn, 2, 0.5};
  const auto handle = train_classifier(arch, ds, desk::quick_train(1, 4));

  const MatX x = ds.train.images.leftCols(6);
  const std::vector<int> labels(ds.train.labels.begin(), ds.train.labels.begin() + 6);
  const double eps = 12.0 / 255.0;

  Rng rng(5);
  int steps_seen = 0;
  const MatX adv = pgd_untargeted(*handle.net, x, labels, eps, eps / 4, 7, rng,
                                  [&](const MatX& iterate) {
                                    ++steps_seen;
                                    CHECK(linf_dist(iterate, x) <= eps + 1e-12);
                                    CHECK(iterate.minCoeff() >= 0.0);
                                    CHECK(iterate.maxCoeff() <= 1.0);
                                  });
  CHECK(steps_seen == 8);  // start + 7 steps
  CHECK(linf_dist(adv, x) <= eps + 1e-12);

  Rng rng2(5);
  const MatX same = pgd_untargeted(*handle.net, x, labels, 0.0, 0.01, 3, rng2);
  CHECK((same - x).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("adversarial training improves robustness on the toy set") {
  int robust_wins = 0;
  const double eps = 16.0 / 255.0;
  for (std::uint64_t seed : {11ull, 22ull, 33ull}) {
    desk::DeskSpec spec;
    spec.n_classes = 2;
    spec.per_train = 40;
    spec.per_val = 20;
    spec.shape = ImageShape{3, 8, 8};
    spec.seed = seed;
    const auto ds = desk::make_dataset(spec);
    ArchSpec arch{ArchFamily::small_cnn, 2, 1.0};
    TrainConfig cfg = desk::quick_train(6, seed, 4e-3);

    const auto standard = train_classifier(arch, ds, cfg);
    const auto robust = adversarial_train(arch, ds, cfg, eps, 7, eps / 4);
    CHECK(robust.robust);

    auto attacked_accuracy = [&](const ClassifierHandle& m) {
      Rng rng(seed + 99);
      const MatX adv = pgd_untargeted(*m.net, ds.val.images, ds.val.labels, eps / 2,
                                      eps / 8, 10, rng);
      int correct = 0;
      const auto pred = m.predict(adv);
      for (int i = 0; i < ds.val.count(); ++i) {
        if (pred[static_cast<std::size_t>(i)] == ds.val.labels[static_cast<std::size_t>(i)]) {
          ++correct;
        }
      }
      return static_cast<double>(correct) / ds.val.count();
    };

    if (attacked_accuracy(robust) > attacked_accuracy(standard)) ++robust_wins;
  }
  CHECK(robust_wins >= 2);
}

TEST_CASE("diverged training aborts with the record attached") {
  desk::DeskSpec spec;
  spec.n_classes = 2;
  spec.per_train = 16;
  spec.per_val = 8;
  spec.shape = ImageShape{3, 8, 8};
  auto ds = desk::make_dataset(spec);
  // A non-finite activation makes the first-epoch loss non-finite.
  ds.train.images(0, 0) = std::numeric_limits<Scalar>::infinity();
  ArchSpec arch{ArchFamily::small_cnn, 2, 1.0};
  TrainConfig cfg = desk::quick_train(3, 0);
  cfg.batch_size = ds.train.count();
  try {
    train_classifier(arch, ds, cfg);
    FAIL("expected DivergedTrainingError");
  } catch (const DivergedTrainingError& e) {
    CHECK(e.record.empty());  // diverged before the first epoch completed
    CHECK(std::string(e.what()).find("epoch 0") != std::string::npos);
  }
}
