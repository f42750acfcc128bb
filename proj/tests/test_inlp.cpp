#include <doctest.h>

#include <cmath>

#include "scrub/error.hpp"
#include "scrub/inlp.hpp"
#include "support.hpp"

using namespace scrub;
using scrub::testing::gaussian;

namespace {

struct Planted {
  Eigen::MatrixXd basis;
  Eigen::MatrixXd train_x, dev_x;
  std::vector<std::uint32_t> train_y, dev_y;
};

Planted planted(Eigen::Index d, Eigen::Index k, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Planted p;
  p.basis = orthonormalize(gaussian(d, k, rng));
  p.train_y = scrub::testing::coin_labels(n, rng);
  p.dev_y = scrub::testing::coin_labels(n / 2, rng);
  p.train_x = scrub::testing::planted_rows(p.basis, p.train_y, rng);
  p.dev_x = scrub::testing::planted_rows(p.basis, p.dev_y, rng);
  return p;
}

InlpConfig iterations(int k) {
  InlpConfig cfg;
  cfg.iterations = k;
  return cfg;
}

double fresh_probe_accuracy(const ConceptSubspace& s, const EmbeddingDataset& train, const EmbeddingDataset& dev) {
  const auto p = nullspace_of(s);
  TrainConfig cfg;
  const auto clf = train_binary(apply_projection(p, train.features()), train.gender, cfg);
  return accuracy(clf, apply_projection(p, dev.features()), dev.gender);
}

}  // namespace

TEST_SUITE("inlp") {

TEST_CASE("random labels give chance accuracy from the first iteration") {
  std::mt19937_64 rng(21);
  const Eigen::MatrixXd train = gaussian(4000, 32, rng), dev = gaussian(2000, 32, rng);
  const auto ty = scrub::testing::coin_labels(4000, rng), dy = scrub::testing::coin_labels(2000, rng);
  const auto s = run_inlp(train, ty, dev, dy, iterations(1));
  REQUIRE(s.size() == 1);
  CHECK(std::abs(s.iteration_accuracy[0] - majority_accuracy(dy)) <= 0.03);
}

TEST_CASE("three planted directions are recovered and removed in three iterations") {
  const auto p = planted(32, 3, 2000, 22);
  const auto s = run_inlp(p.train_x, p.train_y, p.dev_x, p.dev_y, iterations(3));
  REQUIRE(s.size() == 3);
  CHECK(principal_angles(s.directions, p.basis).maxCoeff() < 0.05);

  const auto null = nullspace_of(s);
  const auto clf = train_binary(apply_projection(null, p.train_x), p.train_y, TrainConfig{});
  CHECK(std::abs(accuracy(clf, apply_projection(null, p.dev_x), p.dev_y) - majority_accuracy(p.dev_y)) <= 0.02);
}

TEST_CASE("nullspace, rowspace and truncate") {
  std::mt19937_64 rng(23);
  ConceptSubspace s = subspace_from_basis(gaussian(768, 100, rng), "en");
  CHECK(s.size() == 100);
  CHECK(nullspace_of(s).rank == 668);
  CHECK(rowspace_of(s).rank == 100);
  CHECK(nullspace_of(s, 10).rank == 758);
  const auto t = truncate(s, 10);
  CHECK(t.size() == 10);
  CHECK(t.directions == s.directions.leftCols(10));
  CHECK(t.iteration_accuracy.size() == 10);
  CHECK_THROWS_AS(truncate(s, 0), ValidationError);
  CHECK_THROWS_AS(truncate(s, 101), ValidationError);

  ConceptSubspace single = subspace_from_basis(Eigen::Vector3d(0, 0, 2), "x");
  const Eigen::MatrixXd expected = Eigen::Vector3d(1, 1, 0).asDiagonal();
  CHECK((nullspace_of(single).matrix - expected).norm() < 1e-15);
}

TEST_CASE("properties on synthetic data") {
  const auto pair = scrub::testing::synthetic_pair(3000, 24);
  const auto train = select_split(pair[0], Split::train);
  const auto dev = select_split(pair[0], Split::dev);
  const auto s = run_inlp(train, dev, iterations(10));
  REQUIRE(s.size() == 10);

  SUBCASE("directions are orthonormal") {
    const Eigen::MatrixXd gram = s.directions.transpose() * s.directions;
    CHECK((gram - Eigen::MatrixXd::Identity(10, 10)).cwiseAbs().maxCoeff() < 1e-10);
  }
  SUBCASE("the nullspace annihilates every direction") {
    const auto p = nullspace_of(s);
    for (Eigen::Index i = 0; i < s.size(); ++i) CHECK((p.matrix * s.directions.col(i)).norm() <= 1e-8);
  }
  SUBCASE("the first iterate is the direct probe") {
    const auto clf = train_binary(train.features(), train.gender, s.config.probe);
    CHECK(std::abs(s.iteration_accuracy[0] - accuracy(clf, dev.features(), dev.gender)) <= 1e-9);
    CHECK(std::abs(clf.unit_direction().dot(s.directions.col(0))) > 1 - 1e-9);
  }
  SUBCASE("iterate accuracy does not rise by more than two points") {
    for (std::size_t i = 1; i < s.iteration_accuracy.size(); ++i)
      CHECK(s.iteration_accuracy[i] <= s.iteration_accuracy[i - 1] + 0.02);
  }
  SUBCASE("stored accuracies are reproduced by the stored iterates") {
    for (Eigen::Index i = 0; i < s.size(); ++i)
      CHECK(std::abs(iterate_accuracy(s, i, dev.features(), dev.gender) - s.iteration_accuracy[i]) <= 1e-12);
  }
  SUBCASE("past the planted rank a fresh probe is near the majority rate") {
    CHECK(std::abs(fresh_probe_accuracy(s, train, dev) - majority_accuracy(dev.gender)) <= 0.03);
  }
  SUBCASE("JSON round trip") {
    const auto back = concept_subspace_from_json(nlohmann::json::parse(to_json(s).dump()));
    CHECK(back.size() == s.size());
    CHECK(back.dim == s.dim);
    CHECK(back.domain == "a");
    CHECK((back.directions - s.directions).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(back.iteration_accuracy == s.iteration_accuracy);
    CHECK(back.stop_reason == "iterations");
    CHECK(to_json(back.config) == to_json(s.config));
  }
}

TEST_CASE("stops when the remaining data carries no signal") {
  const auto p = planted(16, 1, 500, 25);
  const auto s = run_inlp(p.train_x, p.train_y, p.dev_x, p.dev_y, iterations(5));
  CHECK(s.size() == 1);
  CHECK(s.stop_reason == "degenerate direction at iteration 2");
}

TEST_CASE("plateau stop") {
  std::mt19937_64 rng(26);
  const Eigen::MatrixXd train = gaussian(2000, 16, rng), dev = gaussian(1000, 16, rng);
  const auto ty = scrub::testing::coin_labels(2000, rng), dy = scrub::testing::coin_labels(1000, rng);
  InlpConfig cfg = iterations(20);
  cfg.plateau_stop = true;
  cfg.plateau_epsilon = 0.1;
  cfg.plateau_window = 3;
  const auto s = run_inlp(train, ty, dev, dy, cfg);
  CHECK(s.size() == 3);
  CHECK(s.stop_reason == "plateau at iteration 3");
}

TEST_CASE("configuration errors") {
  InlpConfig cfg;
  cfg.iterations = 0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  CHECK_THROWS_AS(inlp_config_from_json({{"iters", 3}}), ValidationError);
  const Eigen::MatrixXd a = Eigen::MatrixXd::Ones(4, 3), b = Eigen::MatrixXd::Ones(4, 2);
  const std::vector<std::uint32_t> y{0, 1, 0, 1};
  CHECK_THROWS_AS(run_inlp(a, y, b, y, InlpConfig{}), DimensionError);
  CHECK_THROWS_AS(run_inlp(a, std::vector<std::uint32_t>{1, 1, 1, 1}, a, y, InlpConfig{}), DegenerateLabelError);
}

}  // TEST_SUITE
