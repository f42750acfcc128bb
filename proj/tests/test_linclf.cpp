#include <doctest.h>

#include <cmath>

#include "scrub/dataio.hpp"
#include "scrub/error.hpp"
#include "scrub/linclf.hpp"
#include "scrub/subspace.hpp"
#include "support.hpp"

using namespace scrub;
using scrub::testing::gaussian;

namespace {

// Labels from a noisy linear rule, so the regularized optimum is interior.
std::vector<std::uint32_t> noisy_rule(const Eigen::MatrixXd& x, std::mt19937_64& rng) {
  Eigen::VectorXd w = Eigen::VectorXd::LinSpaced(x.cols(), 1.0, -0.5);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<std::uint32_t> y(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) y[i] = x.row(i).dot(w) + 0.3 + noise(rng) > 0 ? 1u : 0u;
  return y;
}

double relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).norm() / std::max({a.norm(), b.norm(), 1e-300});
}

// Analytic gradient against central differences on every parameter.
double gradient_check(LossKind kind, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Eigen::MatrixXd x = gaussian(5, 4, rng);
  const Eigen::Index outputs = kind == LossKind::multinomial ? 3 : 1;
  std::vector<std::uint32_t> y = {0, 1, 1, 0, 1};
  if (kind == LossKind::multinomial) y = {0, 2, 1, 2, 0};
  Eigen::MatrixXd w = gaussian(4, outputs, rng, 0.7);
  Eigen::VectorXd b = gaussian(outputs, 1, rng, 0.3);
  const Eigen::VectorXd c = Eigen::VectorXd::LinSpaced(5, 0.5, 1.5);
  const double l2 = 0.05;
  const auto obj = evaluate_objective(kind, x, y, c, w, b, l2);

  const Eigen::Index nw = w.size();
  Eigen::VectorXd analytic(nw + outputs), numeric(nw + outputs);
  const double h = 1e-6;
  for (Eigen::Index k = 0; k < nw + outputs; ++k) {
    Eigen::MatrixXd wp = w, wm = w;
    Eigen::VectorXd bp = b, bm = b;
    if (k < nw) {
      wp.data()[k] += h;
      wm.data()[k] -= h;
      analytic(k) = obj.grad_w.data()[k];
    } else {
      bp(k - nw) += h;
      bm(k - nw) -= h;
      analytic(k) = obj.grad_b(k - nw);
    }
    numeric(k) = (evaluate_objective(kind, x, y, c, wp, bp, l2).loss -
                  evaluate_objective(kind, x, y, c, wm, bm, l2).loss) /
                 (2 * h);
  }
  return relative_error(analytic, numeric);
}

}  // namespace

TEST_SUITE("linclf") {

TEST_CASE("separable pair") {
  Eigen::MatrixXd x(2, 2);
  x << -1, 0, 1, 0;
  const std::vector<std::uint32_t> y{0, 1};
  const auto clf = train_binary(x, y, TrainConfig{});
  CHECK(accuracy(clf, x, y) == 1.0);
  CHECK(clf.weights(0, 0) > 0);
  CHECK(std::abs(clf.weights(1, 0)) < 1e-12);
}

TEST_CASE("planted direction is recovered from noiseless data") {
  std::mt19937_64 rng(3);
  const Eigen::MatrixXd u = orthonormalize(gaussian(16, 1, rng));
  const auto y = scrub::testing::coin_labels(400, rng);
  const Eigen::MatrixXd x = scrub::testing::planted_rows(u, y, rng);
  for (auto kind : {LossKind::logistic, LossKind::hinge}) {
    TrainConfig cfg;
    cfg.loss_kind = kind;
    const auto clf = train_binary(x, y, cfg);
    CHECK(std::abs(clf.unit_direction().dot(u.col(0))) >= 0.99);
  }
}

TEST_CASE("random labels on isotropic noise stay near chance") {
  std::mt19937_64 rng(4);
  const Eigen::MatrixXd x = gaussian(10000, 20, rng);
  const auto y = scrub::testing::coin_labels(10000, rng);
  const auto clf = train_binary(x, y, TrainConfig{});
  CHECK(std::abs(accuracy(clf, x, y) - 0.5) <= 0.03);
}

TEST_CASE("multiclass separates one-hot classes") {
  const Eigen::MatrixXd x = Eigen::MatrixXd::Identity(3, 3);
  const std::vector<std::uint32_t> y{0, 1, 2};
  const auto clf = train_multiclass(x, y, TrainConfig{});
  CHECK(clf.classes() == 3);
  CHECK(accuracy(clf, x, y) == 1.0);
}

TEST_CASE("two-class multinomial matches the binary logistic direction") {
  std::mt19937_64 rng(12);
  const Eigen::MatrixXd x = gaussian(200, 5, rng);
  const auto y = noisy_rule(x, rng);
  TrainConfig cfg;
  cfg.l2_reg = 1e-2;
  cfg.decay = LrDecay::constant;
  cfg.learning_rate = 10.0;
  cfg.max_epochs = 20000;
  cfg.convergence_tol = 1e-8;
  const auto binary = train_binary(x, y, cfg);
  TrainConfig multi_cfg = cfg;
  multi_cfg.l2_reg = 2 * cfg.l2_reg;
  const auto multi = train_multiclass(x, y, multi_cfg);
  REQUIRE(binary.converged);
  REQUIRE(multi.converged);
  const Eigen::VectorXd diff = multi.weights.col(1) - multi.weights.col(0);
  const double cosine = diff.dot(binary.weights.col(0)) / (diff.norm() * binary.weights.norm());
  CHECK(std::acos(std::min(1.0, cosine)) < 1e-3);
  CHECK(multi.bias(1) - multi.bias(0) == doctest::Approx(binary.bias(0)).epsilon(1e-4));
}

TEST_CASE("profession is predictable from gender signal when professions are gender skewed") {
  SynthConfig cfg;
  cfg.n_per_domain = 4000;
  cfg.profession_gender_skew = 2.0;
  const auto ds = synth_generate(cfg, {"en"}).datasets[0];
  const auto clf = train_multiclass(ds.features(), ds.profession, TrainConfig{}, 4);
  CHECK(accuracy(clf, ds.features(), ds.profession) > majority_accuracy(ds.profession) + 0.05);
}

TEST_CASE("zero-weight classifier predicts the tie-break class") {
  LinearClassifier clf;
  clf.weights = Eigen::MatrixXd::Zero(3, 1);
  clf.bias = Eigen::VectorXd::Zero(1);
  std::mt19937_64 rng(1);
  const auto y = scrub::testing::coin_labels(101, rng, 0.3);
  const double zeros = static_cast<double>(std::count(y.begin(), y.end(), 0u)) / y.size();
  CHECK(accuracy(clf, gaussian(101, 3, rng), y) == zeros);

  LinearClassifier multi;
  multi.loss_kind = LossKind::multinomial;
  multi.weights = Eigen::MatrixXd::Zero(3, 4);
  multi.bias = Eigen::VectorXd::Zero(4);
  for (auto p : multi.predict(gaussian(5, 3, rng))) CHECK(p == 0);
  CHECK_THROWS(clf.unit_direction());
}

TEST_CASE("analytic gradients match central differences on 5x4 instances") {
  for (auto kind : {LossKind::logistic, LossKind::hinge, LossKind::multinomial})
    for (std::uint64_t seed = 0; seed < 5; ++seed) CHECK(gradient_check(kind, seed) < 1e-5);
}

TEST_CASE("property: training loss never increases") {
  std::mt19937_64 rng(44);
  for (int trial = 0; trial < 12; ++trial) {
    const Eigen::Index n = std::uniform_int_distribution<Eigen::Index>(10, 300)(rng);
    const Eigen::Index d = std::uniform_int_distribution<Eigen::Index>(1, 30)(rng);
    const double scale = std::pow(10.0, std::uniform_real_distribution<double>(-1, 2)(rng));
    const Eigen::MatrixXd x = gaussian(n, d, rng, scale);
    auto y = scrub::testing::coin_labels(static_cast<std::size_t>(n), rng);
    y[0] = 0;
    y[1] = 1;
    TrainConfig cfg;
    cfg.max_epochs = 150;
    cfg.learning_rate = std::pow(10.0, std::uniform_real_distribution<double>(-2, 2)(rng));
    cfg.loss_kind = trial % 3 == 0 ? LossKind::logistic : trial % 3 == 1 ? LossKind::hinge : LossKind::multinomial;
    const auto clf = cfg.loss_kind == LossKind::multinomial ? train_multiclass(x, y, cfg) : train_binary(x, y, cfg);
    for (std::size_t i = 1; i < clf.loss_history.size(); ++i)
      CHECK(clf.loss_history[i] <= clf.loss_history[i - 1] + 1e-9);
  }
}

TEST_CASE("property: training is bit-for-bit deterministic") {
  std::mt19937_64 rng(5);
  const Eigen::MatrixXd x = gaussian(300, 12, rng);
  const auto y = noisy_rule(x, rng);
  for (auto kind : {LossKind::logistic, LossKind::hinge}) {
    TrainConfig cfg;
    cfg.loss_kind = kind;
    const auto a = train_binary(x, y, cfg);
    const auto b = train_binary(x, y, cfg);
    CHECK(a.weights == b.weights);
    CHECK(a.bias == b.bias);
    CHECK(a.loss_history == b.loss_history);
  }
}

TEST_CASE("property: positive input scaling keeps the prediction pattern on separable data") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::MatrixXd u = orthonormalize(gaussian(6, 1, rng));
    const auto y = scrub::testing::coin_labels(80, rng);
    const Eigen::MatrixXd x = scrub::testing::planted_rows(u, y, rng) + gaussian(80, 6, rng, 0.05);
    const double c = std::uniform_real_distribution<double>(0.2, 5.0)(rng);
    TrainConfig cfg;
    cfg.l2_reg = 0;
    const auto a = train_binary(x, y, cfg);
    const auto b = train_binary(Eigen::MatrixXd(c * x), y, cfg);
    CHECK(a.predict(x) == b.predict(Eigen::MatrixXd(c * x)));
  }
}

TEST_CASE("input errors") {
  Eigen::MatrixXd x = Eigen::MatrixXd::Ones(4, 2);
  CHECK_THROWS_AS(train_binary(x, std::vector<std::uint32_t>{1, 1, 1, 1}, TrainConfig{}), DegenerateLabelError);
  CHECK_THROWS_AS(train_binary(x, std::vector<std::uint32_t>{0, 1, 2, 1}, TrainConfig{}), ValidationError);
  CHECK_THROWS_AS(train_binary(x, std::vector<std::uint32_t>{0, 1}, TrainConfig{}), DimensionError);
  CHECK_THROWS_AS(train_multiclass(x, std::vector<std::uint32_t>{2, 2, 2, 2}, TrainConfig{}), DegenerateLabelError);
  x(2, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(train_binary(x, std::vector<std::uint32_t>{0, 1, 0, 1}, TrainConfig{}), IntegrityError);
  TrainConfig bad;
  bad.max_epochs = 0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = TrainConfig{};
  bad.learning_rate = 0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = TrainConfig{};
  bad.convergence_tol = 0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("balanced class weights") {
  const std::vector<std::uint32_t> y{0, 0, 0, 1};
  const auto c = sample_weights(y, ClassWeighting::balanced);
  CHECK(c(0) == doctest::Approx(4.0 / 6.0));
  CHECK(c(3) == doctest::Approx(2.0));
  CHECK(c.sum() == doctest::Approx(4.0));
  CHECK(sample_weights(y, ClassWeighting::none).sum() == 4.0);
}

TEST_CASE("classifier and config JSON round trip") {
  std::mt19937_64 rng(7);
  const Eigen::MatrixXd x = gaussian(60, 4, rng);
  auto clf = train_binary(x, noisy_rule(x, rng), TrainConfig{});
  clf.trained_domain = "fr";
  const auto back = classifier_from_json(nlohmann::json::parse(to_json(clf).dump()));
  CHECK((back.weights - clf.weights).cwiseAbs().maxCoeff() < 1e-6 * clf.weights.cwiseAbs().maxCoeff());
  CHECK(back.bias == clf.bias);
  CHECK(back.trained_domain == "fr");
  CHECK(back.trained_rows == 60);

  TrainConfig cfg;
  cfg.loss_kind = LossKind::hinge;
  cfg.decay = LrDecay::constant;
  cfg.class_weighting = ClassWeighting::balanced;
  CHECK(to_json(train_config_from_json(to_json(cfg))) == to_json(cfg));
  CHECK_THROWS_AS(train_config_from_json({{"lr", 1}}), ValidationError);
}

}  // TEST_SUITE
