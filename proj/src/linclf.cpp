#include "scrub/linclf.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "scrub/codec.hpp"
#include "scrub/error.hpp"

namespace scrub {

namespace {

constexpr std::array<const char*, 3> kLossNames{"logistic", "hinge", "multinomial"};

double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }
double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void check_inputs(const Eigen::MatrixXd& x, std::span<const std::uint32_t> y) {
  if (static_cast<Eigen::Index>(y.size()) != x.rows())
    throw DimensionError("classifier: " + std::to_string(y.size()) + " labels for " + std::to_string(x.rows()) +
                         " rows");
  if (!x.allFinite()) throw IntegrityError("classifier: non-finite feature values");
}

// Largest eigenvalue of [X 1]^T diag(c) [X 1] / sum(c), by power iteration.
double curvature_estimate(const Eigen::MatrixXd& x, const Eigen::VectorXd& c) {
  const Eigen::Index d = x.cols();
  const double total = c.sum();
  Eigen::VectorXd v = Eigen::VectorXd::Constant(d + 1, 1.0 / std::sqrt(static_cast<double>(d + 1)));
  double lambda = 0;
  for (int it = 0; it < 50; ++it) {
    const Eigen::VectorXd fx = (x * v.head(d)).array() + v(d);
    const Eigen::VectorXd wfx = c.cwiseProduct(fx) / total;
    Eigen::VectorXd av(d + 1);
    av.head(d) = x.transpose() * wfx;
    av(d) = wfx.sum();
    lambda = av.norm();
    if (!(lambda > 0)) return 0;
    v = av / lambda;
  }
  return lambda;
}

double loss_curvature_factor(LossKind kind) {
  switch (kind) {
    case LossKind::logistic: return 0.25;
    case LossKind::hinge: return 2.0;
    case LossKind::multinomial: return 0.5;
  }
  return 1.0;
}

LinearClassifier gradient_descent(LossKind kind, const Eigen::MatrixXd& x, std::span<const std::uint32_t> y,
                                  const TrainConfig& cfg, Eigen::Index outputs) {
  const Eigen::VectorXd c = sample_weights(y, cfg.class_weighting);
  LinearClassifier clf;
  clf.loss_kind = kind;
  clf.trained_rows = y.size();
  clf.weights = Eigen::MatrixXd::Zero(x.cols(), outputs);
  clf.bias = Eigen::VectorXd::Zero(outputs);

  const double smoothness = loss_curvature_factor(kind) * curvature_estimate(x, c) + cfg.l2_reg;
  double cap = smoothness > 0 ? 1.0 / smoothness : std::numeric_limits<double>::infinity();

  Objective obj = evaluate_objective(kind, x, y, c, clf.weights, clf.bias, cfg.l2_reg);
  clf.loss_history.push_back(obj.loss);
  auto grad_max = [](const Objective& o) {
    const double gw = o.grad_w.size() ? o.grad_w.cwiseAbs().maxCoeff() : 0.0;
    return std::max(gw, o.grad_b.cwiseAbs().maxCoeff());
  };

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    if (grad_max(obj) < cfg.convergence_tol) {
      clf.converged = true;
      break;
    }
    const double scheduled = cfg.decay == LrDecay::inverse_sqrt
                                 ? cfg.learning_rate / std::sqrt(static_cast<double>(epoch))
                                 : cfg.learning_rate;
    double step = std::min(scheduled, cap);
    bool accepted = false;
    while (step > 1e-300) {
      Eigen::MatrixXd w_next = clf.weights - step * obj.grad_w;
      Eigen::VectorXd b_next = clf.bias - step * obj.grad_b;
      Objective next = evaluate_objective(kind, x, y, c, w_next, b_next, cfg.l2_reg);
      if (next.loss <= obj.loss) {
        clf.weights = std::move(w_next);
        clf.bias = std::move(b_next);
        obj = std::move(next);
        accepted = true;
        break;
      }
      cap = step / 2;
      step = cap;
    }
    if (!accepted) break;
    clf.epochs = epoch;
    clf.loss_history.push_back(obj.loss);
  }
  if (!clf.converged && grad_max(obj) < cfg.convergence_tol) clf.converged = true;
  return clf;
}

}  // namespace

std::string to_string(LossKind kind) { return kLossNames.at(static_cast<std::size_t>(kind)); }

LossKind loss_kind_from_string(const std::string& name) {
  for (std::size_t i = 0; i < kLossNames.size(); ++i)
    if (name == kLossNames[i]) return static_cast<LossKind>(i);
  throw ValidationError("unknown loss kind '" + name + "'");
}

void TrainConfig::validate() const {
  if (!(l2_reg >= 0) || !std::isfinite(l2_reg)) throw ValidationError("train config: l2_reg must be non-negative");
  if (max_epochs < 1) throw ValidationError("train config: max_epochs must be at least 1");
  if (!(learning_rate > 0) || !std::isfinite(learning_rate))
    throw ValidationError("train config: learning_rate must be positive");
  if (!(convergence_tol > 0)) throw ValidationError("train config: convergence_tol must be positive");
}

nlohmann::json to_json(const TrainConfig& cfg) {
  return {{"loss_kind", to_string(cfg.loss_kind)},
          {"l2_reg", cfg.l2_reg},
          {"max_epochs", cfg.max_epochs},
          {"learning_rate", cfg.learning_rate},
          {"decay", cfg.decay == LrDecay::inverse_sqrt ? "inverse_sqrt" : "constant"},
          {"convergence_tol", cfg.convergence_tol},
          {"seed", cfg.seed},
          {"class_weighting", cfg.class_weighting == ClassWeighting::none ? "none" : "balanced"}};
}

TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig cfg) {
  if (!j.is_object()) throw ValidationError("train config must be a JSON object");
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "loss_kind") {
        cfg.loss_kind = loss_kind_from_string(value.get<std::string>());
      } else if (key == "l2_reg") {
        cfg.l2_reg = value.get<double>();
      } else if (key == "max_epochs") {
        cfg.max_epochs = value.get<int>();
      } else if (key == "learning_rate") {
        cfg.learning_rate = value.get<double>();
      } else if (key == "decay") {
        const auto s = value.get<std::string>();
        if (s != "inverse_sqrt" && s != "constant") throw ValidationError("train config: unknown decay '" + s + "'");
        cfg.decay = s == "constant" ? LrDecay::constant : LrDecay::inverse_sqrt;
      } else if (key == "convergence_tol") {
        cfg.convergence_tol = value.get<double>();
      } else if (key == "seed") {
        cfg.seed = value.get<std::uint64_t>();
      } else if (key == "class_weighting") {
        const auto s = value.get<std::string>();
        if (s != "none" && s != "balanced") throw ValidationError("train config: unknown class_weighting '" + s + "'");
        cfg.class_weighting = s == "balanced" ? ClassWeighting::balanced : ClassWeighting::none;
      } else {
        throw ValidationError("train config: unknown field '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("train config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

Eigen::VectorXd LinearClassifier::unit_direction() const {
  if (!is_binary()) throw ValidationError("unit_direction is defined for binary classifiers only");
  const double norm = weights.norm();
  if (!(norm > 1e-12)) throw IntegrityError("unit_direction: weight norm " + codec::format_number(norm));
  return weights.col(0) / norm;
}

Eigen::MatrixXd LinearClassifier::decision(const Eigen::MatrixXd& x) const {
  if (x.cols() != dim())
    throw DimensionError("classifier expects " + std::to_string(dim()) + " features, got " +
                         std::to_string(x.cols()));
  return (x * weights).rowwise() + bias.transpose();
}

std::vector<std::uint32_t> LinearClassifier::predict(const Eigen::MatrixXd& x) const {
  const Eigen::MatrixXd f = decision(x);
  std::vector<std::uint32_t> out(static_cast<std::size_t>(f.rows()));
  for (Eigen::Index i = 0; i < f.rows(); ++i) {
    if (is_binary()) {
      out[i] = f(i, 0) > 0 ? 1u : 0u;
    } else {
      Eigen::Index arg = 0;
      for (Eigen::Index k = 1; k < f.cols(); ++k)
        if (f(i, k) > f(i, arg)) arg = k;
      out[i] = static_cast<std::uint32_t>(arg);
    }
  }
  return out;
}

nlohmann::json to_json(const LinearClassifier& clf) {
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows = clf.weights;
  return {{"loss_kind", to_string(clf.loss_kind)},
          {"dim", clf.weights.rows()},
          {"outputs", clf.weights.cols()},
          {"weights", codec::base64_encode(codec::pack_f32({rows.data(), static_cast<std::size_t>(rows.size())}))},
          {"bias", std::vector<double>(clf.bias.begin(), clf.bias.end())},
          {"trained_on", {{"domain", clf.trained_domain}, {"rows", clf.trained_rows}}},
          {"converged", clf.converged},
          {"epochs", clf.epochs}};
}

LinearClassifier classifier_from_json(const nlohmann::json& j) {
  try {
    LinearClassifier clf;
    clf.loss_kind = loss_kind_from_string(j.at("loss_kind").get<std::string>());
    const auto d = j.at("dim").get<Eigen::Index>();
    const auto k = j.at("outputs").get<Eigen::Index>();
    const auto values = codec::unpack_f32(codec::base64_decode(j.at("weights").get<std::string>()));
    if (d < 0 || k < 1 || static_cast<Eigen::Index>(values.size()) != d * k)
      throw IntegrityError("classifier JSON: weight payload does not hold dim x outputs values");
    clf.weights = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        values.data(), d, k);
    const auto bias = j.at("bias").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(bias.size()) != k) throw IntegrityError("classifier JSON: bias length mismatch");
    clf.bias = Eigen::Map<const Eigen::VectorXd>(bias.data(), k);
    clf.trained_domain = j.at("trained_on").at("domain").get<std::string>();
    clf.trained_rows = j.at("trained_on").at("rows").get<std::size_t>();
    clf.converged = j.at("converged").get<bool>();
    clf.epochs = j.at("epochs").get<int>();
    if (!clf.weights.allFinite() || !clf.bias.allFinite()) throw IntegrityError("classifier JSON: non-finite weights");
    return clf;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("classifier JSON: ") + e.what());
  }
}

Eigen::VectorXd sample_weights(std::span<const std::uint32_t> y, ClassWeighting mode) {
  const auto n = static_cast<Eigen::Index>(y.size());
  if (mode == ClassWeighting::none) return Eigen::VectorXd::Ones(n);
  const std::uint32_t top = y.empty() ? 0 : *std::max_element(y.begin(), y.end());
  std::vector<double> counts(static_cast<std::size_t>(top) + 1, 0.0);
  for (auto l : y) counts[l] += 1;
  const double present = static_cast<double>(std::count_if(counts.begin(), counts.end(), [](double c) { return c > 0; }));
  Eigen::VectorXd c(n);
  for (Eigen::Index i = 0; i < n; ++i) c(i) = static_cast<double>(n) / (present * counts[y[i]]);
  return c;
}

Objective evaluate_objective(LossKind kind, const Eigen::MatrixXd& x, std::span<const std::uint32_t> y,
                             const Eigen::VectorXd& sample_weight, const Eigen::MatrixXd& w,
                             const Eigen::VectorXd& b, double l2_reg) {
  const Eigen::Index n = x.rows();
  const double total = sample_weight.sum();
  Objective out;
  Eigen::MatrixXd dfun(n, w.cols());
  double data_loss = 0;
  if (kind == LossKind::multinomial) {
    const Eigen::MatrixXd f = (x * w).rowwise() + b.transpose();
    for (Eigen::Index i = 0; i < n; ++i) {
      const double top = f.row(i).maxCoeff();
      const Eigen::RowVectorXd e = (f.row(i).array() - top).exp();
      const double z = e.sum();
      data_loss += sample_weight(i) * (top + std::log(z) - f(i, y[i]));
      dfun.row(i) = e / z;
      dfun(i, y[i]) -= 1.0;
      dfun.row(i) *= sample_weight(i) / total;
    }
  } else {
    const Eigen::VectorXd f = (x * w.col(0)).array() + b(0);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double s = y[i] == 1 ? 1.0 : -1.0;
      const double m = s * f(i);
      double dl = 0;
      if (kind == LossKind::logistic) {
        data_loss += sample_weight(i) * softplus(-m);
        dl = -s * sigmoid(-m);
      } else {
        const double r = std::max(0.0, 1.0 - m);
        data_loss += sample_weight(i) * r * r;
        dl = -2.0 * s * r;
      }
      dfun(i, 0) = dl * sample_weight(i) / total;
    }
  }
  out.loss = data_loss / total + 0.5 * l2_reg * w.squaredNorm();
  out.grad_w = x.transpose() * dfun + l2_reg * w;
  out.grad_b = dfun.colwise().sum().transpose();
  return out;
}

LinearClassifier train_binary(const Eigen::MatrixXd& x, std::span<const std::uint32_t> y, const TrainConfig& cfg) {
  cfg.validate();
  if (cfg.loss_kind == LossKind::multinomial)
    throw ValidationError("train_binary: loss kind must be logistic or hinge");
  check_inputs(x, y);
  if (y.size() < 2) throw DegenerateLabelError("train_binary: need at least 2 rows");
  bool seen[2] = {false, false};
  for (auto l : y) {
    if (l > 1) throw ValidationError("train_binary: labels must be 0 or 1");
    seen[l] = true;
  }
  if (!seen[0] || !seen[1]) throw DegenerateLabelError("train_binary: only one class present");
  return gradient_descent(cfg.loss_kind, x, y, cfg, 1);
}

LinearClassifier train_multiclass(const Eigen::MatrixXd& x, std::span<const std::uint32_t> y, const TrainConfig& cfg,
                                  Eigen::Index num_classes) {
  cfg.validate();
  check_inputs(x, y);
  if (y.size() < 2) throw DegenerateLabelError("train_multiclass: need at least 2 rows");
  const std::uint32_t top = *std::max_element(y.begin(), y.end());
  if (num_classes == 0) num_classes = static_cast<Eigen::Index>(top) + 1;
  if (static_cast<Eigen::Index>(top) >= num_classes)
    throw ValidationError("train_multiclass: label " + std::to_string(top) + " outside " +
                          std::to_string(num_classes) + " classes");
  if (num_classes < 2 || std::all_of(y.begin(), y.end(), [&](auto l) { return l == y[0]; }))
    throw DegenerateLabelError("train_multiclass: need at least 2 distinct classes");
  return gradient_descent(LossKind::multinomial, x, y, cfg, num_classes);
}

double accuracy(const LinearClassifier& clf, const Eigen::MatrixXd& x, std::span<const std::uint32_t> y) {
  if (static_cast<Eigen::Index>(y.size()) != x.rows())
    throw DimensionError("accuracy: " + std::to_string(y.size()) + " labels for " + std::to_string(x.rows()) +
                         " rows");
  if (y.empty()) throw ValidationError("accuracy: empty evaluation set");
  const auto pred = clf.predict(x);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < y.size(); ++i) hits += pred[i] == y[i];
  return static_cast<double>(hits) / static_cast<double>(y.size());
}

}  // namespace scrub
