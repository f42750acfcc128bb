#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace scrub {

/// `hinge` is the squared (smoothed) hinge max(0, 1 - s f)^2.
enum class LossKind { logistic, hinge, multinomial };
enum class LrDecay { inverse_sqrt, constant };
enum class ClassWeighting { none, balanced };

std::string to_string(LossKind kind);
LossKind loss_kind_from_string(const std::string& name);

struct TrainConfig {
  LossKind loss_kind = LossKind::logistic;
  double l2_reg = 1e-4;  ///< penalty (l2_reg / 2) * ||W||_F^2, bias excluded
  int max_epochs = 500;
  double learning_rate = 0.1;
  LrDecay decay = LrDecay::inverse_sqrt;
  double convergence_tol = 1e-6;  ///< on the max-norm of the full-batch gradient
  std::uint64_t seed = 0;
  ClassWeighting class_weighting = ClassWeighting::none;

  void validate() const;
};

nlohmann::json to_json(const TrainConfig& cfg);
/// Missing fields keep their defaults; unknown fields are rejected.
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});

/// Binary classifiers hold a d x 1 weight matrix and predict class 1 iff
/// x.w + b > 0, so ties go to class 0. Multiclass classifiers hold d x C and
/// predict the first argmax.
struct LinearClassifier {
  Eigen::MatrixXd weights;
  Eigen::VectorXd bias;
  LossKind loss_kind = LossKind::logistic;
  std::string trained_domain;
  std::size_t trained_rows = 0;
  bool converged = false;
  int epochs = 0;
  std::vector<double> loss_history;  ///< objective before the first step and after every accepted step

  bool is_binary() const { return loss_kind != LossKind::multinomial; }
  Eigen::Index dim() const { return weights.rows(); }
  Eigen::Index classes() const { return is_binary() ? 2 : weights.cols(); }

  /// weights / ||weights|| for binary classifiers. Throws when the norm is at most 1e-12.
  Eigen::VectorXd unit_direction() const;

  Eigen::MatrixXd decision(const Eigen::MatrixXd& x) const;
  std::vector<std::uint32_t> predict(const Eigen::MatrixXd& x) const;
};

nlohmann::json to_json(const LinearClassifier& clf);
LinearClassifier classifier_from_json(const nlohmann::json& j);

/// Weighted mean loss plus penalty, with gradients. Binary losses read labels
/// in {0, 1} and take a d x 1 `w`; multinomial reads labels in [0, w.cols()).
struct Objective {
  double loss = 0;
  Eigen::MatrixXd grad_w;
  Eigen::VectorXd grad_b;
};

Objective evaluate_objective(LossKind kind, const Eigen::MatrixXd& x, std::span<const std::uint32_t> y,
                             const Eigen::VectorXd& sample_weight, const Eigen::MatrixXd& w,
                             const Eigen::VectorXd& b, double l2_reg);

/// Per-row weights: all ones, or n / (classes present * class count).
Eigen::VectorXd sample_weights(std::span<const std::uint32_t> y, ClassWeighting mode);

/// Full-batch gradient descent from zero. The step is the schedule value
/// capped by 1 / (estimated smoothness constant); a step that would raise the
/// objective is retried with half the cap, so the loss never increases.
LinearClassifier train_binary(const Eigen::MatrixXd& x, std::span<const std::uint32_t> y, const TrainConfig& cfg);

/// Softmax cross-entropy regardless of cfg.loss_kind. `num_classes` 0 means max label + 1.
LinearClassifier train_multiclass(const Eigen::MatrixXd& x, std::span<const std::uint32_t> y, const TrainConfig& cfg,
                                  Eigen::Index num_classes = 0);

double accuracy(const LinearClassifier& clf, const Eigen::MatrixXd& x, std::span<const std::uint32_t> y);

}  // namespace scrub
