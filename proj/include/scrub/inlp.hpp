#pragma once

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "scrub/dataio.hpp"
#include "scrub/linclf.hpp"
#include "scrub/subspace.hpp"

namespace scrub {

struct InlpConfig {
  int iterations = 100;
  TrainConfig probe{.loss_kind = LossKind::hinge};
  /// Stop once dev accuracy stays within `plateau_epsilon` of the dev majority
  /// rate for `plateau_window` consecutive iterations.
  bool plateau_stop = false;
  double plateau_epsilon = 0.005;
  int plateau_window = 5;

  void validate() const;
};

nlohmann::json to_json(const InlpConfig& cfg);
InlpConfig inlp_config_from_json(const nlohmann::json& j, InlpConfig base = {});

/// Ordered unit directions w_1..w_k (columns), most predictive first. Each
/// iterate's classifier is kept as scale * direction plus bias, which is exact
/// on data already projected by the nullspace of the earlier directions.
struct ConceptSubspace {
  Eigen::MatrixXd directions;
  std::vector<double> iteration_accuracy;
  std::vector<double> weight_scales;
  std::vector<double> biases;
  std::string domain;
  InlpConfig config;
  Eigen::Index dim = 0;
  std::string stop_reason;

  Eigen::Index size() const { return directions.cols(); }
};

ConceptSubspace run_inlp(const Eigen::MatrixXd& train_x, std::span<const std::uint32_t> train_y,
                         const Eigen::MatrixXd& dev_x, std::span<const std::uint32_t> dev_y, const InlpConfig& cfg,
                         const std::string& domain = "");

/// Gender subspace of `train` with dev accuracies measured on `dev`.
ConceptSubspace run_inlp(const EmbeddingDataset& train, const EmbeddingDataset& dev, const InlpConfig& cfg);

/// Nullspace projector of the first `count` directions (all when count < 0).
Projection<double> nullspace_of(const ConceptSubspace& s, Eigen::Index count = -1);
Projection<double> rowspace_of(const ConceptSubspace& s, Eigen::Index count = -1);

/// First k directions with their accuracies and classifier parameters.
ConceptSubspace truncate(const ConceptSubspace& s, Eigen::Index k);

/// Accuracy of iterate `index` (0-based) on x. With `project`, x is first
/// mapped by the nullspace of directions 0..index-1, which is how the iterate
/// was trained.
double iterate_accuracy(const ConceptSubspace& s, Eigen::Index index, const Eigen::MatrixXd& x,
                        std::span<const std::uint32_t> y, bool project = true);

/// Directions are stored as base64 f32 and re-normalized on load.
nlohmann::json to_json(const ConceptSubspace& s);
ConceptSubspace concept_subspace_from_json(const nlohmann::json& j);

/// Subspace whose directions are the columns of `basis` (orthonormalized);
/// accuracies are NaN and classifier parameters empty.
ConceptSubspace subspace_from_basis(const Eigen::MatrixXd& basis, const std::string& domain);

}  // namespace scrub
