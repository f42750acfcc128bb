#pragma once

#include <Eigen/Dense>

#include <array>
#include <string>
#include <vector>

#include "json.hpp"
#include "scrub/dataio.hpp"
#include "scrub/inlp.hpp"
#include "scrub/linclf.hpp"

namespace scrub {

enum class Task { gender, profession };

std::string to_string(Task task);
Task task_from_string(const std::string& name);

/// values(e, t): accuracy on the test split of domain e of the probe trained on domain t.
struct TransferMatrix {
  std::vector<std::string> domains;
  Eigen::MatrixXd values;
  Task task = Task::gender;
};

/// One probe per domain trained on its train split, evaluated on every test
/// split. Gender probes use cfg.loss_kind (multinomial is rejected); profession
/// probes are multinomial over the union of profession names.
TransferMatrix probe_transfer_matrix(const std::vector<EmbeddingDataset>& datasets, const TrainConfig& cfg,
                                     Task task = Task::gender);

/// after(e, s): accuracy of a fresh probe trained and tested on domain e after
/// both splits are mapped by the nullspace of source s's subspace.
struct RemovalReport {
  Task task = Task::gender;
  std::vector<std::string> domains;
  std::vector<std::string> sources;  ///< subspace domains, one per column of `after`
  Eigen::VectorXd before;
  Eigen::MatrixXd after;
  Eigen::VectorXd majority;  ///< majority rate of each domain's test split
};

/// Downstream probes are logistic for gender and multinomial for profession;
/// the other fields of cfg are used as given.
RemovalReport removal_transfer(const std::vector<EmbeddingDataset>& datasets,
                               const std::vector<ConceptSubspace>& subspaces, Task task, const TrainConfig& cfg);

inline constexpr std::array<const char*, 6> kOverlapVariants{
    "ORIG", "A_GENDER", "A_RAND", "A_GENDER_B_NEUTRAL", "A_GENDER_B_RAND", "A_GENDER_A_NEUTRAL"};

/// absolute(n, v): sum of the top n+1 eigenvalues of variant v. ratio divides by
/// that variant's own total variance (0 when that total is below 1e-12 of ORIG's).
struct OverlapReport {
  std::string domain_a;
  std::string domain_b;
  Eigen::Index components = 0;
  bool clamped = false;
  Eigen::MatrixXd absolute;
  Eigen::MatrixXd ratio;
  Eigen::VectorXd total_variance;
  std::uint64_t random_rowspace_seed = 0;
  std::uint64_t random_nullspace_seed = 0;
  std::vector<std::string> warnings;

  Eigen::VectorXd curve(const std::string& variant) const;
  double total(const std::string& variant) const;
};

/// x_a is domain A's evaluation data. Each variant is PCA'd with its own
/// centring; the random controls use `seed` and `seed + 1`.
OverlapReport overlap_curves(const Eigen::MatrixXd& x_a, const ConceptSubspace& subspace_a,
                             const ConceptSubspace& subspace_b, Eigen::Index components = 100,
                             std::uint64_t seed = 0);

struct SimilarityReport {
  std::string domain_a;
  std::string domain_b;
  Eigen::VectorXd per_index;  ///< |cos(w_i^A, w_i^B)|
  Eigen::MatrixXd full;       ///< |cos(w_i^A, w_j^B)|
  double mean_abs_offdiag = 0;  ///< mean of every entry of `full`
  std::vector<double> accuracy_a;
  std::vector<double> accuracy_b;
};

SimilarityReport direction_similarity(const ConceptSubspace& a, const ConceptSubspace& b);

/// curves[k][i]: accuracy of iterate i of `source` on the test split of
/// evaluation set k. With `project`, that split is first mapped by the
/// nullspace of directions 0..i-1.
struct IterationReport {
  std::string source;
  std::vector<std::string> domains;
  std::vector<std::vector<double>> curves;
  bool projected = true;
};

IterationReport per_iteration_accuracy(const ConceptSubspace& source, const std::vector<EmbeddingDataset>& evaluation,
                                       bool project = true);

nlohmann::json to_json(const TransferMatrix& m);
nlohmann::json to_json(const RemovalReport& r);
nlohmann::json to_json(const OverlapReport& r);
nlohmann::json to_json(const SimilarityReport& r);
nlohmann::json to_json(const IterationReport& r);

/// Plot-ready tables with a header row.
std::string to_csv(const TransferMatrix& m);
std::string to_csv(const RemovalReport& r);
std::string to_csv(const OverlapReport& r);
std::string to_csv(const SimilarityReport& r);
std::string to_csv(const IterationReport& r);

}  // namespace scrub
