#pragma once

#include <Eigen/Dense>
#include "json.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace scrub {

using RowMatrixXf = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class Split : std::uint32_t { train = 0, dev = 1, test = 2, unassigned = 3 };

std::string to_string(Split split);
Split split_from_string(const std::string& name);

/// n x d embeddings of one domain with per-row gender, profession and split tags.
/// Gender is binary {0, 1}; profession ids index `profession_names`.
struct EmbeddingDataset {
  RowMatrixXf vectors;
  std::vector<std::uint32_t> gender;
  std::vector<std::uint32_t> profession;
  std::vector<Split> split;
  std::string domain;
  std::vector<std::string> profession_names;
  nlohmann::json provenance = nlohmann::json::object();

  Eigen::Index size() const { return vectors.rows(); }
  Eigen::Index dim() const { return vectors.cols(); }

  /// Vectors widened to double for numerical work.
  Eigen::MatrixXd features() const { return vectors.cast<double>(); }

  /// Throws IntegrityError when label arrays, profession ids or values are inconsistent.
  void validate() const;
};

bool operator==(const EmbeddingDataset& a, const EmbeddingDataset& b);

/// Rows `rows` of `ds`, in the given order.
EmbeddingDataset subset(const EmbeddingDataset& ds, std::span<const Eigen::Index> rows);

/// Rows tagged with `split`, original order preserved.
EmbeddingDataset select_split(const EmbeddingDataset& ds, Split split);

// --- EMB1 container -------------------------------------------------------
//
//   bytes 0..3   "EMB1"
//   uint32 LE    header length L
//   L bytes      UTF-8 JSON {n, d, domain, label_schemas, provenance}
//   n*d f32 LE   row-major vectors
//   per label column in label_schemas order: n uint32 LE

EmbeddingDataset load_dataset(const std::filesystem::path& path);
void save_dataset(const EmbeddingDataset& ds, const std::filesystem::path& path);

std::string encode_emb1(const EmbeddingDataset& ds);
EmbeddingDataset decode_emb1(std::string_view bytes);

/// CSV with a header row `x0..x{d-1},gender,profession,split`; profession and
/// split are written by name. Decimal text, so not bit-exact for f32 payloads.
void write_csv(const EmbeddingDataset& ds, const std::filesystem::path& path);
EmbeddingDataset read_csv(const std::filesystem::path& path, const std::string& domain);

// --- protocol helpers -----------------------------------------------------

/// Drops rows whose profession occurs fewer than `min_count` times.
EmbeddingDataset filter_rare_professions(const EmbeddingDataset& ds, std::size_t min_count);

struct SplitRatios {
  double train = 0.65;
  double dev = 0.10;
  double test = 0.25;
};

/// Profession-stratified split. Each profession's rows are shuffled with a
/// seeded generator, then sliced contiguously into train/dev/test with sizes
/// from largest-remainder rounding of count * ratio. Professions with fewer
/// rows than splits are still assigned and reported in `warnings`.
EmbeddingDataset split_dataset(const EmbeddingDataset& ds, const SplitRatios& ratios, std::uint64_t seed,
                               std::vector<std::string>* warnings = nullptr);

/// Split sizes for `count` rows under largest-remainder rounding.
std::array<std::size_t, 3> stratum_sizes(std::size_t count, const SplitRatios& ratios);

/// Frequency of the most common label.
double majority_accuracy(std::span<const std::uint32_t> labels);

/// Table-style dataset summary. `female` counts gender 0, `male` gender 1.
struct DatasetStats {
  std::size_t examples = 0;
  std::size_t female = 0;
  std::size_t male = 0;
  double majority = 0;
  std::size_t professions = 0;
};

DatasetStats dataset_stats(const EmbeddingDataset& ds);

// --- synthetic planted-structure generator --------------------------------

struct SynthConfig {
  int dim = 64;
  int n_per_domain = 20000;
  int shared_dirs = 3;
  int specific_dirs = 3;
  std::vector<double> shared_strengths{2.0, 1.5, 1.0};
  std::vector<double> specific_strengths{1.0, 0.8, 0.6};
  double noise_sigma = 0.5;
  double domain_offset_scale = 1.0;
  double gender_balance = 0.5;
  int profession_count = 4;
  double profession_gender_skew = 0.0;
  std::uint64_t seed = 0;

  /// Throws ValidationError on violated constraints.
  void validate() const;
};

struct PlantedGroundTruth {
  Eigen::MatrixXd shared_basis;                 ///< dim x shared_dirs
  std::vector<Eigen::MatrixXd> specific_basis;  ///< per domain, dim x specific_dirs
  std::vector<Eigen::VectorXd> domain_means;
  std::vector<std::string> domains;

  /// [shared | specific(domain)] as one dim x (shared + specific) basis.
  Eigen::MatrixXd planted_basis(std::size_t domain_index) const;
};

struct SynthOutput {
  std::vector<EmbeddingDataset> datasets;
  PlantedGroundTruth truth;
};

/// Rows follow x = mu_dom + g * (sum_i s_i u_i + sum_j t_j v_j(dom)) + eps with
/// g = 2 * gender - 1 and eps ~ N(0, sigma^2 I). Shared and specific bases are
/// mutually orthonormal; specific bases of different domains are also mutually
/// orthogonal whenever shared + |domains| * specific <= dim.
SynthOutput synth_generate(const SynthConfig& cfg, const std::vector<std::string>& domains);

nlohmann::json to_json(const PlantedGroundTruth& truth);
PlantedGroundTruth ground_truth_from_json(const nlohmann::json& j);

nlohmann::json to_json(const SynthConfig& cfg);
SynthConfig synth_config_from_json(const nlohmann::json& j);

}  // namespace scrub
