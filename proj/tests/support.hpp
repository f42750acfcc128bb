#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <vector>

#include "scrub/dataio.hpp"

namespace scrub::testing {

inline Eigen::MatrixXd gaussian(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng, double sigma = 1.0) {
  std::normal_distribution<double> normal(0.0, sigma);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = normal(rng);
  return m;
}

inline Eigen::MatrixXd random_orthogonal(Eigen::Index d, std::mt19937_64& rng) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian(d, d, rng));
  return qr.householderQ();
}

inline std::vector<std::uint32_t> coin_labels(std::size_t n, std::mt19937_64& rng, double p = 0.5) {
  std::bernoulli_distribution coin(p);
  std::vector<std::uint32_t> y(n);
  for (auto& v : y) v = coin(rng) ? 1u : 0u;
  return y;
}

/// Rows g * sum_i a_i u_i with a_i ~ U(0.5, 1.5) drawn per row and g = 2 y - 1:
/// every planted direction separates the classes and the data spans exactly
/// the planted subspace, with no isotropic noise.
inline Eigen::MatrixXd planted_rows(const Eigen::MatrixXd& basis, std::span<const std::uint32_t> y,
                                    std::mt19937_64& rng) {
  std::uniform_real_distribution<double> mag(0.5, 1.5);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(y.size()), basis.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    Eigen::VectorXd a(basis.cols());
    for (Eigen::Index k = 0; k < a.size(); ++k) a(k) = mag(rng);
    x.row(i) = (y[i] == 1 ? 1.0 : -1.0) * (basis * a).transpose();
  }
  return x;
}

inline EmbeddingDataset make_dataset(const Eigen::MatrixXd& x, std::vector<std::uint32_t> gender,
                                     std::vector<std::uint32_t> profession, std::vector<std::string> names,
                                     const std::string& domain) {
  EmbeddingDataset ds;
  ds.vectors = x.cast<float>();
  ds.gender = std::move(gender);
  ds.profession = std::move(profession);
  ds.profession_names = std::move(names);
  ds.split.assign(ds.gender.size(), Split::unassigned);
  ds.domain = domain;
  return ds;
}

/// Literal-model synthetic pair with splits assigned, scaled down for unit tests.
inline std::vector<EmbeddingDataset> synthetic_pair(int n_per_domain, std::uint64_t seed, int shared = 3,
                                                    int specific = 3, PlantedGroundTruth* truth = nullptr) {
  SynthConfig cfg;
  cfg.n_per_domain = n_per_domain;
  cfg.seed = seed;
  cfg.shared_dirs = shared;
  cfg.specific_dirs = specific;
  cfg.shared_strengths.resize(static_cast<std::size_t>(shared));
  cfg.specific_strengths.resize(static_cast<std::size_t>(specific));
  auto out = synth_generate(cfg, {"a", "b"});
  if (truth) *truth = out.truth;
  for (auto& ds : out.datasets) ds = split_dataset(ds, {}, seed);
  return out.datasets;
}

/// Same pair with profession replaced by gender before splitting, so the
/// profession stratification also fixes each split's gender mix.
inline std::vector<EmbeddingDataset> gender_stratified_pair(int n_per_domain, std::uint64_t seed) {
  SynthConfig cfg;
  cfg.n_per_domain = n_per_domain;
  cfg.seed = seed;
  auto out = synth_generate(cfg, {"a", "b"});
  for (auto& ds : out.datasets) {
    ds.profession = ds.gender;
    ds.profession_names = {"g0", "g1"};
    ds = split_dataset(ds, {}, seed);
  }
  return out.datasets;
}

}  // namespace scrub::testing
