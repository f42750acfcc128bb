#include <cmath>
#include <random>

#include "scrub/dataio.hpp"
#include "scrub/error.hpp"
#include "scrub/subspace.hpp"

namespace scrub {

namespace {

Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = normal(rng);
  return m;
}

// Orthonormal columns spanning fresh Gaussian directions orthogonal to `against`.
Eigen::MatrixXd fresh_basis(const Eigen::MatrixXd& against, Eigen::Index count, std::mt19937_64& rng) {
  const Eigen::Index d = against.rows();
  for (;;) {
    Eigen::MatrixXd stacked(d, against.cols() + count);
    stacked << against, gaussian_matrix(d, count, rng);
    Eigen::MatrixXd q = orthonormalize(stacked);
    if (q.cols() == stacked.cols()) return q.rightCols(count);
  }
}

nlohmann::json columns_to_json(const Eigen::MatrixXd& m) {
  auto out = nlohmann::json::array();
  for (Eigen::Index c = 0; c < m.cols(); ++c)
    out.push_back(std::vector<double>(m.col(c).data(), m.col(c).data() + m.rows()));
  return out;
}

Eigen::MatrixXd columns_from_json(const nlohmann::json& j, Eigen::Index dim) {
  Eigen::MatrixXd m(dim, static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    const auto col = j.at(static_cast<std::size_t>(c)).get<std::vector<double>>();
    if (static_cast<Eigen::Index>(col.size()) != dim) throw FormatError("ground truth: ragged basis column");
    m.col(c) = Eigen::Map<const Eigen::VectorXd>(col.data(), dim);
  }
  return m;
}

}  // namespace

void SynthConfig::validate() const {
  auto fail = [](const std::string& what) { throw ValidationError("synth config: " + what); };
  if (dim <= 0) fail("dim must be positive");
  if (n_per_domain < 0) fail("n_per_domain must be non-negative");
  if (shared_dirs < 0 || specific_dirs < 0) fail("direction counts must be non-negative");
  if (shared_dirs + specific_dirs > dim) fail("shared_dirs + specific_dirs must not exceed dim");
  if (static_cast<int>(shared_strengths.size()) != shared_dirs) fail("shared_strengths length != shared_dirs");
  if (static_cast<int>(specific_strengths.size()) != specific_dirs)
    fail("specific_strengths length != specific_dirs");
  for (const auto* s : {&shared_strengths, &specific_strengths}) {
    for (std::size_t i = 0; i < s->size(); ++i) {
      if (!((*s)[i] > 0) || !std::isfinite((*s)[i])) fail("strengths must be finite and positive");
      if (i > 0 && (*s)[i] > (*s)[i - 1]) fail("strengths must be non-increasing");
    }
  }
  if (!(noise_sigma >= 0) || !std::isfinite(noise_sigma)) fail("noise_sigma must be non-negative");
  if (!(domain_offset_scale >= 0) || !std::isfinite(domain_offset_scale))
    fail("domain_offset_scale must be non-negative");
  if (!(gender_balance > 0 && gender_balance < 1)) fail("gender_balance must lie in (0, 1)");
  if (profession_count < 1) fail("profession_count must be at least 1");
  if (!(profession_gender_skew >= 0) || !std::isfinite(profession_gender_skew))
    fail("profession_gender_skew must be non-negative");
}

Eigen::MatrixXd PlantedGroundTruth::planted_basis(std::size_t domain_index) const {
  const auto& specific = specific_basis.at(domain_index);
  Eigen::MatrixXd out(shared_basis.rows(), shared_basis.cols() + specific.cols());
  out << shared_basis, specific;
  return out;
}

SynthOutput synth_generate(const SynthConfig& cfg, const std::vector<std::string>& domains) {
  cfg.validate();
  if (domains.empty()) throw ValidationError("synth: at least one domain is required");
  const Eigen::Index d = cfg.dim;
  const Eigen::Index n_dom = static_cast<Eigen::Index>(domains.size());

  SynthOutput out;
  out.truth.domains = domains;
  std::mt19937_64 rng(cfg.seed);

  out.truth.shared_basis = fresh_basis(Eigen::MatrixXd(d, 0), cfg.shared_dirs, rng);
  const bool disjoint = cfg.shared_dirs + n_dom * cfg.specific_dirs <= d;
  Eigen::MatrixXd taken = out.truth.shared_basis;
  for (Eigen::Index k = 0; k < n_dom; ++k) {
    Eigen::MatrixXd specific = fresh_basis(disjoint ? taken : out.truth.shared_basis, cfg.specific_dirs, rng);
    if (disjoint) {
      Eigen::MatrixXd grown(d, taken.cols() + specific.cols());
      grown << taken, specific;
      taken = std::move(grown);
    }
    out.truth.specific_basis.push_back(std::move(specific));
  }
  for (Eigen::Index k = 0; k < n_dom; ++k) {
    Eigen::VectorXd mu = gaussian_matrix(d, 1, rng);
    mu *= cfg.domain_offset_scale / mu.norm();
    out.truth.domain_means.push_back(std::move(mu));
  }

  const Eigen::Map<const Eigen::VectorXd> shared_s(cfg.shared_strengths.data(), cfg.shared_dirs);
  const Eigen::Map<const Eigen::VectorXd> specific_t(cfg.specific_strengths.data(), cfg.specific_dirs);

  std::vector<double> skew_axis(static_cast<std::size_t>(cfg.profession_count), 0.0);
  if (cfg.profession_count > 1)
    for (int p = 0; p < cfg.profession_count; ++p) skew_axis[p] = -1.0 + 2.0 * p / (cfg.profession_count - 1);
  std::vector<std::string> names;
  for (int p = 0; p < cfg.profession_count; ++p) {
    std::string id = std::to_string(p);
    names.push_back("prof_" + std::string(id.size() < 2 ? 2 - id.size() : 0, '0') + id);
  }

  for (Eigen::Index k = 0; k < n_dom; ++k) {
    const Eigen::VectorXd signal =
        out.truth.shared_basis * shared_s + out.truth.specific_basis[k] * specific_t;
    std::seed_seq seq{static_cast<std::uint64_t>(cfg.seed), static_cast<std::uint64_t>(k + 1)};
    std::mt19937_64 row_rng(seq);
    std::bernoulli_distribution coin(cfg.gender_balance);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::array<std::discrete_distribution<std::uint32_t>, 2> profession_dist;
    for (int g = 0; g < 2; ++g) {
      std::vector<double> w;
      for (double c : skew_axis) w.push_back(std::exp(cfg.profession_gender_skew * (2 * g - 1) * c));
      profession_dist[g] = std::discrete_distribution<std::uint32_t>(w.begin(), w.end());
    }

    EmbeddingDataset ds;
    ds.domain = domains[k];
    ds.profession_names = names;
    ds.vectors.resize(cfg.n_per_domain, d);
    Eigen::VectorXd x(d);
    for (int i = 0; i < cfg.n_per_domain; ++i) {
      const std::uint32_t gender = coin(row_rng) ? 1u : 0u;
      const std::uint32_t profession = profession_dist[gender](row_rng);
      const double g = gender == 1 ? 1.0 : -1.0;
      for (Eigen::Index j = 0; j < d; ++j) x(j) = cfg.noise_sigma * noise(row_rng);
      x += out.truth.domain_means[k] + g * signal;
      ds.vectors.row(i) = x.cast<float>().transpose();
      ds.gender.push_back(gender);
      ds.profession.push_back(profession);
      ds.split.push_back(Split::unassigned);
    }
    ds.provenance = {{"generator", "synth"}, {"domain_index", k}, {"config", to_json(cfg)}};
    out.datasets.push_back(std::move(ds));
  }
  return out;
}

nlohmann::json to_json(const PlantedGroundTruth& truth) {
  nlohmann::json j;
  j["domains"] = truth.domains;
  j["dim"] = truth.shared_basis.rows();
  j["shared_basis"] = columns_to_json(truth.shared_basis);
  j["specific_basis"] = nlohmann::json::array();
  for (const auto& b : truth.specific_basis) j["specific_basis"].push_back(columns_to_json(b));
  j["domain_means"] = nlohmann::json::array();
  for (const auto& m : truth.domain_means) j["domain_means"].push_back(std::vector<double>(m.begin(), m.end()));
  return j;
}

PlantedGroundTruth ground_truth_from_json(const nlohmann::json& j) {
  try {
    PlantedGroundTruth t;
    const auto dim = j.at("dim").get<Eigen::Index>();
    t.domains = j.at("domains").get<std::vector<std::string>>();
    t.shared_basis = columns_from_json(j.at("shared_basis"), dim);
    for (const auto& b : j.at("specific_basis")) t.specific_basis.push_back(columns_from_json(b, dim));
    for (const auto& m : j.at("domain_means")) {
      const auto v = m.get<std::vector<double>>();
      if (static_cast<Eigen::Index>(v.size()) != dim) throw FormatError("ground truth: domain mean of wrong length");
      t.domain_means.emplace_back(Eigen::Map<const Eigen::VectorXd>(v.data(), dim));
    }
    if (t.specific_basis.size() != t.domains.size() || t.domain_means.size() != t.domains.size())
      throw FormatError("ground truth: per-domain arrays disagree with domain list");
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("ground truth JSON: ") + e.what());
  }
}

nlohmann::json to_json(const SynthConfig& cfg) {
  return {{"dim", cfg.dim},
          {"n_per_domain", cfg.n_per_domain},
          {"shared_dirs", cfg.shared_dirs},
          {"specific_dirs", cfg.specific_dirs},
          {"shared_strengths", cfg.shared_strengths},
          {"specific_strengths", cfg.specific_strengths},
          {"noise_sigma", cfg.noise_sigma},
          {"domain_offset_scale", cfg.domain_offset_scale},
          {"gender_balance", cfg.gender_balance},
          {"profession_count", cfg.profession_count},
          {"profession_gender_skew", cfg.profession_gender_skew},
          {"seed", cfg.seed}};
}

SynthConfig synth_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("synth config must be a JSON object");
  SynthConfig cfg;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "dim") cfg.dim = value.get<int>();
      else if (key == "n_per_domain") cfg.n_per_domain = value.get<int>();
      else if (key == "shared_dirs") cfg.shared_dirs = value.get<int>();
      else if (key == "specific_dirs") cfg.specific_dirs = value.get<int>();
      else if (key == "shared_strengths") cfg.shared_strengths = value.get<std::vector<double>>();
      else if (key == "specific_strengths") cfg.specific_strengths = value.get<std::vector<double>>();
      else if (key == "noise_sigma") cfg.noise_sigma = value.get<double>();
      else if (key == "domain_offset_scale") cfg.domain_offset_scale = value.get<double>();
      else if (key == "gender_balance") cfg.gender_balance = value.get<double>();
      else if (key == "profession_count") cfg.profession_count = value.get<int>();
      else if (key == "profession_gender_skew") cfg.profession_gender_skew = value.get<double>();
      else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
      else throw ValidationError("synth config: unknown field '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("synth config: ") + e.what());
  }
  return cfg;
}

}  // namespace scrub
