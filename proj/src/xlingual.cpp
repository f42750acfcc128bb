#include "scrub/xlingual.hpp"

#include <cmath>
#include <limits>
#include <map>

#include "scrub/codec.hpp"
#include "scrub/error.hpp"
#include "scrub/subspace.hpp"

namespace scrub {

namespace {

void check_dims(const std::vector<EmbeddingDataset>& datasets) {
  if (datasets.empty()) throw ValidationError("at least one dataset is required");
  for (const auto& ds : datasets)
    if (ds.dim() != datasets.front().dim())
      throw DimensionError("dataset '" + ds.domain + "' has dimension " + std::to_string(ds.dim()) + ", '" +
                           datasets.front().domain + "' has " + std::to_string(datasets.front().dim()));
}

EmbeddingDataset require_split(const EmbeddingDataset& ds, Split split) {
  EmbeddingDataset out = select_split(ds, split);
  if (out.size() == 0) throw ValidationError("dataset '" + ds.domain + "' has no " + to_string(split) + " rows");
  return out;
}

// Profession ids re-indexed into a shared name table.
std::vector<std::uint32_t> remap_professions(const EmbeddingDataset& ds, const std::map<std::string, std::uint32_t>& ids) {
  std::vector<std::uint32_t> out;
  out.reserve(ds.profession.size());
  for (auto p : ds.profession) out.push_back(ids.at(ds.profession_names[p]));
  return out;
}

LinearClassifier train_probe(const Eigen::MatrixXd& x, std::span<const std::uint32_t> y, Task task,
                             const TrainConfig& cfg, Eigen::Index classes) {
  if (task == Task::gender) return train_binary(x, y, cfg);
  return train_multiclass(x, y, cfg, classes);
}

std::string csv_row(const std::string& head, const Eigen::VectorXd& values) {
  std::string out = head;
  for (Eigen::Index i = 0; i < values.size(); ++i) out += "," + codec::format_number(values(i));
  return out + "\n";
}

nlohmann::json json_number(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
  auto out = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    auto row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(json_number(m(r, c)));
    out.push_back(row);
  }
  return out;
}

nlohmann::json vector_json(const Eigen::VectorXd& v) {
  auto out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(json_number(v(i)));
  return out;
}

nlohmann::json vector_json(const std::vector<double>& v) {
  return vector_json(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
}

}  // namespace

std::string to_string(Task task) { return task == Task::gender ? "gender" : "profession"; }

Task task_from_string(const std::string& name) {
  if (name == "gender") return Task::gender;
  if (name == "profession") return Task::profession;
  throw ValidationError("unknown task '" + name + "'");
}

TransferMatrix probe_transfer_matrix(const std::vector<EmbeddingDataset>& datasets, const TrainConfig& cfg, Task task) {
  check_dims(datasets);
  if (task == Task::gender && cfg.loss_kind == LossKind::multinomial)
    throw ValidationError("probe_transfer_matrix: gender probes must be binary");

  std::map<std::string, std::uint32_t> ids;
  for (const auto& ds : datasets)
    for (const auto& name : ds.profession_names) ids.emplace(name, 0);
  std::uint32_t next = 0;
  for (auto& [name, id] : ids) id = next++;

  const auto labels = [&](const EmbeddingDataset& ds) {
    return task == Task::gender ? ds.gender : remap_professions(ds, ids);
  };

  std::vector<EmbeddingDataset> tests;
  std::vector<LinearClassifier> probes;
  TransferMatrix out;
  out.task = task;
  for (const auto& ds : datasets) {
    out.domains.push_back(ds.domain);
    const auto train = require_split(ds, Split::train);
    auto probe = train_probe(train.features(), labels(train), task, cfg, static_cast<Eigen::Index>(ids.size()));
    probe.trained_domain = ds.domain;
    probes.push_back(std::move(probe));
    tests.push_back(require_split(ds, Split::test));
  }
  const auto n = static_cast<Eigen::Index>(datasets.size());
  out.values.resize(n, n);
  for (Eigen::Index e = 0; e < n; ++e) {
    const Eigen::MatrixXd x = tests[e].features();
    const auto y = labels(tests[e]);
    for (Eigen::Index t = 0; t < n; ++t) out.values(e, t) = accuracy(probes[t], x, y);
  }
  return out;
}

RemovalReport removal_transfer(const std::vector<EmbeddingDataset>& datasets,
                               const std::vector<ConceptSubspace>& subspaces, Task task, const TrainConfig& cfg) {
  check_dims(datasets);
  if (subspaces.empty()) throw ValidationError("removal_transfer: at least one subspace is required");
  for (const auto& s : subspaces)
    if (s.dim != datasets.front().dim())
      throw DimensionError("subspace '" + s.domain + "' is " + std::to_string(s.dim) + "-dimensional, data is " +
                           std::to_string(datasets.front().dim()));

  TrainConfig probe_cfg = cfg;
  probe_cfg.loss_kind = task == Task::gender ? LossKind::logistic : LossKind::multinomial;

  std::vector<Projection<double>> projectors;
  RemovalReport out;
  out.task = task;
  for (const auto& s : subspaces) {
    projectors.push_back(nullspace_of(s));
    out.sources.push_back(s.domain);
  }
  const auto n = static_cast<Eigen::Index>(datasets.size());
  out.before.resize(n);
  out.majority.resize(n);
  out.after.resize(n, static_cast<Eigen::Index>(subspaces.size()));
  for (Eigen::Index e = 0; e < n; ++e) {
    const auto& ds = datasets[e];
    out.domains.push_back(ds.domain);
    const auto train = require_split(ds, Split::train);
    const auto test = require_split(ds, Split::test);
    const auto& y_train = task == Task::gender ? train.gender : train.profession;
    const auto& y_test = task == Task::gender ? test.gender : test.profession;
    const auto classes = static_cast<Eigen::Index>(ds.profession_names.size());
    const Eigen::MatrixXd x_train = train.features();
    const Eigen::MatrixXd x_test = test.features();

    out.majority(e) = majority_accuracy(y_test);
    out.before(e) = accuracy(train_probe(x_train, y_train, task, probe_cfg, classes), x_test, y_test);
    for (std::size_t s = 0; s < projectors.size(); ++s) {
      const Eigen::MatrixXd pt = apply_projection(projectors[s], x_train);
      const Eigen::MatrixXd pe = apply_projection(projectors[s], x_test);
      out.after(e, static_cast<Eigen::Index>(s)) = accuracy(train_probe(pt, y_train, task, probe_cfg, classes), pe, y_test);
    }
  }
  return out;
}

Eigen::VectorXd OverlapReport::curve(const std::string& variant) const {
  for (std::size_t v = 0; v < kOverlapVariants.size(); ++v)
    if (variant == kOverlapVariants[v]) return absolute.col(static_cast<Eigen::Index>(v));
  throw ValidationError("unknown overlap variant '" + variant + "'");
}

double OverlapReport::total(const std::string& variant) const {
  for (std::size_t v = 0; v < kOverlapVariants.size(); ++v)
    if (variant == kOverlapVariants[v]) return total_variance(static_cast<Eigen::Index>(v));
  throw ValidationError("unknown overlap variant '" + variant + "'");
}

OverlapReport overlap_curves(const Eigen::MatrixXd& x_a, const ConceptSubspace& subspace_a,
                             const ConceptSubspace& subspace_b, Eigen::Index components, std::uint64_t seed) {
  const Eigen::Index d = x_a.cols();
  if (subspace_a.dim != d || subspace_b.dim != d)
    throw DimensionError("overlap_curves: data is " + std::to_string(d) + "-dimensional, subspaces are " +
                         std::to_string(subspace_a.dim) + " and " + std::to_string(subspace_b.dim));
  if (components < 1) throw ValidationError("overlap_curves: need at least one component");
  if (!x_a.allFinite()) throw IntegrityError("overlap_curves: non-finite data");

  OverlapReport out;
  out.domain_a = subspace_a.domain;
  out.domain_b = subspace_b.domain;
  out.random_rowspace_seed = seed;
  out.random_nullspace_seed = seed + 1;

  const auto rowspace_a = rowspace_of(subspace_a);
  const auto nullspace_a = nullspace_of(subspace_a);
  const auto nullspace_b = nullspace_of(subspace_b);
  const auto random_row = random_projection_pair(d, rowspace_a.rank, out.random_rowspace_seed).rowspace;
  const auto random_null = random_projection_pair(d, subspace_b.size(), out.random_nullspace_seed).nullspace;

  const Eigen::MatrixXd a_gender = apply_projection(rowspace_a, x_a);
  const std::array<Eigen::MatrixXd, 6> variants{
      x_a,
      a_gender,
      apply_projection(random_row, x_a),
      apply_projection(nullspace_b, a_gender),
      apply_projection(random_null, a_gender),
      apply_projection(nullspace_a, a_gender),
  };

  const Eigen::Index limit = std::min(x_a.rows(), d);
  if (components > limit) {
    out.warnings.push_back("overlap_curves: requested " + std::to_string(components) + " components, clamped to " +
                           std::to_string(limit));
    out.clamped = true;
    components = limit;
  }
  out.components = components;
  out.absolute.resize(components, 6);
  out.ratio.resize(components, 6);
  out.total_variance.resize(6);
  for (Eigen::Index v = 0; v < 6; ++v) {
    const auto result = pca(variants[v], components);
    out.absolute.col(v) = result.cumulative_variance;
    out.total_variance(v) = result.total_variance;
  }
  // A variant with only rounding-level variance left has no meaningful ratio.
  const double floor = 1e-12 * out.total_variance(0);
  for (Eigen::Index v = 0; v < 6; ++v)
    out.ratio.col(v) = out.total_variance(v) > floor ? Eigen::VectorXd(out.absolute.col(v) / out.total_variance(v))
                                                     : Eigen::VectorXd::Zero(components);
  return out;
}

SimilarityReport direction_similarity(const ConceptSubspace& a, const ConceptSubspace& b) {
  if (a.dim != b.dim)
    throw DimensionError("direction_similarity: subspaces are " + std::to_string(a.dim) + " and " +
                         std::to_string(b.dim) + "-dimensional");
  SimilarityReport out;
  out.domain_a = a.domain;
  out.domain_b = b.domain;
  out.full = (a.directions.transpose() * b.directions).cwiseAbs().cwiseMin(1.0);
  const Eigen::Index m = std::min(a.size(), b.size());
  out.per_index = out.full.diagonal().head(m);
  out.mean_abs_offdiag = out.full.size() ? out.full.mean() : 0.0;
  out.accuracy_a = a.iteration_accuracy;
  out.accuracy_b = b.iteration_accuracy;
  return out;
}

IterationReport per_iteration_accuracy(const ConceptSubspace& source, const std::vector<EmbeddingDataset>& evaluation,
                                       bool project) {
  IterationReport out;
  out.source = source.domain;
  out.projected = project;
  for (const auto& ds : evaluation) {
    if (ds.dim() != source.dim)
      throw DimensionError("per_iteration_accuracy: '" + ds.domain + "' has dimension " + std::to_string(ds.dim()) +
                           ", subspace is " + std::to_string(source.dim) + "-dimensional");
    const EmbeddingDataset test = select_split(ds, Split::test);
    if (test.size() == 0) throw ValidationError("per_iteration_accuracy: '" + ds.domain + "' has no test split");
    out.domains.push_back(ds.domain);
    const Eigen::MatrixXd x = test.features();
    std::vector<double> curve;
    for (Eigen::Index i = 0; i < source.size(); ++i) curve.push_back(iterate_accuracy(source, i, x, test.gender, project));
    out.curves.push_back(std::move(curve));
  }
  return out;
}

// --- serialization ------------------------------------------------------------

nlohmann::json to_json(const TransferMatrix& m) {
  return {{"task", to_string(m.task)},
          {"domains", m.domains},
          {"layout", "rows = evaluation domain, columns = training domain"},
          {"values", matrix_json(m.values)}};
}

nlohmann::json to_json(const RemovalReport& r) {
  return {{"task", to_string(r.task)},
          {"domains", r.domains},
          {"sources", r.sources},
          {"layout", "rows = evaluation domain, columns = subspace source domain"},
          {"before", vector_json(r.before)},
          {"after", matrix_json(r.after)},
          {"majority", vector_json(r.majority)}};
}

nlohmann::json to_json(const OverlapReport& r) {
  nlohmann::json curves;
  nlohmann::json ratios;
  nlohmann::json totals;
  for (std::size_t v = 0; v < kOverlapVariants.size(); ++v) {
    const auto c = static_cast<Eigen::Index>(v);
    curves[kOverlapVariants[v]] = vector_json(Eigen::VectorXd(r.absolute.col(c)));
    ratios[kOverlapVariants[v]] = vector_json(Eigen::VectorXd(r.ratio.col(c)));
    totals[kOverlapVariants[v]] = json_number(r.total_variance(c));
  }
  return {{"domain_a", r.domain_a},
          {"domain_b", r.domain_b},
          {"components", r.components},
          {"clamped", r.clamped},
          {"cumulative_variance", curves},
          {"cumulative_ratio", ratios},
          {"total_variance", totals},
          {"random_rowspace_seed", r.random_rowspace_seed},
          {"random_nullspace_seed", r.random_nullspace_seed},
          {"warnings", r.warnings}};
}

nlohmann::json to_json(const SimilarityReport& r) {
  return {{"domain_a", r.domain_a},
          {"domain_b", r.domain_b},
          {"per_index", vector_json(r.per_index)},
          {"full_matrix", matrix_json(r.full)},
          {"mean_abs_offdiag", json_number(r.mean_abs_offdiag)},
          {"accuracy_a", vector_json(r.accuracy_a)},
          {"accuracy_b", vector_json(r.accuracy_b)}};
}

nlohmann::json to_json(const IterationReport& r) {
  nlohmann::json curves;
  for (std::size_t k = 0; k < r.domains.size(); ++k) curves[r.domains[k]] = vector_json(r.curves[k]);
  return {{"source", r.source}, {"domains", r.domains}, {"projected", r.projected}, {"curves", curves}};
}

std::string to_csv(const TransferMatrix& m) {
  std::string out = "eval_domain";
  for (const auto& d : m.domains) out += ",train_" + d;
  out += "\n";
  for (Eigen::Index e = 0; e < m.values.rows(); ++e) out += csv_row(m.domains[e], m.values.row(e).transpose());
  return out;
}

std::string to_csv(const RemovalReport& r) {
  std::string out = "eval_domain,majority,before";
  for (Eigen::Index s = 0; s < r.after.cols(); ++s)
    out += ",after_" + r.sources.at(static_cast<std::size_t>(s));
  out += "\n";
  for (Eigen::Index e = 0; e < r.after.rows(); ++e) {
    Eigen::VectorXd row(2 + r.after.cols());
    row << r.majority(e), r.before(e), r.after.row(e).transpose();
    out += csv_row(r.domains[e], row);
  }
  return out;
}

std::string to_csv(const OverlapReport& r) {
  std::string out = "components";
  for (const char* v : kOverlapVariants) out += std::string(",") + v;
  for (const char* v : kOverlapVariants) out += std::string(",") + v + "_ratio";
  out += "\n";
  for (Eigen::Index n = 0; n < r.components; ++n) {
    Eigen::VectorXd row(12);
    row << r.absolute.row(n).transpose(), r.ratio.row(n).transpose();
    out += csv_row(std::to_string(n + 1), row);
  }
  return out;
}

std::string to_csv(const SimilarityReport& r) {
  std::string out = "index_a,per_index,accuracy_a,accuracy_b";
  for (Eigen::Index j = 0; j < r.full.cols(); ++j) out += ",b_" + std::to_string(j + 1);
  out += "\n";
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (Eigen::Index i = 0; i < r.full.rows(); ++i) {
    Eigen::VectorXd row(3 + r.full.cols());
    row(0) = i < r.per_index.size() ? r.per_index(i) : nan;
    row(1) = i < static_cast<Eigen::Index>(r.accuracy_a.size()) ? r.accuracy_a[i] : nan;
    row(2) = i < static_cast<Eigen::Index>(r.accuracy_b.size()) ? r.accuracy_b[i] : nan;
    row.tail(r.full.cols()) = r.full.row(i).transpose();
    out += csv_row(std::to_string(i + 1), row);
  }
  return out;
}

std::string to_csv(const IterationReport& r) {
  std::string out = "iteration";
  for (const auto& d : r.domains) out += "," + d;
  out += "\n";
  const std::size_t len = r.curves.empty() ? 0 : r.curves.front().size();
  for (std::size_t i = 0; i < len; ++i) {
    Eigen::VectorXd row(static_cast<Eigen::Index>(r.curves.size()));
    for (std::size_t k = 0; k < r.curves.size(); ++k) row(static_cast<Eigen::Index>(k)) = r.curves[k][i];
    out += csv_row(std::to_string(i + 1), row);
  }
  return out;
}

}  // namespace scrub
