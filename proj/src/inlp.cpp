#include "scrub/inlp.hpp"

#include <cmath>
#include <limits>

#include "scrub/codec.hpp"
#include "scrub/error.hpp"

namespace scrub {

namespace {

Eigen::MatrixXd project_rows(const ConceptSubspace& s, Eigen::Index count, const Eigen::MatrixXd& x) {
  if (count == 0) return x;
  return apply_projection(nullspace_of(s, count), x);
}

double nan_or(const nlohmann::json& v) {
  return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
}

nlohmann::json json_number(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

}  // namespace

void InlpConfig::validate() const {
  if (iterations < 1) throw ValidationError("inlp config: iterations must be at least 1");
  if (!(plateau_epsilon >= 0)) throw ValidationError("inlp config: plateau_epsilon must be non-negative");
  if (plateau_window < 1) throw ValidationError("inlp config: plateau_window must be at least 1");
  probe.validate();
  if (probe.loss_kind == LossKind::multinomial) throw ValidationError("inlp config: probe must be binary");
}

nlohmann::json to_json(const InlpConfig& cfg) {
  return {{"iterations", cfg.iterations},
          {"probe", to_json(cfg.probe)},
          {"plateau_stop", cfg.plateau_stop},
          {"plateau_epsilon", cfg.plateau_epsilon},
          {"plateau_window", cfg.plateau_window}};
}

InlpConfig inlp_config_from_json(const nlohmann::json& j, InlpConfig cfg) {
  if (!j.is_object()) throw ValidationError("inlp config must be a JSON object");
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "iterations") cfg.iterations = value.get<int>();
      else if (key == "probe") cfg.probe = train_config_from_json(value, cfg.probe);
      else if (key == "plateau_stop") cfg.plateau_stop = value.get<bool>();
      else if (key == "plateau_epsilon") cfg.plateau_epsilon = value.get<double>();
      else if (key == "plateau_window") cfg.plateau_window = value.get<int>();
      else throw ValidationError("inlp config: unknown field '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("inlp config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

ConceptSubspace run_inlp(const Eigen::MatrixXd& train_x, std::span<const std::uint32_t> train_y,
                         const Eigen::MatrixXd& dev_x, std::span<const std::uint32_t> dev_y, const InlpConfig& cfg,
                         const std::string& domain) {
  cfg.validate();
  if (train_x.cols() != dev_x.cols())
    throw DimensionError("run_inlp: train has " + std::to_string(train_x.cols()) + " columns, dev has " +
                         std::to_string(dev_x.cols()));
  if (static_cast<Eigen::Index>(dev_y.size()) != dev_x.rows()) throw DimensionError("run_inlp: dev label count");
  if (dev_y.empty()) throw DegenerateLabelError("run_inlp: empty dev set");

  const Eigen::Index d = train_x.cols();
  ConceptSubspace s;
  s.domain = domain;
  s.config = cfg;
  s.dim = d;
  s.directions.resize(d, 0);
  s.stop_reason = "iterations";
  const double dev_majority = majority_accuracy(dev_y);
  int plateau_run = 0;

  for (int it = 0; it < cfg.iterations; ++it) {
    const Eigen::MatrixXd x = project_rows(s, s.size(), train_x);
    LinearClassifier clf = train_binary(x, train_y, cfg.probe);

    Eigen::VectorXd w = clf.weights.col(0);
    for (int pass = 0; pass < 2; ++pass)
      for (Eigen::Index j = 0; j < s.size(); ++j) w -= s.directions.col(j).dot(w) * s.directions.col(j);
    const double scale = w.norm();
    if (!(scale >= kDropTolerance)) {
      s.stop_reason = "degenerate direction at iteration " + std::to_string(it + 1);
      break;
    }
    s.directions.conservativeResize(Eigen::NoChange, s.size() + 1);
    s.directions.col(s.size() - 1) = w / scale;
    s.weight_scales.push_back(scale);
    s.biases.push_back(clf.bias(0));
    s.iteration_accuracy.push_back(0.0);
    const double acc = iterate_accuracy(s, s.size() - 1, dev_x, dev_y, true);
    s.iteration_accuracy.back() = acc;

    if (cfg.plateau_stop) {
      plateau_run = std::abs(acc - dev_majority) <= cfg.plateau_epsilon ? plateau_run + 1 : 0;
      if (plateau_run >= cfg.plateau_window) {
        s.stop_reason = "plateau at iteration " + std::to_string(it + 1);
        break;
      }
    }
  }
  return s;
}

ConceptSubspace run_inlp(const EmbeddingDataset& train, const EmbeddingDataset& dev, const InlpConfig& cfg) {
  return run_inlp(train.features(), train.gender, dev.features(), dev.gender, cfg, train.domain);
}

Projection<double> nullspace_of(const ConceptSubspace& s, Eigen::Index count) {
  if (count < 0 || count > s.size()) count = s.size();
  return nullspace_projection(s.directions.leftCols(count), s.dim);
}

Projection<double> rowspace_of(const ConceptSubspace& s, Eigen::Index count) {
  if (count < 0 || count > s.size()) count = s.size();
  return rowspace_projection(s.directions.leftCols(count), s.dim);
}

ConceptSubspace truncate(const ConceptSubspace& s, Eigen::Index k) {
  if (k < 1 || k > s.size())
    throw ValidationError("truncate: k=" + std::to_string(k) + " outside 1.." + std::to_string(s.size()));
  ConceptSubspace out = s;
  out.directions = s.directions.leftCols(k);
  const auto keep = [k](std::vector<double>& v) {
    if (static_cast<Eigen::Index>(v.size()) > k) v.resize(static_cast<std::size_t>(k));
  };
  keep(out.iteration_accuracy);
  keep(out.weight_scales);
  keep(out.biases);
  out.stop_reason = "truncated to " + std::to_string(k);
  return out;
}

double iterate_accuracy(const ConceptSubspace& s, Eigen::Index index, const Eigen::MatrixXd& x,
                        std::span<const std::uint32_t> y, bool project) {
  if (index < 0 || index >= s.size()) throw ValidationError("iterate_accuracy: index out of range");
  if (x.cols() != s.dim)
    throw DimensionError("iterate_accuracy: data has " + std::to_string(x.cols()) + " columns, subspace is " +
                         std::to_string(s.dim) + "-dimensional");
  if (static_cast<Eigen::Index>(y.size()) != x.rows()) throw DimensionError("iterate_accuracy: label count");
  if (y.empty()) throw ValidationError("iterate_accuracy: empty evaluation set");
  const Eigen::MatrixXd xp = project ? project_rows(s, index, x) : x;
  const Eigen::VectorXd w = s.weight_scales.at(index) * s.directions.col(index);
  const Eigen::VectorXd f = (xp * w).array() + s.biases.at(index);
  std::size_t hits = 0;
  for (Eigen::Index i = 0; i < f.size(); ++i) hits += (f(i) > 0 ? 1u : 0u) == y[i];
  return static_cast<double>(hits) / static_cast<double>(y.size());
}

nlohmann::json to_json(const ConceptSubspace& s) {
  const std::string cfg_text = to_json(s.config).dump();
  nlohmann::json j{{"domain", s.domain},
                   {"dim", s.dim},
                   {"n", s.size()},
                   {"config", to_json(s.config)},
                   {"config_sha256", codec::sha256_hex(cfg_text)},
                   {"stop_reason", s.stop_reason}};
  auto acc = nlohmann::json::array();
  for (double a : s.iteration_accuracy) acc.push_back(json_number(a));
  j["accuracies"] = acc;
  auto dirs = nlohmann::json::array();
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    const Eigen::VectorXd col = s.directions.col(i);
    dirs.push_back({{"index", i},
                    {"scale", s.weight_scales.at(i)},
                    {"bias", s.biases.at(i)},
                    {"vector", codec::base64_encode(codec::pack_f32({col.data(), static_cast<std::size_t>(col.size())}))}});
  }
  j["directions"] = dirs;
  return j;
}

ConceptSubspace concept_subspace_from_json(const nlohmann::json& j) {
  try {
    ConceptSubspace s;
    s.domain = j.at("domain").get<std::string>();
    s.dim = j.at("dim").get<Eigen::Index>();
    const auto n = j.at("n").get<Eigen::Index>();
    if (s.dim <= 0 || n < 0) throw IntegrityError("subspace JSON: bad dim or count");
    s.config = inlp_config_from_json(j.at("config"));
    s.stop_reason = j.at("stop_reason").get<std::string>();
    for (const auto& a : j.at("accuracies")) s.iteration_accuracy.push_back(nan_or(a));
    const auto& dirs = j.at("directions");
    if (static_cast<Eigen::Index>(dirs.size()) != n || static_cast<Eigen::Index>(s.iteration_accuracy.size()) != n)
      throw IntegrityError("subspace JSON: record count disagrees with n");
    s.directions.resize(s.dim, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& rec = dirs.at(static_cast<std::size_t>(i));
      const auto v = codec::unpack_f32(codec::base64_decode(rec.at("vector").get<std::string>()));
      if (static_cast<Eigen::Index>(v.size()) != s.dim) throw IntegrityError("subspace JSON: direction length");
      Eigen::VectorXd col = Eigen::Map<const Eigen::VectorXd>(v.data(), s.dim);
      if (!col.allFinite() || !(col.norm() > 0)) throw IntegrityError("subspace JSON: invalid direction");
      s.directions.col(i) = col / col.norm();
      s.weight_scales.push_back(rec.at("scale").get<double>());
      s.biases.push_back(rec.at("bias").get<double>());
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("subspace JSON: ") + e.what());
  }
}

ConceptSubspace subspace_from_basis(const Eigen::MatrixXd& basis, const std::string& domain) {
  ConceptSubspace s;
  s.domain = domain;
  s.dim = basis.rows();
  s.directions = orthonormalize(basis);
  s.stop_reason = "from basis";
  s.iteration_accuracy.assign(static_cast<std::size_t>(s.size()), std::numeric_limits<double>::quiet_NaN());
  s.weight_scales.assign(static_cast<std::size_t>(s.size()), 1.0);
  s.biases.assign(static_cast<std::size_t>(s.size()), 0.0);
  return s;
}

}  // namespace scrub
