#include "scrub/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "scrub/codec.hpp"
#include "scrub/error.hpp"

namespace scrub::cli {

namespace fs = std::filesystem;

namespace {

const std::set<std::string> kCommands{"synth", "inlp", "transfer", "removal", "overlap", "dirsim"};
const std::set<std::string> kKeys{"seed", "out", "datasets", "synth", "split", "train",
                                  "inlp", "task", "subspaces", "pairs", "components"};

[[noreturn]] void invalid(const std::string& what) { throw ValidationError("manifest: " + what); }

bool safe_name(const std::string& s) {
  if (s.empty() || s.front() == '.') return false;
  for (char c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.')) return false;
  return true;
}

std::vector<PathRef> path_refs(const nlohmann::json& j, const std::string& key, const fs::path& base) {
  if (!j.is_array()) invalid("'" + key + "' must be an array of {domain, path}");
  std::vector<PathRef> out;
  std::set<std::string> seen;
  for (const auto& item : j) {
    if (!item.is_object() || !item.contains("domain") || !item.contains("path"))
      invalid("'" + key + "' entries need 'domain' and 'path'");
    PathRef ref{item.at("domain").get<std::string>(), fs::path(item.at("path").get<std::string>())};
    if (!safe_name(ref.domain)) invalid("domain tag '" + ref.domain + "' must use [A-Za-z0-9_.-]");
    if (!seen.insert(ref.domain).second) invalid("duplicate domain '" + ref.domain + "' in '" + key + "'");
    if (ref.path.is_relative()) ref.path = base / ref.path;
    if (!fs::is_regular_file(ref.path)) invalid("'" + key + "' path does not exist: " + ref.path.string());
    out.push_back(std::move(ref));
  }
  return out;
}

SplitSection split_section(const nlohmann::json& j, std::uint64_t default_seed) {
  if (!j.is_object()) invalid("'split' must be an object");
  SplitSection s;
  s.seed = default_seed;
  for (const auto& [key, value] : j.items()) {
    if (key == "ratios") {
      const auto r = value.get<std::vector<double>>();
      if (r.size() != 3) invalid("split ratios need exactly three values");
      s.ratios = {r[0], r[1], r[2]};
    } else if (key == "seed") {
      s.seed = value.get<std::uint64_t>();
    } else if (key == "min_profession_count") {
      s.min_profession_count = value.get<std::size_t>();
    } else {
      invalid("unknown split field '" + key + "'");
    }
  }
  if (!(s.ratios.train > 0 && s.ratios.dev > 0 && s.ratios.test > 0) ||
      std::abs(s.ratios.train + s.ratios.dev + s.ratios.test - 1.0) > 1e-9)
    invalid("split ratios must be positive and sum to 1");
  return s;
}

void write_text(const fs::path& path, const std::string& text, std::ostream& out) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + path.string());
  f << text;
  if (!f) throw IoError("write failed: " + path.string());
  out << "wrote " << path.string() << "\n";
}

void write_json(const fs::path& path, nlohmann::json j, const Manifest& m, std::ostream& out) {
  j["manifest_sha256"] = m.digest;
  write_text(path, j.dump(2) + "\n", out);
}

void write_csv_text(const fs::path& path, const std::string& body, const Manifest& m, std::ostream& out) {
  write_text(path, "# manifest_sha256: " + m.digest + "\n" + body, out);
}

struct Inputs {
  std::vector<EmbeddingDataset> datasets;
  std::vector<std::string> warnings;

  const EmbeddingDataset& by_domain(const std::string& domain) const {
    for (const auto& ds : datasets)
      if (ds.domain == domain) return ds;
    throw ValidationError("no dataset for domain '" + domain + "'");
  }
};

Inputs load_inputs(const Manifest& m, bool need_dev) {
  Inputs in;
  for (const auto& ref : m.datasets) {
    EmbeddingDataset ds = load_dataset(ref.path);
    ds.domain = ref.domain;
    if (m.split) {
      ds = filter_rare_professions(ds, m.split->min_profession_count);
      ds = split_dataset(ds, m.split->ratios, m.split->seed, &in.warnings);
    }
    for (Split s : {Split::train, Split::test}) {
      if (std::find(ds.split.begin(), ds.split.end(), s) == ds.split.end())
        throw ValidationError("dataset '" + ds.domain + "' has no " + to_string(s) +
                              " rows; add a 'split' section to the manifest");
    }
    if (need_dev && std::find(ds.split.begin(), ds.split.end(), Split::dev) == ds.split.end())
      throw ValidationError("dataset '" + ds.domain + "' has no dev rows");
    if (!in.datasets.empty() && ds.dim() != in.datasets.front().dim())
      throw DimensionError("dataset '" + ds.domain + "' has dimension " + std::to_string(ds.dim()) + ", expected " +
                           std::to_string(in.datasets.front().dim()));
    in.datasets.push_back(std::move(ds));
  }
  return in;
}

ConceptSubspace inlp_for(const EmbeddingDataset& ds, const InlpConfig& cfg) {
  return run_inlp(select_split(ds, Split::train), select_split(ds, Split::dev), cfg);
}

// Subspaces named in the manifest, or INLP runs on each dataset otherwise.
std::vector<ConceptSubspace> subspaces_for(const Manifest& m, const Inputs& in) {
  std::vector<ConceptSubspace> out;
  if (!m.subspaces.empty()) {
    for (const auto& ref : m.subspaces) {
      std::ifstream f(ref.path);
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(f);
      } catch (const nlohmann::json::exception& e) {
        throw FormatError("subspace file " + ref.path.string() + ": " + e.what());
      }
      ConceptSubspace s = concept_subspace_from_json(j);
      s.domain = ref.domain;
      if (!in.datasets.empty() && s.dim != in.datasets.front().dim())
        throw DimensionError("subspace '" + ref.domain + "' is " + std::to_string(s.dim) + "-dimensional");
      out.push_back(std::move(s));
    }
    return out;
  }
  for (const auto& ds : in.datasets) out.push_back(inlp_for(ds, m.inlp));
  return out;
}

const ConceptSubspace& subspace_by_domain(const std::vector<ConceptSubspace>& all, const std::string& domain) {
  for (const auto& s : all)
    if (s.domain == domain) return s;
  throw ValidationError("no subspace for domain '" + domain + "'");
}

nlohmann::json with_warnings(nlohmann::json j, const std::vector<std::string>& warnings) {
  if (!warnings.empty()) j["warnings"] = warnings;
  return j;
}

void cmd_synth(const Manifest& m, std::ostream& out) {
  SynthOutput result = synth_generate(*m.synth, m.synth_domains);
  for (auto& ds : result.datasets) {
    ds.provenance["manifest_sha256"] = m.digest;
    save_dataset(ds, m.out / (ds.domain + ".emb1"));
    out << "wrote " << (m.out / (ds.domain + ".emb1")).string() << "\n";
  }
  write_json(m.out / "ground_truth.json", to_json(result.truth), m, out);
}

void cmd_inlp(const Manifest& m, std::ostream& out) {
  const Inputs in = load_inputs(m, true);
  for (const auto& ds : in.datasets) {
    const ConceptSubspace s = inlp_for(ds, m.inlp);
    write_json(m.out / (ds.domain + ".subspace.json"), with_warnings(to_json(s), in.warnings), m, out);
    std::string csv = "iteration,dev_accuracy\n";
    for (std::size_t i = 0; i < s.iteration_accuracy.size(); ++i)
      csv += std::to_string(i + 1) + "," + codec::format_number(s.iteration_accuracy[i]) + "\n";
    write_csv_text(m.out / (ds.domain + ".inlp.csv"), csv, m, out);
    const IterationReport iterations = per_iteration_accuracy(s, in.datasets, true);
    write_json(m.out / (ds.domain + ".iterations.json"), to_json(iterations), m, out);
    write_csv_text(m.out / (ds.domain + ".iterations.csv"), to_csv(iterations), m, out);
  }
}

void cmd_transfer(const Manifest& m, std::ostream& out) {
  const Inputs in = load_inputs(m, false);
  const TransferMatrix t = probe_transfer_matrix(in.datasets, m.train, m.task);
  write_json(m.out / "transfer.json", with_warnings(to_json(t), in.warnings), m, out);
  write_csv_text(m.out / "transfer.csv", to_csv(t), m, out);
}

void cmd_removal(const Manifest& m, std::ostream& out) {
  const Inputs in = load_inputs(m, m.subspaces.empty());
  const auto subspaces = subspaces_for(m, in);
  const RemovalReport r = removal_transfer(in.datasets, subspaces, m.task, m.train);
  write_json(m.out / "removal.json", with_warnings(to_json(r), in.warnings), m, out);
  write_csv_text(m.out / "removal.csv", to_csv(r), m, out);
}

std::vector<std::pair<std::string, std::string>> pairs_for(const Manifest& m, const std::vector<ConceptSubspace>& all,
                                                           bool ordered) {
  if (!m.pairs.empty()) return m.pairs;
  std::vector<std::pair<std::string, std::string>> out;
  for (std::size_t a = 0; a < all.size(); ++a)
    for (std::size_t b = ordered ? 0 : a + 1; b < all.size(); ++b)
      if (a != b) out.emplace_back(all[a].domain, all[b].domain);
  return out;
}

void cmd_overlap(const Manifest& m, std::ostream& out) {
  const Inputs in = load_inputs(m, m.subspaces.empty());
  const auto subspaces = subspaces_for(m, in);
  for (const auto& [a, b] : pairs_for(m, subspaces, true)) {
    const EmbeddingDataset test = select_split(in.by_domain(a), Split::test);
    const OverlapReport r =
        overlap_curves(test.features(), subspace_by_domain(subspaces, a), subspace_by_domain(subspaces, b),
                       m.components, m.seed);
    std::vector<std::string> warnings = in.warnings;
    warnings.insert(warnings.end(), r.warnings.begin(), r.warnings.end());
    nlohmann::json j = to_json(r);
    j["warnings"] = warnings;
    write_json(m.out / ("overlap_" + a + "_" + b + ".json"), j, m, out);
    write_csv_text(m.out / ("overlap_" + a + "_" + b + ".csv"), to_csv(r), m, out);
  }
}

void cmd_dirsim(const Manifest& m, std::ostream& out) {
  Inputs in;
  if (m.subspaces.empty() || !m.datasets.empty()) in = load_inputs(m, m.subspaces.empty());
  const auto subspaces = subspaces_for(m, in);
  for (const auto& [a, b] : pairs_for(m, subspaces, false)) {
    const SimilarityReport r = direction_similarity(subspace_by_domain(subspaces, a), subspace_by_domain(subspaces, b));
    write_json(m.out / ("dirsim_" + a + "_" + b + ".json"), with_warnings(to_json(r), in.warnings), m, out);
    write_csv_text(m.out / ("dirsim_" + a + "_" + b + ".csv"), to_csv(r), m, out);
  }
}

}  // namespace

Manifest parse_manifest(const nlohmann::json& j, const std::string& command, const fs::path& base_dir,
                        std::optional<fs::path> out_override, std::optional<std::uint64_t> seed_override) {
  if (!kCommands.count(command)) invalid("unknown command '" + command + "'");
  if (!j.is_object()) invalid("top level must be a JSON object");
  for (const auto& [key, value] : j.items())
    if (!kKeys.count(key)) invalid("unknown field '" + key + "'");

  Manifest m;
  m.command = command;
  try {
    if (seed_override) {
      m.seed = *seed_override;
    } else if (j.contains("seed")) {
      m.seed = j.at("seed").get<std::uint64_t>();
    } else {
      invalid("'seed' is required (or pass --seed)");
    }

    if (out_override) {
      m.out = *out_override;
    } else if (j.contains("out")) {
      m.out = base_dir / j.at("out").get<std::string>();
    } else {
      invalid("'out' is required (or pass --out)");
    }

    if (j.contains("datasets")) m.datasets = path_refs(j.at("datasets"), "datasets", base_dir);
    if (j.contains("subspaces")) m.subspaces = path_refs(j.at("subspaces"), "subspaces", base_dir);
    if (j.contains("split")) m.split = split_section(j.at("split"), m.seed);
    if (j.contains("train")) m.train = train_config_from_json(j.at("train"));
    m.train.seed = m.seed;
    if (j.contains("inlp")) m.inlp = inlp_config_from_json(j.at("inlp"));
    m.inlp.probe.seed = m.seed;
    if (j.contains("task")) m.task = task_from_string(j.at("task").get<std::string>());
    if (j.contains("components")) m.components = j.at("components").get<Eigen::Index>();
    if (m.components < 1) invalid("'components' must be positive");
    if (j.contains("pairs")) {
      for (const auto& p : j.at("pairs")) {
        const auto pair = p.get<std::vector<std::string>>();
        if (pair.size() != 2) invalid("each pair must name two domains");
        m.pairs.emplace_back(pair[0], pair[1]);
      }
    }

    if (command == "synth") {
      if (!j.contains("synth")) invalid("synth needs a 'synth' section");
      const auto& s = j.at("synth");
      if (!s.is_object() || !s.contains("config") || !s.contains("domains"))
        invalid("'synth' needs 'config' and 'domains'");
      for (const auto& [key, value] : s.items())
        if (key != "config" && key != "domains") invalid("unknown synth field '" + key + "'");
      SynthConfig cfg = synth_config_from_json(s.at("config"));
      if (!s.at("config").contains("seed")) cfg.seed = m.seed;
      cfg.validate();
      m.synth = cfg;
      m.synth_domains = s.at("domains").get<std::vector<std::string>>();
      if (m.synth_domains.empty()) invalid("'synth.domains' is empty");
      std::set<std::string> seen;
      for (const auto& d : m.synth_domains) {
        if (!safe_name(d)) invalid("domain tag '" + d + "' must use [A-Za-z0-9_.-]");
        if (!seen.insert(d).second) invalid("duplicate synth domain '" + d + "'");
      }
    } else {
      const bool subspace_only = command == "dirsim" && !m.subspaces.empty();
      if (m.datasets.empty() && !subspace_only) invalid(command + " needs a non-empty 'datasets' list");
      if (command == "transfer" && m.task == Task::gender && m.train.loss_kind == LossKind::multinomial)
        invalid("gender transfer probes must be logistic or hinge");
      std::set<std::string> known;
      for (const auto& r : (m.subspaces.empty() ? m.datasets : m.subspaces)) known.insert(r.domain);
      std::set<std::string> data_domains;
      for (const auto& r : m.datasets) data_domains.insert(r.domain);
      for (const auto& [a, b] : m.pairs) {
        if (!known.count(a) || !known.count(b)) invalid("pair (" + a + ", " + b + ") names an unknown domain");
        if (command == "overlap" && !data_domains.count(a)) invalid("overlap pair needs data for domain '" + a + "'");
      }
      if (command == "overlap" && m.pairs.empty() && !m.subspaces.empty())
        for (const auto& r : m.subspaces)
          if (!data_domains.count(r.domain)) invalid("overlap needs data for subspace domain '" + r.domain + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    invalid(e.what());
  }

  nlohmann::json canonical = j;
  canonical.erase("out");
  canonical["seed"] = m.seed;
  canonical["command"] = command;
  m.digest = codec::sha256_hex(canonical.dump());
  return m;
}

Manifest load_manifest(const fs::path& path, const std::string& command, std::optional<fs::path> out_override,
                       std::optional<std::uint64_t> seed_override) {
  std::ifstream f(path);
  if (!f) throw ValidationError("manifest not readable: " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(f);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("manifest is not valid JSON: " + std::string(e.what()));
  }
  return parse_manifest(j, command, path.parent_path(), std::move(out_override), seed_override);
}

int execute(const Manifest& m, std::ostream& out, std::ostream& err) {
  try {
    fs::create_directories(m.out);
    if (m.command == "synth") cmd_synth(m, out);
    else if (m.command == "inlp") cmd_inlp(m, out);
    else if (m.command == "transfer") cmd_transfer(m, out);
    else if (m.command == "removal") cmd_removal(m, out);
    else if (m.command == "overlap") cmd_overlap(m, out);
    else if (m.command == "dirsim") cmd_dirsim(m, out);
    return kExitOk;
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const IntegrityError& e) {
    err << "integrity error: " << e.what() << "\n";
    return kExitIntegrity;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

int execute(const Manifest& manifest, std::ostream& err) {
  std::ostringstream sink;
  return execute(manifest, sink, err);
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Linear concept-subspace analysis over embedding datasets"};
  app.name("scrub");
  app.require_subcommand(1, 1);
  std::string manifest_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  const std::vector<std::pair<std::string, std::string>> commands{
      {"synth", "generate synthetic datasets with planted gender directions"},
      {"inlp", "run iterative nullspace projection per domain"},
      {"transfer", "cross-domain probe transfer matrix"},
      {"removal", "probe accuracy after in- and cross-domain removal"},
      {"overlap", "PCA explained-variance curves of projected representations"},
      {"dirsim", "cosine similarity of INLP directions across domains"},
  };
  std::vector<CLI::App*> subs;
  std::vector<CLI::Option*> out_opts;
  std::vector<CLI::Option*> seed_opts;
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--manifest", manifest_path, "JSON run manifest")->required();
    out_opts.push_back(sub->add_option("--out", out_dir, "output directory (overrides manifest 'out')"));
    seed_opts.push_back(sub->add_option("--seed", seed, "seed (overrides manifest 'seed')"));
    subs.push_back(sub);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  std::size_t index = 0;
  while (index < subs.size() && !subs[index]->parsed()) ++index;
  const std::string command = commands.at(index).first;
  std::optional<fs::path> out_override;
  std::optional<std::uint64_t> seed_override;
  if (*out_opts[index]) out_override = fs::path(out_dir);
  if (*seed_opts[index]) seed_override = seed;

  Manifest manifest;
  try {
    manifest = load_manifest(manifest_path, command, out_override, seed_override);
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const IntegrityError& e) {
    err << "integrity error: " << e.what() << "\n";
    return kExitIntegrity;
  }
  return execute(manifest, out, err);
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"scrub"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace scrub::cli
