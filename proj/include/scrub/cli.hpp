#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "scrub/dataio.hpp"
#include "scrub/inlp.hpp"
#include "scrub/linclf.hpp"
#include "scrub/xlingual.hpp"

namespace scrub::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitIntegrity = 3;

struct PathRef {
  std::string domain;
  std::filesystem::path path;
};

struct SplitSection {
  SplitRatios ratios;
  std::uint64_t seed = 0;
  std::size_t min_profession_count = 0;
};

/// Parsed and validated run configuration. Relative paths are resolved against
/// the manifest's directory.
struct Manifest {
  std::string command;
  std::filesystem::path out;
  std::uint64_t seed = 0;
  std::string digest;  ///< sha256 of the canonical manifest JSON without "out"

  std::vector<PathRef> datasets;
  std::optional<SynthConfig> synth;
  std::vector<std::string> synth_domains;
  std::optional<SplitSection> split;
  TrainConfig train;
  InlpConfig inlp;
  Task task = Task::gender;
  std::vector<PathRef> subspaces;
  std::vector<std::pair<std::string, std::string>> pairs;
  Eigen::Index components = 100;
};

/// Throws ValidationError for any inconsistency, including unreadable input paths.
Manifest parse_manifest(const nlohmann::json& j, const std::string& command, const std::filesystem::path& base_dir,
                        std::optional<std::filesystem::path> out_override = {},
                        std::optional<std::uint64_t> seed_override = {});

Manifest load_manifest(const std::filesystem::path& path, const std::string& command,
                       std::optional<std::filesystem::path> out_override = {},
                       std::optional<std::uint64_t> seed_override = {});

/// Runs one command; returns the process exit code. Written paths go to
/// `out`, diagnostics to `err`.
int execute(const Manifest& manifest, std::ostream& out, std::ostream& err);
int execute(const Manifest& manifest, std::ostream& err);

/// `scrub <command> --manifest <path> [--out <dir>] [--seed <u64>]`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace scrub::cli
