#include "scrub/dataio.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "scrub/codec.hpp"
#include "scrub/error.hpp"

namespace scrub {

namespace {

constexpr std::string_view kMagic = "EMB1";
constexpr std::array<std::string_view, 4> kSplitNames{"train", "dev", "test", "unassigned"};

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

}  // namespace

std::string to_string(Split split) {
  const auto i = static_cast<std::size_t>(split);
  if (i >= kSplitNames.size()) throw IntegrityError("invalid split tag " + std::to_string(i));
  return std::string(kSplitNames[i]);
}

Split split_from_string(const std::string& name) {
  for (std::size_t i = 0; i < kSplitNames.size(); ++i)
    if (kSplitNames[i] == name) return static_cast<Split>(i);
  throw ValidationError("unknown split name '" + name + "'");
}

void EmbeddingDataset::validate() const {
  const auto n = static_cast<std::size_t>(vectors.rows());
  if (gender.size() != n || profession.size() != n || split.size() != n)
    throw IntegrityError("dataset '" + domain + "': label arrays (" + std::to_string(gender.size()) + ", " +
                         std::to_string(profession.size()) + ", " + std::to_string(split.size()) +
                         ") do not match " + std::to_string(n) + " rows");
  if (vectors.cols() <= 0) throw IntegrityError("dataset '" + domain + "': dimension must be positive");
  for (std::size_t i = 0; i < n; ++i) {
    if (gender[i] > 1) throw IntegrityError("row " + std::to_string(i) + ": gender label must be 0 or 1");
    if (profession[i] >= profession_names.size())
      throw IntegrityError("row " + std::to_string(i) + ": profession id " + std::to_string(profession[i]) +
                           " has no name");
    if (static_cast<std::uint32_t>(split[i]) > static_cast<std::uint32_t>(Split::unassigned))
      throw IntegrityError("row " + std::to_string(i) + ": invalid split tag");
  }
  if (!vectors.allFinite()) throw IntegrityError("dataset '" + domain + "': non-finite embedding values");
}

bool operator==(const EmbeddingDataset& a, const EmbeddingDataset& b) {
  if (a.vectors.rows() != b.vectors.rows() || a.vectors.cols() != b.vectors.cols()) return false;
  // Bitwise comparison so that -0.0 / 0.0 and NaN payload differences are visible.
  const auto bytes = static_cast<std::size_t>(a.vectors.size()) * sizeof(float);
  if (bytes && std::memcmp(a.vectors.data(), b.vectors.data(), bytes) != 0) return false;
  return a.gender == b.gender && a.profession == b.profession && a.split == b.split && a.domain == b.domain &&
         a.profession_names == b.profession_names && a.provenance == b.provenance;
}

EmbeddingDataset subset(const EmbeddingDataset& ds, std::span<const Eigen::Index> rows) {
  EmbeddingDataset out;
  out.domain = ds.domain;
  out.profession_names = ds.profession_names;
  out.provenance = ds.provenance;
  out.vectors.resize(static_cast<Eigen::Index>(rows.size()), ds.dim());
  out.gender.reserve(rows.size());
  out.profession.reserve(rows.size());
  out.split.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Eigen::Index r = rows[i];
    if (r < 0 || r >= ds.size()) throw ValidationError("subset: row index out of range");
    out.vectors.row(static_cast<Eigen::Index>(i)) = ds.vectors.row(r);
    out.gender.push_back(ds.gender[r]);
    out.profession.push_back(ds.profession[r]);
    out.split.push_back(ds.split[r]);
  }
  return out;
}

EmbeddingDataset select_split(const EmbeddingDataset& ds, Split split) {
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < ds.size(); ++i)
    if (ds.split[i] == split) rows.push_back(i);
  return subset(ds, rows);
}

// --- EMB1 -----------------------------------------------------------------

std::string encode_emb1(const EmbeddingDataset& ds) {
  ds.validate();
  nlohmann::json header;
  header["n"] = ds.size();
  header["d"] = ds.dim();
  header["domain"] = ds.domain;
  header["label_schemas"] = nlohmann::json::array({
      {{"name", "gender"}, {"values", {"0", "1"}}},
      {{"name", "profession"}, {"values", ds.profession_names}},
      {{"name", "split"}, {"values", kSplitNames}},
  });
  header["provenance"] = ds.provenance;
  const std::string text = header.dump();

  std::string out(kMagic);
  codec::append_u32_le(out, static_cast<std::uint32_t>(text.size()));
  out += text;
  out.reserve(out.size() + static_cast<std::size_t>(ds.vectors.size()) * 4 + 12 * ds.gender.size());
  for (Eigen::Index i = 0; i < ds.vectors.size(); ++i)
    codec::append_u32_le(out, std::bit_cast<std::uint32_t>(ds.vectors.data()[i]));
  for (auto g : ds.gender) codec::append_u32_le(out, g);
  for (auto p : ds.profession) codec::append_u32_le(out, p);
  for (auto s : ds.split) codec::append_u32_le(out, static_cast<std::uint32_t>(s));
  return out;
}

EmbeddingDataset decode_emb1(std::string_view bytes) {
  if (bytes.size() < 8 || bytes.substr(0, 4) != kMagic) throw FormatError("missing EMB1 magic header");
  const std::uint32_t header_len = codec::read_u32_le(bytes, 4);
  if (8 + static_cast<std::size_t>(header_len) > bytes.size()) throw FormatError("EMB1 header runs past end of file");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(8, header_len));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("EMB1 header is not valid JSON: ") + e.what());
  }

  EmbeddingDataset ds;
  std::size_t n = 0;
  std::size_t d = 0;
  std::vector<std::string> columns;
  try {
    n = header.at("n").get<std::size_t>();
    d = header.at("d").get<std::size_t>();
    ds.domain = header.at("domain").get<std::string>();
    for (const auto& schema : header.at("label_schemas")) {
      const auto name = schema.at("name").get<std::string>();
      const auto values = schema.at("values").get<std::vector<std::string>>();
      if (name == "profession") {
        ds.profession_names = values;
      } else if (name == "gender") {
        if (values != std::vector<std::string>{"0", "1"}) throw FormatError("gender schema must be [\"0\",\"1\"]");
      } else if (name == "split") {
        if (values != std::vector<std::string>(kSplitNames.begin(), kSplitNames.end()))
          throw FormatError("split schema must list train, dev, test, unassigned");
      } else {
        throw FormatError("unknown label column '" + name + "'");
      }
      columns.push_back(name);
    }
    if (header.contains("provenance")) ds.provenance = header["provenance"];
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("EMB1 header is missing fields: ") + e.what());
  }
  if (d == 0) throw FormatError("EMB1 header: d must be positive");
  std::vector<std::string> sorted = columns;
  std::sort(sorted.begin(), sorted.end());
  if (sorted != std::vector<std::string>{"gender", "profession", "split"})
    throw FormatError("EMB1 header must declare gender, profession and split columns exactly once");

  const std::size_t offset = 8 + header_len;
  const std::size_t expected = n * d * 4 + n * 4 * columns.size();
  if (bytes.size() - offset != expected)
    throw IntegrityError("EMB1 payload has " + std::to_string(bytes.size() - offset) + " bytes, header implies " +
                         std::to_string(expected));

  ds.vectors.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  std::size_t pos = offset;
  for (std::size_t i = 0; i < n * d; ++i, pos += 4)
    ds.vectors.data()[i] = std::bit_cast<float>(codec::read_u32_le(bytes, pos));
  for (const auto& column : columns) {
    std::vector<std::uint32_t> values(n);
    for (std::size_t i = 0; i < n; ++i, pos += 4) values[i] = codec::read_u32_le(bytes, pos);
    if (column == "gender") {
      ds.gender = std::move(values);
    } else if (column == "profession") {
      ds.profession = std::move(values);
    } else {
      ds.split.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        if (values[i] > static_cast<std::uint32_t>(Split::unassigned))
          throw IntegrityError("row " + std::to_string(i) + ": invalid split tag");
        ds.split[i] = static_cast<Split>(values[i]);
      }
    }
  }
  ds.validate();
  return ds;
}

EmbeddingDataset load_dataset(const std::filesystem::path& path) { return decode_emb1(read_file(path)); }

void save_dataset(const EmbeddingDataset& ds, const std::filesystem::path& path) {
  write_file(path, encode_emb1(ds));
}

// --- CSV --------------------------------------------------------------------

void write_csv(const EmbeddingDataset& ds, const std::filesystem::path& path) {
  ds.validate();
  std::string out;
  for (Eigen::Index j = 0; j < ds.dim(); ++j) out += "x" + std::to_string(j) + ",";
  out += "gender,profession,split\n";
  std::array<char, 32> buf{};
  for (Eigen::Index i = 0; i < ds.size(); ++i) {
    for (Eigen::Index j = 0; j < ds.dim(); ++j) {
      auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), ds.vectors(i, j));
      out.append(buf.data(), end);
      out += ',';
    }
    out += std::to_string(ds.gender[i]) + "," + ds.profession_names[ds.profession[i]] + "," + to_string(ds.split[i]) +
           "\n";
  }
  write_file(path, out);
}

EmbeddingDataset read_csv(const std::filesystem::path& path, const std::string& domain) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line)) throw FormatError("CSV " + path.string() + " is empty");
  const auto header = split_csv_line(line);
  if (header.size() < 4 || header[header.size() - 3] != "gender" || header[header.size() - 2] != "profession" ||
      header.back() != "split")
    throw FormatError("CSV header must end with gender,profession,split");
  const std::size_t d = header.size() - 3;

  EmbeddingDataset ds;
  ds.domain = domain;
  std::map<std::string, std::uint32_t> profession_ids;
  std::vector<float> values;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size())
      throw IntegrityError("CSV line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                           " fields, got " + std::to_string(fields.size()));
    for (std::size_t j = 0; j < d; ++j) {
      float v = 0;
      const auto& f = fields[j];
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc() || ptr != f.data() + f.size())
        throw FormatError("CSV line " + std::to_string(line_no) + ": cannot parse '" + f + "'");
      values.push_back(v);
    }
    const auto& g = fields[d];
    if (g != "0" && g != "1") throw IntegrityError("CSV line " + std::to_string(line_no) + ": gender must be 0 or 1");
    ds.gender.push_back(g == "1" ? 1u : 0u);
    const auto [it, inserted] =
        profession_ids.emplace(fields[d + 1], static_cast<std::uint32_t>(ds.profession_names.size()));
    if (inserted) ds.profession_names.push_back(fields[d + 1]);
    ds.profession.push_back(it->second);
    ds.split.push_back(split_from_string(fields[d + 2]));
  }
  const auto n = static_cast<Eigen::Index>(ds.gender.size());
  ds.vectors = Eigen::Map<RowMatrixXf>(values.data(), n, static_cast<Eigen::Index>(d));
  ds.provenance = {{"source", "csv"}};
  ds.validate();
  return ds;
}

// --- protocol helpers -------------------------------------------------------

EmbeddingDataset filter_rare_professions(const EmbeddingDataset& ds, std::size_t min_count) {
  std::vector<std::size_t> counts(ds.profession_names.size(), 0);
  for (auto p : ds.profession) ++counts.at(p);
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < ds.size(); ++i)
    if (counts[ds.profession[i]] >= min_count) rows.push_back(i);
  return subset(ds, rows);
}

std::array<std::size_t, 3> stratum_sizes(std::size_t count, const SplitRatios& ratios) {
  const std::array<double, 3> r{ratios.train, ratios.dev, ratios.test};
  std::array<std::size_t, 3> sizes{};
  std::array<double, 3> remainder{};
  std::size_t assigned = 0;
  for (std::size_t k = 0; k < 3; ++k) {
    const double exact = static_cast<double>(count) * r[k];
    sizes[k] = static_cast<std::size_t>(std::floor(exact));
    remainder[k] = exact - static_cast<double>(sizes[k]);
    assigned += sizes[k];
  }
  // Largest remainder first; ties go to the earlier split.
  std::array<std::size_t, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return remainder[a] > remainder[b]; });
  for (std::size_t i = 0; assigned < count; ++i, ++assigned) ++sizes[order[i % 3]];
  while (assigned > count) {  // only reachable through rounding of ratios summing above 1
    for (std::size_t k = 3; k-- > 0 && assigned > count;)
      if (sizes[k] > 0) --sizes[k], --assigned;
  }
  return sizes;
}

EmbeddingDataset split_dataset(const EmbeddingDataset& ds, const SplitRatios& ratios, std::uint64_t seed,
                               std::vector<std::string>* warnings) {
  if (!(ratios.train > 0 && ratios.dev > 0 && ratios.test > 0))
    throw ValidationError("split ratios must be positive");
  if (std::abs(ratios.train + ratios.dev + ratios.test - 1.0) > 1e-9)
    throw ValidationError("split ratios must sum to 1");

  std::vector<std::vector<Eigen::Index>> strata(ds.profession_names.size());
  for (Eigen::Index i = 0; i < ds.size(); ++i) strata.at(ds.profession[i]).push_back(i);

  EmbeddingDataset out = ds;
  std::mt19937_64 rng(seed);
  for (std::size_t p = 0; p < strata.size(); ++p) {
    auto& rows = strata[p];
    if (rows.empty()) continue;
    if (rows.size() < 3 && warnings)
      warnings->push_back("profession '" + ds.profession_names[p] + "' has " + std::to_string(rows.size()) +
                          " rows, fewer than the 3 splits");
    std::shuffle(rows.begin(), rows.end(), rng);
    const auto sizes = stratum_sizes(rows.size(), ratios);
    std::size_t pos = 0;
    for (std::size_t k = 0; k < 3; ++k)
      for (std::size_t c = 0; c < sizes[k]; ++c) out.split[rows[pos++]] = static_cast<Split>(k);
  }
  return out;
}

double majority_accuracy(std::span<const std::uint32_t> labels) {
  if (labels.empty()) throw ValidationError("majority_accuracy: empty label array");
  std::map<std::uint32_t, std::size_t> counts;
  for (auto l : labels) ++counts[l];
  std::size_t best = 0;
  for (const auto& [label, count] : counts) best = std::max(best, count);
  return static_cast<double>(best) / static_cast<double>(labels.size());
}

DatasetStats dataset_stats(const EmbeddingDataset& ds) {
  DatasetStats s;
  s.examples = static_cast<std::size_t>(ds.size());
  for (auto g : ds.gender) (g == 0 ? s.female : s.male)++;
  s.majority = ds.gender.empty() ? 0.0 : majority_accuracy(ds.gender);
  std::vector<bool> seen(ds.profession_names.size(), false);
  for (auto p : ds.profession) seen.at(p) = true;
  s.professions = static_cast<std::size_t>(std::count(seen.begin(), seen.end(), true));
  return s;
}

}  // namespace scrub
