#include "scrub/subspace.hpp"

#include <array>

#include "scrub/codec.hpp"

namespace scrub {

namespace {
constexpr std::array<const char*, 5> kKindNames{"nullspace", "rowspace", "random_nullspace", "random_rowspace",
                                                "identity"};
}

std::string to_string(ProjectionKind kind) { return kKindNames.at(static_cast<std::size_t>(kind)); }

ProjectionKind projection_kind_from_string(const std::string& name) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i)
    if (name == kKindNames[i]) return static_cast<ProjectionKind>(i);
  throw ValidationError("unknown projection kind '" + name + "'");
}

nlohmann::json to_json(const Projection<double>& p) {
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows = p.matrix;
  return {{"dim", p.dim()},
          {"rank", p.rank},
          {"kind", to_string(p.kind)},
          {"matrix", codec::base64_encode(codec::pack_f32({rows.data(), static_cast<std::size_t>(rows.size())}))}};
}

Projection<double> projection_from_json(const nlohmann::json& j) {
  try {
    Projection<double> p;
    const auto dim = j.at("dim").get<Eigen::Index>();
    p.rank = j.at("rank").get<Eigen::Index>();
    p.kind = projection_kind_from_string(j.at("kind").get<std::string>());
    const auto values = codec::unpack_f32(codec::base64_decode(j.at("matrix").get<std::string>()));
    if (dim < 0 || static_cast<Eigen::Index>(values.size()) != dim * dim)
      throw IntegrityError("projection payload does not hold dim x dim values");
    p.matrix = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        values.data(), dim, dim);
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("projection JSON: ") + e.what());
  }
}

}  // namespace scrub
