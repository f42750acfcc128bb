#pragma once

// Projection algebra over dense Eigen matrices: orthonormal bases, nullspace /
// rowspace projectors, matched-rank random controls, PCA and principal angles.
//
// Conventions
//  * direction sets are passed as matrices whose COLUMNS are the directions;
//  * data sets are n x d with one sample per ROW, and projections act on the
//    right (x <- x M). Every projector built here is symmetric, so the side
//    only matters for reproducibility of rounding.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "scrub/error.hpp"

namespace scrub {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Residual norm below which a direction is treated as already spanned.
inline constexpr double kDropTolerance = 1e-10;

enum class ProjectionKind { nullspace, rowspace, random_nullspace, random_rowspace, identity };

std::string to_string(ProjectionKind kind);
ProjectionKind projection_kind_from_string(const std::string& name);

/// Symmetric idempotent d x d matrix with known rank.
template <typename Scalar>
struct Projection {
  MatrixX<Scalar> matrix;
  Eigen::Index rank = 0;
  ProjectionKind kind = ProjectionKind::identity;

  Eigen::Index dim() const { return matrix.rows(); }
};

/// {dim, rank, kind, matrix: base64 f32 row-major}. Reading back narrows to f32 precision.
nlohmann::json to_json(const Projection<double>& p);
Projection<double> projection_from_json(const nlohmann::json& j);

/// How far a projector is from the ideal: max |M - M^T|, ||M^2 - M||_F, |trace - rank|.
struct ProjectionDefects {
  double asymmetry = 0;
  double idempotence = 0;
  double trace_gap = 0;
};

template <typename Scalar>
ProjectionDefects measure_defects(const Projection<Scalar>& p) {
  const auto& m = p.matrix;
  ProjectionDefects out;
  out.asymmetry = static_cast<double>((m - m.transpose()).cwiseAbs().maxCoeff());
  out.idempotence = static_cast<double>((m * m - m).norm());
  out.trace_gap = std::abs(static_cast<double>(m.trace()) - static_cast<double>(p.rank));
  return out;
}

/// Symmetry < 1e-9, idempotence < 1e-7 d, trace == rank within 1e-6 d.
template <typename Scalar>
bool satisfies_invariants(const Projection<Scalar>& p) {
  if (p.matrix.rows() != p.matrix.cols()) return false;
  if (p.matrix.size() == 0) return p.rank == 0;
  const auto d = static_cast<double>(p.dim());
  const auto defects = measure_defects(p);
  return defects.asymmetry < 1e-9 && defects.idempotence < 1e-7 * d && defects.trace_gap < 1e-6 * d;
}

/// Gram-Schmidt with a full re-orthogonalization pass (CGS2), applied in
/// column blocks: each block is first projected against the accepted basis
/// with matrix products, then orthonormalized column by column. Columns whose
/// residual norm falls below kDropTolerance are dropped, so the result may
/// have fewer columns than the input (or none).
template <typename Derived>
MatrixX<typename Derived::Scalar> orthonormalize(const Eigen::MatrixBase<Derived>& directions) {
  using Scalar = typename Derived::Scalar;
  constexpr Eigen::Index kBlock = 64;
  const Eigen::Index d = directions.rows();
  const Eigen::Index n = directions.cols();
  for (Eigen::Index c = 0; c < n; ++c)
    if (!directions.col(c).allFinite())
      throw IntegrityError("orthonormalize: non-finite direction " + std::to_string(c));

  MatrixX<Scalar> basis(d, n);
  Eigen::Index accepted = 0;
  for (Eigen::Index start = 0; start < n; start += kBlock) {
    const Eigen::Index width = std::min(kBlock, n - start);
    MatrixX<Scalar> block = directions.middleCols(start, width);
    if (accepted > 0) {
      const auto q = basis.leftCols(accepted);
      for (int pass = 0; pass < 2; ++pass) block.noalias() -= q * (q.transpose() * block);
    }
    const Eigen::Index before = accepted;
    for (Eigen::Index c = 0; c < width; ++c) {
      VectorX<Scalar> r = block.col(c);
      if (accepted > before) {
        const auto q = basis.middleCols(before, accepted - before);
        for (int pass = 0; pass < 2; ++pass) r.noalias() -= q * (q.transpose() * r);
      }
      const Scalar norm = r.norm();
      if (!(static_cast<double>(norm) >= kDropTolerance)) continue;
      basis.col(accepted++) = r / norm;
    }
  }
  return basis.leftCols(accepted);
}

template <typename Scalar>
struct ProjectionPair {
  Projection<Scalar> nullspace;
  Projection<Scalar> rowspace;
};

/// Complementary projectors from a column-orthonormal basis B: R = B B^T, N = I - R.
template <typename Derived>
ProjectionPair<typename Derived::Scalar> projection_pair_from_basis(const Eigen::MatrixBase<Derived>& basis,
                                                                    Eigen::Index dim) {
  using Scalar = typename Derived::Scalar;
  if (basis.cols() > 0 && basis.rows() != dim)
    throw DimensionError("basis has " + std::to_string(basis.rows()) + " rows, expected " + std::to_string(dim));
  ProjectionPair<Scalar> out;
  if (basis.cols() == 0) {
    out.rowspace.matrix = MatrixX<Scalar>::Zero(dim, dim);
  } else {
    out.rowspace.matrix = basis * basis.transpose();
  }
  out.rowspace.rank = basis.cols();
  out.rowspace.kind = ProjectionKind::rowspace;
  out.nullspace.matrix = MatrixX<Scalar>::Identity(dim, dim) - out.rowspace.matrix;
  out.nullspace.rank = dim - basis.cols();
  out.nullspace.kind = ProjectionKind::nullspace;
  return out;
}

/// Projector onto the orthogonal complement of span(directions). Annihilates
/// every input direction.
template <typename Derived>
Projection<typename Derived::Scalar> nullspace_projection(const Eigen::MatrixBase<Derived>& directions,
                                                          Eigen::Index dim) {
  if (directions.cols() > 0 && directions.rows() != dim)
    throw DimensionError("nullspace_projection: directions of length " + std::to_string(directions.rows()) +
                         " in dimension " + std::to_string(dim));
  return projection_pair_from_basis(orthonormalize(directions), dim).nullspace;
}

/// Projector onto span(directions); complement of nullspace_projection.
template <typename Derived>
Projection<typename Derived::Scalar> rowspace_projection(const Eigen::MatrixBase<Derived>& directions,
                                                         Eigen::Index dim) {
  if (directions.cols() > 0 && directions.rows() != dim)
    throw DimensionError("rowspace_projection: directions of length " + std::to_string(directions.rows()) +
                         " in dimension " + std::to_string(dim));
  return projection_pair_from_basis(orthonormalize(directions), dim).rowspace;
}

/// Matched-rank control: k standard Gaussian directions, orthonormalized, and
/// the complementary projector pair they induce. Deterministic in `seed`.
template <typename Scalar = double>
ProjectionPair<Scalar> random_projection_pair(Eigen::Index dim, Eigen::Index rank_removed, std::uint64_t seed) {
  if (dim < 0 || rank_removed < 0 || rank_removed > dim)
    throw ValidationError("random_projection_pair: need 0 <= k <= d, got k=" + std::to_string(rank_removed) +
                          " d=" + std::to_string(dim));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  MatrixX<Scalar> basis(dim, 0);
  // Resample in the (probability zero) event a draw is numerically dependent.
  while (basis.cols() < rank_removed) {
    MatrixX<Scalar> draw(dim, rank_removed);
    for (Eigen::Index c = 0; c < rank_removed; ++c)
      for (Eigen::Index r = 0; r < dim; ++r) draw(r, c) = static_cast<Scalar>(normal(rng));
    basis = orthonormalize(draw);
  }
  auto pair = projection_pair_from_basis(basis, dim);
  pair.nullspace.kind = ProjectionKind::random_nullspace;
  pair.rowspace.kind = ProjectionKind::random_rowspace;
  return pair;
}

/// x_i <- x_i M for every row.
template <typename Scalar, typename Derived>
MatrixX<Scalar> apply_projection(const Projection<Scalar>& p, const Eigen::MatrixBase<Derived>& x) {
  if (x.cols() != p.dim())
    throw DimensionError("apply_projection: data has " + std::to_string(x.cols()) + " columns, projector is " +
                         std::to_string(p.dim()) + "-dimensional");
  return x * p.matrix;
}

template <typename Scalar>
struct PcaResult {
  MatrixX<Scalar> components;  ///< d x k, orthonormal columns
  VectorX<Scalar> eigenvalues;  ///< non-increasing, sigma_i^2 / (n - 1)
  Scalar total_variance = 0;
  VectorX<Scalar> cumulative_variance;
  bool clamped = false;  ///< requested k exceeded min(n, d)
};

/// PCA through the SVD of the mean-centred data. Component signs are fixed so
/// that the largest-magnitude entry of each component is positive.
template <typename Derived>
PcaResult<typename Derived::Scalar> pca(const Eigen::MatrixBase<Derived>& x, Eigen::Index k,
                                        std::vector<std::string>* warnings = nullptr) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  if (n < 2) throw ValidationError("pca: need at least 2 rows, got " + std::to_string(n));
  if (k < 0) throw ValidationError("pca: negative component count");

  PcaResult<Scalar> out;
  const Eigen::Index limit = std::min(n, d);
  if (k > limit) {
    if (warnings)
      warnings->push_back("pca: requested " + std::to_string(k) + " components, clamped to " +
                          std::to_string(limit));
    k = limit;
    out.clamped = true;
  }

  const VectorX<Scalar> mean = x.colwise().mean().transpose();
  const MatrixX<Scalar> centred = x.rowwise() - mean.transpose();
  Eigen::BDCSVD<MatrixX<Scalar>> svd(centred, Eigen::ComputeThinV);
  const VectorX<Scalar> sigma = svd.singularValues();
  const Scalar denom = static_cast<Scalar>(n - 1);

  out.total_variance = sigma.squaredNorm() / denom;
  out.eigenvalues = sigma.head(k).array().square() / denom;
  out.components = svd.matrixV().leftCols(k);
  for (Eigen::Index c = 0; c < k; ++c) {
    Eigen::Index arg = 0;
    out.components.col(c).cwiseAbs().maxCoeff(&arg);
    if (out.components(arg, c) < Scalar(0)) out.components.col(c) *= Scalar(-1);
  }
  out.cumulative_variance.resize(k);
  Scalar running = 0;
  for (Eigen::Index i = 0; i < k; ++i) {
    running += out.eigenvalues(i);
    out.cumulative_variance(i) = running;
  }
  return out;
}

/// Canonical angles between span(U) and span(V), both column-orthonormal,
/// ascending, in radians. min(cols(U), cols(V)) angles are returned.
template <typename DerivedU, typename DerivedV>
VectorX<typename DerivedU::Scalar> principal_angles(const Eigen::MatrixBase<DerivedU>& u,
                                                    const Eigen::MatrixBase<DerivedV>& v) {
  using Scalar = typename DerivedU::Scalar;
  if (u.rows() != v.rows())
    throw DimensionError("principal_angles: bases live in dimensions " + std::to_string(u.rows()) + " and " +
                         std::to_string(v.rows()));
  const MatrixX<Scalar> overlap = u.transpose() * v;
  if (overlap.size() == 0) return VectorX<Scalar>(0);
  Eigen::JacobiSVD<MatrixX<Scalar>> svd(overlap);
  VectorX<Scalar> angles = svd.singularValues().unaryExpr(
      [](Scalar s) { return std::acos(std::clamp(s, Scalar(0), Scalar(1))); });
  std::sort(angles.data(), angles.data() + angles.size());
  return angles;
}

}  // namespace scrub
