#pragma once

#include "csht/rng.hpp"
#include "csht/types.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_map>
#include <vector>

namespace csht {

inline constexpr double kUnitNormTol = 1e-6;

/// Pi(x) = x / ||x||. Undefined at the origin.
template <typename Derived>
VectorX<typename Derived::Scalar> project_to_sphere(const Eigen::MatrixBase<Derived>& x) {
  const auto n = x.norm();
  if (!(n > 0))
    throw std::invalid_argument("sphere: cannot project the zero vector");
  return x / n;
}

/// Geodesic distance on the unit sphere: arccos of the inner product,
/// clamped to [-1, 1] so antipodal rounding cannot produce NaN.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar geodesic_distance(const Eigen::MatrixBase<DerivedA>& u,
                                            const Eigen::MatrixBase<DerivedB>& v) {
  using S = typename DerivedA::Scalar;
  if (std::fabs(u.norm() - 1) > kUnitNormTol || std::fabs(v.norm() - 1) > kUnitNormTol)
    throw std::invalid_argument("sphere: geodesic distance needs unit vectors");
  S dot = u.dot(v);
  dot = std::min<S>(S(1), std::max<S>(S(-1), dot));
  return std::acos(dot);
}

/// Projected ambient-gradient update: Pi(x - eta * grad). A vanishing step
/// returns x bit-for-bit.
template <typename DerivedX, typename DerivedG>
VectorX<typename DerivedX::Scalar> riemannian_step(const Eigen::MatrixBase<DerivedX>& x,
                                                   const Eigen::MatrixBase<DerivedG>& grad,
                                                   typename DerivedX::Scalar eta) {
  using S = typename DerivedX::Scalar;
  if (eta == S(0) || grad.isZero(S(0))) return x;
  const VectorX<S> moved = x - eta * grad;
  const S n = moved.norm();
  if (!(n > 0))
    throw std::runtime_error(
        "sphere: update landed exactly at the origin (step size " +
        std::to_string(static_cast<double>(eta)) + ")");
  return moved / n;
}

/// Table of unit embeddings, one row per hypergraph node.
class SphereEmbedding {
 public:
  SphereEmbedding() = default;
  SphereEmbedding(std::vector<LaggedNode> nodes, int ambient_dim)
      : nodes_(std::move(nodes)), table_(Matrix::Zero(static_cast<Eigen::Index>(nodes_.size()), ambient_dim)) {
    for (size_t i = 0; i < nodes_.size(); ++i) index_[nodes_[i]] = static_cast<int>(i);
  }

  /// Isotropic Gaussian draw projected to the sphere: uniform on S^n.
  void init_random(Rng& rng) {
    for (Eigen::Index i = 0; i < table_.rows(); ++i) {
      Vector v(table_.cols());
      for (Eigen::Index j = 0; j < v.size(); ++j) v(j) = rng.gaussian();
      table_.row(i) = project_to_sphere(v).transpose();
    }
  }

  int size() const { return static_cast<int>(nodes_.size()); }
  int ambient_dim() const { return static_cast<int>(table_.cols()); }
  const std::vector<LaggedNode>& nodes() const { return nodes_; }
  const Matrix& table() const { return table_; }
  Matrix& table() { return table_; }

  int index_of(const LaggedNode& node) const {
    const auto it = index_.find(node);
    return it == index_.end() ? -1 : it->second;
  }

  Vector row(const LaggedNode& node) const {
    const int i = index_of(node);
    if (i < 0) throw std::invalid_argument("sphere: no embedding for " + node.str());
    return table_.row(i).transpose();
  }

  /// Largest |norm - 1| over all rows.
  double max_norm_deviation() const {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < table_.rows(); ++i)
      worst = std::max(worst, std::fabs(table_.row(i).norm() - 1.0));
    return worst;
  }

 private:
  std::vector<LaggedNode> nodes_;
  Matrix table_;
  std::unordered_map<LaggedNode, int, LaggedNodeHash> index_;
};

}  // namespace csht
