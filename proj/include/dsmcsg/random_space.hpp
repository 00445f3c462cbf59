#ifndef DSMCSG_RANDOM_SPACE_HPP_
#define DSMCSG_RANDOM_SPACE_HPP_

// Orthonormal polynomial chaos bases over the random domain, their Gauss
// quadrature, and the projection / evaluation primitives every other module
// is built on.
//
// Conventions:
//   - quadrature weights already include the density p(z), so a weighted sum
//     over nodes is an expectation E[.] directly;
//   - a basis of degree M and quadrature order H has (H + 1) nodes per random
//     dimension, tensorized for d_z > 1, and the total-degree index set
//     {|alpha| <= M} ordered by total degree first (graded), so the index set
//     of a lower degree is always a prefix of a higher one.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace dsmcsg {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RowVectorX = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

/// Probability law of one random coordinate. Only the uniform law on [-1,1]
/// (Legendre family) is implemented; further Wiener-Askey families slot in
/// here.
enum class Distribution { UniformMinus1To1 };

struct RandomDimension {
  Distribution distribution = Distribution::UniformMinus1To1;
};

namespace detail {

inline void require_supported(const RandomDimension &dim) {
  if (dim.distribution != Distribution::UniformMinus1To1) {
    throw std::invalid_argument("unsupported random distribution");
  }
}

// Orthonormal Legendre values phi_0..phi_degree at z (p = 1/2 on [-1,1]).
template <typename Scalar>
void legendre_orthonormal(Scalar z, int degree, Scalar *out) {
  Scalar p_prev = 1;
  Scalar p_curr = z;
  out[0] = 1;
  if (degree >= 1) out[1] = std::sqrt(Scalar(3)) * z;
  for (int n = 1; n < degree; ++n) {
    const Scalar p_next =
        (Scalar(2 * n + 1) * z * p_curr - Scalar(n) * p_prev) / Scalar(n + 1);
    p_prev = p_curr;
    p_curr = p_next;
    out[n + 1] = std::sqrt(Scalar(2 * n + 3)) * p_next;
  }
}

// Golub-Welsch: nodes are the eigenvalues of the Jacobi matrix of the
// orthonormal recurrence, weights the squared first eigenvector components.
template <typename Scalar>
void gauss_legendre(int points, VectorX<Scalar> &nodes,
                    VectorX<Scalar> &weights) {
  MatrixX<Scalar> jacobi = MatrixX<Scalar>::Zero(points, points);
  for (int k = 1; k < points; ++k) {
    const Scalar kk = Scalar(k);
    const Scalar b = kk / std::sqrt(Scalar(4) * kk * kk - Scalar(1));
    jacobi(k, k - 1) = b;
    jacobi(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> solver(jacobi);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("Golub-Welsch eigen decomposition failed");
  }
  nodes = solver.eigenvalues();
  weights = solver.eigenvectors().row(0).transpose().array().square();
  // Symmetrize: the rule is exactly symmetric about 0.
  for (int k = 0; k < points / 2; ++k) {
    const int mirror = points - 1 - k;
    const Scalar z = (nodes(mirror) - nodes(k)) / 2;
    const Scalar w = (weights(mirror) + weights(k)) / 2;
    nodes(k) = -z;
    nodes(mirror) = z;
    weights(k) = w;
    weights(mirror) = w;
  }
  if (points % 2 == 1) nodes(points / 2) = 0;
  weights /= weights.sum();
}

inline void total_degree_indices(int dims, int degree,
                                 std::vector<std::vector<int>> &out) {
  std::vector<int> current(dims, 0);
  // Graded: all multi-indices of total degree 0, then 1, ...; within a
  // degree, reverse-lexicographic on the first coordinate.
  for (int total = 0; total <= degree; ++total) {
    auto recurse = [&](auto &&self, int dim, int remaining) -> void {
      if (dim == dims - 1) {
        current[dim] = remaining;
        out.push_back(current);
        return;
      }
      for (int k = remaining; k >= 0; --k) {
        current[dim] = k;
        self(self, dim + 1, remaining - k);
      }
    };
    recurse(recurse, 0, total);
  }
}

}  // namespace detail

/// Orthonormal gPC basis with its quadrature rule. Immutable after
/// construction.
template <typename Scalar = double>
class RandomBasis {
 public:
  RandomBasis() = default;

  const std::vector<RandomDimension> &dims() const { return dims_; }
  int random_dims() const { return static_cast<int>(dims_.size()); }
  int degree() const { return degree_; }
  int quad_order() const { return quad_order_; }
  /// Number of gPC modes P (= M + 1 when d_z = 1).
  int modes() const { return static_cast<int>(multi_indices_.size()); }
  /// Number of quadrature nodes Q (= (H + 1)^{d_z}).
  int nodes_count() const { return static_cast<int>(weights_.size()); }

  /// d_z x Q, column h is node z_h.
  const MatrixX<Scalar> &nodes() const { return nodes_; }
  const VectorX<Scalar> &weights() const { return weights_; }
  /// Q x P table Phi_m(z_h).
  const MatrixX<Scalar> &eval_table() const { return phi_; }
  /// Q x P table w_h Phi_m(z_h); projection of nodal data is a product with
  /// this matrix.
  const MatrixX<Scalar> &weighted_eval_table() const { return weighted_phi_; }
  const std::vector<std::vector<int>> &multi_indices() const {
    return multi_indices_;
  }

  /// Row vector of Phi_m(z) for a point z in Omega.
  RowVectorX<Scalar> evaluate_basis(const VectorX<Scalar> &z) const {
    if (z.size() != random_dims()) {
      throw std::invalid_argument("point dimension does not match basis");
    }
    const Scalar tol = Scalar(64) * Eigen::NumTraits<Scalar>::epsilon();
    std::vector<std::vector<Scalar>> per_dim(dims_.size());
    for (int d = 0; d < random_dims(); ++d) {
      if (!(std::abs(z(d)) <= Scalar(1) + tol)) {
        throw std::domain_error("point lies outside the random domain");
      }
      per_dim[d].resize(degree_ + 1);
      detail::legendre_orthonormal(z(d), degree_, per_dim[d].data());
    }
    RowVectorX<Scalar> out(modes());
    for (int m = 0; m < modes(); ++m) {
      Scalar v = 1;
      for (int d = 0; d < random_dims(); ++d) v *= per_dim[d][multi_indices_[m][d]];
      out(m) = v;
    }
    return out;
  }

  RowVectorX<Scalar> evaluate_basis(Scalar z) const {
    VectorX<Scalar> p(1);
    p(0) = z;
    return evaluate_basis(p);
  }

  template <typename S>
  friend RandomBasis<S> build_basis(const std::vector<RandomDimension> &dims,
                                    int degree, int quad_order);

 private:
  std::vector<RandomDimension> dims_;
  int degree_ = 0;
  int quad_order_ = 0;
  MatrixX<Scalar> nodes_;
  VectorX<Scalar> weights_;
  MatrixX<Scalar> phi_;
  MatrixX<Scalar> weighted_phi_;
  std::vector<std::vector<int>> multi_indices_;
};

using RandomBasisd = RandomBasis<double>;

/// Builds the tensorized total-degree basis of degree `degree` with
/// (quad_order + 1) Gauss nodes per dimension.
template <typename Scalar = double>
RandomBasis<Scalar> build_basis(const std::vector<RandomDimension> &dims,
                                int degree, int quad_order) {
  if (dims.empty()) throw std::invalid_argument("at least one random dimension required");
  for (const auto &d : dims) detail::require_supported(d);
  if (degree < 0) throw std::invalid_argument("degree must be non-negative");
  if (quad_order < degree) {
    throw std::invalid_argument("quadrature order H must satisfy H >= M");
  }

  RandomBasis<Scalar> basis;
  basis.dims_ = dims;
  basis.degree_ = degree;
  basis.quad_order_ = quad_order;
  detail::total_degree_indices(static_cast<int>(dims.size()), degree,
                               basis.multi_indices_);

  VectorX<Scalar> nodes_1d, weights_1d;
  detail::gauss_legendre<Scalar>(quad_order + 1, nodes_1d, weights_1d);
  const int per_dim = quad_order + 1;
  const int dz = static_cast<int>(dims.size());
  int total = 1;
  for (int d = 0; d < dz; ++d) total *= per_dim;

  basis.nodes_.resize(dz, total);
  basis.weights_.resize(total);
  // Node h enumerates the tensor grid with the first coordinate fastest.
  for (int h = 0; h < total; ++h) {
    int rest = h;
    Scalar w = 1;
    for (int d = 0; d < dz; ++d) {
      const int k = rest % per_dim;
      rest /= per_dim;
      basis.nodes_(d, h) = nodes_1d(k);
      w *= weights_1d(k);
    }
    basis.weights_(h) = w;
  }

  const int modes = static_cast<int>(basis.multi_indices_.size());
  basis.phi_.resize(total, modes);
  std::vector<Scalar> table((degree + 1) * per_dim);
  for (int k = 0; k < per_dim; ++k) {
    detail::legendre_orthonormal(nodes_1d(k), degree, &table[k * (degree + 1)]);
  }
  for (int h = 0; h < total; ++h) {
    for (int m = 0; m < modes; ++m) {
      int rest = h;
      Scalar v = 1;
      for (int d = 0; d < dz; ++d) {
        const int k = rest % per_dim;
        rest /= per_dim;
        v *= table[k * (degree + 1) + basis.multi_indices_[m][d]];
      }
      basis.phi_(h, m) = v;
    }
  }
  basis.weighted_phi_ = basis.weights_.asDiagonal() * basis.phi_;
  return basis;
}

/// Univariate convenience overload.
template <typename Scalar = double>
RandomBasis<Scalar> build_basis(int degree, int quad_order) {
  return build_basis<Scalar>({RandomDimension{}}, degree, quad_order);
}

/// sum_m coeffs_m Phi_m(z).
template <typename Scalar, typename Derived>
Scalar evaluate_expansion(const RandomBasis<Scalar> &basis,
                          const Eigen::MatrixBase<Derived> &coeffs,
                          const VectorX<Scalar> &z) {
  if (coeffs.size() != basis.modes()) {
    throw std::invalid_argument("coefficient count does not match basis");
  }
  return (basis.evaluate_basis(z) * coeffs.derived().reshaped())(0);
}

template <typename Scalar, typename Derived>
Scalar evaluate_expansion(const RandomBasis<Scalar> &basis,
                          const Eigen::MatrixBase<Derived> &coeffs, Scalar z) {
  VectorX<Scalar> p(1);
  p(0) = z;
  return evaluate_expansion(basis, coeffs, p);
}

/// Values of an expansion at every quadrature node.
template <typename Scalar, typename Derived>
VectorX<Scalar> evaluate_at_nodes(const RandomBasis<Scalar> &basis,
                                  const Eigen::MatrixBase<Derived> &coeffs) {
  if (coeffs.size() != basis.modes()) {
    throw std::invalid_argument("coefficient count does not match basis");
  }
  return basis.eval_table() * coeffs.derived().reshaped();
}

namespace detail {
template <typename Scalar, typename Derived>
void require_nodal(const RandomBasis<Scalar> &basis,
                   const Eigen::MatrixBase<Derived> &values) {
  if (values.size() != basis.nodes_count()) {
    throw std::invalid_argument("nodal values do not match quadrature nodes");
  }
}
}  // namespace detail

/// sum_h w_h values_h Phi_m(z_h).
template <typename Scalar, typename Derived>
Scalar project(const RandomBasis<Scalar> &basis,
               const Eigen::MatrixBase<Derived> &node_values, int mode) {
  detail::require_nodal(basis, node_values);
  if (mode < 0 || mode >= basis.modes()) {
    throw std::out_of_range("mode index out of range");
  }
  return basis.weighted_eval_table().col(mode).dot(
      node_values.derived().reshaped());
}

/// All modes at once.
template <typename Scalar, typename Derived>
VectorX<Scalar> project_all(const RandomBasis<Scalar> &basis,
                            const Eigen::MatrixBase<Derived> &node_values) {
  detail::require_nodal(basis, node_values);
  return basis.weighted_eval_table().transpose() *
         node_values.derived().reshaped();
}

template <typename Scalar, typename Derived>
Scalar expectation(const RandomBasis<Scalar> &basis,
                   const Eigen::MatrixBase<Derived> &node_values) {
  detail::require_nodal(basis, node_values);
  return basis.weights().dot(node_values.derived().reshaped());
}

template <typename Scalar, typename Derived>
Scalar variance(const RandomBasis<Scalar> &basis,
                const Eigen::MatrixBase<Derived> &node_values) {
  detail::require_nodal(basis, node_values);
  const auto v = node_values.derived().reshaped();
  const Scalar mean = basis.weights().dot(v);
  return basis.weights().dot(v.cwiseProduct(v)) - mean * mean;
}

template <typename Scalar, typename Derived>
Scalar l2_omega_norm(const RandomBasis<Scalar> &basis,
                     const Eigen::MatrixBase<Derived> &node_values) {
  detail::require_nodal(basis, node_values);
  const auto v = node_values.derived().reshaped();
  return std::sqrt(basis.weights().dot(v.cwiseProduct(v)));
}

}  // namespace dsmcsg

#endif  // DSMCSG_RANDOM_SPACE_HPP_
