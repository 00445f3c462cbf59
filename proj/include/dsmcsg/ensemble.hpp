#ifndef DSMCSG_ENSEMBLE_HPP_
#define DSMCSG_ENSEMBLE_HPP_

// gPC particle ensembles and correlated initial sampling.
//
// Storage layout: the ensemble keeps one P x (d_v * N) coefficient matrix.
// Column (a + d_v * i) holds the gPC coefficients of velocity component a of
// particle i, so a particle is the contiguous P x d_v block
// coefficients().middleCols(d_v * i, d_v), and evaluating every particle at
// every node is a single product eval_table() * coefficients().

#include "dsmcsg/random_space.hpp"
#include "dsmcsg/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <random>
#include <stdexcept>
#include <variant>
#include <vector>

namespace dsmcsg {

/// gPC coefficients of one particle: P modes x d_v components.
template <typename Scalar = double>
using GpcVelocity = MatrixX<Scalar>;

template <typename Scalar = double>
class Ensemble {
 public:
  using BasisPtr = std::shared_ptr<const RandomBasis<Scalar>>;

  Ensemble(BasisPtr basis, int velocity_dims, int particles)
      : basis_(std::move(basis)), velocity_dims_(velocity_dims) {
    if (!basis_) throw std::invalid_argument("ensemble requires a basis");
    if (velocity_dims != 1 && velocity_dims != 2) {
      throw std::invalid_argument("velocity dimension must be 1 or 2");
    }
    if (particles < 0) throw std::invalid_argument("negative particle count");
    coeffs_ = MatrixX<Scalar>::Zero(basis_->modes(), velocity_dims * particles);
  }

  int size() const { return static_cast<int>(coeffs_.cols()) / velocity_dims_; }
  int velocity_dims() const { return velocity_dims_; }
  int modes() const { return static_cast<int>(coeffs_.rows()); }
  const RandomBasis<Scalar> &basis() const { return *basis_; }
  const BasisPtr &basis_ptr() const { return basis_; }

  MatrixX<Scalar> &coefficients() { return coeffs_; }
  const MatrixX<Scalar> &coefficients() const { return coeffs_; }

  auto particle(int i) { return coeffs_.middleCols(velocity_dims_ * i, velocity_dims_); }
  auto particle(int i) const {
    return coeffs_.middleCols(velocity_dims_ * i, velocity_dims_);
  }

  /// Q x d_v nodal values of particle i on this ensemble's own nodes.
  MatrixX<Scalar> nodal(int i) const { return basis_->eval_table() * particle(i); }

  /// Q x (d_v * N) nodal values of every particle on this ensemble's nodes.
  MatrixX<Scalar> nodal_all() const { return basis_->eval_table() * coeffs_; }

  /// Nodal values on the nodes of another basis over the same random space.
  /// The other basis may have a higher degree; only the leading modes of its
  /// graded index set are used.
  MatrixX<Scalar> nodal_all_on(const RandomBasis<Scalar> &other) const {
    if (other.random_dims() != basis_->random_dims()) {
      throw std::invalid_argument("observation basis has a different random dimension");
    }
    if (other.degree() >= basis_->degree()) {
      return other.eval_table().leftCols(modes()) * coeffs_;
    }
    MatrixX<Scalar> table(other.nodes_count(), modes());
    for (int h = 0; h < other.nodes_count(); ++h) {
      table.row(h) = basis_->evaluate_basis(VectorX<Scalar>(other.nodes().col(h)));
    }
    return table * coeffs_;
  }

 private:
  BasisPtr basis_;
  int velocity_dims_;
  MatrixX<Scalar> coeffs_;
};

using Ensembled = Ensemble<double>;

// --- initial densities -----------------------------------------------------

/// alpha(z) sqrt(alpha(z)) v^2 exp(-alpha(z) v^2), alpha(z) = 2 + kappa z_1.
struct KacSquaredGaussian {
  double kappa = 0.0;
};

/// alpha(z)^2 |v|^2 / pi exp(-alpha(z) |v|^2) in 2D, alpha(z) = 2 + kappa z_1.
struct Maxwell2D {
  double kappa = 0.0;
};

/// Two isotropic Gaussians of variance sigma^2 centred at +-2 sigma e_1,
/// sigma(z) = lambda pi / 6 (1 + kappa1 z_1), lambda = 2 / (3 + sqrt 2).
struct TwoGaussians2D {
  double kappa1 = 0.0;
};

using InitialDensity = std::variant<KacSquaredGaussian, Maxwell2D, TwoGaussians2D>;

inline constexpr double kStressLambda = 2.0 / (3.0 + std::numbers::sqrt2);

inline double kac_alpha(double kappa, double z) { return 2.0 + kappa * z; }
inline double maxwell_alpha(double kappa, double z) { return 2.0 + kappa * z; }
inline double two_gaussian_sigma(double kappa1, double z) {
  return kStressLambda * std::numbers::pi / 6.0 * (1.0 + kappa1 * z);
}

inline int velocity_dims(const InitialDensity &density) {
  return std::holds_alternative<KacSquaredGaussian>(density) ? 1 : 2;
}

/// Throws unless alpha(z) > 0 (resp. sigma(z) > 0) on all of [-1, 1].
inline void validate(const InitialDensity &density) {
  std::visit(
      [](const auto &d) {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, TwoGaussians2D>) {
          if (!(std::abs(d.kappa1) < 1.0)) {
            throw std::invalid_argument("sigma(z) must stay positive: need |kappa1| < 1");
          }
        } else {
          if (!(std::abs(d.kappa) < 2.0)) {
            throw std::invalid_argument("alpha(z) must stay positive: need |kappa| < 2");
          }
        }
      },
      density);
}

/// Temperature of the density at the random point whose first coordinate is
/// z1 (the only coordinate the initial data depends on).
inline double temperature(const InitialDensity &density, double z1) {
  return std::visit(
      [z1](const auto &d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, KacSquaredGaussian>) {
          return 3.0 * std::sqrt(std::numbers::pi) / (8.0 * kac_alpha(d.kappa, z1));
        } else if constexpr (std::is_same_v<T, Maxwell2D>) {
          return 1.0 / maxwell_alpha(d.kappa, z1);
        } else {
          const double s = two_gaussian_sigma(d.kappa1, z1);
          return s * s;
        }
      },
      density);
}

/// Draw from the normalized Kac initial density (2 a^{3/2} / sqrt(pi)) v^2
/// exp(-a v^2): |v| = sqrt(u), u ~ Gamma(3/2, rate a), symmetric sign.
inline double sample_kac_density(double alpha, RandomEngine &engine) {
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
  std::gamma_distribution<double> gamma(1.5, 1.0);
  const double u = gamma(engine) / alpha;
  const double sign = uniform_open01(engine) < 0.5 ? -1.0 : 1.0;
  return sign * std::sqrt(u);
}

/// Draw from alpha^2 |v|^2 / pi exp(-alpha |v|^2): speed^2 ~ Gamma(2, rate
/// alpha), uniform direction.
inline Eigen::Vector2d sample_maxwell2d_density(double alpha, RandomEngine &engine) {
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
  const double u = -(std::log(uniform_open01(engine)) + std::log(uniform_open01(engine))) / alpha;
  const double r = std::sqrt(u);
  const double theta = 2.0 * std::numbers::pi * uniform_open01(engine);
  return {r * std::cos(theta), r * std::sin(theta)};
}

/// Exact mixture draw: fair coin for the component, then N(+-2 sigma e_1,
/// sigma^2 I).
inline Eigen::Vector2d sample_two_gaussians(double sigma, RandomEngine &engine) {
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
  std::normal_distribution<double> normal(0.0, 1.0);
  const double centre = uniform_open01(engine) < 0.5 ? -2.0 * sigma : 2.0 * sigma;
  const double vx = centre + sigma * normal(engine);
  const double vy = sigma * normal(engine);
  return {vx, vy};
}

/// One velocity drawn from the density frozen at random coordinate z1.
inline Eigen::VectorXd sample_velocity(const InitialDensity &density, double z1,
                                       RandomEngine &engine) {
  return std::visit(
      [&](const auto &d) -> Eigen::VectorXd {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, KacSquaredGaussian>) {
          Eigen::VectorXd v(1);
          v(0) = sample_kac_density(kac_alpha(d.kappa, z1), engine);
          return v;
        } else if constexpr (std::is_same_v<T, Maxwell2D>) {
          return sample_maxwell2d_density(maxwell_alpha(d.kappa, z1), engine);
        } else {
          return sample_two_gaussians(two_gaussian_sigma(d.kappa1, z1), engine);
        }
      },
      density);
}

/// Couples independent per-node sample sets by order statistics (1D only).
/// Input: one column per node, N rows. Output: N x Q matrix whose row i is
/// particle i's nodal values (the i-th order statistic at every node).
inline Eigen::MatrixXd sort_couple_1d(const Eigen::MatrixXd &node_sample_sets,
                                      int velocity_dims = 1) {
  if (velocity_dims != 1) {
    throw std::invalid_argument("sort coupling is only defined for 1D velocities");
  }
  Eigen::MatrixXd out = node_sample_sets;
  for (Eigen::Index h = 0; h < out.cols(); ++h) {
    std::sort(out.col(h).begin(), out.col(h).end());
  }
  return out;
}

enum class CouplingMethod { TemperatureScaling, SortCoupling };

struct SamplingOptions {
  CouplingMethod coupling = CouplingMethod::TemperatureScaling;
  /// Antithetic pairs: particle k + N/2 is the exact negation of particle k.
  /// Requires even N; keeps the ensemble momentum identically zero.
  bool symmetric = false;
};

/// Samples N correlated gPC particles from an uncertain initial density.
///
/// Temperature scaling draws v_i(z_0) at the first quadrature node and sets
/// v_i(z_h) = sqrt(T(z_h) / T(z_0)) v_i(z_0); each density is a
/// temperature-scaled family, so every node sees exactly f_0(z_h, .). The
/// nodal samples are then projected onto the basis.
template <typename Scalar = double>
Ensemble<Scalar> sample_initial(const InitialDensity &density, int particles,
                                typename Ensemble<Scalar>::BasisPtr basis,
                                RandomEngine &engine,
                                const SamplingOptions &options = {}) {
  validate(density);
  if (particles < 2) throw std::invalid_argument("need at least two particles");
  if (options.symmetric && particles % 2 != 0) {
    throw std::invalid_argument("symmetric sampling requires an even particle count");
  }
  const int dv = velocity_dims(density);
  Ensemble<Scalar> ensemble(basis, dv, particles);
  const auto &b = *basis;
  const int q = b.nodes_count();
  const int drawn = options.symmetric ? particles / 2 : particles;

  if (options.coupling == CouplingMethod::SortCoupling) {
    if (dv != 1) throw std::invalid_argument("sort coupling is only defined for 1D velocities");
    Eigen::MatrixXd sets(particles, q);
    for (int h = 0; h < q; ++h) {
      const double z1 = static_cast<double>(b.nodes()(0, h));
      for (int i = 0; i < drawn; ++i) {
        sets(i, h) = sample_velocity(density, z1, engine)(0);
        if (options.symmetric) sets(drawn + i, h) = -sets(i, h);
      }
    }
    Eigen::MatrixXd coupled = sort_couple_1d(sets);
    if (options.symmetric) {
      // Sorted symmetric sets satisfy x[N/2 + k] = -x[N/2 - 1 - k]; reorder
      // so that particle k + N/2 mirrors particle k.
      Eigen::MatrixXd reordered(particles, q);
      for (int k = 0; k < drawn; ++k) {
        reordered.row(k) = coupled.row(drawn + k);
        reordered.row(drawn + k) = -coupled.row(drawn + k);
      }
      coupled = reordered;
    }
    ensemble.coefficients() =
        b.weighted_eval_table().transpose() * coupled.transpose().template cast<Scalar>();
    return ensemble;
  }

  const double z0 = static_cast<double>(b.nodes()(0, 0));
  const double t0 = temperature(density, z0);
  VectorX<Scalar> scale(q);
  for (int h = 0; h < q; ++h) {
    scale(h) = static_cast<Scalar>(
        std::sqrt(temperature(density, static_cast<double>(b.nodes()(0, h))) / t0));
  }
  const VectorX<Scalar> scale_hat = project_all(b, scale);
  for (int i = 0; i < drawn; ++i) {
    const Eigen::VectorXd v0 = sample_velocity(density, z0, engine);
    ensemble.particle(i) = scale_hat * v0.transpose().template cast<Scalar>();
    if (options.symmetric) ensemble.particle(drawn + i) = -ensemble.particle(i);
  }
  return ensemble;
}

}  // namespace dsmcsg

#endif  // DSMCSG_ENSEMBLE_HPP_
