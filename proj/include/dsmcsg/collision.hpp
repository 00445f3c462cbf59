#ifndef DSMCSG_COLLISION_HPP_
#define DSMCSG_COLLISION_HPP_

// Stochastic-Galerkin projected binary collisions and the Nanbu-Babovski
// time step built on them.
//
// Every pair update is performed on gPC coefficients. Nonlinear rules (the
// relative speed, the acceptance test, thermalization) are evaluated at the
// quadrature nodes and projected back; the O(M H) nodal evaluation per
// collision is redone every time since coefficients are the canonical state.

#include "dsmcsg/collision_tree.hpp"
#include "dsmcsg/ensemble.hpp"
#include "dsmcsg/random_space.hpp"
#include "dsmcsg/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <utility>
#include <variant>
#include <vector>

namespace dsmcsg {

// --- kernels and regularization ---------------------------------------------

/// Maxwell molecules, velocity-independent kernel with collision frequency mu.
struct MaxwellKernel {
  double mu = 1.0;
};

/// Kac rotations; unit collision frequency.
struct KacKernel {};

/// B(z, g) = C_gamma g^{gamma(z)}, gamma(z) = gamma0 + gamma_slope * z[coord].
struct VhsKernel {
  double c_gamma = 1.0 / (2.0 * std::numbers::pi);
  double gamma0 = 0.0;
  double gamma_slope = 0.0;
  int gamma_coordinate = 0;

  static VhsKernel constant(double c, double gamma) { return {c, gamma, 0.0, 0}; }
  /// gamma(z) = kappa2 (1 + z[coordinate]).
  static VhsKernel affine(double c, double kappa2, int coordinate) {
    return {c, kappa2, kappa2, coordinate};
  }

  double gamma(double z) const { return gamma0 + gamma_slope * z; }
  bool is_maxwellian() const { return gamma0 == 0.0 && gamma_slope == 0.0; }
};

using KernelSpec = std::variant<MaxwellKernel, KacKernel, VhsKernel>;

struct Indicator {};
/// Acceptance K(beta (B - Sigma xi)), K(x) = (tanh x + 1) / 2.
struct Sigmoid {
  double beta = 10.0;
};
/// Sigmoid acceptance followed by pair-level thermalization at every node.
struct SigmoidThermalized {
  double beta = 10.0;
};

using RegularizationMode = std::variant<Indicator, Sigmoid, SigmoidThermalized>;

inline void validate(const KernelSpec &kernel) {
  if (const auto *m = std::get_if<MaxwellKernel>(&kernel)) {
    if (!(m->mu > 0.0)) throw std::invalid_argument("Maxwell collision frequency must be positive");
  } else if (const auto *v = std::get_if<VhsKernel>(&kernel)) {
    if (!(v->c_gamma > 0.0)) throw std::invalid_argument("C_gamma must be positive");
    if (v->gamma0 - std::abs(v->gamma_slope) < 0.0) {
      throw std::invalid_argument("gamma(z) must be non-negative on [-1, 1]");
    }
    if (v->gamma_coordinate < 0) throw std::invalid_argument("invalid gamma coordinate");
  }
}

inline void validate(const RegularizationMode &mode) {
  const double beta = std::visit(
      [](const auto &m) -> double {
        if constexpr (std::is_same_v<std::decay_t<decltype(m)>, Indicator>) {
          return 1.0;
        } else {
          return m.beta;
        }
      },
      mode);
  if (!(beta > 0.0)) throw std::invalid_argument("sigmoid sharpness beta must be positive");
}

inline double sigmoid(double x) { return 0.5 * (std::tanh(x) + 1.0); }

// --- stochastic rounding and pair selection -----------------------------------

/// floor(x) + 1 with probability x - floor(x), else floor(x), using the given
/// uniform draw u in (0, 1).
inline std::uint64_t sround_with(double x, double u) {
  if (!(x >= 0.0)) throw std::invalid_argument("stochastic rounding needs x >= 0");
  const double whole = std::floor(x);
  return static_cast<std::uint64_t>(whole) + (u < x - whole ? 1u : 0u);
}

inline std::uint64_t sround(double x, RandomEngine &engine) {
  if (!(x >= 0.0)) throw std::invalid_argument("stochastic rounding needs x >= 0");
  return sround_with(x, uniform_open01(engine));
}

/// N_c disjoint pairs from a uniformly random partial permutation of {0..N-1}.
inline std::vector<std::pair<std::uint64_t, std::uint64_t>> select_pairs(
    std::uint64_t particles, std::uint64_t pairs, RandomEngine &engine) {
  if (2 * pairs > particles) throw std::invalid_argument("cannot select 2 N_c > N distinct particles");
  std::vector<std::uint64_t> perm(particles);
  std::iota(perm.begin(), perm.end(), std::uint64_t{0});
  const std::uint64_t picks = 2 * pairs;
  for (std::uint64_t k = 0; k < picks; ++k) {
    std::uniform_int_distribution<std::uint64_t> pick(k, particles - 1);
    std::swap(perm[k], perm[pick(engine)]);
  }
  std::vector<std::pair<std::uint64_t, std::uint64_t>> out(pairs);
  for (std::uint64_t c = 0; c < pairs; ++c) out[c] = {perm[2 * c], perm[2 * c + 1]};
  return out;
}

// --- pair collisions ------------------------------------------------------------

template <typename Scalar>
using ParticleRef = Eigen::Ref<MatrixX<Scalar>>;

/// Per-thread scratch for nodal evaluation; sized lazily.
template <typename Scalar = double>
struct CollisionWorkspace {
  MatrixX<Scalar> nodal_i, nodal_j, rel, delta;
  VectorX<Scalar> speed, accept;
  MatrixX<Scalar> projected;
};

/// Kac rotation, exact coefficient-wise since the rule is linear.
template <typename Scalar>
void kac_rotate(ParticleRef<Scalar> vi, ParticleRef<Scalar> vj, Scalar theta) {
  if (vi.cols() != 1 || vj.cols() != 1) throw std::invalid_argument("Kac collisions need d_v = 1");
  const Scalar c = std::cos(theta);
  const Scalar s = std::sin(theta);
  for (Eigen::Index m = 0; m < vi.rows(); ++m) {
    const Scalar a = vi(m, 0);
    const Scalar b = vj(m, 0);
    vi(m, 0) = a * c - b * s;
    vj(m, 0) = a * s + b * c;
  }
}

template <typename Scalar>
std::pair<GpcVelocity<Scalar>, GpcVelocity<Scalar>> kac_collide(
    const GpcVelocity<Scalar> &vi, const GpcVelocity<Scalar> &vj, Scalar theta) {
  GpcVelocity<Scalar> a = vi, b = vj;
  kac_rotate<Scalar>(a, b, theta);
  return {a, b};
}

namespace detail {
template <typename Scalar, typename Derived>
void require_unit(const Eigen::MatrixBase<Derived> &omega, Eigen::Index dims) {
  if (omega.size() != dims) throw std::invalid_argument("scattering direction has wrong dimension");
  if (std::abs(omega.norm() - Scalar(1)) > Scalar(1e-12)) {
    throw std::invalid_argument("scattering direction must be a unit vector");
  }
}
}  // namespace detail

/// Projected Maxwell collision. Returns the energy removed by the projection
/// (the Bessel gap (E|v_i - v_j|^2 - sum_m (V^m)^2) / 2, summed over the pair).
template <typename Scalar>
Scalar maxwell_collide(ParticleRef<Scalar> vi, ParticleRef<Scalar> vj,
                       const VectorX<Scalar> &omega, const RandomBasis<Scalar> &basis,
                       CollisionWorkspace<Scalar> &ws) {
  if (vi.cols() != 2 || vj.cols() != 2) throw std::invalid_argument("Maxwell collisions need d_v = 2");
  detail::require_unit<Scalar>(omega, 2);
  // Everything goes through the workspace: at small M heap traffic would
  // otherwise cost more than the O(P Q) products.
  ws.delta = vi - vj;
  ws.rel.noalias() = basis.eval_table() * ws.delta;
  ws.speed = ws.rel.rowwise().norm();
  ws.accept.noalias() = basis.weighted_eval_table().transpose() * ws.speed;  // |v_i - v_j|^m
  const Scalar gap =
      (basis.weights().dot(ws.speed.cwiseAbs2()) - ws.accept.squaredNorm()) / 2;
  ws.delta = (vi + vj) / 2;
  vi = ws.delta + ws.accept * (omega.transpose() / 2);
  vj = ws.delta - ws.accept * (omega.transpose() / 2);
  return gap;
}

template <typename Scalar>
std::pair<GpcVelocity<Scalar>, GpcVelocity<Scalar>> maxwell_collide(
    const GpcVelocity<Scalar> &vi, const GpcVelocity<Scalar> &vj,
    const VectorX<Scalar> &omega, const RandomBasis<Scalar> &basis) {
  GpcVelocity<Scalar> a = vi, b = vj;
  CollisionWorkspace<Scalar> ws;
  maxwell_collide<Scalar>(a, b, omega, basis, ws);
  return {a, b};
}

/// Value of the VHS kernel at every quadrature node for relative speeds
/// `speed` (one per node).
template <typename Scalar>
VectorX<Scalar> vhs_kernel_at_nodes(const VhsKernel &kernel, const RandomBasis<Scalar> &basis,
                                    const VectorX<Scalar> &speed) {
  if (kernel.gamma_slope != 0.0 && kernel.gamma_coordinate >= basis.random_dims()) {
    throw std::invalid_argument("gamma depends on a random coordinate the basis lacks");
  }
  VectorX<Scalar> out(speed.size());
  for (Eigen::Index h = 0; h < speed.size(); ++h) {
    const Scalar g = kernel.gamma_slope == 0.0
                         ? Scalar(kernel.gamma0)
                         : Scalar(kernel.gamma(static_cast<double>(
                               basis.nodes()(kernel.gamma_coordinate, h))));
    out(h) = Scalar(kernel.c_gamma) * (g == Scalar(0) ? Scalar(1) : std::pow(speed(h), g));
  }
  return out;
}

/// Per-step upper bound Sigma = max_h B(z_h, 2 max_i |v_i(z_h) - vbar(z_h)|).
template <typename Scalar>
Scalar vhs_sigma_bound(const Ensemble<Scalar> &ensemble, const VhsKernel &kernel) {
  const int n = ensemble.size();
  if (n == 0) throw std::invalid_argument("empty ensemble");
  const auto &basis = ensemble.basis();
  const int dv = ensemble.velocity_dims();
  const int q = basis.nodes_count();
  MatrixX<Scalar> mean_coeffs = MatrixX<Scalar>::Zero(ensemble.modes(), dv);
  for (int i = 0; i < n; ++i) mean_coeffs += ensemble.particle(i);
  mean_coeffs /= Scalar(n);
  const MatrixX<Scalar> mean_nodal = basis.eval_table() * mean_coeffs;

  VectorX<Scalar> max_dev = VectorX<Scalar>::Zero(q);
  constexpr int kChunk = 512;
  MatrixX<Scalar> block;
  for (int start = 0; start < n; start += kChunk) {
    const int count = std::min(kChunk, n - start);
    block.noalias() =
        basis.eval_table() * ensemble.coefficients().middleCols(dv * start, dv * count);
    for (int k = 0; k < count; ++k) {
      const auto v = block.middleCols(dv * k, dv);
      max_dev = max_dev.cwiseMax((v - mean_nodal).rowwise().norm());
    }
  }
  const VectorX<Scalar> bound = vhs_kernel_at_nodes(kernel, basis, VectorX<Scalar>(2 * max_dev));
  return bound.maxCoeff();
}

struct VhsOutcome {
  /// E[a] over the random space: 1 for an everywhere-accepted collision.
  double mean_acceptance = 0.0;
  /// Nodes where thermalization was skipped because T' = 0 < T.
  int skipped_nodes = 0;
};

/// Post-collision nodal velocities of a regularized dummy collision.
///
/// `nodal_i`, `nodal_j` are Q x 2 nodal values; on return they hold v'' (or v'
/// without thermalization). Acceptance per node is the indicator of
/// Sigma xi < B_Sigma, or K(beta (B_Sigma - Sigma xi)) for sigmoid modes.
template <typename Scalar>
VhsOutcome vhs_collide_nodal(MatrixX<Scalar> &nodal_i, MatrixX<Scalar> &nodal_j,
                             const VectorX<Scalar> &omega, Scalar xi, Scalar sigma,
                             const VhsKernel &kernel, const RegularizationMode &mode,
                             const RandomBasis<Scalar> &basis) {
  if (!(sigma > Scalar(0))) throw std::invalid_argument("Sigma must be positive");
  if (!(xi > Scalar(0) && xi < Scalar(1))) throw std::invalid_argument("xi must lie in (0, 1)");
  detail::require_unit<Scalar>(omega, 2);
  const Eigen::Index q = nodal_i.rows();
  const MatrixX<Scalar> rel = nodal_i - nodal_j;
  const VectorX<Scalar> speed = rel.rowwise().norm();
  const VectorX<Scalar> kernel_values =
      vhs_kernel_at_nodes(kernel, basis, speed).cwiseMin(sigma);
  const Scalar threshold = sigma * xi;

  VectorX<Scalar> accept(q);
  const bool thermalize = std::holds_alternative<SigmoidThermalized>(mode);
  const double beta = std::visit(
      [](const auto &m) -> double {
        if constexpr (std::is_same_v<std::decay_t<decltype(m)>, Indicator>) {
          return 0.0;
        } else {
          return m.beta;
        }
      },
      mode);
  for (Eigen::Index h = 0; h < q; ++h) {
    if (std::holds_alternative<Indicator>(mode)) {
      accept(h) = threshold < kernel_values(h) ? Scalar(1) : Scalar(0);
    } else {
      accept(h) = Scalar(sigmoid(beta * static_cast<double>(kernel_values(h) - threshold)));
    }
  }

  VhsOutcome outcome;
  outcome.mean_acceptance = static_cast<double>(basis.weights().dot(accept));
  for (Eigen::Index h = 0; h < q; ++h) {
    if (accept(h) == Scalar(0)) continue;
    const Eigen::Matrix<Scalar, 1, 2> jump =
        accept(h) / 2 * (rel.row(h) - speed(h) * omega.transpose());
    const Eigen::Matrix<Scalar, 1, 2> pre_i = nodal_i.row(h);
    const Eigen::Matrix<Scalar, 1, 2> pre_j = nodal_j.row(h);
    Eigen::Matrix<Scalar, 1, 2> post_i = pre_i - jump;
    Eigen::Matrix<Scalar, 1, 2> post_j = pre_j + jump;
    if (thermalize) {
      const Eigen::Matrix<Scalar, 1, 2> u = (pre_i + pre_j) / 2;
      const Scalar t_pre = (pre_i - u).squaredNorm() + (pre_j - u).squaredNorm();
      const Scalar t_post = (post_i - u).squaredNorm() + (post_j - u).squaredNorm();
      // T' at rounding level counts as T' = 0: rescaling would only amplify noise.
      if (t_post > std::numeric_limits<Scalar>::epsilon() * t_pre) {
        const Scalar factor = std::sqrt(t_pre / t_post);
        post_i = (post_i - u) * factor + u;
        post_j = (post_j - u) * factor + u;
      } else if (t_pre > Scalar(0)) {
        ++outcome.skipped_nodes;
        continue;
      }
    }
    nodal_i.row(h) = post_i;
    nodal_j.row(h) = post_j;
  }
  return outcome;
}

/// Projected VHS dummy collision on coefficients. The update of particle j is
/// the exact negation of that of particle i, so pair momentum is conserved
/// mode by mode.
template <typename Scalar>
VhsOutcome vhs_collide(ParticleRef<Scalar> vi, ParticleRef<Scalar> vj,
                       const VectorX<Scalar> &omega, Scalar xi, Scalar sigma,
                       const VhsKernel &kernel, const RegularizationMode &mode,
                       const RandomBasis<Scalar> &basis, CollisionWorkspace<Scalar> &ws) {
  if (vi.cols() != 2 || vj.cols() != 2) throw std::invalid_argument("VHS collisions need d_v = 2");
  ws.nodal_i.noalias() = basis.eval_table() * vi;
  ws.nodal_j.noalias() = basis.eval_table() * vj;
  ws.delta = ws.nodal_i;
  const VhsOutcome outcome =
      vhs_collide_nodal<Scalar>(ws.nodal_i, ws.nodal_j, omega, xi, sigma, kernel, mode, basis);
  if (outcome.mean_acceptance == 0.0) return outcome;
  ws.delta = ws.nodal_i - ws.delta;
  ws.projected.noalias() = basis.weighted_eval_table().transpose() * ws.delta;
  vi += ws.projected;
  vj -= ws.projected;
  return outcome;
}

template <typename Scalar>
std::pair<GpcVelocity<Scalar>, GpcVelocity<Scalar>> vhs_collide(
    const GpcVelocity<Scalar> &vi, const GpcVelocity<Scalar> &vj,
    const VectorX<Scalar> &omega, Scalar xi, Scalar sigma, const VhsKernel &kernel,
    const RegularizationMode &mode, const RandomBasis<Scalar> &basis) {
  GpcVelocity<Scalar> a = vi, b = vj;
  CollisionWorkspace<Scalar> ws;
  vhs_collide<Scalar>(a, b, omega, xi, sigma, kernel, mode, basis, ws);
  return {a, b};
}

// --- time step -------------------------------------------------------------------

/// Collision frequency factor mu of the forward-Euler splitting. For VHS the
/// caller supplies the current bound Sigma (mu = 2^{d_v - 1} pi Sigma).
inline double collision_frequency(const KernelSpec &kernel, int velocity_dims, double sigma) {
  if (const auto *m = std::get_if<MaxwellKernel>(&kernel)) return m->mu;
  if (std::holds_alternative<KacKernel>(kernel)) return 1.0;
  return std::ldexp(std::numbers::pi, velocity_dims - 1) * sigma;
}

struct StepOptions {
  /// Collide only particles [0, N/2) and mirror the result onto particle
  /// k + N/2 = -particle k. Pairs symmetric ensembles with mirrored
  /// collisions so the ensemble momentum stays identically zero.
  bool mirrored = false;
};

struct StepStats {
  std::uint64_t collisions = 0;
  double projection_energy_loss = 0.0;  // summed Bessel gaps (Maxwell), per unit particle
  double accepted = 0.0;                // sum of E[a] over VHS dummy collisions
  int skipped_nodes = 0;
};

/// Runs Nanbu-Babovski steps on an ensemble. Random choices come from named
/// substreams and are drawn in a fixed serial order: the Sround draw, the
/// permutation draws, then (theta, xi) per pair in pair order. A step can
/// instead replay a recorded StepRecord verbatim.
template <typename Scalar = double>
class CollisionEngine {
 public:
  CollisionEngine(KernelSpec kernel, RegularizationMode mode, const RandomStreams &streams,
                  StepOptions options = {})
      : kernel_(kernel),
        mode_(mode),
        options_(options),
        sround_rng_(streams.spawn(Stream::Sround)),
        pairing_rng_(streams.spawn(Stream::Pairing)),
        angle_rng_(streams.spawn(Stream::Angles)),
        rejection_rng_(streams.spawn(Stream::Rejection)) {
    validate(kernel_);
    validate(mode_);
  }

  const KernelSpec &kernel() const { return kernel_; }
  const StepOptions &options() const { return options_; }
  const StepStats &stats() const { return stats_; }

  /// Advances the ensemble by dt and returns every random choice made. With
  /// `replay`, the recorded choices are used and no random numbers are drawn.
  StepRecord step(Ensemble<Scalar> &ensemble, double dt, const StepRecord *replay = nullptr) {
    if (!(dt >= 0.0)) throw std::invalid_argument("time step must be non-negative");
    const int n = ensemble.size();
    const int dv = ensemble.velocity_dims();
    const bool is_kac = std::holds_alternative<KacKernel>(kernel_);
    if (is_kac && dv != 1) throw std::invalid_argument("Kac kernel needs d_v = 1");
    if (!is_kac && dv != 2) throw std::invalid_argument("Maxwell/VHS kernels need d_v = 2");
    if (options_.mirrored && n % 2 != 0) {
      throw std::invalid_argument("mirrored stepping requires an even particle count");
    }
    const std::uint64_t active = options_.mirrored ? n / 2 : n;

    StepRecord record;
    const auto *vhs = std::get_if<VhsKernel>(&kernel_);
    if (replay) {
      record.sigma = replay->sigma;
    } else if (vhs) {
      record.sigma = static_cast<double>(vhs_sigma_bound(ensemble, *vhs));
    }
    const double mu = collision_frequency(kernel_, dv, record.sigma);
    if (mu * dt > 1.0 + 1e-12) {
      throw std::domain_error(
          "forward Euler probabilistic interpretation violated: mu * dt > 1");
    }

    if (replay) {
      record.sround_draw = replay->sround_draw;
      record.pairs = replay->pairs;
      for (const auto &p : record.pairs) {
        if (p.i >= active || p.j >= active || p.i == p.j) {
          throw std::runtime_error("replayed pair does not fit the ensemble");
        }
      }
    } else {
      record.sround_draw = uniform_open01(sround_rng_);
      const double expected = mu * static_cast<double>(active) * dt / 2.0;
      std::uint64_t pairs = sround_with(expected, record.sround_draw);
      pairs = std::min<std::uint64_t>(pairs, active / 2);
      const auto chosen = select_pairs(active, pairs, pairing_rng_);
      record.pairs.reserve(chosen.size());
      for (const auto &[i, j] : chosen) {
        PairDraw draw;
        draw.i = i;
        draw.j = j;
        draw.theta = 2.0 * std::numbers::pi * uniform_open01(angle_rng_);
        draw.xi = uniform_open01(rejection_rng_);
        record.pairs.push_back(draw);
      }
    }

    const auto &basis = ensemble.basis();
    VectorX<Scalar> omega(2);
    for (const auto &p : record.pairs) {
      auto vi = ensemble.particle(static_cast<int>(p.i));
      auto vj = ensemble.particle(static_cast<int>(p.j));
      if (is_kac) {
        kac_rotate<Scalar>(vi, vj, Scalar(p.theta));
      } else {
        omega << Scalar(std::cos(p.theta)), Scalar(std::sin(p.theta));
        if (vhs) {
          const VhsOutcome out = vhs_collide<Scalar>(vi, vj, omega, Scalar(p.xi),
                                                     Scalar(record.sigma), *vhs, mode_, basis, ws_);
          stats_.accepted += out.mean_acceptance;
          stats_.skipped_nodes += out.skipped_nodes;
        } else {
          const double gap = static_cast<double>(maxwell_collide<Scalar>(vi, vj, omega, basis, ws_));
          stats_.projection_energy_loss += (options_.mirrored ? 2.0 : 1.0) * gap / n;
        }
      }
      if (options_.mirrored) {
        ensemble.particle(static_cast<int>(p.i + active)) = -ensemble.particle(static_cast<int>(p.i));
        ensemble.particle(static_cast<int>(p.j + active)) = -ensemble.particle(static_cast<int>(p.j));
      }
      ++stats_.collisions;
    }
    return record;
  }

 private:
  KernelSpec kernel_;
  RegularizationMode mode_;
  StepOptions options_;
  RandomEngine sround_rng_, pairing_rng_, angle_rng_, rejection_rng_;
  CollisionWorkspace<Scalar> ws_;
  StepStats stats_;
};

}  // namespace dsmcsg

#endif  // DSMCSG_COLLISION_HPP_
