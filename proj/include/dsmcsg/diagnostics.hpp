#ifndef DSMCSG_DIAGNOSTICS_HPP_
#define DSMCSG_DIAGNOSTICS_HPP_

#include "dsmcsg/ensemble.hpp"
#include "dsmcsg/random_space.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dsmcsg {

/// Table that maps gPC coefficients of `source` to values at the nodes of
/// `target` (target.nodes_count() x source.modes()).
template <typename Scalar>
MatrixX<Scalar> evaluation_table(const RandomBasis<Scalar> &source,
                                 const RandomBasis<Scalar> &target) {
  if (source.random_dims() != target.random_dims()) {
    throw std::invalid_argument("bases live on random spaces of different dimension");
  }
  if (&source == &target) return source.eval_table();
  MatrixX<Scalar> table(target.nodes_count(), source.modes());
  for (int h = 0; h < target.nodes_count(); ++h) {
    table.row(h) = source.evaluate_basis(VectorX<Scalar>(target.nodes().col(h)));
  }
  return table;
}

namespace detail {

/// Calls fn(block, first, count) with nodal values (Q x d_v*count) of
/// consecutive particle chunks, keeping memory bounded for large N.
template <typename Scalar, typename Fn>
void for_each_nodal_chunk(const Ensemble<Scalar> &ensemble, const MatrixX<Scalar> &table, Fn &&fn) {
  constexpr int kChunk = 4096;
  const int dv = ensemble.velocity_dims();
  MatrixX<Scalar> block;
  for (int first = 0; first < ensemble.size(); first += kChunk) {
    const int count = std::min(kChunk, ensemble.size() - first);
    block.noalias() = table * ensemble.coefficients().middleCols(dv * first, dv * count);
    fn(block, first, count);
  }
}

inline void require_nonempty(int n) {
  if (n <= 0) throw std::invalid_argument("empty ensemble");
}

}  // namespace detail

/// Which scalar a moment is taken of: |v| or one Cartesian component.
enum class MomentComponent { Speed, X, Y };

/// One diagnostic snapshot: nodal values, their gPC coefficients and the
/// quadrature expectation and variance over the random space.
struct MomentEntry {
  double t = 0.0;
  Eigen::VectorXd nodal;
  Eigen::VectorXd coefficients;
  double mean = 0.0;
  double variance = 0.0;
};

struct MomentSeries {
  std::string name;
  std::vector<MomentEntry> entries;
};

template <typename Scalar>
MomentEntry make_entry(const RandomBasis<Scalar> &basis, const VectorX<Scalar> &nodal, double t) {
  MomentEntry entry;
  entry.t = t;
  entry.nodal = nodal.template cast<double>();
  entry.coefficients = project_all(basis, nodal).template cast<double>();
  entry.mean = static_cast<double>(expectation(basis, nodal));
  entry.variance = static_cast<double>(variance(basis, nodal));
  return entry;
}

/// Nodal k-th moment (1/N) sum_i q(v_i(z_h))^k at the nodes of `on`, where q
/// is |v| or the selected component. In 1D Speed and X coincide in even k;
/// odd k with Speed uses the signed velocity there.
template <typename Scalar>
VectorX<Scalar> moment_nodal(const Ensemble<Scalar> &ensemble, int k, MomentComponent component,
                             const RandomBasis<Scalar> &on) {
  if (k < 0) throw std::invalid_argument("moment order must be non-negative");
  detail::require_nonempty(ensemble.size());
  const int dv = ensemble.velocity_dims();
  if (dv == 1 && component == MomentComponent::Y) {
    throw std::invalid_argument("1D ensembles have no y component");
  }
  const MatrixX<Scalar> table = evaluation_table(ensemble.basis(), on);
  VectorX<Scalar> sum = VectorX<Scalar>::Zero(on.nodes_count());
  detail::for_each_nodal_chunk(ensemble, table, [&](const MatrixX<Scalar> &block, int, int count) {
    for (int p = 0; p < count; ++p) {
      const auto v = block.middleCols(dv * p, dv);
      VectorX<Scalar> q;
      if (dv == 1 || component == MomentComponent::X) {
        q = v.col(0);
      } else if (component == MomentComponent::Y) {
        q = v.col(1);
      } else {
        q = v.rowwise().norm();
      }
      sum += q.array().pow(k).matrix();
    }
  });
  return sum / Scalar(ensemble.size());
}

template <typename Scalar>
MomentEntry moment(const Ensemble<Scalar> &ensemble, int k,
                   MomentComponent component = MomentComponent::Speed, double t = 0.0) {
  return make_entry(ensemble.basis(), moment_nodal(ensemble, k, component, ensemble.basis()), t);
}

/// Centered second moments P_ij(z_h) = (1/N) sum (v_i - u_i)(v_j - u_j).
template <typename Scalar = double>
struct StressTensor {
  VectorX<Scalar> p11, p22, p12;

  VectorX<Scalar> trace() const { return p11 + p22; }
  VectorX<Scalar> temperature() const { return (p11 + p22) / 2; }
};

template <typename Scalar>
StressTensor<Scalar> stress_tensor(const Ensemble<Scalar> &ensemble, const RandomBasis<Scalar> &on) {
  if (ensemble.velocity_dims() != 2) throw std::invalid_argument("stress tensor needs d_v = 2");
  detail::require_nonempty(ensemble.size());
  const MatrixX<Scalar> table = evaluation_table(ensemble.basis(), on);
  const Eigen::Index q = on.nodes_count();
  MatrixX<Scalar> first = MatrixX<Scalar>::Zero(q, 2);
  VectorX<Scalar> sxx = VectorX<Scalar>::Zero(q), syy = sxx, sxy = sxx;
  // Shifted sums: centre on a provisional mean to avoid cancellation.
  MatrixX<Scalar> mean_coeffs = MatrixX<Scalar>::Zero(ensemble.modes(), 2);
  for (int i = 0; i < ensemble.size(); ++i) mean_coeffs += ensemble.particle(i);
  const MatrixX<Scalar> shift = table * (mean_coeffs / Scalar(ensemble.size()));
  detail::for_each_nodal_chunk(ensemble, table, [&](const MatrixX<Scalar> &block, int, int count) {
    for (int p = 0; p < count; ++p) {
      const MatrixX<Scalar> d = block.middleCols(2 * p, 2) - shift;
      first += d;
      sxx += d.col(0).cwiseProduct(d.col(0));
      syy += d.col(1).cwiseProduct(d.col(1));
      sxy += d.col(0).cwiseProduct(d.col(1));
    }
  });
  const Scalar n = Scalar(ensemble.size());
  first /= n;
  StressTensor<Scalar> out;
  out.p11 = sxx / n - first.col(0).cwiseProduct(first.col(0));
  out.p22 = syy / n - first.col(1).cwiseProduct(first.col(1));
  out.p12 = sxy / n - first.col(0).cwiseProduct(first.col(1));
  return out;
}

template <typename Scalar>
StressTensor<Scalar> stress_tensor(const Ensemble<Scalar> &ensemble) {
  return stress_tensor(ensemble, ensemble.basis());
}

/// Histogram window. With marginal >= 0 only that velocity component is
/// binned; otherwise the full d_v-dimensional grid.
struct GridSpec {
  double lower = -5.0;
  double upper = 5.0;
  int bins = 100;
  int marginal = -1;
};

struct DensityGrid {
  GridSpec spec;
  int dims = 1;             // dimension of the binned space
  double mass_scale = 1.0;  // each nodal histogram integrates to this
  Eigen::MatrixXd nodal;    // Q x bins^dims, cell index ix + bins * iy
  Eigen::VectorXd mean;     // E[f] per cell
  Eigen::VectorXd var;      // Var(f) per cell
  std::uint64_t dropped = 0;  // (particle, node) samples outside the window

  double width() const { return (spec.upper - spec.lower) / spec.bins; }
  double cell_volume() const { return std::pow(width(), dims); }
  double center(int k) const { return spec.lower + (k + 0.5) * width(); }
};

/// Per-node histograms with left-closed bins [a, b); samples outside the
/// window are dropped and counted.
template <typename Scalar>
DensityGrid density_reconstruct(const Ensemble<Scalar> &ensemble, const GridSpec &spec,
                                double mass_scale = 1.0) {
  if (spec.bins < 2) throw std::invalid_argument("density grid needs at least 2 bins");
  if (!(std::isfinite(spec.lower) && std::isfinite(spec.upper) && spec.upper > spec.lower)) {
    throw std::invalid_argument("degenerate density grid bounds");
  }
  if (!(mass_scale > 0.0)) throw std::invalid_argument("mass scale must be positive");
  detail::require_nonempty(ensemble.size());
  const int dv = ensemble.velocity_dims();
  if (spec.marginal >= dv) throw std::invalid_argument("marginal component out of range");

  DensityGrid grid;
  grid.spec = spec;
  grid.dims = spec.marginal >= 0 ? 1 : dv;
  grid.mass_scale = mass_scale;
  const auto &basis = ensemble.basis();
  const int q = basis.nodes_count();
  const Eigen::Index cells = grid.dims == 1 ? spec.bins : Eigen::Index(spec.bins) * spec.bins;
  grid.nodal = Eigen::MatrixXd::Zero(q, cells);
  const double inv_width = spec.bins / (spec.upper - spec.lower);

  auto bin_of = [&](double v) -> long {
    if (!(v >= spec.lower && v < spec.upper)) return -1;
    const long k = static_cast<long>(std::floor((v - spec.lower) * inv_width));
    return std::min<long>(k, spec.bins - 1);
  };

  detail::for_each_nodal_chunk(ensemble, basis.eval_table(), [&](const MatrixX<Scalar> &block, int, int count) {
    for (int p = 0; p < count; ++p) {
      for (int h = 0; h < q; ++h) {
        long cell;
        if (grid.dims == 1) {
          const int c = spec.marginal >= 0 ? spec.marginal : 0;
          cell = bin_of(static_cast<double>(block(h, dv * p + c)));
        } else {
          const long ix = bin_of(static_cast<double>(block(h, dv * p)));
          const long iy = bin_of(static_cast<double>(block(h, dv * p + 1)));
          cell = (ix < 0 || iy < 0) ? -1 : ix + spec.bins * iy;
        }
        if (cell < 0) {
          ++grid.dropped;
        } else {
          grid.nodal(h, cell) += 1.0;
        }
      }
    }
  });

  grid.nodal *= mass_scale / (ensemble.size() * grid.cell_volume());
  const Eigen::VectorXd w = basis.weights().template cast<double>();
  grid.mean = grid.nodal.transpose() * w;
  grid.var = (grid.nodal.array().square().matrix().transpose() * w - grid.mean.cwiseAbs2())
                 .cwiseMax(0.0);
  return grid;
}

/// ||a - b||_{L^2(Omega)} for values given at the nodes of `basis`.
template <typename Scalar, typename A, typename B>
Scalar l2_error_vs_reference(const RandomBasis<Scalar> &basis, const Eigen::MatrixBase<A> &values,
                             const Eigen::MatrixBase<B> &reference) {
  if (values.size() != basis.nodes_count() || reference.size() != basis.nodes_count()) {
    throw std::invalid_argument("values must be given at the reference nodes");
  }
  return l2_omega_norm(basis, VectorX<Scalar>(values - reference));
}

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
};

/// Ordinary least squares y = intercept + slope x.
inline LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("fit_line: size mismatch");
  const std::size_t n = x.size();
  if (n < 2) throw std::invalid_argument("fit_line needs at least two points");
  Eigen::MatrixXd a(n, 2);
  Eigen::VectorXd b(n);
  for (std::size_t i = 0; i < n; ++i) {
    a(i, 0) = 1.0;
    a(i, 1) = x[i];
    b(i) = y[i];
  }
  const Eigen::Vector2d beta = a.colPivHouseholderQr().solve(b);
  LinearFit fit;
  fit.intercept = beta(0);
  fit.slope = beta(1);
  if (n > 2) {
    const double rss = (a * beta - b).squaredNorm();
    const Eigen::Matrix2d cov = (a.transpose() * a).inverse() * (rss / (n - 2));
    fit.slope_stderr = std::sqrt(cov(1, 1));
  }
  return fit;
}

struct RmseStudy {
  std::vector<int> particles;
  std::vector<double> rmse;
  /// log-log slope; NaN when some RMSE is exactly zero.
  double slope = std::numeric_limits<double>::quiet_NaN();
};

/// Monte Carlo error of the particle estimate of E_f[phi(v)] against its exact
/// value, measured in L^2(Omega) and averaged over `trials` fresh samples.
inline RmseStudy rmse_scaling_check(const InitialDensity &density,
                                    const std::function<double(const Eigen::VectorXd &)> &phi,
                                    const std::function<double(double)> &exact_mean,
                                    std::shared_ptr<const RandomBasisd> basis,
                                    const std::vector<int> &particle_counts, int trials,
                                    std::uint64_t seed) {
  if (particle_counts.size() < 3) throw std::invalid_argument("rmse scaling needs at least 3 N values");
  if (trials < 1) throw std::invalid_argument("rmse scaling needs at least one trial");
  const int q = basis->nodes_count();
  Eigen::VectorXd exact(q);
  for (int h = 0; h < q; ++h) exact(h) = exact_mean(basis->nodes()(0, h));

  RmseStudy out;
  RandomStreams streams(seed);
  std::uint64_t index = 0;
  for (int n : particle_counts) {
    double sq = 0.0;
    for (int trial = 0; trial < trials; ++trial) {
      RandomEngine engine = streams.spawn(Stream::Sampling, ++index);
      const Ensembled ensemble = sample_initial<double>(density, n, basis, engine);
      Eigen::VectorXd estimate = Eigen::VectorXd::Zero(q);
      const int dv = ensemble.velocity_dims();
      detail::for_each_nodal_chunk(ensemble, basis->eval_table(),
                                   [&](const Eigen::MatrixXd &block, int, int count) {
                                     for (int p = 0; p < count; ++p) {
                                       for (int h = 0; h < q; ++h) {
                                         estimate(h) += phi(block.row(h).segment(dv * p, dv).transpose());
                                       }
                                     }
                                   });
      estimate /= n;
      const double err = l2_error_vs_reference(*basis, estimate, exact);
      sq += err * err;
    }
    out.particles.push_back(n);
    out.rmse.push_back(std::sqrt(sq / trials));
  }
  bool positive = true;
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < out.rmse.size(); ++i) {
    positive = positive && out.rmse[i] > 0.0;
    lx.push_back(std::log(static_cast<double>(out.particles[i])));
    ly.push_back(std::log(out.rmse[i]));
  }
  if (positive) out.slope = fit_line(lx, ly).slope;
  return out;
}

}  // namespace dsmcsg

#endif  // DSMCSG_DIAGNOSTICS_HPP_
