#ifndef DSMCSG_EXACT_HPP_
#define DSMCSG_EXACT_HPP_

// Closed-form BKW-type solutions used as verification oracles.

#include "dsmcsg/ensemble.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <utility>

namespace dsmcsg::exact {

/// Kac model with alpha(z) = 2 + kappa z and initial density
/// alpha^{3/2} v^2 exp(-alpha v^2) (mass sqrt(pi)/2). `frequency` is the
/// collision frequency of the normalized dynamics (1 for the Kac kernel).
struct KacExactParams {
  double kappa = 0.25;
  double frequency = 1.0;

  double alpha(double z) const { return 2.0 + kappa * z; }
};

struct KacShape {
  double a = 0.0;  // A(z, t)
  double b = 0.0;  // B(z, t)
  double s = 0.0;  // s(z, t)
};

/// f = (A + B v^2) exp(-s v^2), s(z,t) = alpha e^{ct} / (3 e^{ct} - 2),
/// A = 3/4 sqrt(s) (1 - s / alpha), B = s^{3/2} / 2 (3 s / alpha - 1), with
/// c = frequency / 8.
inline KacShape kac_shape(double z, double t, const KacExactParams &params) {
  if (!(t >= 0.0)) throw std::invalid_argument("time must be non-negative");
  const double alpha = params.alpha(z);
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha(z) must be positive");
  const double e = std::exp(params.frequency * t / 8.0);
  const double s = alpha * e / (3.0 * e - 2.0);
  KacShape shape;
  shape.s = s;
  shape.a = 0.75 * std::sqrt(s) * (1.0 - s / alpha);
  shape.b = 0.5 * s * std::sqrt(s) * (3.0 * s / alpha - 1.0);
  return shape;
}

inline double kac_exact_density(double z, double v, double t, const KacExactParams &params) {
  const KacShape k = kac_shape(z, t, params);
  return (k.a + k.b * v * v) * std::exp(-k.s * v * v);
}

/// k-th velocity moment, k in {0, 1, 2, 4}; `normalized` divides by the mass.
inline double kac_exact_moment(double z, double t, int k, const KacExactParams &params,
                               bool normalized = false) {
  const KacShape f = kac_shape(z, t, params);
  const double sp = std::sqrt(std::numbers::pi);
  const double s = f.s;
  const double mass = f.a * sp / std::sqrt(s) + f.b * sp / (2.0 * std::pow(s, 1.5));
  double value = 0.0;
  switch (k) {
    case 0: value = mass; break;
    case 1: value = 0.0; break;
    case 2: value = f.a * sp / (2.0 * std::pow(s, 1.5)) + 3.0 * f.b * sp / (4.0 * std::pow(s, 2.5)); break;
    case 4: value = 3.0 * f.a * sp / (4.0 * std::pow(s, 2.5)) + 15.0 * f.b * sp / (8.0 * std::pow(s, 3.5)); break;
    default: throw std::invalid_argument("Kac exact moments are available for k in {0, 1, 2, 4}");
  }
  return normalized ? value / mass : value;
}

/// 2D Maxwell BKW solution with alpha(z) = 2 + kappa z:
/// f = 1/(2 pi s) [1 - (1 - alpha s)/(alpha s) (1 - |v|^2/(2 s))] e^{-|v|^2/(2s)},
/// s(z,t) = (2 - e^{-frequency t / 8}) / (2 alpha).
struct Maxwell2DExactParams {
  double kappa = 0.25;
  double frequency = 1.0;

  double alpha(double z) const { return 2.0 + kappa * z; }
};

inline double maxwell2d_s(double z, double t, const Maxwell2DExactParams &params) {
  if (!(t >= 0.0)) throw std::invalid_argument("time must be non-negative");
  const double alpha = params.alpha(z);
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha(z) must be positive");
  return (2.0 - std::exp(-params.frequency * t / 8.0)) / (2.0 * alpha);
}

inline double maxwell2d_exact_density(double z, double speed_squared, double t,
                                      const Maxwell2DExactParams &params) {
  const double s = maxwell2d_s(z, t, params);
  const double as = params.alpha(z) * s;
  const double c = (1.0 - as) / as;
  return (1.0 - c * (1.0 - speed_squared / (2.0 * s))) * std::exp(-speed_squared / (2.0 * s)) /
         (2.0 * std::numbers::pi * s);
}

/// Marginal of the 2D solution in one Cartesian component.
inline double maxwell2d_exact_marginal(double z, double vx, double t,
                                       const Maxwell2DExactParams &params) {
  const double s = maxwell2d_s(z, t, params);
  const double as = params.alpha(z) * s;
  const double c = (1.0 - as) / as;
  const double r = vx * vx / (2.0 * s);
  return (1.0 - c / 2.0 + c * r) * std::exp(-r) / std::sqrt(2.0 * std::numbers::pi * s);
}

/// Moments of |v|: k = 0 gives 1, k = 2 gives 2s(1 + c) = 2/alpha, k = 4 gives
/// 8 s^2 (1 + 2c), with c = (1 - alpha s)/(alpha s).
inline double maxwell2d_exact_moment(double z, double t, int k, const Maxwell2DExactParams &params) {
  const double s = maxwell2d_s(z, t, params);
  const double as = params.alpha(z) * s;
  const double c = (1.0 - as) / as;
  switch (k) {
    case 0: return 1.0;
    case 2: return 2.0 * s * (1.0 + c);
    case 4: return 8.0 * s * s * (1.0 + 2.0 * c);
    default: throw std::invalid_argument("2D Maxwell exact moments are available for k in {0, 2, 4}");
  }
}

/// Stress tensor for Maxwell molecules from the two-Gaussian initial data:
/// P11 = T(z) + w(t)/2, P22 = T(z) - w(t)/2, w(t) = w0 e^{-frequency t / 2}.
///
/// With `from_initial_data` unset this is the literal parameterization
/// T = sigma^2, w0 constant (default 4 pi). With it set, T and w0 are the
/// values the two-Gaussian density actually carries: T = 3 sigma^2 and
/// w0 = 4 sigma^2.
struct StressExactParams {
  double kappa1 = 0.1;
  double w0 = 4.0 * std::numbers::pi;
  double frequency = 1.0;
  double gamma = 0.0;
  bool from_initial_data = false;

  double sigma(double z) const { return two_gaussian_sigma(kappa1, z); }
};

inline std::pair<double, double> stress_exact(double z, double t, const StressExactParams &params) {
  if (params.gamma != 0.0) {
    throw std::invalid_argument("exact stress evolution only exists for Maxwell molecules (gamma = 0)");
  }
  if (!(t >= 0.0)) throw std::invalid_argument("time must be non-negative");
  const double sigma2 = params.sigma(z) * params.sigma(z);
  const double temperature = params.from_initial_data ? 3.0 * sigma2 : sigma2;
  const double w0 = params.from_initial_data ? 4.0 * sigma2 : params.w0;
  const double w = w0 * std::exp(-params.frequency * t / 2.0);
  return {temperature + w / 2.0, temperature - w / 2.0};
}

}  // namespace dsmcsg::exact

#endif  // DSMCSG_EXACT_HPP_
