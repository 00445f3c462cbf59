#ifndef DSMCSG_CONFIG_HPP_
#define DSMCSG_CONFIG_HPP_

// Run configuration: flat `key = value` files, every key also a CLI flag.

#include "dsmcsg/collision.hpp"
#include "dsmcsg/diagnostics.hpp"
#include "dsmcsg/ensemble.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace dsmcsg {

enum class TestCase { Kac, Maxwell2D, Vhs, VhsBivariate };

std::string_view to_string(TestCase test);

struct SimulationConfig {
  TestCase test = TestCase::Kac;
  int particles = 10000;
  int degree = 5;       // M
  int quad_order = -1;  // H; negative means H = M
  double dt = 0.1;
  double t_max = 5.0;
  std::uint64_t seed = 1;

  double kappa = 0.25;   // Kac and 2D Maxwell: alpha(z) = 2 + kappa z
  double kappa1 = 0.1;   // VHS: sigma(z1)
  double kappa2 = 0.0;   // VHS bivariate: gamma(z2) = kappa2 (1 + z2)
  double gamma = 0.0;    // VHS: constant exponent
  double c_gamma = 0.15915494309189535;  // 1 / (2 pi)
  double mu = 1.0;       // 2D Maxwell collision frequency

  std::string mode = "indicator";  // indicator | sigmoid | sigmoid-thermalized
  double beta = 10.0;
  std::string coupling = "scaling";  // scaling | sort
  bool symmetric = false;  // antithetic sampling plus mirrored collisions

  GridSpec grid;
  std::vector<double> density_times = {0.0, 1.0, 5.0};

  std::filesystem::path output_dir = "out";
  bool record_tree = false;
  std::optional<std::filesystem::path> replay_tree;

  int effective_quad_order() const { return quad_order < 0 ? degree : quad_order; }
  int steps() const;
};

struct ConfigKey {
  std::string_view name;
  std::string_view help;
  bool is_flag = false;  // boolean switch; "true"/"false" in files
};

/// Every recognised key, in a fixed order.
std::span<const ConfigKey> config_keys();

/// Sets one key from its text value; throws std::invalid_argument on an
/// unknown key or malformed value.
void apply_setting(SimulationConfig &config, std::string_view key, std::string_view value);

/// Current value of every key, in config_keys() order.
std::vector<std::pair<std::string, std::string>> config_entries(const SimulationConfig &config);

/// Parses `key = value` lines; '#' and ';' start comments, [section] lines are
/// ignored.
SimulationConfig parse_config(std::istream &in, SimulationConfig base = {});
SimulationConfig load_config(const std::filesystem::path &path, SimulationConfig base = {});

/// Checks ranges and cross-field constraints, including mu dt <= 1 for the
/// fixed-frequency kernels.
void validate(const SimulationConfig &config);

std::shared_ptr<const RandomBasisd> make_basis(const SimulationConfig &config, int degree,
                                               int quad_order);
std::shared_ptr<const RandomBasisd> make_basis(const SimulationConfig &config);
InitialDensity make_density(const SimulationConfig &config);
KernelSpec make_kernel(const SimulationConfig &config);
RegularizationMode make_mode(const SimulationConfig &config);
SamplingOptions make_sampling_options(const SimulationConfig &config);

}  // namespace dsmcsg

#endif  // DSMCSG_CONFIG_HPP_
