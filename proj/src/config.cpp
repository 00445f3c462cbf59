#include "dsmcsg/config.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <stdexcept>
#include <string>

namespace dsmcsg {
namespace {

constexpr std::array kKeys = {
    ConfigKey{"test", "kac | maxwell2d | vhs | vhs-bivariate"},
    ConfigKey{"n", "number of particles N"},
    ConfigKey{"m", "gPC degree M"},
    ConfigKey{"h", "quadrature degree H (default M)"},
    ConfigKey{"dt", "time step"},
    ConfigKey{"tmax", "final time"},
    ConfigKey{"seed", "master RNG seed"},
    ConfigKey{"kappa", "alpha(z) = 2 + kappa z (kac, maxwell2d)"},
    ConfigKey{"kappa1", "sigma(z1) slope (vhs)"},
    ConfigKey{"kappa2", "gamma(z2) = kappa2 (1 + z2) (vhs-bivariate)"},
    ConfigKey{"gamma", "constant VHS exponent (vhs)"},
    ConfigKey{"cgamma", "VHS angular constant C_gamma"},
    ConfigKey{"mu", "collision frequency (maxwell2d)"},
    ConfigKey{"mode", "indicator | sigmoid | sigmoid-thermalized"},
    ConfigKey{"beta", "sigmoid sharpness"},
    ConfigKey{"coupling", "scaling | sort (1D only)"},
    ConfigKey{"symmetric", "antithetic particles with mirrored collisions", true},
    ConfigKey{"grid-lower", "density grid lower bound"},
    ConfigKey{"grid-upper", "density grid upper bound"},
    ConfigKey{"grid-bins", "density grid bins per axis"},
    ConfigKey{"grid-marginal", "bin only this velocity component (-1: full grid)"},
    ConfigKey{"density-times", "comma separated output times for density grids"},
    ConfigKey{"out", "output directory"},
    ConfigKey{"record-tree", "write the collision tree to <out>/tree.bin", true},
    ConfigKey{"replay-tree", "replay a recorded collision tree"},
};

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
  throw std::invalid_argument("invalid value '" + std::string(value) + "' for key '" +
                              std::string(key) + "'");
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
  text = trim(text);
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) bad_value(key, text);
  return value;
}

bool parse_bool(std::string_view key, std::string_view text) {
  text = trim(text);
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  bad_value(key, text);
}

std::vector<double> parse_list(std::string_view key, std::string_view text) {
  std::vector<double> out;
  while (!text.empty()) {
    const auto comma = text.find(',');
    out.push_back(parse_number<double>(key, text.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  return out;
}

}  // namespace

std::string_view to_string(TestCase test) {
  switch (test) {
    case TestCase::Kac: return "kac";
    case TestCase::Maxwell2D: return "maxwell2d";
    case TestCase::Vhs: return "vhs";
    case TestCase::VhsBivariate: return "vhs-bivariate";
  }
  return "unknown";
}

int SimulationConfig::steps() const {
  const double ratio = t_max / dt;
  const long n = std::lround(ratio);
  if (std::abs(ratio - static_cast<double>(n)) > 1e-9 * std::max(1.0, ratio)) {
    throw std::invalid_argument("tmax must be an integer multiple of dt");
  }
  return static_cast<int>(n);
}

std::span<const ConfigKey> config_keys() { return kKeys; }

void apply_setting(SimulationConfig &c, std::string_view key, std::string_view raw) {
  const std::string_view value = trim(raw);
  if (key == "test") {
    if (value == "kac") c.test = TestCase::Kac;
    else if (value == "maxwell2d") c.test = TestCase::Maxwell2D;
    else if (value == "vhs") c.test = TestCase::Vhs;
    else if (value == "vhs-bivariate") c.test = TestCase::VhsBivariate;
    else bad_value(key, value);
  } else if (key == "n") {
    c.particles = parse_number<int>(key, value);
  } else if (key == "m") {
    c.degree = parse_number<int>(key, value);
  } else if (key == "h") {
    c.quad_order = parse_number<int>(key, value);
  } else if (key == "dt") {
    c.dt = parse_number<double>(key, value);
  } else if (key == "tmax") {
    c.t_max = parse_number<double>(key, value);
  } else if (key == "seed") {
    c.seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "kappa") {
    c.kappa = parse_number<double>(key, value);
  } else if (key == "kappa1") {
    c.kappa1 = parse_number<double>(key, value);
  } else if (key == "kappa2") {
    c.kappa2 = parse_number<double>(key, value);
  } else if (key == "gamma") {
    c.gamma = parse_number<double>(key, value);
  } else if (key == "cgamma") {
    c.c_gamma = parse_number<double>(key, value);
  } else if (key == "mu") {
    c.mu = parse_number<double>(key, value);
  } else if (key == "mode") {
    if (value != "indicator" && value != "sigmoid" && value != "sigmoid-thermalized") {
      bad_value(key, value);
    }
    c.mode = std::string(value);
  } else if (key == "beta") {
    c.beta = parse_number<double>(key, value);
  } else if (key == "coupling") {
    if (value != "scaling" && value != "sort") bad_value(key, value);
    c.coupling = std::string(value);
  } else if (key == "symmetric") {
    c.symmetric = parse_bool(key, value);
  } else if (key == "grid-lower") {
    c.grid.lower = parse_number<double>(key, value);
  } else if (key == "grid-upper") {
    c.grid.upper = parse_number<double>(key, value);
  } else if (key == "grid-bins") {
    c.grid.bins = parse_number<int>(key, value);
  } else if (key == "grid-marginal") {
    c.grid.marginal = parse_number<int>(key, value);
  } else if (key == "density-times") {
    c.density_times = parse_list(key, value);
  } else if (key == "out") {
    c.output_dir = std::string(value);
  } else if (key == "record-tree") {
    c.record_tree = parse_bool(key, value);
  } else if (key == "replay-tree") {
    if (value.empty()) c.replay_tree.reset();
    else c.replay_tree = std::string(value);
  } else {
    throw std::invalid_argument("unknown configuration key '" + std::string(key) + "'");
  }
}

std::vector<std::pair<std::string, std::string>> config_entries(const SimulationConfig &c) {
  auto num = [](double v) {
    std::array<char, 32> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), ptr);
  };
  std::string times;
  for (std::size_t i = 0; i < c.density_times.size(); ++i) {
    if (i > 0) times += ',';
    times += num(c.density_times[i]);
  }
  return {
      {"test", std::string(to_string(c.test))},
      {"n", std::to_string(c.particles)},
      {"m", std::to_string(c.degree)},
      {"h", std::to_string(c.effective_quad_order())},
      {"dt", num(c.dt)},
      {"tmax", num(c.t_max)},
      {"seed", std::to_string(c.seed)},
      {"kappa", num(c.kappa)},
      {"kappa1", num(c.kappa1)},
      {"kappa2", num(c.kappa2)},
      {"gamma", num(c.gamma)},
      {"cgamma", num(c.c_gamma)},
      {"mu", num(c.mu)},
      {"mode", c.mode},
      {"beta", num(c.beta)},
      {"coupling", c.coupling},
      {"symmetric", c.symmetric ? "true" : "false"},
      {"grid-lower", num(c.grid.lower)},
      {"grid-upper", num(c.grid.upper)},
      {"grid-bins", std::to_string(c.grid.bins)},
      {"grid-marginal", std::to_string(c.grid.marginal)},
      {"density-times", times},
      {"out", c.output_dir.string()},
      {"record-tree", c.record_tree ? "true" : "false"},
      {"replay-tree", c.replay_tree ? c.replay_tree->string() : ""},
  };
}

SimulationConfig parse_config(std::istream &in, SimulationConfig base) {
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    std::string_view text = line;
    if (const auto c = text.find_first_of("#;"); c != std::string_view::npos) text = text.substr(0, c);
    text = trim(text);
    if (text.empty() || text.front() == '[') continue;
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) {
      throw std::invalid_argument("line " + std::to_string(number) + ": expected key = value");
    }
    apply_setting(base, trim(text.substr(0, eq)), text.substr(eq + 1));
  }
  return base;
}

SimulationConfig load_config(const std::filesystem::path &path, SimulationConfig base) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  return parse_config(in, std::move(base));
}

void validate(const SimulationConfig &c) {
  if (c.particles < 2) throw std::invalid_argument("n must be at least 2");
  if (c.degree < 0) throw std::invalid_argument("m must be non-negative");
  if (c.effective_quad_order() < c.degree) throw std::invalid_argument("h must be at least m");
  if (!(c.dt > 0.0)) throw std::invalid_argument("dt must be positive");
  if (!(c.t_max >= 0.0)) throw std::invalid_argument("tmax must be non-negative");
  (void)c.steps();
  if (c.symmetric && c.particles % 2 != 0) throw std::invalid_argument("symmetric runs need even n");
  if (c.coupling == "sort" && c.test != TestCase::Kac) {
    throw std::invalid_argument("sort coupling is only available for the 1D Kac test");
  }
  validate(make_density(c));
  const KernelSpec kernel = make_kernel(c);
  validate(kernel);
  validate(make_mode(c));
  if (!std::holds_alternative<VhsKernel>(kernel)) {
    const double mu = collision_frequency(kernel, velocity_dims(make_density(c)), 0.0);
    if (mu * c.dt > 1.0 + 1e-12) throw std::invalid_argument("mu * dt must not exceed 1");
  }
  if (c.grid.bins < 2 || !(c.grid.upper > c.grid.lower)) {
    throw std::invalid_argument("invalid density grid");
  }
  if (c.grid.marginal >= velocity_dims(make_density(c))) {
    throw std::invalid_argument("grid-marginal exceeds the velocity dimension");
  }
}

std::shared_ptr<const RandomBasisd> make_basis(const SimulationConfig &c, int degree, int quad_order) {
  const int dims = c.test == TestCase::VhsBivariate ? 2 : 1;
  return std::make_shared<const RandomBasisd>(
      build_basis<double>(std::vector<RandomDimension>(dims), degree, quad_order));
}

std::shared_ptr<const RandomBasisd> make_basis(const SimulationConfig &c) {
  return make_basis(c, c.degree, c.effective_quad_order());
}

InitialDensity make_density(const SimulationConfig &c) {
  switch (c.test) {
    case TestCase::Kac: return KacSquaredGaussian{c.kappa};
    case TestCase::Maxwell2D: return Maxwell2D{c.kappa};
    case TestCase::Vhs:
    case TestCase::VhsBivariate: return TwoGaussians2D{c.kappa1};
  }
  throw std::logic_error("unhandled test case");
}

KernelSpec make_kernel(const SimulationConfig &c) {
  switch (c.test) {
    case TestCase::Kac: return KacKernel{};
    case TestCase::Maxwell2D: return MaxwellKernel{c.mu};
    case TestCase::Vhs: return VhsKernel::constant(c.c_gamma, c.gamma);
    case TestCase::VhsBivariate: return VhsKernel::affine(c.c_gamma, c.kappa2, 1);
  }
  throw std::logic_error("unhandled test case");
}

RegularizationMode make_mode(const SimulationConfig &c) {
  if (c.mode == "indicator") return Indicator{};
  if (c.mode == "sigmoid") return Sigmoid{c.beta};
  if (c.mode == "sigmoid-thermalized") return SigmoidThermalized{c.beta};
  throw std::invalid_argument("unknown mode '" + c.mode + "'");
}

SamplingOptions make_sampling_options(const SimulationConfig &c) {
  SamplingOptions options;
  options.coupling = c.coupling == "sort" ? CouplingMethod::SortCoupling : CouplingMethod::TemperatureScaling;
  options.symmetric = c.symmetric;
  return options;
}

}  // namespace dsmcsg
