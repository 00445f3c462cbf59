#include "dsmcsg/runner.hpp"

#include "dsmcsg/csv.hpp"
#include "dsmcsg/exact.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <numbers>
#include <stdexcept>

#ifndef DSMCSG_VERSION
#define DSMCSG_VERSION "unknown"
#endif

namespace dsmcsg {
namespace {

bool is_vhs(TestCase test) { return test == TestCase::Vhs || test == TestCase::VhsBivariate; }

double density_mass_scale(TestCase test) {
  // Particles sample the normalized Kac density; the exact one has mass sqrt(pi)/2.
  return test == TestCase::Kac ? std::sqrt(std::numbers::pi) / 2.0 : 1.0;
}

void check_replay(const CollisionTree &tree, const SimulationConfig &config, int steps) {
  if (tree.particles != static_cast<std::uint64_t>(config.particles)) {
    throw std::runtime_error("replay mismatch: tree has N = " + std::to_string(tree.particles) +
                             ", config has N = " + std::to_string(config.particles));
  }
  if (tree.steps.size() != static_cast<std::size_t>(steps)) {
    throw std::runtime_error("replay mismatch: tree has " + std::to_string(tree.steps.size()) +
                             " steps, config needs " + std::to_string(steps));
  }
  if (tree.dt != config.dt) throw std::runtime_error("replay mismatch: different dt");
  if (tree.mirrored() != config.symmetric) {
    throw std::runtime_error("replay mismatch: mirrored stepping flag differs");
  }
}

bool is_density_time(const SimulationConfig &config, double t) {
  return std::any_of(config.density_times.begin(), config.density_times.end(),
                     [&](double target) { return std::abs(t - target) < config.dt / 2; });
}

void record(const SimulationConfig &config, const SimulateOptions &options,
            const RandomBasisd &observe, const Ensembled &ensemble, double t, RunResult &result) {
  result.times.push_back(t);
  if (is_vhs(config.test)) {
    const auto p = stress_tensor(ensemble, observe);
    result.observable.entries.push_back(make_entry(observe, p.p11, t));
  } else {
    result.observable.entries.push_back(
        make_entry(observe, moment_nodal(ensemble, 4, MomentComponent::Speed, observe), t));
  }
  if (options.observable_only) return;

  const auto &basis = ensemble.basis();
  auto push = [&](std::size_t slot, const Eigen::VectorXd &nodal) {
    result.series[slot].entries.push_back(make_entry(basis, nodal, t));
  };
  if (config.test == TestCase::Kac) {
    push(0, moment_nodal(ensemble, 1, MomentComponent::X, basis));
    push(1, moment_nodal(ensemble, 2, MomentComponent::X, basis));
    push(2, moment_nodal(ensemble, 4, MomentComponent::X, basis));
  } else {
    push(0, moment_nodal(ensemble, 1, MomentComponent::X, basis));
    push(1, moment_nodal(ensemble, 2, MomentComponent::Speed, basis));
    push(2, moment_nodal(ensemble, 4, MomentComponent::Speed, basis));
    const auto p = stress_tensor(ensemble);
    push(3, p.p11);
    push(4, p.p22);
    push(5, p.p12);
  }
  if (is_density_time(config, t)) {
    result.densities.emplace_back(
        t, density_reconstruct(ensemble, config.grid, density_mass_scale(config.test)));
  }
}

}  // namespace

const MomentSeries &RunResult::find(const std::string &name) const {
  for (const auto &s : series) {
    if (s.name == name) return s;
  }
  if (observable.name == name) return observable;
  throw std::out_of_range("no series named " + name);
}

RunResult simulate(const SimulationConfig &config, const SimulateOptions &options) {
  validate(config);
  const int steps = config.steps();
  if (options.replay) check_replay(*options.replay, config, steps);

  const auto basis = make_basis(config);
  const RandomStreams streams(config.seed);
  RandomEngine sampling = streams.spawn(Stream::Sampling);
  auto ensemble = std::make_shared<Ensembled>(sample_initial<double>(
      make_density(config), config.particles, basis, sampling, make_sampling_options(config)));
  CollisionEngine<double> engine(make_kernel(config), make_mode(config), streams,
                                 StepOptions{config.symmetric});
  const RandomBasisd &observe = options.observe_on ? *options.observe_on : *basis;

  RunResult result;
  result.observable.name = is_vhs(config.test) ? "P11" : "M4";
  if (!options.observable_only) {
    const std::vector<std::string> names =
        config.test == TestCase::Kac
            ? std::vector<std::string>{"M1", "M2", "M4"}
            : std::vector<std::string>{"M1x", "M2", "M4", "P11", "P22", "P12"};
    for (const auto &name : names) result.series.push_back(MomentSeries{name, {}});
  }
  result.tree.seed = config.seed;
  result.tree.particles = static_cast<std::uint64_t>(config.particles);
  result.tree.dt = config.dt;
  result.tree.flags = config.symmetric ? CollisionTree::kMirroredFlag : 0;
  result.tree.steps.reserve(steps);

  record(config, options, observe, *ensemble, 0.0, result);
  for (int n = 0; n < steps; ++n) {
    const auto start = std::chrono::steady_clock::now();
    const StepRecord *replay = options.replay ? &options.replay->steps[n] : nullptr;
    result.tree.steps.push_back(engine.step(*ensemble, config.dt, replay));
    result.step_seconds.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    record(config, options, observe, *ensemble, (n + 1) * config.dt, result);
  }
  result.stats = engine.stats();
  result.final_ensemble = ensemble;
  return result;
}

std::vector<std::filesystem::path> run(const SimulationConfig &config) {
  validate(config);
  std::error_code ec;
  std::filesystem::create_directories(config.output_dir, ec);
  if (ec || !std::filesystem::is_directory(config.output_dir)) {
    throw std::runtime_error("cannot create output directory " + config.output_dir.string());
  }

  CollisionTree replay_tree;
  SimulateOptions options;
  if (config.replay_tree) {
    replay_tree = load_tree(*config.replay_tree);
    options.replay = &replay_tree;
  }
  const RunResult result = simulate(config, options);

  std::vector<std::filesystem::path> files;
  const auto &dir = config.output_dir;
  for (const auto &s : result.series) {
    write_expectation_csv(dir / (s.name + ".csv"), s);
    write_nodal_csv(dir / (s.name + "_nodal.csv"), s);
    files.push_back(dir / (s.name + ".csv"));
    files.push_back(dir / (s.name + "_nodal.csv"));
  }
  if (!result.densities.empty()) {
    write_density_csv(dir / "density.csv", result.densities);
    files.push_back(dir / "density.csv");
  }
  for (const auto &[t, grid] : result.densities) {
    if (grid.dropped > 0) {
      std::cerr << "warning: " << grid.dropped << " nodal samples fell outside the density window at t = "
                << t << "\n";
    }
  }
  if (config.record_tree) {
    save_tree(dir / "tree.bin", result.tree);
    files.push_back(dir / "tree.bin");
  }

  nlohmann::ordered_json manifest;
  manifest["version"] = DSMCSG_VERSION;
  for (const auto &[key, value] : config_entries(config)) manifest["config"][key] = value;
  manifest["steps"] = result.step_seconds.size();
  manifest["step_seconds"] = result.step_seconds;
  manifest["rng"]["seed"] = config.seed;
  manifest["rng"]["engine"] = "mt19937_64";
  for (Stream s : {Stream::Sampling, Stream::Sround, Stream::Pairing, Stream::Angles, Stream::Rejection}) {
    manifest["rng"]["streams"].push_back(
        {{"name", stream_name(s)}, {"id", static_cast<std::uint64_t>(s)}});
  }
  manifest["stats"]["collisions"] = result.stats.collisions;
  manifest["stats"]["projection_energy_loss"] = result.stats.projection_energy_loss;
  manifest["stats"]["vhs_acceptance_sum"] = result.stats.accepted;
  manifest["stats"]["thermalization_skipped_nodes"] = result.stats.skipped_nodes;
  for (const auto &[t, grid] : result.densities) {
    manifest["density_dropped"].push_back({{"t", t}, {"count", grid.dropped}});
  }
  files.push_back(dir / "manifest.json");
  for (const auto &f : files) manifest["outputs"].push_back(f.filename().string());

  std::ofstream out(dir / "manifest.json");
  if (!out) throw std::runtime_error("cannot write manifest");
  out << manifest.dump(2) << "\n";
  return files;
}

double ConvergenceTable::final_error(int degree) const {
  for (std::size_t i = 0; i < degrees.size(); ++i) {
    if (degrees[i] == degree) return errors[i].back();
  }
  throw std::out_of_range("degree not part of the study");
}

ConvergenceTable convergence_study(const SimulationConfig &config, const std::vector<int> &degrees,
                                   int reference_degree) {
  if (degrees.empty()) throw std::invalid_argument("no degrees to compare");
  if (reference_degree < *std::max_element(degrees.begin(), degrees.end())) {
    throw std::invalid_argument("reference degree must be at least every compared degree");
  }
  auto at_degree = [&](int m) {
    SimulationConfig c = config;
    c.degree = m;
    c.quad_order = config.quad_order < 0 ? -1 : std::max(config.quad_order, m);
    c.replay_tree.reset();
    return c;
  };

  const SimulationConfig ref_config = at_degree(reference_degree);
  const auto ref_basis = make_basis(ref_config);
  SimulateOptions ref_options;
  ref_options.observe_on = ref_basis.get();
  ref_options.observable_only = true;
  const RunResult reference = simulate(ref_config, ref_options);

  ConvergenceTable table;
  table.degrees = degrees;
  table.reference_degree = reference_degree;
  table.times = reference.times;
  for (int m : degrees) {
    SimulateOptions options = ref_options;
    options.replay = &reference.tree;
    const RunResult r = simulate(at_degree(m), options);
    std::vector<double> errs;
    for (std::size_t k = 0; k < r.times.size(); ++k) {
      errs.push_back(l2_error_vs_reference(*ref_basis, r.observable.entries[k].nodal,
                                           reference.observable.entries[k].nodal));
    }
    table.errors.push_back(std::move(errs));
  }
  return table;
}

void write_convergence_csv(const std::filesystem::path &path, const ConvergenceTable &table) {
  CsvWriter csv(path, {"t", "M", "error"});
  for (std::size_t i = 0; i < table.degrees.size(); ++i) {
    for (std::size_t k = 0; k < table.times.size(); ++k) {
      csv << table.times[k] << table.degrees[i] << table.errors[i][k];
      csv.end_row();
    }
  }
}

namespace {

void require_oracle(const SimulationConfig &config) {
  if (!is_vhs(config.test)) return;
  const bool maxwellian = config.test == TestCase::Vhs ? config.gamma == 0.0 : config.kappa2 == 0.0;
  if (!maxwellian) {
    throw std::invalid_argument("no exact solution exists for VHS kernels with gamma != 0");
  }
}

}  // namespace

std::vector<ExactComparisonRow> compare_exact(const SimulationConfig &config, const RunResult &result) {
  require_oracle(config);
  const auto basis = make_basis(config);
  const auto &w = basis->weights();
  const int q = basis->nodes_count();
  const double nan = std::numeric_limits<double>::quiet_NaN();

  auto expect = [&](auto &&fn) {
    double e = 0.0;
    for (int h = 0; h < q; ++h) e += w(h) * fn(basis->nodes()(0, h));
    return e;
  };

  const exact::KacExactParams kac{config.kappa, 1.0};
  const exact::Maxwell2DExactParams maxwell{config.kappa, config.mu};
  exact::StressExactParams stress;
  stress.kappa1 = config.kappa1;
  stress.frequency = 2.0 * std::numbers::pi * config.c_gamma;
  stress.from_initial_data = true;

  std::vector<ExactComparisonRow> rows;
  for (std::size_t k = 0; k < result.times.size(); ++k) {
    ExactComparisonRow row;
    row.t = result.times[k];
    row.observable = result.observable.entries[k].mean;
    if (config.test == TestCase::Kac) {
      row.observable_exact = expect([&](double z) { return exact::kac_exact_moment(z, row.t, 4, kac, true); });
    } else if (config.test == TestCase::Maxwell2D) {
      row.observable_exact = expect([&](double z) { return exact::maxwell2d_exact_moment(z, row.t, 4, maxwell); });
    } else {
      row.observable_exact = expect([&](double z) { return exact::stress_exact(z, row.t, stress).first; });
    }
    row.relative_error = std::abs(row.observable - row.observable_exact) / std::abs(row.observable_exact);
    row.l1_mean = row.linf_mean = row.l1_var = row.linf_var = nan;

    const auto grid_it = std::find_if(result.densities.begin(), result.densities.end(),
                                      [&](const auto &g) { return std::abs(g.first - row.t) < config.dt / 2; });
    if (!is_vhs(config.test) && grid_it != result.densities.end()) {
      const DensityGrid &g = grid_it->second;
      if (config.test == TestCase::Maxwell2D && g.dims != 1) {
        throw std::invalid_argument("2D Maxwell comparison needs a marginal density grid");
      }
      double l1m = 0, lim = 0, l1v = 0, liv = 0;
      for (int b = 0; b < g.spec.bins; ++b) {
        const double v = g.center(b);
        double mean = 0.0, second = 0.0;
        for (int h = 0; h < q; ++h) {
          const double z = basis->nodes()(0, h);
          const double f = config.test == TestCase::Kac ? exact::kac_exact_density(z, v, row.t, kac)
                                                        : exact::maxwell2d_exact_marginal(z, v, row.t, maxwell);
          mean += w(h) * f;
          second += w(h) * f * f;
        }
        const double var = std::max(second - mean * mean, 0.0);
        const double dm = std::abs(g.mean(b) - mean);
        const double dv = std::abs(g.var(b) - var);
        l1m += dm * g.width();
        l1v += dv * g.width();
        lim = std::max(lim, dm);
        liv = std::max(liv, dv);
      }
      row.l1_mean = l1m;
      row.linf_mean = lim;
      row.l1_var = l1v;
      row.linf_var = liv;
    }
    rows.push_back(row);
  }
  return rows;
}

std::vector<ExactComparisonRow> compare_exact(const SimulationConfig &config) {
  require_oracle(config);
  SimulationConfig c = config;
  if (c.test == TestCase::Maxwell2D) c.grid.marginal = 0;
  return compare_exact(c, simulate(c));
}

void write_comparison_csv(const std::filesystem::path &path, const std::vector<ExactComparisonRow> &rows) {
  CsvWriter csv(path, {"t", "l1_mean", "linf_mean", "l1_var", "linf_var", "observable",
                       "observable_exact", "relative_error"});
  for (const auto &r : rows) {
    csv << r.t << r.l1_mean << r.linf_mean << r.l1_var << r.linf_var << r.observable
        << r.observable_exact << r.relative_error;
    csv.end_row();
  }
}

}  // namespace dsmcsg
