#ifndef DSMCSG_RUNNER_HPP_
#define DSMCSG_RUNNER_HPP_

#include "dsmcsg/collision.hpp"
#include "dsmcsg/collision_tree.hpp"
#include "dsmcsg/config.hpp"
#include "dsmcsg/diagnostics.hpp"

#include <filesystem>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace dsmcsg {

/// In-memory result of a simulation. Every series has one entry per step
/// (t = 0, dt, ..., t_max).
struct RunResult {
  std::vector<double> times;
  /// Kac: velocity moments M1, M2, M4. 2D: x-momentum, |v|^2, |v|^4 and the
  /// stress components.
  std::vector<MomentSeries> series;
  /// The observable used by convergence studies (M4, or P11 for VHS),
  /// evaluated on the observation basis.
  MomentSeries observable;
  std::vector<std::pair<double, DensityGrid>> densities;
  CollisionTree tree;
  StepStats stats;
  std::vector<double> step_seconds;
  std::shared_ptr<Ensembled> final_ensemble;

  const MomentSeries &find(const std::string &name) const;
};

struct SimulateOptions {
  /// Replay these collisions instead of drawing them.
  const CollisionTree *replay = nullptr;
  /// Evaluate the observable on this basis' nodes (default: the run's own).
  const RandomBasisd *observe_on = nullptr;
  /// Skip density grids and the auxiliary series (convergence replays).
  bool observable_only = false;
};

RunResult simulate(const SimulationConfig &config, const SimulateOptions &options = {});

/// simulate() plus CSV, manifest and (optionally) tree emission into
/// config.output_dir. Returns the list of files written.
std::vector<std::filesystem::path> run(const SimulationConfig &config);

struct ConvergenceTable {
  std::vector<int> degrees;
  std::vector<double> times;
  std::vector<std::vector<double>> errors;  // errors[degree index][time index]
  int reference_degree = 0;

  /// Error at the final time for degree M.
  double final_error(int degree) const;
};

/// Reference run at M_ref recording the tree, then replays at every M in
/// `degrees`; errors are L^2(Omega) distances of the observable on the
/// reference nodes.
ConvergenceTable convergence_study(const SimulationConfig &config, const std::vector<int> &degrees,
                                   int reference_degree);
void write_convergence_csv(const std::filesystem::path &path, const ConvergenceTable &table);

struct ExactComparisonRow {
  double t = 0.0;
  double l1_mean = 0.0;   // ||E[f] - E[f_exact]||_1 over the grid
  double linf_mean = 0.0;
  double l1_var = 0.0;    // same for Var(f)
  double linf_var = 0.0;
  double observable = 0.0;        // E[M4] (Kac, 2D Maxwell) or E[P11] (VHS)
  double observable_exact = 0.0;
  double relative_error = 0.0;
};

/// Compares a run against the closed-form oracle for its test case.
/// Density distances are NaN for VHS (no density oracle).
std::vector<ExactComparisonRow> compare_exact(const SimulationConfig &config,
                                              const RunResult &result);
std::vector<ExactComparisonRow> compare_exact(const SimulationConfig &config);
void write_comparison_csv(const std::filesystem::path &path,
                          const std::vector<ExactComparisonRow> &rows);

}  // namespace dsmcsg

#endif  // DSMCSG_RUNNER_HPP_
