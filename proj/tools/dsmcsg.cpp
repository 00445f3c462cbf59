// dsmcsg: run | convergence | compare-exact

#include "dsmcsg/config.hpp"
#include "dsmcsg/runner.hpp"

#include <CLI11.hpp>

#include <exception>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

struct ConfigFlags {
  std::string config_file;
  std::map<std::string, std::string> values;
  std::map<std::string, bool> flags;

  void attach(CLI::App &app) {
    app.add_option("--config", config_file, "key = value configuration file")->check(CLI::ExistingFile);
    for (const auto &key : dsmcsg::config_keys()) {
      const std::string name(key.name);
      if (key.is_flag) {
        flags[name] = false;
        app.add_flag("--" + name, flags[name], std::string(key.help));
      } else {
        values[name];
        app.add_option("--" + name, values[name], std::string(key.help));
      }
    }
  }

  dsmcsg::SimulationConfig resolve(const CLI::App &app) const {
    dsmcsg::SimulationConfig config;
    if (!config_file.empty()) config = dsmcsg::load_config(config_file);
    for (const auto &[name, value] : values) {
      if (app.count("--" + name) > 0) dsmcsg::apply_setting(config, name, value);
    }
    for (const auto &[name, set] : flags) {
      if (set) dsmcsg::apply_setting(config, name, "true");
    }
    return config;
  }
};

std::vector<int> parse_degrees(const std::string &text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stoi(item));
  if (out.empty()) throw std::invalid_argument("empty degree list");
  return out;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Stochastic-Galerkin DSMC for kinetic equations with random inputs"};
  app.require_subcommand(1);
  // --h is the quadrature order, so help is long-form only (inherited by subcommands).
  app.set_help_flag("--help", "Print this help message and exit");

  ConfigFlags run_flags, conv_flags, cmp_flags;
  auto *run_cmd = app.add_subcommand("run", "simulate and write moment, density and manifest files");
  run_flags.attach(*run_cmd);

  auto *conv_cmd = app.add_subcommand("convergence", "tree-replay L2 error study over gPC degrees");
  conv_flags.attach(*conv_cmd);
  std::string degree_list = "1,2,3,4,5,6,7,8";
  int reference_degree = 16;
  conv_cmd->add_option("--m-list", degree_list, "comma separated degrees to compare");
  conv_cmd->add_option("--m-ref", reference_degree, "reference degree");

  auto *cmp_cmd = app.add_subcommand("compare-exact", "distance of a run to the closed-form solution");
  cmp_flags.attach(*cmp_cmd);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) {
      const auto config = run_flags.resolve(*run_cmd);
      for (const auto &f : dsmcsg::run(config)) std::cout << f.string() << "\n";
    } else if (conv_cmd->parsed()) {
      const auto config = conv_flags.resolve(*conv_cmd);
      const auto table = dsmcsg::convergence_study(config, parse_degrees(degree_list), reference_degree);
      std::filesystem::create_directories(config.output_dir);
      const auto path = config.output_dir / "convergence.csv";
      dsmcsg::write_convergence_csv(path, table);
      std::cout << path.string() << "\n";
    } else if (cmp_cmd->parsed()) {
      const auto config = cmp_flags.resolve(*cmp_cmd);
      const auto rows = dsmcsg::compare_exact(config);
      std::filesystem::create_directories(config.output_dir);
      const auto path = config.output_dir / "compare_exact.csv";
      dsmcsg::write_comparison_csv(path, rows);
      std::cout << path.string() << "\n";
    }
  } catch (const std::exception &e) {
    std::cerr << "dsmcsg: error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
