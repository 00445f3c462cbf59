#ifndef DSMCSG_CSV_HPP_
#define DSMCSG_CSV_HPP_

// CSV emission. Floats are written with max_digits10 so they round-trip.

#include "dsmcsg/diagnostics.hpp"

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <utility>
#include <vector>

namespace dsmcsg {

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path &path, std::initializer_list<std::string> header);

  CsvWriter &operator<<(double value);
  CsvWriter &operator<<(long long value);
  CsvWriter &operator<<(int value) { return *this << static_cast<long long>(value); }
  void end_row();

 private:
  void separator();

  std::filesystem::path path_;
  std::ofstream out_;
  bool row_started_ = false;
};

/// t, E, Var
void write_expectation_csv(const std::filesystem::path &path, const MomentSeries &series);
/// t, z_index, value
void write_nodal_csv(const std::filesystem::path &path, const MomentSeries &series);
/// t, v, E, Var (1D grid) or t, vx, vy, E, Var (2D grid)
void write_density_csv(const std::filesystem::path &path,
                       const std::vector<std::pair<double, DensityGrid>> &grids);

}  // namespace dsmcsg

#endif  // DSMCSG_CSV_HPP_
