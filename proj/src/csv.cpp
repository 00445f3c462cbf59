#include "dsmcsg/csv.hpp"

#include <iomanip>
#include <limits>
#include <stdexcept>

namespace dsmcsg {

CsvWriter::CsvWriter(const std::filesystem::path &path, std::initializer_list<std::string> header)
    : path_(path), out_(path) {
  if (!out_) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out_ << std::setprecision(std::numeric_limits<double>::max_digits10);
  bool first = true;
  for (const auto &name : header) {
    if (!first) out_ << ',';
    out_ << name;
    first = false;
  }
  out_ << '\n';
}

void CsvWriter::separator() {
  if (row_started_) out_ << ',';
  row_started_ = true;
}

CsvWriter &CsvWriter::operator<<(double value) {
  separator();
  out_ << value;
  return *this;
}

CsvWriter &CsvWriter::operator<<(long long value) {
  separator();
  out_ << value;
  return *this;
}

void CsvWriter::end_row() {
  out_ << '\n';
  row_started_ = false;
  if (!out_) throw std::runtime_error("failed writing " + path_.string());
}

void write_expectation_csv(const std::filesystem::path &path, const MomentSeries &series) {
  CsvWriter csv(path, {"t", "E", "Var"});
  for (const auto &e : series.entries) {
    csv << e.t << e.mean << e.variance;
    csv.end_row();
  }
}

void write_nodal_csv(const std::filesystem::path &path, const MomentSeries &series) {
  CsvWriter csv(path, {"t", "z_index", "value"});
  for (const auto &e : series.entries) {
    for (Eigen::Index h = 0; h < e.nodal.size(); ++h) {
      csv << e.t << static_cast<long long>(h) << e.nodal(h);
      csv.end_row();
    }
  }
}

void write_density_csv(const std::filesystem::path &path,
                       const std::vector<std::pair<double, DensityGrid>> &grids) {
  const bool two_d = !grids.empty() && grids.front().second.dims == 2;
  if (two_d) {
    CsvWriter csv(path, {"t", "vx", "vy", "E", "Var"});
    for (const auto &[t, g] : grids) {
      for (int iy = 0; iy < g.spec.bins; ++iy) {
        for (int ix = 0; ix < g.spec.bins; ++ix) {
          const Eigen::Index cell = ix + Eigen::Index(g.spec.bins) * iy;
          csv << t << g.center(ix) << g.center(iy) << g.mean(cell) << g.var(cell);
          csv.end_row();
        }
      }
    }
    return;
  }
  CsvWriter csv(path, {"t", "v", "E", "Var"});
  for (const auto &[t, g] : grids) {
    for (int k = 0; k < g.spec.bins; ++k) {
      csv << t << g.center(k) << g.mean(k) << g.var(k);
      csv.end_row();
    }
  }
}

}  // namespace dsmcsg
