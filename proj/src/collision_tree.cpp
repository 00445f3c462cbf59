#include "dsmcsg/collision_tree.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace dsmcsg {
namespace {

constexpr std::array<char, 8> kMagic = {'D', 'S', 'M', 'C', 'S', 'G', 'T', '1'};

void put_u64(std::ostream &out, std::uint64_t value) {
  std::array<char, 8> bytes;
  for (int b = 0; b < 8; ++b) bytes[b] = static_cast<char>((value >> (8 * b)) & 0xffu);
  out.write(bytes.data(), bytes.size());
}

void put_f64(std::ostream &out, double value) {
  put_u64(out, std::bit_cast<std::uint64_t>(value));
}

std::uint64_t get_u64(std::istream &in) {
  std::array<unsigned char, 8> bytes;
  in.read(reinterpret_cast<char *>(bytes.data()), bytes.size());
  if (!in) throw std::runtime_error("collision tree is truncated");
  std::uint64_t value = 0;
  for (int b = 0; b < 8; ++b) value |= static_cast<std::uint64_t>(bytes[b]) << (8 * b);
  return value;
}

double get_f64(std::istream &in) { return std::bit_cast<double>(get_u64(in)); }

}  // namespace

void write_tree(std::ostream &out, const CollisionTree &tree) {
  out.write(kMagic.data(), kMagic.size());
  put_u64(out, tree.seed);
  put_u64(out, tree.particles);
  put_f64(out, tree.dt);
  put_u64(out, tree.steps.size());
  put_u64(out, tree.flags);
  for (const auto &step : tree.steps) {
    put_f64(out, step.sround_draw);
    put_f64(out, step.sigma);
    put_u64(out, step.pairs.size());
    for (const auto &p : step.pairs) {
      put_u64(out, p.i);
      put_u64(out, p.j);
      put_f64(out, p.theta);
      put_f64(out, p.xi);
    }
  }
  if (!out) throw std::runtime_error("failed to write collision tree");
}

CollisionTree read_tree(std::istream &in) {
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw std::runtime_error("not a collision tree file");
  CollisionTree tree;
  tree.seed = get_u64(in);
  tree.particles = get_u64(in);
  tree.dt = get_f64(in);
  const std::uint64_t steps = get_u64(in);
  tree.flags = get_u64(in);
  // Counts come from the file; grow as records arrive so a corrupt count
  // fails as truncation instead of a huge allocation.
  for (std::uint64_t s = 0; s < steps; ++s) {
    StepRecord &step = tree.steps.emplace_back();
    step.sround_draw = get_f64(in);
    step.sigma = get_f64(in);
    const std::uint64_t n_c = get_u64(in);
    if (2 * n_c > tree.particles) throw std::runtime_error("collision tree step has too many pairs");
    step.pairs.reserve(n_c);
    for (std::uint64_t k = 0; k < n_c; ++k) {
      PairDraw &p = step.pairs.emplace_back();
      p.i = get_u64(in);
      p.j = get_u64(in);
      p.theta = get_f64(in);
      p.xi = get_f64(in);
      if (p.i >= tree.particles || p.j >= tree.particles) {
        throw std::runtime_error("collision tree references a particle out of range");
      }
    }
  }
  return tree;
}

void save_tree(const std::filesystem::path &path, const CollisionTree &tree) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_tree(out, tree);
}

CollisionTree load_tree(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_tree(in);
}

}  // namespace dsmcsg
