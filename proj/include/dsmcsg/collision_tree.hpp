#ifndef DSMCSG_COLLISION_TREE_HPP_
#define DSMCSG_COLLISION_TREE_HPP_

// Record of every random choice of a run, replayable at any gPC degree.
//
// Binary layout (all fields little-endian, 8 bytes each):
//   header : magic "DSMCSGT1" | u64 seed | u64 N | f64 dt | u64 steps | u64 flags
//   step   : f64 sround_draw | f64 sigma | u64 n_c
//            then n_c times: u64 i | u64 j | f64 theta | f64 xi
// flags bit 0: mirrored stepping (pairs index the first N/2 particles).

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

namespace dsmcsg {

struct PairDraw {
  std::uint64_t i = 0;
  std::uint64_t j = 0;
  double theta = 0.0;  // scattering angle; omega = (cos theta, sin theta) in 2D
  double xi = 0.0;     // acceptance draw in (0, 1)

  bool operator==(const PairDraw &) const = default;
};

struct StepRecord {
  double sround_draw = 0.0;
  double sigma = 0.0;  // kernel bound used by the step (0 for Kac / Maxwell)
  std::vector<PairDraw> pairs;

  std::uint64_t collisions() const { return pairs.size(); }
  bool operator==(const StepRecord &) const = default;
};

struct CollisionTree {
  static constexpr std::uint64_t kMirroredFlag = 1;

  std::uint64_t seed = 0;
  std::uint64_t particles = 0;
  double dt = 0.0;
  std::uint64_t flags = 0;
  std::vector<StepRecord> steps;

  bool mirrored() const { return (flags & kMirroredFlag) != 0; }
  bool operator==(const CollisionTree &) const = default;
};

void write_tree(std::ostream &out, const CollisionTree &tree);
CollisionTree read_tree(std::istream &in);

void save_tree(const std::filesystem::path &path, const CollisionTree &tree);
CollisionTree load_tree(const std::filesystem::path &path);

}  // namespace dsmcsg

#endif  // DSMCSG_COLLISION_TREE_HPP_
