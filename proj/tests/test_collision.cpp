#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dsmcsg/collision.hpp"

#include <cmath>
#include <numbers>
#include <set>

using namespace dsmcsg;

namespace {

using BasisPtr = std::shared_ptr<const RandomBasisd>;

BasisPtr basis(int m, int h = -1) {
  return std::make_shared<const RandomBasisd>(build_basis<double>(m, h < 0 ? m : h));
}

Eigen::MatrixXd random_particle(int modes, int dv, std::mt19937_64 &gen, double decay = 0.5) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd p(modes, dv);
  for (int m = 0; m < modes; ++m) {
    for (int a = 0; a < dv; ++a) p(m, a) = normal(gen) * std::pow(decay, m);
  }
  return p;
}

Eigen::VectorXd unit(double theta) {
  Eigen::VectorXd w(2);
  w << std::cos(theta), std::sin(theta);
  return w;
}

// Per-node |v_i|^2 + |v_j|^2.
Eigen::VectorXd pair_energy(const Eigen::MatrixXd &ni, const Eigen::MatrixXd &nj) {
  return ni.rowwise().squaredNorm() + nj.rowwise().squaredNorm();
}

Eigen::MatrixXd total_momentum(const Ensembled &e) {
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(e.modes(), e.velocity_dims());
  for (int i = 0; i < e.size(); ++i) sum += e.particle(i);
  return sum;
}

}  // namespace

TEST_CASE("sround") {
  RandomEngine eng(1);
  for (int k = 0; k < 1000; ++k) {
    CHECK(sround(2.0, eng) == 2);
    CHECK(sround(0.0, eng) == 0);
  }
  double sum = 0.0;
  const int draws = 100000;
  for (int k = 0; k < draws; ++k) sum += static_cast<double>(sround(2.3, eng));
  CHECK(std::abs(sum / draws - 2.3) < 3 * std::sqrt(0.3 * 0.7 / draws));
  CHECK_THROWS_AS(sround(-0.1, eng), std::invalid_argument);
  CHECK(sround_with(1.25, 0.2) == 2);
  CHECK(sround_with(1.25, 0.3) == 1);
}

TEST_CASE("select_pairs") {
  RandomEngine eng(2);
  const auto one = select_pairs(2, 1, eng);
  REQUIRE(one.size() == 1);
  CHECK(std::set<std::uint64_t>{one[0].first, one[0].second} == std::set<std::uint64_t>{0, 1});

  const auto many = select_pairs(10000, 100, eng);
  std::set<std::uint64_t> seen;
  for (const auto &[i, j] : many) {
    CHECK(seen.insert(i).second);
    CHECK(seen.insert(j).second);
    CHECK(i < 10000);
    CHECK(j < 10000);
  }

  const int trials = 100000;
  int hits = 0;
  for (int t = 0; t < trials; ++t) {
    for (const auto &[i, j] : select_pairs(10, 2, eng)) hits += (i == 3 || j == 3);
  }
  const double p = 0.4;
  CHECK(std::abs(static_cast<double>(hits) / trials - p) < 3 * std::sqrt(p * (1 - p) / trials));
  CHECK_THROWS_AS(select_pairs(5, 3, eng), std::invalid_argument);
}

TEST_CASE("Kac rotation") {
  std::mt19937_64 gen(3);
  const Eigen::MatrixXd a = random_particle(6, 1, gen), b = random_particle(6, 1, gen);
  auto [a0, b0] = kac_collide<double>(a, b, 0.0);
  CHECK(a0 == a);
  CHECK(b0 == b);
  auto [aq, bq] = kac_collide<double>(a, b, std::numbers::pi / 2);
  CHECK((aq + b).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((bq - a).cwiseAbs().maxCoeff() < 1e-15);
  Eigen::MatrixXd two(6, 2);
  CHECK_THROWS_AS(kac_collide<double>(two, two, 0.1), std::invalid_argument);
}

TEST_CASE("property: Kac rotation preserves coefficient energy") {
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> angle(0.0, 2 * std::numbers::pi);
  for (int t = 0; t < 200; ++t) {
    const int modes = 1 + static_cast<int>(gen() % 10);
    const Eigen::MatrixXd a = random_particle(modes, 1, gen), b = random_particle(modes, 1, gen);
    const auto [a1, b1] = kac_collide<double>(a, b, angle(gen));
    const double before = a.squaredNorm() + b.squaredNorm();
    CHECK(std::abs(a1.squaredNorm() + b1.squaredNorm() - before) < 1e-12 * before);
  }
}

TEST_CASE("Maxwell collision of z-independent particles is the classical law") {
  const auto b = basis(0);
  Eigen::MatrixXd vi(1, 2), vj(1, 2);
  vi << 1, 0;
  vj << -1, 0;
  const auto [a, c] = maxwell_collide<double>(vi, vj, unit(std::numbers::pi / 2), *b);
  CHECK(std::abs(a(0, 0)) < 1e-15);
  CHECK(std::abs(a(0, 1) - 1) < 1e-15);
  CHECK(std::abs(c(0, 0)) < 1e-15);
  CHECK(std::abs(c(0, 1) + 1) < 1e-15);

  // Same particles carried in a degree-4 basis stay z-independent.
  const auto b4 = basis(4);
  Eigen::MatrixXd wi = Eigen::MatrixXd::Zero(5, 2), wj = wi;
  wi.row(0) << 0.3, -0.7;
  wj.row(0) << 1.1, 0.4;
  const Eigen::VectorXd w = unit(0.9);
  const auto [p, q] = maxwell_collide<double>(wi, wj, w, *b4);
  const Eigen::RowVector2d centre = (wi.row(0) + wj.row(0)) / 2;
  const double g = (wi.row(0) - wj.row(0)).norm();
  CHECK((p.row(0) - centre - g / 2 * w.transpose()).norm() < 1e-14);
  CHECK((q.row(0) - centre + g / 2 * w.transpose()).norm() < 1e-14);
  CHECK(p.bottomRows(4).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("property: Maxwell collision conserves momentum and loses exactly the Bessel gap") {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> angle(0.0, 2 * std::numbers::pi);
  for (int t = 0; t < 200; ++t) {
    const int m = static_cast<int>(gen() % 8);
    const auto b = basis(m, m + static_cast<int>(gen() % 3));
    Eigen::MatrixXd vi = random_particle(m + 1, 2, gen), vj = random_particle(m + 1, 2, gen);
    const Eigen::MatrixXd sum = vi + vj;
    const double energy = vi.squaredNorm() + vj.squaredNorm();
    CollisionWorkspace<double> ws;
    const double gap = maxwell_collide<double>(vi, vj, unit(angle(gen)), *b, ws);
    CHECK((vi + vj - sum).cwiseAbs().maxCoeff() < 1e-14 * (1 + sum.cwiseAbs().maxCoeff()));
    CHECK(gap >= -1e-14);
    CHECK(std::abs(energy - (vi.squaredNorm() + vj.squaredNorm()) - gap) < 1e-12 * energy);
  }
}

TEST_CASE("Maxwell collision rejects bad input") {
  const auto b = basis(2);
  Eigen::MatrixXd vi = Eigen::MatrixXd::Zero(3, 2), vj = vi;
  Eigen::VectorXd w(2);
  w << 1.0, 1.0;
  CHECK_THROWS_AS(maxwell_collide<double>(vi, vj, w, *b), std::invalid_argument);
  Eigen::MatrixXd one_d = Eigen::MatrixXd::Zero(3, 1);
  CHECK_THROWS_AS(maxwell_collide<double>(one_d, one_d, unit(0.0), *b), std::invalid_argument);
}

TEST_CASE("VHS bound") {
  const auto b = basis(0);
  Ensembled two(b, 2, 2);
  two.particle(0) << 1, 0;
  two.particle(1) << -1, 0;
  CHECK(vhs_sigma_bound(two, VhsKernel::constant(1.0, 1.0)) == doctest::Approx(2.0));
  CHECK(vhs_sigma_bound(two, VhsKernel::constant(0.25, 0.0)) == doctest::Approx(0.25));
  CHECK_THROWS_AS(vhs_sigma_bound(Ensembled(b, 2, 0), VhsKernel{}), std::invalid_argument);
}

TEST_CASE("property: VHS bound dominates every pair at every node") {
  for (double gamma : {0.5, 1.0, 2.0}) {
    const auto b = basis(3);
    RandomEngine eng(static_cast<std::uint64_t>(gamma * 10));
    const auto e = sample_initial<double>(TwoGaussians2D{0.4}, 60, b, eng);
    const VhsKernel k = VhsKernel::constant(0.3, gamma);
    const double sigma = vhs_sigma_bound(e, k);
    const Eigen::MatrixXd nodal = e.nodal_all();
    double worst = 0.0;
    for (int i = 0; i < 60; ++i) {
      for (int j = i + 1; j < 60; ++j) {
        const Eigen::VectorXd g = (nodal.middleCols(2 * i, 2) - nodal.middleCols(2 * j, 2)).rowwise().norm();
        worst = std::max(worst, vhs_kernel_at_nodes(k, *b, g).maxCoeff());
      }
    }
    CHECK(sigma >= worst);
  }
}

TEST_CASE("VHS indicator: rejected collision leaves particles unchanged") {
  const auto b = basis(3);
  std::mt19937_64 gen(6);
  const Eigen::MatrixXd vi = random_particle(4, 2, gen, 0.1), vj = random_particle(4, 2, gen, 0.1);
  const VhsKernel k = VhsKernel::constant(1.0, 1.0);
  // Speeds stay well below 10, so Sigma xi = 5 exceeds B everywhere.
  const auto [a, c] = vhs_collide<double>(vi, vj, unit(0.4), 0.5, 10.0, k, Indicator{}, *b);
  CHECK(a == vi);
  CHECK(c == vj);
}

TEST_CASE("VHS indicator: accepted z-independent collision equals the Maxwell update") {
  const auto b = basis(3);
  Eigen::MatrixXd vi = Eigen::MatrixXd::Zero(4, 2), vj = vi;
  vi.row(0) << 0.5, 0.2;
  vj.row(0) << -0.4, 0.9;
  const Eigen::VectorXd w = unit(2.1);
  const auto [a, c] = vhs_collide<double>(vi, vj, w, 0.01, 10.0, VhsKernel::constant(1.0, 1.0), Indicator{}, *b);
  const auto [ma, mc] = maxwell_collide<double>(vi, vj, w, *b);
  CHECK((a - ma).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((c - mc).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("property: VHS nodal invariants per mode") {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u01(0.001, 0.999), angle(0.0, 2 * std::numbers::pi);
  const auto b = basis(5);
  const VhsKernel k = VhsKernel::constant(1.0 / (2 * std::numbers::pi), 1.0);
  for (int t = 0; t < 200; ++t) {
    const Eigen::MatrixXd ci = random_particle(6, 2, gen), cj = random_particle(6, 2, gen);
    const Eigen::MatrixXd ni0 = b->eval_table() * ci, nj0 = b->eval_table() * cj;
    const double sigma = 1.0 / (2 * std::numbers::pi) * 2.0 * ((ni0 - nj0).rowwise().norm().maxCoeff());
    const double xi = u01(gen);
    const Eigen::VectorXd w = unit(angle(gen));
    const Eigen::VectorXd e0 = pair_energy(ni0, nj0);

    // Indicator: relative speed unchanged at every node.
    Eigen::MatrixXd ni = ni0, nj = nj0;
    vhs_collide_nodal<double>(ni, nj, w, xi, sigma, k, Indicator{}, *b);
    CHECK(((ni - nj).rowwise().norm() - (ni0 - nj0).rowwise().norm()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((ni + nj - ni0 - nj0).cwiseAbs().maxCoeff() < 1e-12);

    // Sigmoid: nodal pair energy never increases.
    ni = ni0;
    nj = nj0;
    vhs_collide_nodal<double>(ni, nj, w, xi, sigma, k, Sigmoid{10.0}, *b);
    CHECK((pair_energy(ni, nj) - e0).maxCoeff() < 1e-12);
    CHECK((ni + nj - ni0 - nj0).cwiseAbs().maxCoeff() < 1e-12);

    // Thermalized sigmoid: nodal pair energy and momentum preserved.
    ni = ni0;
    nj = nj0;
    vhs_collide_nodal<double>(ni, nj, w, xi, sigma, k, SigmoidThermalized{10.0}, *b);
    CHECK((pair_energy(ni, nj) - e0).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((ni + nj - ni0 - nj0).cwiseAbs().maxCoeff() < 1e-10);

    // With H = M projection interpolates, so coefficient updates keep the
    // thermalized invariants at the nodes as well.
    const auto [pi, pj] = vhs_collide<double>(ci, cj, w, xi, sigma, k, SigmoidThermalized{10.0}, *b);
    CHECK((pair_energy(b->eval_table() * pi, b->eval_table() * pj) - e0).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((pi + pj - ci - cj).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("property: projected sigmoid collision does not increase E-over-Omega energy") {
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> u01(0.001, 0.999), angle(0.0, 2 * std::numbers::pi);
  const auto b = basis(4, 7);
  const VhsKernel k = VhsKernel::constant(0.2, 1.0);
  for (int t = 0; t < 200; ++t) {
    const Eigen::MatrixXd ci = random_particle(5, 2, gen), cj = random_particle(5, 2, gen);
    const auto [pi, pj] = vhs_collide<double>(ci, cj, unit(angle(gen)), u01(gen), 3.0, k, Sigmoid{10.0}, *b);
    CHECK(pi.squaredNorm() + pj.squaredNorm() <= ci.squaredNorm() + cj.squaredNorm() + 1e-12);
  }
}

TEST_CASE("VHS degenerate thermalization is skipped") {
  // a = K(0) = 1/2 and omega = -g/|g| collapse the post-collision relative
  // velocity to zero while the pair temperature is positive.
  const auto b = basis(2);
  Eigen::MatrixXd ni(b->nodes_count(), 2), nj(b->nodes_count(), 2);
  ni.rowwise() = Eigen::RowVector2d(1, 0);
  nj.rowwise() = Eigen::RowVector2d(-1, 0);
  const Eigen::MatrixXd ni0 = ni, nj0 = nj;
  const VhsKernel k = VhsKernel::constant(0.5, 0.0);
  const VhsOutcome out =
      vhs_collide_nodal<double>(ni, nj, Eigen::Vector2d(-1, 0), 0.5, 1.0, k, SigmoidThermalized{4.0}, *b);
  CHECK(out.skipped_nodes == b->nodes_count());
  CHECK(ni == ni0);
  CHECK(nj == nj0);
}

TEST_CASE("VHS collision rejects bad input") {
  const auto b = basis(1);
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(2, 2);
  const VhsKernel k;
  CHECK_THROWS_AS(vhs_collide<double>(v, v, unit(0), 0.5, 0.0, k, Indicator{}, *b), std::invalid_argument);
  CHECK_THROWS_AS(vhs_collide<double>(v, v, unit(0), 0.0, 1.0, k, Indicator{}, *b), std::invalid_argument);
  CHECK_THROWS_AS(vhs_collide<double>(v, v, unit(0), 1.0, 1.0, k, Indicator{}, *b), std::invalid_argument);
  const Eigen::VectorXd g = Eigen::VectorXd::Ones(2);
  CHECK_THROWS_AS(vhs_kernel_at_nodes(VhsKernel::affine(1.0, 1.0, 1), *b, g), std::invalid_argument);
  CHECK_THROWS_AS(validate(KernelSpec{VhsKernel::affine(1.0, -0.5, 0)}), std::invalid_argument);
  CHECK_THROWS_AS(validate(KernelSpec{MaxwellKernel{0.0}}), std::invalid_argument);
  CHECK_THROWS_AS(validate(RegularizationMode{Sigmoid{0.0}}), std::invalid_argument);
}

TEST_CASE("sigmoid orientation matches the indicator limit") {
  CHECK(sigmoid(50.0) == doctest::Approx(1.0));
  CHECK(sigmoid(-50.0) == doctest::Approx(0.0));
  CHECK(sigmoid(0.0) == 0.5);
}

TEST_CASE("step: zero time step changes nothing") {
  const auto b = basis(3);
  RandomEngine eng(9);
  auto e = sample_initial<double>(Maxwell2D{0.25}, 100, b, eng);
  const Eigen::MatrixXd before = e.coefficients();
  CollisionEngine<double> engine(MaxwellKernel{}, Indicator{}, RandomStreams(1));
  const StepRecord r = engine.step(e, 0.0);
  CHECK(r.pairs.empty());
  CHECK(e.coefficients() == before);
}

TEST_CASE("step: draw order is Sround, permutation, then (theta, xi) per pair") {
  const auto b = basis(2);
  RandomEngine eng(10);
  auto e = sample_initial<double>(Maxwell2D{0.25}, 40, b, eng);
  const RandomStreams streams(77);
  CollisionEngine<double> engine(MaxwellKernel{2.0}, Indicator{}, streams);
  const StepRecord r = engine.step(e, 0.3);

  RandomEngine s = streams.spawn(Stream::Sround), p = streams.spawn(Stream::Pairing),
               a = streams.spawn(Stream::Angles), x = streams.spawn(Stream::Rejection);
  const double u = uniform_open01(s);
  CHECK(r.sround_draw == u);
  const auto pairs = select_pairs(40, sround_with(2.0 * 40 * 0.3 / 2, u), p);
  REQUIRE(r.pairs.size() == pairs.size());
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    CHECK(r.pairs[k].i == pairs[k].first);
    CHECK(r.pairs[k].j == pairs[k].second);
    CHECK(r.pairs[k].theta == 2 * std::numbers::pi * uniform_open01(a));
    CHECK(r.pairs[k].xi == uniform_open01(x));
  }
}

TEST_CASE("step: replay is bit-exact and independent of M for the draws") {
  const RandomStreams streams(5);
  std::vector<StepRecord> tree;
  Eigen::MatrixXd first_run;
  for (int pass = 0; pass < 2; ++pass) {
    RandomEngine eng(11);
    auto e = sample_initial<double>(TwoGaussians2D{0.1}, 200, basis(4), eng);
    CollisionEngine<double> engine(VhsKernel::constant(0.1, 1.0), Sigmoid{10.0}, streams);
    for (int n = 0; n < 5; ++n) {
      if (pass == 0) {
        tree.push_back(engine.step(e, 0.1));
      } else {
        CHECK(engine.step(e, 0.1, &tree[n]) == tree[n]);
      }
    }
    if (pass == 0) first_run = e.coefficients();
    else CHECK(e.coefficients() == first_run);
  }
  // Fresh engines at another degree draw the same choices (Sigma aside).
  RandomEngine eng(11);
  auto other = sample_initial<double>(TwoGaussians2D{0.1}, 200, basis(7), eng);
  CollisionEngine<double> engine(MaxwellKernel{1.0}, Indicator{}, RandomStreams(5));
  CollisionEngine<double> again(MaxwellKernel{1.0}, Indicator{}, RandomStreams(5));
  RandomEngine eng2(11);
  auto low = sample_initial<double>(TwoGaussians2D{0.1}, 200, basis(1), eng2);
  for (int n = 0; n < 3; ++n) CHECK(engine.step(other, 0.1) == again.step(low, 0.1));
}

TEST_CASE("step: replay rejects records that do not fit") {
  const auto b = basis(1);
  RandomEngine eng(12);
  auto e = sample_initial<double>(Maxwell2D{0.25}, 10, b, eng);
  CollisionEngine<double> engine(MaxwellKernel{}, Indicator{}, RandomStreams(1));
  StepRecord bad;
  bad.pairs.push_back({3, 10, 0.0, 0.5});
  CHECK_THROWS_AS(engine.step(e, 0.1, &bad), std::runtime_error);
}

TEST_CASE("step: collision count is unbiased") {
  const auto b = basis(0);
  RandomEngine eng(13);
  auto e = sample_initial<double>(Maxwell2D{0.0}, 10000, b, eng);
  const double mu = 2 * std::numbers::pi;
  CollisionEngine<double> engine(MaxwellKernel{mu}, Indicator{}, RandomStreams(3));
  const int steps = 300;
  double total = 0.0;
  for (int n = 0; n < steps; ++n) total += static_cast<double>(engine.step(e, 0.1).collisions());
  const double expected = mu * 10000 * 0.1 / 2;
  const double frac = expected - std::floor(expected);
  CHECK(std::abs(total / steps - expected) < 3 * std::sqrt(frac * (1 - frac) / steps));
}

TEST_CASE("step: mu dt > 1 is refused") {
  const auto b = basis(1);
  RandomEngine eng(14);
  auto e = sample_initial<double>(Maxwell2D{0.25}, 10, b, eng);
  CollisionEngine<double> engine(MaxwellKernel{20.0}, Indicator{}, RandomStreams(1));
  CHECK_THROWS_AS(engine.step(e, 0.1), std::domain_error);
  auto k = sample_initial<double>(KacSquaredGaussian{0.25}, 10, b, eng);
  CollisionEngine<double> kac(KacKernel{}, Indicator{}, RandomStreams(1));
  CHECK_THROWS_AS(kac.step(k, 1.5), std::domain_error);
  CHECK_THROWS_AS(engine.step(k, 0.01), std::invalid_argument);
  CHECK_THROWS_AS(kac.step(e, 0.01), std::invalid_argument);
}

TEST_CASE("property: engine conservation laws per step") {
  const auto b = basis(4);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    RandomEngine eng(seed);
    auto kac = sample_initial<double>(KacSquaredGaussian{0.5}, 400, b, eng);
    CollisionEngine<double> kac_engine(KacKernel{}, Indicator{}, RandomStreams(seed));
    auto max = sample_initial<double>(Maxwell2D{0.5}, 400, b, eng);
    CollisionEngine<double> max_engine(MaxwellKernel{}, Indicator{}, RandomStreams(seed));
    auto vhs = sample_initial<double>(TwoGaussians2D{0.5}, 400, b, eng);
    CollisionEngine<double> vhs_engine(VhsKernel::constant(0.1, 1.0), SigmoidThermalized{10.0}, RandomStreams(seed));
    for (int n = 0; n < 10; ++n) {
      const double kac_energy = kac.coefficients().squaredNorm();
      kac_engine.step(kac, 0.2);
      CHECK(std::abs(kac.coefficients().squaredNorm() - kac_energy) < 1e-12 * kac_energy);

      const Eigen::MatrixXd pm = total_momentum(max);
      max_engine.step(max, 0.2);
      CHECK((total_momentum(max) - pm).cwiseAbs().maxCoeff() < 1e-12);

      const Eigen::MatrixXd pv = total_momentum(vhs);
      vhs_engine.step(vhs, 0.2);
      CHECK((total_momentum(vhs) - pv).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("mirrored stepping keeps a symmetric Kac ensemble centred") {
  const auto b = basis(5);
  RandomEngine eng(15);
  SamplingOptions opt;
  opt.symmetric = true;
  auto e = sample_initial<double>(KacSquaredGaussian{0.25}, 1000, b, eng, opt);
  CollisionEngine<double> engine(KacKernel{}, Indicator{}, RandomStreams(2), StepOptions{true});
  for (int n = 0; n < 30; ++n) {
    const StepRecord r = engine.step(e, 0.1);
    for (const auto &p : r.pairs) {
      CHECK(p.i < 500);
      CHECK(p.j < 500);
    }
  }
  for (int k = 0; k < 500; ++k) CHECK(e.particle(k + 500) == -e.particle(k));
  CHECK(total_momentum(e).cwiseAbs().maxCoeff() < 1e-12);

  auto odd = sample_initial<double>(KacSquaredGaussian{0.25}, 7, b, eng);
  CHECK_THROWS_AS(engine.step(odd, 0.1), std::invalid_argument);
}

TEST_CASE("temperature-scaled Maxwell ensembles lose no energy to projection") {
  // Every particle is s(z) w_i and the collision law is homogeneous of degree
  // one, so |v_i - v_j| stays in the span and the Bessel gap vanishes.
  // The oversampled rule rules out the trivial H = M interpolation case.
  RandomEngine eng(16);
  auto e = sample_initial<double>(Maxwell2D{0.75}, 2000, basis(4, 9), eng);
  const double energy = e.coefficients().squaredNorm();
  CollisionEngine<double> engine(MaxwellKernel{}, Indicator{}, RandomStreams(4));
  for (int n = 0; n < 20; ++n) engine.step(e, 0.1);
  CHECK(std::abs(engine.stats().projection_energy_loss) < 1e-14);
  CHECK(std::abs(e.coefficients().squaredNorm() - energy) < 1e-13 * energy);
}

TEST_CASE("Maxwell projection energy loss shrinks with M under a shared tree") {
  // Particles v(z) = a + b exp(c z) are not scalar multiples of one profile,
  // so the relative speed leaves the polynomial space. With H = M projection
  // interpolates and nothing is lost, hence the oversampled rule.
  const int n = 2000;
  std::mt19937_64 gen(21);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> rate(-1.0, 1.0);
  Eigen::MatrixXd params(n, 6);
  for (int i = 0; i < n; ++i) {
    params.row(i) << normal(gen), normal(gen), 0.3 * normal(gen), 0.3 * normal(gen), rate(gen), rate(gen);
  }
  std::vector<StepRecord> tree;
  double previous = 1e300;
  for (int m : {1, 2, 4, 8}) {
    const auto b = basis(m, 2 * m + 1);
    Ensembled e(b, 2, n);
    for (int i = 0; i < n; ++i) {
      Eigen::MatrixXd nodal(b->nodes_count(), 2);
      for (int h = 0; h < b->nodes_count(); ++h) {
        const double z = b->nodes()(0, h);
        nodal(h, 0) = params(i, 0) + params(i, 2) * std::exp(params(i, 4) * z);
        nodal(h, 1) = params(i, 1) + params(i, 3) * std::exp(params(i, 5) * z);
      }
      e.particle(i) = b->weighted_eval_table().transpose() * nodal;
    }
    CollisionEngine<double> engine(MaxwellKernel{}, Indicator{}, RandomStreams(4));
    for (int s = 0; s < 10; ++s) {
      if (m == 1) tree.push_back(engine.step(e, 0.1));
      else engine.step(e, 0.1, &tree[s]);
    }
    const double loss = engine.stats().projection_energy_loss;
    CHECK(loss > 0.0);
    CHECK(loss < previous);
    previous = loss;
  }
}
