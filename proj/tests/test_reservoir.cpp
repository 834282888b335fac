#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "echochan/error.hpp"
#include "echochan/reservoir.hpp"
#include "support.hpp"

using namespace echochan;
using echochan::test::random_matrix;

namespace {

ReservoirConfig small_config(std::uint64_t seed = 7) {
  ReservoirConfig c;
  c.reservoir_size = 50;
  c.seed = seed;
  return c;
}

double sample_std(std::span<const double> v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

TEST_SUITE("reservoir") {

TEST_CASE("names round-trip") {
  for (auto m : {InitMethod::Random, InitMethod::Xavier, InitMethod::NormalizedXavier, InitMethod::He}) {
    CHECK(parse_init_method(to_string(m)) == m);
  }
  for (auto a : {Activation::Tanh, Activation::Relu, Activation::Sigmoid}) {
    CHECK(parse_activation(to_string(a)) == a);
  }
  CHECK(parse_init_method("glorot") == InitMethod::NormalizedXavier);
  CHECK_THROWS_AS(parse_init_method("lecun"), ConfigError);
  CHECK_THROWS_AS(parse_activation("gelu"), ConfigError);
}

TEST_CASE("config validation") {
  ReservoirConfig c = small_config();
  CHECK_NOTHROW(c.validate());
  c.target_spectral_radius = 1.2;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.allow_unstable = true;
  CHECK_NOTHROW(c.validate());
  c = small_config();
  c.sparsity = 1.5;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = small_config();
  c.reservoir_size = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = small_config();
  c.target_spectral_radius = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("Xavier entries lie within 1/sqrt(fan-in)") {
  const Matrix m = init_matrix(InitMethod::Xavier, 100, 100, 1.0, 3);
  CHECK(m.max_abs() <= 0.1);
  CHECK(m.max_abs() > 0.09);
}

TEST_CASE("normalized Xavier and random bounds") {
  const Matrix nx = init_matrix(InitMethod::NormalizedXavier, 60, 40, 1.0, 3);
  CHECK(nx.max_abs() <= std::sqrt(6.0 / 100.0));
  const Matrix r = init_matrix(InitMethod::Random, 60, 40, 1.0, 3);
  CHECK(r.max_abs() <= 1.0);
  CHECK(r.max_abs() > 0.95);
}

TEST_CASE("sparsity zero gives the zero matrix for every method") {
  for (auto m : {InitMethod::Random, InitMethod::Xavier, InitMethod::NormalizedXavier, InitMethod::He}) {
    CHECK(init_matrix(m, 20, 30, 0.0, 9).max_abs() == 0.0);
  }
}

TEST_CASE("sparsity controls the non-zero fraction") {
  const Matrix m = init_matrix(InitMethod::Xavier, 200, 200, 0.25, 4);
  const auto nz = std::count_if(m.data().begin(), m.data().end(), [](double v) { return v != 0.0; });
  CHECK(static_cast<double>(nz) / 40000.0 == doctest::Approx(0.25).epsilon(0.05));
}

TEST_CASE("He sample standard deviation matches sqrt(2/fan-in)") {
  const Matrix m = init_matrix(InitMethod::He, 400, 400, 1.0, 5);
  const double expected = std::sqrt(2.0 / 400.0);
  CHECK(std::abs(sample_std(m.data()) - expected) <= 0.1 * expected);
}

TEST_CASE("init_matrix is deterministic per seed") {
  CHECK(init_matrix(InitMethod::He, 30, 30, 0.5, 1) == init_matrix(InitMethod::He, 30, 30, 0.5, 1));
  CHECK(init_matrix(InitMethod::He, 30, 30, 0.5, 1) != init_matrix(InitMethod::He, 30, 30, 0.5, 2));
  CHECK_THROWS_AS(init_matrix(InitMethod::Xavier, 0, 3, 1.0, 1), ShapeError);
}

TEST_CASE("rescale_to_radius") {
  const Matrix w{{2.0, 1.0}, {0.0, -1.0}};
  const Matrix r = rescale_to_radius(w, 0.5);
  CHECK(max_abs_diff(r, 0.25 * w) < 1e-15);
  CHECK(spectral_radius(r) == doctest::Approx(0.5).epsilon(1e-12));

  const Matrix at_target = rescale_to_radius(w, 2.0);
  CHECK(max_abs_diff(at_target, w) < 1e-12);

  CHECK_THROWS_AS(rescale_to_radius(Matrix(3, 3), 0.5), CannotRescaleError);
  CHECK_THROWS_AS(rescale_to_radius(Matrix(2, 3), 0.5), ShapeError);
}

TEST_CASE("He 578x578 rescaled to 0.5") {
  const Matrix w = init_matrix(InitMethod::He, 578, 578, 1.0, 21);
  const double raw = spectral_radius(w);
  CHECK(raw > 1.3);
  CHECK(raw < 1.6);
  CHECK(std::abs(spectral_radius(rescale_to_radius(w, 0.5)) - 0.5) < 1e-4);
}

TEST_CASE("build is deterministic and seed-sensitive") {
  const Reservoir a = build(small_config(7));
  const Reservoir b = build(small_config(7));
  const Reservoir c = build(small_config(8));
  CHECK(a == b);
  CHECK(a.w() != c.w());
  CHECK(a.w_in().rows() == 50);
  CHECK(a.w_in().cols() == 2);
  CHECK(a.w_fb().rows() == 50);
  CHECK(a.w_fb().cols() == 2);
  CHECK(a.w_fb().max_abs() == 0.0);
  CHECK(std::abs(spectral_radius(a.w()) - 0.5) < 1e-4);
  CHECK(a.achieved_radius() == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("build with feedback and sparsity") {
  ReservoirConfig cfg = small_config();
  cfg.use_feedback = true;
  cfg.sparsity = 0.2;
  const Reservoir r = build(cfg);
  CHECK(r.w_fb().max_abs() > 0.0);
  CHECK(std::abs(spectral_radius(r.w()) - 0.5) < 1e-4);
  cfg.sparsity = 0.0;
  CHECK_THROWS_AS(build(cfg), CannotRescaleError);
}

TEST_CASE("allow_unstable keeps the raw initializer radius") {
  ReservoirConfig cfg = small_config();
  cfg.init = InitMethod::He;
  cfg.allow_unstable = true;
  const Reservoir r = build(cfg);
  CHECK(r.achieved_radius() == doctest::Approx(spectral_radius(r.w())).epsilon(1e-9));
  CHECK(r.achieved_radius() > 1.0);
}

TEST_CASE("update_state analytic values") {
  ReservoirConfig cfg;
  cfg.input_dim = cfg.reservoir_size = cfg.output_dim = 1;
  const Reservoir tanh_r = Reservoir::from_parts(cfg, Matrix{{1.0}}, Matrix{{0.0}}, Matrix{{0.0}}, 0.0);
  CHECK(update_state(tanh_r, Vector{0.0}, Vector{1.0}, Vector{0.0})[0] ==
        doctest::Approx(0.761594155955765).epsilon(1e-12));
  cfg.activation = Activation::Sigmoid;
  const Reservoir sig_r = Reservoir::from_parts(cfg, Matrix{{1.0}}, Matrix{{0.0}}, Matrix{{0.0}}, 0.0);
  CHECK(update_state(sig_r, Vector{0.0}, Vector{1.0}, Vector{0.0})[0] ==
        doctest::Approx(0.731058578630005).epsilon(1e-12));

  const Reservoir r = build(small_config());
  const Vector zero = update_state(r, Vector(50), Vector(2), Vector(2));
  CHECK(zero.max_abs() == 0.0);
  CHECK_THROWS_AS(update_state(r, Vector(49), Vector(2), Vector(2)), ShapeError);
}

TEST_CASE("harvest agrees with repeated update_state") {
  ReservoirConfig cfg = small_config();
  cfg.use_feedback = true;
  const Reservoir r = build(cfg);
  const Matrix u = random_matrix(2, 30, 1);
  const Matrix y = random_matrix(2, 30, 2);
  const StateTrajectory traj = harvest(r, u, y);
  Vector x(50);
  Vector y_prev(2);
  for (std::size_t t = 0; t < 30; ++t) {
    x = update_state(r, x, Vector{u(0, t), u(1, t)}, y_prev);
    y_prev = Vector{y(0, t), y(1, t)};
    for (std::size_t i = 0; i < 50; ++i) CHECK(traj.states(i, t) == doctest::Approx(x[i]).epsilon(1e-13));
  }
}

TEST_CASE("harvest shapes, washout and teacher rules") {
  ReservoirConfig cfg = small_config();
  cfg.washout = 5;
  const Reservoir r = build(cfg);
  const StateTrajectory traj = harvest(r, random_matrix(2, 20, 3));
  CHECK(traj.steps() == 15);
  CHECK(traj.t_offset == 5);
  CHECK_THROWS_AS(harvest(r, random_matrix(2, 5, 3)), EmptyTrajectoryError);
  CHECK_THROWS_AS(harvest(r, random_matrix(3, 20, 3)), ShapeError);
  CHECK_THROWS_AS(harvest(r, random_matrix(2, 20, 3), random_matrix(2, 20, 4)), ConfigError);

  cfg.use_feedback = true;
  const Reservoir fb = build(cfg);
  CHECK_THROWS_AS(harvest(fb, random_matrix(2, 20, 3)), ConfigError);
}

TEST_CASE("zero input keeps a tanh reservoir at rest") {
  const Reservoir r = build(small_config());
  CHECK(harvest(r, Matrix(2, 40)).states.max_abs() == 0.0);
}

TEST_CASE("fading memory: initial state is forgotten") {
  ReservoirConfig cfg = small_config();
  cfg.reservoir_size = 200;
  const Reservoir r = build(cfg);
  const Matrix u = random_matrix(2, 200, 10);
  Rng rng(99);
  Vector x0(200);
  for (std::size_t i = 0; i < 200; ++i) x0[i] = rng.uniform(-1.0, 1.0);
  const Matrix a = harvest(r, u).states;
  const Matrix b = harvest_from(r, x0, u).states;
  double last = 0.0;
  for (std::size_t i = 0; i < 200; ++i) last = std::max(last, std::abs(a(i, 199) - b(i, 199)));
  CHECK(last < 1e-6);
}

TEST_CASE("states stay in the activation range") {
  for (auto act : {Activation::Tanh, Activation::Relu, Activation::Sigmoid}) {
    ReservoirConfig cfg = small_config();
    cfg.activation = act;
    const Matrix s = harvest(build(cfg), random_matrix(2, 100, 6, -3.0, 3.0)).states;
    const auto [lo, hi] = std::minmax_element(s.data().begin(), s.data().end());
    CAPTURE(to_string(act));
    switch (act) {
      case Activation::Tanh: CHECK(*lo >= -1.0); CHECK(*hi <= 1.0); break;
      case Activation::Sigmoid: CHECK(*lo >= 0.0); CHECK(*hi <= 1.0); break;
      case Activation::Relu: CHECK(*lo >= 0.0); break;
    }
  }
}

TEST_CASE("harvest is bit-exact across calls and batch form") {
  const Reservoir r = build(small_config());
  std::vector<Matrix> inputs{random_matrix(2, 64, 1), random_matrix(2, 64, 2), random_matrix(2, 64, 3)};
  const auto batch = harvest_batch(r, inputs);
  REQUIRE(batch.size() == 3);
  for (std::size_t s = 0; s < 3; ++s) {
    CHECK(harvest(r, inputs[s]).states == harvest(r, inputs[s]).states);
    CHECK(max_abs_diff(batch[s].states, harvest(r, inputs[s]).states) < 1e-14);
  }
}

TEST_CASE("unstable reservoir divergence is reported") {
  ReservoirConfig cfg = small_config();
  cfg.activation = Activation::Relu;
  cfg.init = InitMethod::Random;
  cfg.allow_unstable = true;
  const Reservoir r = build(cfg);
  CHECK(r.achieved_radius() > 2.0);
  CHECK_THROWS_AS(harvest(r, random_matrix(2, 3000, 7, 0.0, 1.0)), NonFiniteError);
}

}  // TEST_SUITE
