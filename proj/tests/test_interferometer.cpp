#include <cmath>
#include <random>

#include "doctest.h"
#include "qiup/correlation.hpp"
#include "qiup/interferometer.hpp"
#include "qiup/object_mask.hpp"

using namespace qiup;

namespace {

constexpr double kPi = std::numbers::pi;

ObjectMask random_mask(int nx, int ny, double pitch, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const FieldGrid g = make_grid(nx, ny, pitch);
  Eigen::ArrayXXd amp(ny, nx), phase(ny, nx);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      amp(j, i) = u(rng);
      phase(j, i) = 2.0 * kPi * (u(rng) - 0.5);
    }
  return make_mask(g, std::move(amp), std::move(phase));
}

PhaseField random_field(const FieldGrid& g, double amplitude, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-amplitude, amplitude);
  Eigen::ArrayXXd map(g.ny, g.nx);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) map(j, i) = u(rng);
  return PhaseField(g, std::move(map));
}

// direct scalar quadrature of the counting-rate integrand, one pixel at a time
double brute_rate(const ObjectMask& mask, const CorrelationKernel& kernel,
                  const InterferometerConfig& cfg, const Vec2& rho_c) {
  const double a = cfg.a1_mag * cfg.a1_mag + cfg.a2_mag * cfg.a2_mag;
  const double b = 2.0 * cfg.a1_mag * cfg.a2_mag;
  const Vec2 rho_s = map_camera_to_source(rho_c, cfg.mapping);
  const double w = mask.grid.pitch * mask.grid.pitch;
  double mass = 0.0, cross = 0.0;
  for (int j = 0; j < mask.grid.ny; ++j)
    for (int i = 0; i < mask.grid.nx; ++i) {
      const Vec2 rho_o = mask.grid.coord(i, j);
      const Vec2 rho_i = map_object_to_idler(rho_o, cfg.mapping);
      const double k = kernel.evaluate(rho_s, rho_i);
      const double theta = mask.phase_at(rho_o) + cfg.phi_i.at(rho_o) + cfg.phi_i_prime.at(rho_i);
      mass += w * k;
      cross += w * k * mask.amplitude_at(rho_o) *
               std::cos(cfg.phi_in + cfg.phi_s.at(rho_c) - theta);
    }
  if (mass <= 1e-12) return 0.0;
  return (a * mass + b * cross) / mass;
}

InterferometerConfig busy_config(const FieldGrid& camera, const ObjectMask& mask) {
  InterferometerConfig cfg;
  cfg.a1_mag = 0.6;
  cfg.a2_mag = 0.8;
  cfg.phi_in = 0.37;
  cfg.mapping = PlaneMapping{1.3, 0.7, 0.8};
  cfg.phi_s = random_field(camera, 0.9, 41);
  cfg.phi_i = random_field(mask.grid, 0.9, 42);
  const FieldGrid idler =
      make_grid(mask.grid.nx, mask.grid.ny, mask.grid.pitch / std::abs(cfg.mapping.mi));
  cfg.phi_i_prime = random_field(idler, 0.9, 43);
  return cfg;
}

}  // namespace

TEST_CASE("gaussian-kernel rate map matches direct quadrature") {
  const ObjectMask mask = random_mask(10, 9, 0.9, 7);
  const FieldGrid camera = make_grid(6, 5, 1.1);
  InterferometerConfig cfg = busy_config(camera, mask);
  const CorrelationKernel kernel = gaussian_kernel(cfg.mapping.eta, 1.2, 2.5);
  const RateMap rm = rate_map_general(mask, kernel, cfg, camera, 2);
  for (int j = 0; j < camera.ny; ++j)
    for (int i = 0; i < camera.nx; ++i)
      CHECK(rm.values(j, i) ==
            doctest::Approx(brute_rate(mask, kernel, cfg, camera.coord(i, j))).epsilon(1e-9));
}

TEST_CASE("tabulated-kernel rate map matches direct quadrature") {
  const ObjectMask mask = random_mask(8, 8, 1.0, 9);
  const FieldGrid camera = make_grid(5, 5, 1.0);
  InterferometerConfig cfg = busy_config(camera, mask);

  const FieldGrid sg = make_grid(12, 12, 0.8);
  const FieldGrid ig = make_grid(10, 10, 1.2);
  std::mt19937_64 rng(55);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::ArrayXXd table(sg.count(), ig.count());
  for (Eigen::Index c = 0; c < table.cols(); ++c)
    for (Eigen::Index r = 0; r < table.rows(); ++r) table(r, c) = u(rng);
  const CorrelationKernel kernel = tabulated_kernel(sg, ig, std::move(table));

  const RateMap rm = rate_map_general(mask, kernel, cfg, camera, 3);
  for (int j = 0; j < camera.ny; ++j)
    for (int i = 0; i < camera.nx; ++i)
      CHECK(rm.values(j, i) ==
            doctest::Approx(brute_rate(mask, kernel, cfg, camera.coord(i, j))).epsilon(1e-9));
  CHECK(rm.clipped_fraction >= 0.0);
}

TEST_CASE("rates stay inside the interference bounds") {
  const ObjectMask mask = random_mask(12, 12, 1.0, 13);
  const FieldGrid camera = make_grid(8, 8, 1.0);
  InterferometerConfig cfg = busy_config(camera, mask);
  const double hi = cfg.a1_mag * cfg.a1_mag + cfg.a2_mag * cfg.a2_mag +
                    2.0 * cfg.a1_mag * cfg.a2_mag;
  for (double phi : {0.0, 0.9, 2.2, 4.0}) {
    cfg.phi_in = phi;
    const RateMap rm = rate_map_general(mask, gaussian_kernel(cfg.mapping.eta, 1.0, 3.0), cfg,
                                        camera);
    CHECK(rm.values.minCoeff() >= -1e-12);
    CHECK(rm.values.maxCoeff() <= hi + 1e-12);
    const RateMap rd = rate_map_delta(mask, cfg.mapping.eta, cfg, camera);
    CHECK(rd.values.minCoeff() >= -1e-12);
    CHECK(rd.values.maxCoeff() <= hi + 1e-12);
  }
}

TEST_CASE("the rate is sinusoidal in the source phase") {
  const ObjectMask mask = random_mask(10, 10, 1.0, 21);
  const FieldGrid camera = make_grid(4, 4, 1.4);
  InterferometerConfig cfg = busy_config(camera, mask);
  const CorrelationKernel kernel = gaussian_kernel(cfg.mapping.eta, 1.1, 2.0);

  // three samples determine A, B, C; five more must land on the same sinusoid
  std::vector<double> phis = {0.0, 2.0 * kPi / 3.0, 4.0 * kPi / 3.0, 0.4, 1.3, 2.9, 4.1, 5.5};
  const FringeStack stack = fringe_stack(mask, kernel, cfg, camera, phis);
  for (int j = 0; j < camera.ny; ++j)
    for (int i = 0; i < camera.nx; ++i) {
      const double r0 = stack.frames[0](j, i), r1 = stack.frames[1](j, i),
                   r2 = stack.frames[2](j, i);
      const double a = (r0 + r1 + r2) / 3.0;
      const double bc = (2.0 * r0 - r1 - r2) / 3.0;
      const double bs = (r2 - r1) / std::sqrt(3.0);
      for (size_t k = 3; k < phis.size(); ++k) {
        const double predicted = a + bc * std::cos(phis[k]) - bs * std::sin(phis[k]);
        CHECK(stack.frames[k](j, i) == doctest::Approx(predicted).epsilon(1e-9));
      }
    }
}

TEST_CASE("raw rate maps are linear in the kernel") {
  const ObjectMask mask = random_mask(9, 9, 1.0, 31);
  const FieldGrid camera = make_grid(5, 5, 1.0);
  InterferometerConfig cfg = busy_config(camera, mask);

  const FieldGrid sg = make_grid(8, 8, 1.0);
  const FieldGrid ig = make_grid(8, 8, 1.3);
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::ArrayXXd t1(sg.count(), ig.count()), t2(sg.count(), ig.count());
  for (Eigen::Index c = 0; c < t1.cols(); ++c)
    for (Eigen::Index r = 0; r < t1.rows(); ++r) {
      t1(r, c) = u(rng);
      t2(r, c) = u(rng);
    }
  // blend before the unit-integral renormalization so the mix is exact
  const double s1 = t1.sum(), s2 = t2.sum();
  const Eigen::ArrayXXd mixed = 0.4 * (t1 / s1) + 0.6 * (t2 / s2);
  const RateMap r1 = rate_map_general(mask, tabulated_kernel(sg, ig, t1), cfg, camera);
  const RateMap r2 = rate_map_general(mask, tabulated_kernel(sg, ig, t2), cfg, camera);
  const RateMap rm = rate_map_general(mask, tabulated_kernel(sg, ig, mixed), cfg, camera);
  const Eigen::ArrayXXd expect_raw = 0.4 * r1.raw + 0.6 * r2.raw;
  const Eigen::ArrayXXd expect_mass = 0.4 * r1.kernel_mass + 0.6 * r2.kernel_mass;
  CHECK(((rm.raw - expect_raw).abs().maxCoeff()) <= 1e-12 * expect_raw.abs().maxCoeff());
  CHECK(((rm.kernel_mass - expect_mass).abs().maxCoeff()) <=
        1e-12 * expect_mass.abs().maxCoeff());
}

TEST_CASE("shifting the object phase and the source phase together cancels") {
  const FieldGrid camera = make_grid(6, 6, 1.0);
  ObjectMask mask = random_mask(10, 10, 1.0, 37);
  InterferometerConfig cfg = busy_config(camera, mask);
  const CorrelationKernel kernel = gaussian_kernel(cfg.mapping.eta, 1.0, 2.2);
  const RateMap base = rate_map_general(mask, kernel, cfg, camera);

  const double delta = 1.234;
  ObjectMask shifted = mask;
  shifted.phase += delta;
  InterferometerConfig cfg2 = cfg;
  cfg2.phi_in += delta;
  const RateMap moved = rate_map_general(shifted, kernel, cfg2, camera);
  CHECK((moved.values - base.values).abs().maxCoeff() <= 1e-12);

  const RateMap based = rate_map_delta(mask, cfg.mapping.eta, cfg, camera);
  const RateMap movedd = rate_map_delta(shifted, cfg.mapping.eta, cfg2, camera);
  CHECK((movedd.values - based.values).abs().maxCoeff() <= 1e-12);
}

TEST_CASE("full-period phase averaging erases the object phase") {
  const FieldGrid camera = make_grid(8, 8, 1.0);
  ObjectMask mask_a = random_mask(12, 12, 1.0, 41);
  ObjectMask mask_b = mask_a;
  mask_b.phase = random_mask(12, 12, 1.0, 57).phase;  // same |T|, different phase

  InterferometerConfig cfg = busy_config(camera, mask_a);
  const CorrelationKernel kernel = gaussian_kernel(cfg.mapping.eta, 1.1, 2.4);
  const std::vector<double> ladder = {0.0, 0.5 * kPi, kPi, 1.5 * kPi};
  const FringeStack sa = fringe_stack(mask_a, kernel, cfg, camera, ladder);
  const FringeStack sb = fringe_stack(mask_b, kernel, cfg, camera, ladder);
  Eigen::ArrayXXd mean_a = Eigen::ArrayXXd::Zero(camera.ny, camera.nx);
  Eigen::ArrayXXd mean_b = mean_a;
  for (size_t k = 0; k < ladder.size(); ++k) {
    mean_a += sa.frames[k];
    mean_b += sb.frames[k];
  }
  CHECK((mean_a - mean_b).abs().maxCoeff() / ladder.size() <= 1e-9);
}

TEST_CASE("results are independent of the worker count") {
  const ObjectMask mask = random_mask(10, 10, 1.0, 61);
  const FieldGrid camera = make_grid(7, 6, 1.0);
  InterferometerConfig cfg = busy_config(camera, mask);
  for (const CorrelationKernel& kernel :
       {gaussian_kernel(cfg.mapping.eta, 1.0, 2.0),
        tabulated_kernel(make_grid(8, 8, 1.0), make_grid(8, 8, 1.4),
                         Eigen::ArrayXXd::Ones(64, 64))}) {
    const RateMap w1 = rate_map_general(mask, kernel, cfg, camera, 1);
    const RateMap w3 = rate_map_general(mask, kernel, cfg, camera, 3);
    const RateMap w5 = rate_map_general(mask, kernel, cfg, camera, 5);
    CHECK((w1.values == w3.values).all());
    CHECK((w1.values == w5.values).all());
    CHECK((w1.raw == w3.raw).all());
  }
  const RateMap d1 = rate_map_delta(mask, cfg.mapping.eta, cfg, camera, 1);
  const RateMap d4 = rate_map_delta(mask, cfg.mapping.eta, cfg, camera, 4);
  CHECK((d1.values == d4.values).all());
}

TEST_CASE("a clear aperture with balanced sources reaches the coherence extremes") {
  const FieldGrid g = make_grid(8, 8, 1.0);
  const ObjectMask clear = make_mask(g, Eigen::ArrayXXd::Ones(8, 8), Eigen::ArrayXXd());
  InterferometerConfig cfg;  // defaults: balanced amplitudes, zero phases
  const FieldGrid camera = make_grid(8, 8, 1.0);
  cfg.phi_in = 0.0;
  RateMap rm = rate_map_delta(clear, 1.0, cfg, camera);
  CHECK((rm.values - 2.0).abs().maxCoeff() <= 1e-12);
  cfg.phi_in = kPi;
  rm = rate_map_delta(clear, 1.0, cfg, camera);
  CHECK(rm.values.abs().maxCoeff() <= 1e-12);
}

TEST_CASE("fringe stacks require three distinct ladder steps") {
  const ObjectMask mask = random_mask(6, 6, 1.0, 71);
  const FieldGrid camera = make_grid(4, 4, 1.0);
  InterferometerConfig cfg;
  CHECK_THROWS(fringe_stack(mask, delta_kernel(1.0), cfg, camera, {0.0, kPi}));
  CHECK_THROWS(fringe_stack(mask, delta_kernel(1.0), cfg, camera, {0.0, kPi, 2.0 * kPi}));
  CHECK_NOTHROW(fringe_stack(mask, delta_kernel(1.0), cfg, camera, {0.0, 0.5 * kPi, kPi}));
}

TEST_CASE("shot noise is reproducible and respects zeros") {
  const FieldGrid g = make_grid(6, 6, 1.0);
  ObjectMask mask = random_mask(6, 6, 1.0, 81);
  mask.amplitude.row(0).setZero();
  InterferometerConfig cfg;
  cfg.phi_in = 0.0;
  FringeStack stack = fringe_stack(mask, delta_kernel(1.0), cfg, g, {0.0, 0.5 * kPi, kPi, 1.5 * kPi});
  // make an exact zero: balanced sources at phi_in = pi on a clear pixel
  stack.frames[2](3, 3) = 0.0;

  const FringeStack n1 = add_shot_noise(stack, 1000.0, 42);
  const FringeStack n2 = add_shot_noise(stack, 1000.0, 42);
  const FringeStack n3 = add_shot_noise(stack, 1000.0, 43);
  for (size_t k = 0; k < stack.frames.size(); ++k) {
    CHECK((n1.frames[k] == n2.frames[k]).all());
  }
  bool any_diff = false;
  for (size_t k = 0; k < stack.frames.size(); ++k)
    any_diff = any_diff || !(n1.frames[k] == n3.frames[k]).all();
  CHECK(any_diff);
  CHECK(n1.frames[2](3, 3) == 0.0);
  CHECK(n1.noise.kind == NoiseSpec::Kind::Poisson);
  CHECK(n1.noise.seed == 42);

  // the draw for a frame does not depend on how many frames follow it
  FringeStack shorter = stack;
  shorter.frames.resize(3);
  shorter.ladder.resize(3);
  const FringeStack ns = add_shot_noise(shorter, 1000.0, 42);
  CHECK((ns.frames[0] == n1.frames[0]).all());

  // large count budgets converge to the clean rates
  const FringeStack big = add_shot_noise(stack, 1e9, 7);
  double maxdev = 0.0;
  for (size_t k = 0; k < stack.frames.size(); ++k)
    maxdev = std::max(maxdev, (big.frames[k] - stack.frames[k]).abs().maxCoeff());
  CHECK(maxdev <= 5e-3);

  CHECK_THROWS(add_shot_noise(stack, 0.0, 1));
}
