#include "qiup/interferometer.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "qiup/parallel.hpp"

namespace qiup {
namespace {

constexpr double kMassFloor = 1e-12;

void check_ladder(const std::vector<double>& ladder) {
  if (ladder.size() < 3) throw std::invalid_argument("fringe_stack: need at least 3 phase steps");
  const double two_pi = 2.0 * std::numbers::pi;
  for (size_t a = 0; a < ladder.size(); ++a)
    for (size_t b = a + 1; b < ladder.size(); ++b) {
      double d = std::remainder(ladder[a] - ladder[b], two_pi);
      if (std::abs(d) <= 1e-12)
        throw std::invalid_argument("fringe_stack: phase steps must be distinct mod 2*pi");
    }
}

// cos/sin split of the object response: |T(rho_o)| cos/sin of
// theta = phi_I(rho_o) + phi_I'(rho_o/M_I) + phi_T(rho_o), tabulated on the
// mask lattice (quadrature nodes).
struct ObjectTables {
  Eigen::ArrayXXd tc, ts;
};

ObjectTables object_tables(const ObjectMask& mask, const InterferometerConfig& cfg) {
  ObjectTables t;
  t.tc.resize(mask.grid.ny, mask.grid.nx);
  t.ts.resize(mask.grid.ny, mask.grid.nx);
  for (int j = 0; j < mask.grid.ny; ++j)
    for (int i = 0; i < mask.grid.nx; ++i) {
      const Vec2 rho_o = mask.grid.coord(i, j);
      const double theta = cfg.phi_i.at(rho_o) +
                           cfg.phi_i_prime.at(map_object_to_idler(rho_o, cfg.mapping)) +
                           mask.phase(j, i);
      const double a = mask.amplitude(j, i);
      t.tc(j, i) = a * std::cos(theta);
      t.ts(j, i) = a * std::sin(theta);
    }
  return t;
}

Eigen::ArrayXXd camera_phi_s(const InterferometerConfig& cfg, const FieldGrid& camera) {
  Eigen::ArrayXXd out(camera.ny, camera.nx);
  if (cfg.phi_s.is_constant()) {
    out.setConstant(cfg.phi_s.constant());
    return out;
  }
  for (int j = 0; j < camera.ny; ++j)
    for (int i = 0; i < camera.nx; ++i) out(j, i) = cfg.phi_s.at(camera.coord(i, j));
  return out;
}

// Per-pixel quadrature sums: kernel mass, and the mass-weighted cos/sin
// object responses. Everything downstream is a pointwise combination.
struct Accumulators {
  Eigen::ArrayXXd mass, sc, ss, phis;
  long long clipped = 0;
  long long queries = 0;
};

Accumulators accumulate_general(const ObjectMask& mask, const CorrelationKernel& kernel,
                                const InterferometerConfig& cfg, const FieldGrid& camera,
                                int workers) {
  const ObjectTables tab = object_tables(mask, cfg);
  const double w = mask.grid.pitch * mask.grid.pitch;
  Accumulators acc;
  acc.mass.setZero(camera.ny, camera.nx);
  acc.sc.setZero(camera.ny, camera.nx);
  acc.ss.setZero(camera.ny, camera.nx);
  acc.phis = camera_phi_s(cfg, camera);

  if (kernel.kind() == CorrelationKernel::Kind::Gaussian) {
    // The kernel is separable per axis in (signal, idler) coordinates, so the
    // quadrature collapses to one matrix sandwich per accumulator.
    const double sm2 = 2.0 * kernel.sigma_minus() * kernel.sigma_minus();
    const double sp2 = 2.0 * kernel.sigma_plus() * kernel.sigma_plus();
    const double eta = kernel.eta();
    auto axis_factor = [&](double s, double i) {
      const double dm = s - eta * i;
      const double dp = s + eta * i;
      return std::exp(-dm * dm / sm2 - dp * dp / sp2);
    };
    Eigen::MatrixXd gx(camera.nx, mask.grid.nx), gy(camera.ny, mask.grid.ny);
    for (int u = 0; u < camera.nx; ++u)
      for (int i = 0; i < mask.grid.nx; ++i)
        gx(u, i) = axis_factor(camera.x(u) / cfg.mapping.ms, mask.grid.x(i) / cfg.mapping.mi);
    for (int v = 0; v < camera.ny; ++v)
      for (int j = 0; j < mask.grid.ny; ++j)
        gy(v, j) = axis_factor(camera.y(v) / cfg.mapping.ms, mask.grid.y(j) / cfg.mapping.mi);
    // norm constant times quadrature weight; values are ratios, but mass and
    // raw should carry honest units
    const double scale = w * 4.0 * eta * eta /
                         ((2.0 * std::numbers::pi * kernel.sigma_minus() * kernel.sigma_minus()) *
                          (2.0 * std::numbers::pi * kernel.sigma_plus() * kernel.sigma_plus()));
    const Eigen::VectorXd rx = gx.rowwise().sum();
    const Eigen::VectorXd ry = gy.rowwise().sum();
    acc.mass = (ry * rx.transpose()).array() * scale;
    acc.sc = (gy * tab.tc.matrix() * gx.transpose()).array() * scale;
    acc.ss = (gy * tab.ts.matrix() * gx.transpose()).array() * scale;
    acc.queries = static_cast<long long>(camera.count()) * mask.grid.count();
    return acc;
  }

  const int nworkers = resolve_workers(workers);
  std::vector<CorrelationKernel::QueryStats> stats(static_cast<size_t>(nworkers));
  std::vector<Vec2> idler(static_cast<size_t>(mask.grid.count()));
  for (int j = 0; j < mask.grid.ny; ++j)
    for (int i = 0; i < mask.grid.nx; ++i)
      idler[static_cast<size_t>(mask.grid.flat(i, j))] =
          map_object_to_idler(mask.grid.coord(i, j), cfg.mapping);

  parallel_for_rows_indexed(camera.ny, nworkers, [&](int v, int slot) {
    auto& st = stats[static_cast<size_t>(slot)];
    for (int u = 0; u < camera.nx; ++u) {
      const Vec2 rho_s = map_camera_to_source(camera.coord(u, v), cfg.mapping);
      double m = 0.0, c = 0.0, s = 0.0;
      for (int j = 0; j < mask.grid.ny; ++j)
        for (int i = 0; i < mask.grid.nx; ++i) {
          const double p = kernel.evaluate(rho_s, idler[static_cast<size_t>(mask.grid.flat(i, j))], &st);
          if (p == 0.0) continue;
          m += p;
          c += p * tab.tc(j, i);
          s += p * tab.ts(j, i);
        }
      acc.mass(v, u) = m * w;
      acc.sc(v, u) = c * w;
      acc.ss(v, u) = s * w;
    }
  });
  for (const auto& st : stats) {
    acc.queries += st.queries;
    acc.clipped += st.clipped;
  }
  return acc;
}

RateMap combine(const Accumulators& acc, const InterferometerConfig& cfg, double phi_in,
                const FieldGrid& camera) {
  const double a = cfg.a1_mag * cfg.a1_mag + cfg.a2_mag * cfg.a2_mag;
  const double b = 2.0 * cfg.a1_mag * cfg.a2_mag;
  RateMap out;
  out.grid = camera;
  const Eigen::ArrayXXd phi = acc.phis + phi_in;
  out.raw = a * acc.mass + b * (phi.cos() * acc.sc + phi.sin() * acc.ss);
  out.kernel_mass = acc.mass;
  out.values.resize(camera.ny, camera.nx);
  for (Eigen::Index k = 0; k < out.values.size(); ++k) {
    const double m = acc.mass(k);
    if (m < kMassFloor) {
      out.values(k) = 0.0;
      ++out.zero_mass_pixels;
    } else {
      out.values(k) = std::max(0.0, out.raw(k) / m);
    }
  }
  out.clipped_fraction = acc.queries > 0 ? double(acc.clipped) / double(acc.queries) : 0.0;
  return out;
}

// Delta-limit lookups: each camera pixel reads one conjugate object point.
struct DeltaTables {
  Eigen::ArrayXXd amp, theta, phis;
};

DeltaTables delta_tables(const ObjectMask& mask, double eta, const InterferometerConfig& cfg,
                         const FieldGrid& camera, int workers) {
  if (eta == 0.0 || !std::isfinite(eta))
    throw std::invalid_argument("rate_map_delta: eta must be nonzero and finite");
  DeltaTables t;
  t.amp.resize(camera.ny, camera.nx);
  t.theta.resize(camera.ny, camera.nx);
  t.phis = camera_phi_s(cfg, camera);
  PlaneMapping m = cfg.mapping;
  m.eta = eta;
  parallel_for_rows(camera.ny, workers, [&](int v) {
    for (int u = 0; u < camera.nx; ++u) {
      const Vec2 rho_o = map_camera_to_object(camera.coord(u, v), m);
      t.amp(v, u) = mask.amplitude_at(rho_o);
      t.theta(v, u) = cfg.phi_i.at(rho_o) +
                      cfg.phi_i_prime.at(map_object_to_idler(rho_o, cfg.mapping)) +
                      mask.phase_at(rho_o);
    }
  });
  return t;
}

RateMap combine_delta(const DeltaTables& t, const InterferometerConfig& cfg, double phi_in,
                      const FieldGrid& camera) {
  const double a = cfg.a1_mag * cfg.a1_mag + cfg.a2_mag * cfg.a2_mag;
  const double b = 2.0 * cfg.a1_mag * cfg.a2_mag;
  RateMap out;
  out.grid = camera;
  out.values = a + b * t.amp * ((t.phis + phi_in) - t.theta).cos();
  out.values = out.values.max(0.0);
  out.raw = out.values;
  out.kernel_mass = Eigen::ArrayXXd::Ones(camera.ny, camera.nx);
  return out;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

void validate(const InterferometerConfig& cfg) {
  if (cfg.a1_mag < 0.0 || cfg.a2_mag < 0.0)
    throw std::invalid_argument("InterferometerConfig: amplitude magnitudes must be nonnegative");
  const double n = cfg.a1_mag * cfg.a1_mag + cfg.a2_mag * cfg.a2_mag;
  if (std::abs(n - 1.0) > 1e-12)
    throw std::invalid_argument("InterferometerConfig: |a1|^2 + |a2|^2 must equal 1");
  if (!std::isfinite(cfg.phi_in)) throw std::invalid_argument("InterferometerConfig: phi_in must be finite");
  validate(cfg.mapping);
}

RateMap rate_map_general(const ObjectMask& mask, const CorrelationKernel& kernel,
                         const InterferometerConfig& cfg, const FieldGrid& camera, int workers) {
  validate(cfg);
  if (kernel.kind() == CorrelationKernel::Kind::Delta)
    throw std::invalid_argument("rate_map_general: delta kernels use rate_map_delta");
  return combine(accumulate_general(mask, kernel, cfg, camera, workers), cfg, cfg.phi_in, camera);
}

RateMap rate_map_delta(const ObjectMask& mask, double eta, const InterferometerConfig& cfg,
                       const FieldGrid& camera, int workers) {
  validate(cfg);
  return combine_delta(delta_tables(mask, eta, cfg, camera, workers), cfg, cfg.phi_in, camera);
}

FringeStack fringe_stack(const ObjectMask& mask, const CorrelationKernel& kernel,
                         const InterferometerConfig& cfg, const FieldGrid& camera,
                         const std::vector<double>& phi_in_values, int workers) {
  validate(cfg);
  check_ladder(phi_in_values);
  FringeStack stack;
  stack.grid = camera;
  stack.ladder = phi_in_values;
  stack.frames.reserve(phi_in_values.size());
  if (kernel.kind() == CorrelationKernel::Kind::Delta) {
    const DeltaTables t = delta_tables(mask, kernel.eta(), cfg, camera, workers);
    for (double phi : phi_in_values)
      stack.frames.push_back(combine_delta(t, cfg, phi, camera).values);
  } else {
    const Accumulators acc = accumulate_general(mask, kernel, cfg, camera, workers);
    for (double phi : phi_in_values) {
      RateMap r = combine(acc, cfg, phi, camera);
      stack.zero_mass_pixels = r.zero_mass_pixels;
      stack.clipped_fraction = r.clipped_fraction;
      stack.frames.push_back(std::move(r.values));
    }
  }
  return stack;
}

FringeStack add_shot_noise(const FringeStack& stack, double mean_counts_per_unit_rate,
                           std::uint64_t seed) {
  if (!(mean_counts_per_unit_rate > 0.0))
    throw std::invalid_argument("add_shot_noise: scale must be positive");
  FringeStack out = stack;
  out.noise = NoiseSpec{NoiseSpec::Kind::Poisson, mean_counts_per_unit_rate, seed};
  const std::uint64_t base = splitmix64(seed);
  for (size_t f = 0; f < out.frames.size(); ++f) {
    Eigen::ArrayXXd& frame = out.frames[f];
    const std::uint64_t fseed = splitmix64(base ^ (0x9d2c5680dde4f593ULL + f));
    for (Eigen::Index k = 0; k < frame.size(); ++k) {
      const double r = frame(k);
      if (r <= 0.0) {
        frame(k) = 0.0;
        continue;
      }
      std::mt19937_64 rng(splitmix64(fseed ^ static_cast<std::uint64_t>(k)));
      std::poisson_distribution<long long> draw(r * mean_counts_per_unit_rate);
      frame(k) = static_cast<double>(draw(rng)) / mean_counts_per_unit_rate;
    }
  }
  return out;
}

}  // namespace qiup
