#include "qiup/state_oracle.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "qiup/parallel.hpp"

namespace qiup {
namespace {

constexpr int kMaxModes = 16;

Eigen::VectorXcd detection_vector(const ModeBasis& basis, const Vec2& rho_c, double ms) {
  const Vec2 rho_s = rho_c / ms;
  Eigen::VectorXcd e(basis.mode_count());
  for (int j = 0; j < basis.qgrid.ny; ++j)
    for (int i = 0; i < basis.qgrid.nx; ++i)
      e(basis.qgrid.flat(i, j)) = std::polar(1.0, basis.qgrid.coord(i, j).dot(rho_s));
  return e;
}

struct RateParts {
  double total;  // <E- E+>
  double mass;   // sector mass, the per-pixel normalizer
};

RateParts rate_parts(const TwoPhotonStateVector& state, const InterferometerConfig& cfg,
                     const Vec2& rho_c) {
  const Eigen::VectorXcd e = detection_vector(state.basis, rho_c, cfg.mapping.ms);
  const Eigen::VectorXcd v1 = state.s1 * e;
  const Eigen::VectorXcd v2 = state.s2 * e;
  const Eigen::VectorXcd v0 = state.s0 * e;
  // The second-arm detection phase carries the printed beamsplitter factor i;
  // phi_in absorbs the source-amplitude arguments and a compensating -pi/2 so
  // that it parametrizes the fringe cosine directly.
  const double phi_s0 = cfg.phi_in - 0.5 * std::numbers::pi - std::arg(state.alpha2) +
                        std::arg(state.alpha1);
  const std::complex<double> z =
      std::complex<double>(0.0, 1.0) * std::polar(1.0, phi_s0 + cfg.phi_s.at(rho_c));
  const double a = cfg.a1_mag * cfg.a1_mag + cfg.a2_mag * cfg.a2_mag;
  RateParts p;
  p.total = (v1 + z * v2).squaredNorm() + v0.squaredNorm();
  p.mass = (v1.squaredNorm() + v2.squaredNorm() + v0.squaredNorm()) / a;
  return p;
}

}  // namespace

ModeBasis ModeBasis::make(int n, double qpitch) {
  if (n < 2 || n > kMaxModes)
    throw std::invalid_argument("ModeBasis: mode count per axis must be in [2, 16]");
  ModeBasis b;
  b.qgrid = make_grid(n, n, qpitch);
  b.rgrid = reciprocal_grid(b.qgrid);
  const int total = b.qgrid.count();
  b.dft.resize(total, total);
  const double norm = 1.0 / n;  // symmetric 1/sqrt(n) per axis
  for (int jq = 0; jq < n; ++jq)
    for (int iq = 0; iq < n; ++iq) {
      const Vec2 q = b.qgrid.coord(iq, jq);
      const int row = b.qgrid.flat(iq, jq);
      for (int jr = 0; jr < n; ++jr)
        for (int ir = 0; ir < n; ++ir)
          b.dft(row, b.rgrid.flat(ir, jr)) = std::polar(norm, -q.dot(b.rgrid.coord(ir, jr)));
    }
  return b;
}

ObjectKernels object_kernel_matrices(const ObjectMask& mask, const PhaseField& phi_i,
                                     const PhaseField& phi_i_prime, double mi,
                                     const ModeBasis& basis) {
  if (mi == 0.0 || !std::isfinite(mi))
    throw std::invalid_argument("object_kernel_matrices: M_I must be nonzero and finite");
  const int total = basis.mode_count();
  Eigen::VectorXcd tdiag(total), rdiag(total);
  for (int j = 0; j < basis.rgrid.ny; ++j)
    for (int i = 0; i < basis.rgrid.nx; ++i) {
      const Vec2 rho_i = basis.rgrid.coord(i, j);
      const Vec2 rho_o = mi * rho_i;
      const double amp = mask.amplitude_at(rho_o);
      const double pp = phi_i_prime.at(rho_i);
      const int k = basis.rgrid.flat(i, j);
      tdiag(k) = std::polar(amp, phi_i.at(rho_o) + pp + mask.phase_at(rho_o));
      rdiag(k) = std::polar(std::sqrt(std::max(0.0, 1.0 - amp * amp)), pp);
    }
  ObjectKernels k;
  k.basis = basis;
  k.t = basis.dft * tdiag.asDiagonal() * basis.dft.adjoint();
  k.r = basis.dft * rdiag.asDiagonal() * basis.dft.adjoint();
  return k;
}

TwoPhotonStateVector build_state(const BiphotonAmplitude& amp, std::complex<double> alpha1,
                                 std::complex<double> alpha2, const ObjectKernels& kernels) {
  if (!same_grid(amp.qgrid, kernels.basis.qgrid))
    throw std::invalid_argument("build_state: amplitude lattice does not match the mode basis");
  const double n = std::norm(alpha1) + std::norm(alpha2);
  if (std::abs(n - 1.0) > 1e-12)
    throw std::invalid_argument("build_state: |alpha1|^2 + |alpha2|^2 must equal 1");
  TwoPhotonStateVector st;
  st.basis = kernels.basis;
  st.alpha1 = alpha1;
  st.alpha2 = alpha2;
  st.quad_weight = amp.quad_weight();
  const Eigen::MatrixXcd ct = amp.values.transpose();  // (idler mode, signal mode)
  st.s1 = alpha1 * ct;
  st.s2 = alpha2 * (kernels.t.adjoint() * ct);
  st.s0 = alpha2 * (kernels.r.adjoint() * ct);
  return st;
}

double oracle_rate(const TwoPhotonStateVector& state, const InterferometerConfig& cfg,
                   const Vec2& rho_c) {
  return rate_parts(state, cfg, rho_c).total;
}

RateMap oracle_rate_map(const TwoPhotonStateVector& state, const InterferometerConfig& cfg,
                        const FieldGrid& camera, int workers) {
  RateMap out;
  out.grid = camera;
  out.values.setZero(camera.ny, camera.nx);
  out.raw.setZero(camera.ny, camera.nx);
  out.kernel_mass.setZero(camera.ny, camera.nx);
  std::vector<long long> zero_counts(static_cast<size_t>(resolve_workers(workers)), 0);
  parallel_for_rows_indexed(camera.ny, workers, [&](int v, int slot) {
    for (int u = 0; u < camera.nx; ++u) {
      const RateParts p = rate_parts(state, cfg, camera.coord(u, v));
      out.raw(v, u) = p.total;
      out.kernel_mass(v, u) = p.mass;
      if (p.mass < 1e-12) {
        out.values(v, u) = 0.0;
        ++zero_counts[static_cast<size_t>(slot)];
      } else {
        out.values(v, u) = std::max(0.0, p.total / p.mass);
      }
    }
  });
  for (long long z : zero_counts) out.zero_mass_pixels += z;
  return out;
}

}  // namespace qiup
