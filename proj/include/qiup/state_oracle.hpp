#pragma once

#include <Eigen/Dense>
#include <complex>

#include "qiup/correlation.hpp"
#include "qiup/grid.hpp"
#include "qiup/interferometer.hpp"
#include "qiup/object_mask.hpp"
#include "qiup/phase_field.hpp"

namespace qiup {

/// Discrete transverse-mode lattice for the small-scale state computation:
/// a square momentum lattice, its conjugate position lattice, and the unitary
/// forward transform (position -> momentum, e^{-iq.rho} with symmetric
/// normalization). Unitarity is exact for the centered lattices because
/// dq * drho = 2*pi/n per axis. Mode families (both signal arms, the aligned
/// idler, and the vacuum port) share this lattice; sector bookkeeping lives
/// in TwoPhotonStateVector.
struct ModeBasis {
  FieldGrid qgrid;
  FieldGrid rgrid;
  Eigen::MatrixXcd dft;  // (mode, position), N x N

  int mode_count() const { return qgrid.count(); }
  static ModeBasis make(int n, double qpitch);
};

/// Momentum-space object kernels: dense matrices sending aligned-idler mode
/// coefficients to transmitted and reflected components. Built as
/// F diag(t') F^dagger with t'(rho_I) = exp(i(phi_I(M_I rho_I) +
/// phi_I'(rho_I))) T(M_I rho_I) and r'(rho_I) = exp(i phi_I'(rho_I))
/// sqrt(1 - |T(M_I rho_I)|^2), so the pair completes a unitary pointwise and
/// the identity object gives exactly the identity matrix.
struct ObjectKernels {
  ModeBasis basis;
  Eigen::MatrixXcd t;
  Eigen::MatrixXcd r;
};

ObjectKernels object_kernel_matrices(const ObjectMask& mask, const PhaseField& phi_i,
                                     const PhaseField& phi_i_prime, double mi,
                                     const ModeBasis& basis);

/// Two-photon coefficient sectors over (idler mode, signal mode), one matrix
/// per surviving ket family: (I1,S1) from source 1, (I1,S2) transmitted
/// source 2, (0,S2) reflected source 2. Loss routes amplitude to the vacuum
/// sector instead of shrinking the norm.
struct TwoPhotonStateVector {
  ModeBasis basis;
  std::complex<double> alpha1, alpha2;
  Eigen::MatrixXcd s1, s2, s0;
  double quad_weight = 0.0;

  double total_norm() const {
    return (s1.squaredNorm() + s2.squaredNorm() + s0.squaredNorm()) * quad_weight;
  }
};

TwoPhotonStateVector build_state(const BiphotonAmplitude& amp, std::complex<double> alpha1,
                                 std::complex<double> alpha2, const ObjectKernels& kernels);

/// Expectation value of the photon-counting operator at one camera point,
/// contracted directly from the state sectors. Proportional to a rate; use
/// oracle_rate_map for values normalized like the quadrature engine.
double oracle_rate(const TwoPhotonStateVector& state, const InterferometerConfig& cfg,
                   const Vec2& rho_c);

/// Rate at every camera pixel, divided by the per-pixel mode mass so values
/// share the normalized-rate convention of rate_map_general.
RateMap oracle_rate_map(const TwoPhotonStateVector& state, const InterferometerConfig& cfg,
                        const FieldGrid& camera, int workers = 0);

}  // namespace qiup
