#pragma once

#include <Eigen/Core>
#include <filesystem>

#include "qiup/grid.hpp"

namespace qiup {

/// Two-photon transverse-momentum amplitude on a shared square mode lattice.
/// values(s, i) is the coefficient for signal mode s and idler mode i, with
/// modes flattened row-major (y outermost) over qgrid. Mode counts are capped
/// at 16x16 per photon; this representation exists for small-scale
/// verification, not wide-field synthesis.
struct BiphotonAmplitude {
  FieldGrid qgrid;
  Eigen::MatrixXcd values;

  /// (dq^2)^2 quadrature weight of the flattened double sum.
  double quad_weight() const { return qgrid.pitch * qgrid.pitch * qgrid.pitch * qgrid.pitch; }
  double squared_norm() const { return values.squaredNorm() * quad_weight(); }
  void normalize();
};

BiphotonAmplitude make_amplitude(const FieldGrid& qgrid, Eigen::MatrixXcd values);

/// Joint position density of the photon pair at the source output, in one of
/// three forms:
///  - Delta: the tight-correlation limit P ~ delta(rho_s - eta * rho_i)
///    (never evaluated pointwise; consumed analytically by the delta-limit
///    imaging path);
///  - Gaussian: separable density in the rotated coordinates
///    rho_s - eta*rho_i (width sigma_minus) and rho_s + eta*rho_i
///    (width sigma_plus), normalized to unit integral in closed form;
///  - Tabulated: nonnegative samples on a signal x idler product lattice,
///    renormalized to unit midpoint-rule integral on construction and
///    interpolated 4-linearly; queries outside the tabulated domain clip to
///    zero and are tallied per query-batch in QueryStats.
class CorrelationKernel {
 public:
  enum class Kind { Delta, Gaussian, Tabulated };

  struct QueryStats {
    long long queries = 0;
    long long clipped = 0;  // outside the tabulated domain
    void merge(const QueryStats& o) {
      queries += o.queries;
      clipped += o.clipped;
    }
  };

  /// Default-constructs the tight-correlation kernel with eta = 1.
  CorrelationKernel() = default;

  static CorrelationKernel delta(double eta);
  static CorrelationKernel gaussian(double eta, double sigma_minus, double sigma_plus);
  static CorrelationKernel tabulated(const FieldGrid& signal_grid, const FieldGrid& idler_grid,
                                     Eigen::ArrayXXd values);

  Kind kind() const { return kind_; }
  double eta() const { return eta_; }
  double sigma_minus() const { return sigma_minus_; }
  double sigma_plus() const { return sigma_plus_; }
  const FieldGrid& signal_grid() const { return signal_grid_; }
  const FieldGrid& idler_grid() const { return idler_grid_; }
  /// (signal_count, idler_count) table of density samples.
  const Eigen::ArrayXXd& table() const { return table_; }

  /// Pointwise density. Valid for Gaussian and Tabulated kernels; Delta
  /// kernels have no pointwise value and throw.
  double evaluate(const Vec2& rho_s, const Vec2& rho_i, QueryStats* stats = nullptr) const;

  /// Discrete (Tabulated) or closed-form (Gaussian) integral; 1 by construction.
  double integral() const;

 private:
  Kind kind_ = Kind::Delta;
  double eta_ = 1.0;
  double sigma_minus_ = 0.0, sigma_plus_ = 0.0;
  double gaussian_scale_ = 0.0;
  FieldGrid signal_grid_, idler_grid_;
  Eigen::ArrayXXd table_;
};

/// Fourier-transforms a normalized momentum amplitude to the joint position
/// density |sum C exp(i(q_s.rho_s + q_i.rho_i)) dq^4|^2 on outgrid for both
/// planes, renormalized to unit discrete integral. outgrid must be the
/// reciprocal lattice of qgrid: same sample counts, pitch 2*pi/(n * dq).
CorrelationKernel position_pdf_from_amplitude(const BiphotonAmplitude& amp, const FieldGrid& outgrid);

/// Conjugate lattice satisfying the reciprocal-pitch condition above.
FieldGrid reciprocal_grid(const FieldGrid& qgrid);

CorrelationKernel delta_kernel(double eta);
CorrelationKernel gaussian_kernel(double eta, double sigma_minus, double sigma_plus);
CorrelationKernel tabulated_kernel(const FieldGrid& signal_grid, const FieldGrid& idler_grid,
                                   Eigen::ArrayXXd values);

inline double evaluate_kernel(const CorrelationKernel& k, const Vec2& rho_s, const Vec2& rho_i,
                              CorrelationKernel::QueryStats* stats = nullptr) {
  return k.evaluate(rho_s, rho_i, stats);
}

/// Binary container for Tabulated kernels (little-endian, fixed header).
void save_kernel(const CorrelationKernel& kernel, const std::filesystem::path& path);
CorrelationKernel load_kernel(const std::filesystem::path& path);

}  // namespace qiup
