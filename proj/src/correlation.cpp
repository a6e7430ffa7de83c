#include "qiup/correlation.hpp"

#include <bit>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace qiup {
namespace {

constexpr int kMaxModesPerAxis = 16;    // amplitude lattices stay oracle-sized
constexpr int kMaxTablePerAxis = 64;    // per-plane cap for tabulated kernels
constexpr long long kMaxTableEntries = 1LL << 24;
constexpr double kNormTol = 1e-6;

static_assert(std::endian::native == std::endian::little,
              "kernel container I/O assumes a little-endian host");

struct BilinearCell {
  int i0, j0;
  double tu, tv;
  bool inside;
};

BilinearCell locate(const FieldGrid& g, const Vec2& p) {
  BilinearCell c{};
  const double u = g.fx(p.x());
  const double v = g.fy(p.y());
  c.inside = u >= 0.0 && u <= g.nx - 1 && v >= 0.0 && v <= g.ny - 1;
  if (!c.inside) return c;
  c.i0 = std::min(static_cast<int>(u), g.nx - 2);
  c.j0 = std::min(static_cast<int>(v), g.ny - 2);
  c.tu = u - c.i0;
  c.tv = v - c.j0;
  return c;
}

}  // namespace

void BiphotonAmplitude::normalize() {
  const double n2 = squared_norm();
  if (!(n2 > 0.0) || !std::isfinite(n2))
    throw std::invalid_argument("BiphotonAmplitude: cannot normalize zero or non-finite amplitude");
  values /= std::sqrt(n2);
}

BiphotonAmplitude make_amplitude(const FieldGrid& qgrid, Eigen::MatrixXcd values) {
  if (qgrid.nx != qgrid.ny)
    throw std::invalid_argument("BiphotonAmplitude: mode lattice must be square");
  if (qgrid.nx > kMaxModesPerAxis)
    throw std::invalid_argument("BiphotonAmplitude: mode count exceeds the 16x16 cap");
  const int n = qgrid.count();
  if (values.rows() != n || values.cols() != n)
    throw std::invalid_argument("BiphotonAmplitude: coefficient matrix must be (nx*ny)^2");
  if (!values.allFinite()) throw std::invalid_argument("BiphotonAmplitude: non-finite coefficients");
  return BiphotonAmplitude{qgrid, std::move(values)};
}

CorrelationKernel CorrelationKernel::delta(double eta) {
  if (eta == 0.0 || !std::isfinite(eta))
    throw std::invalid_argument("CorrelationKernel: delta kernel needs nonzero finite eta");
  CorrelationKernel k;
  k.kind_ = Kind::Delta;
  k.eta_ = eta;
  return k;
}

CorrelationKernel CorrelationKernel::gaussian(double eta, double sigma_minus, double sigma_plus) {
  if (eta == 0.0 || !std::isfinite(eta))
    throw std::invalid_argument("CorrelationKernel: gaussian kernel needs nonzero finite eta");
  if (!(sigma_minus > 0.0) || !(sigma_plus > 0.0))
    throw std::invalid_argument("CorrelationKernel: gaussian widths must be positive");
  CorrelationKernel k;
  k.kind_ = Kind::Gaussian;
  k.eta_ = eta;
  k.sigma_minus_ = sigma_minus;
  k.sigma_plus_ = sigma_plus;
  // closed-form integral of the two separable Gaussians, Jacobian (2 eta)^2
  const double pi = std::numbers::pi;
  k.gaussian_scale_ = 4.0 * eta * eta /
                      ((2.0 * pi * sigma_minus * sigma_minus) * (2.0 * pi * sigma_plus * sigma_plus));
  return k;
}

CorrelationKernel CorrelationKernel::tabulated(const FieldGrid& signal_grid,
                                               const FieldGrid& idler_grid,
                                               Eigen::ArrayXXd values) {
  if (signal_grid.nx > kMaxTablePerAxis || signal_grid.ny > kMaxTablePerAxis ||
      idler_grid.nx > kMaxTablePerAxis || idler_grid.ny > kMaxTablePerAxis)
    throw std::invalid_argument("CorrelationKernel: tabulated grids capped at 64x64 per plane");
  const long long entries = 1LL * signal_grid.count() * idler_grid.count();
  if (entries > kMaxTableEntries)
    throw std::invalid_argument("CorrelationKernel: tabulated kernel exceeds the 2^24 entry cap");
  if (values.rows() != signal_grid.count() || values.cols() != idler_grid.count())
    throw std::invalid_argument("CorrelationKernel: table shape must be signal_count x idler_count");
  if (!values.isFinite().all() || (values < 0.0).any())
    throw std::invalid_argument("CorrelationKernel: table must be finite and nonnegative");
  const double ws = signal_grid.pitch * signal_grid.pitch;
  const double wi = idler_grid.pitch * idler_grid.pitch;
  const double integral = values.sum() * ws * wi;
  if (!(integral > 0.0)) throw std::invalid_argument("CorrelationKernel: table has zero mass");
  CorrelationKernel k;
  k.kind_ = Kind::Tabulated;
  k.signal_grid_ = signal_grid;
  k.idler_grid_ = idler_grid;
  // idempotent: a table that is already normalized is not perturbed by the
  // rounding of a second division, so containers round-trip bit-exactly
  if (std::abs(integral - 1.0) <= 1e-12)
    k.table_ = std::move(values);
  else
    k.table_ = values / integral;
  return k;
}

double CorrelationKernel::integral() const {
  switch (kind_) {
    case Kind::Gaussian:
      return 1.0;
    case Kind::Tabulated:
      return table_.sum() * signal_grid_.pitch * signal_grid_.pitch * idler_grid_.pitch *
             idler_grid_.pitch;
    default:
      throw std::logic_error("CorrelationKernel: delta kernel has no sampled integral");
  }
}

double CorrelationKernel::evaluate(const Vec2& rho_s, const Vec2& rho_i, QueryStats* stats) const {
  if (stats) ++stats->queries;
  switch (kind_) {
    case Kind::Delta:
      throw std::logic_error("CorrelationKernel: delta kernel cannot be evaluated pointwise");
    case Kind::Gaussian: {
      const Vec2 u = rho_s - eta_ * rho_i;
      const Vec2 v = rho_s + eta_ * rho_i;
      return gaussian_scale_ * std::exp(-u.squaredNorm() / (2.0 * sigma_minus_ * sigma_minus_) -
                                        v.squaredNorm() / (2.0 * sigma_plus_ * sigma_plus_));
    }
    case Kind::Tabulated: {
      const BilinearCell s = locate(signal_grid_, rho_s);
      const BilinearCell i = locate(idler_grid_, rho_i);
      if (!s.inside || !i.inside) {
        if (stats) ++stats->clipped;
        return 0.0;
      }
      const double wsu[2] = {1.0 - s.tu, s.tu};
      const double wsv[2] = {1.0 - s.tv, s.tv};
      const double wiu[2] = {1.0 - i.tu, i.tu};
      const double wiv[2] = {1.0 - i.tv, i.tv};
      double acc = 0.0;
      for (int sj = 0; sj < 2; ++sj)
        for (int si = 0; si < 2; ++si) {
          const double ws = wsv[sj] * wsu[si];
          if (ws == 0.0) continue;
          const int srow = signal_grid_.flat(s.i0 + si, s.j0 + sj);
          for (int ij = 0; ij < 2; ++ij)
            for (int ii = 0; ii < 2; ++ii) {
              const double w = ws * wiv[ij] * wiu[ii];
              if (w == 0.0) continue;
              acc += w * table_(srow, idler_grid_.flat(i.i0 + ii, i.j0 + ij));
            }
        }
      return acc;
    }
  }
  return 0.0;
}

FieldGrid reciprocal_grid(const FieldGrid& qgrid) {
  if (qgrid.nx != qgrid.ny)
    throw std::invalid_argument("reciprocal_grid: mode lattice must be square");
  return make_grid(qgrid.nx, qgrid.ny, 2.0 * std::numbers::pi / (qgrid.nx * qgrid.pitch));
}

CorrelationKernel position_pdf_from_amplitude(const BiphotonAmplitude& amp, const FieldGrid& outgrid) {
  if (std::abs(amp.squared_norm() - 1.0) > kNormTol)
    throw std::invalid_argument("position_pdf_from_amplitude: amplitude is not normalized");
  const FieldGrid want = reciprocal_grid(amp.qgrid);
  if (outgrid.nx != want.nx || outgrid.ny != want.ny ||
      std::abs(outgrid.pitch - want.pitch) > 1e-9 * want.pitch)
    throw std::invalid_argument(
        "position_pdf_from_amplitude: outgrid is not the reciprocal lattice of qgrid");
  const int n = amp.qgrid.count();
  Eigen::MatrixXcd e(n, n);  // e(r, q) = exp(i q . rho_r)
  for (int jr = 0; jr < outgrid.ny; ++jr)
    for (int ir = 0; ir < outgrid.nx; ++ir) {
      const Vec2 rho = outgrid.coord(ir, jr);
      const int r = outgrid.flat(ir, jr);
      for (int jq = 0; jq < amp.qgrid.ny; ++jq)
        for (int iq = 0; iq < amp.qgrid.nx; ++iq) {
          const Vec2 q = amp.qgrid.coord(iq, jq);
          e(r, amp.qgrid.flat(iq, jq)) = std::polar(1.0, q.dot(rho));
        }
    }
  const Eigen::MatrixXcd psi = e * amp.values * e.transpose();
  return CorrelationKernel::tabulated(outgrid, outgrid, psi.cwiseAbs2());
}

CorrelationKernel delta_kernel(double eta) { return CorrelationKernel::delta(eta); }
CorrelationKernel gaussian_kernel(double eta, double sigma_minus, double sigma_plus) {
  return CorrelationKernel::gaussian(eta, sigma_minus, sigma_plus);
}
CorrelationKernel tabulated_kernel(const FieldGrid& signal_grid, const FieldGrid& idler_grid,
                                   Eigen::ArrayXXd values) {
  return CorrelationKernel::tabulated(signal_grid, idler_grid, std::move(values));
}

void save_kernel(const CorrelationKernel& kernel, const std::filesystem::path& path) {
  if (kernel.kind() != CorrelationKernel::Kind::Tabulated)
    throw std::invalid_argument("save_kernel: only tabulated kernels serialize");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
  const FieldGrid& s = kernel.signal_grid();
  const FieldGrid& i = kernel.idler_grid();
  char header[160];
  std::snprintf(header, sizeof header, "QIUPK1 %d %d %.17g %d %d %.17g\n", s.nx, s.ny, s.pitch,
                i.nx, i.ny, i.pitch);
  out << header;
  // row-major: signal index outer, idler index inner, 64-bit little-endian
  const Eigen::ArrayXXd& t = kernel.table();
  std::vector<double> row(static_cast<size_t>(t.cols()));
  for (Eigen::Index r = 0; r < t.rows(); ++r) {
    for (Eigen::Index c = 0; c < t.cols(); ++c) row[static_cast<size_t>(c)] = t(r, c);
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size() * sizeof(double)));
  }
  if (!out) throw std::runtime_error(path.string() + ": write failed");
}

CorrelationKernel load_kernel(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path.string() + ": cannot open");
  std::string header;
  std::getline(in, header);
  std::istringstream hs(header);
  std::string magic;
  int snx, sny, inx, iny;
  double spitch, ipitch;
  if (!(hs >> magic >> snx >> sny >> spitch >> inx >> iny >> ipitch) || magic != "QIUPK1")
    throw std::runtime_error(path.string() + ": not a kernel container");
  const FieldGrid sg = make_grid(snx, sny, spitch);
  const FieldGrid ig = make_grid(inx, iny, ipitch);
  Eigen::ArrayXXd table(sg.count(), ig.count());
  std::vector<double> row(static_cast<size_t>(table.cols()));
  for (Eigen::Index r = 0; r < table.rows(); ++r) {
    in.read(reinterpret_cast<char*>(row.data()),
            static_cast<std::streamsize>(row.size() * sizeof(double)));
    if (!in) throw std::runtime_error(path.string() + ": truncated kernel data");
    for (Eigen::Index c = 0; c < table.cols(); ++c) table(r, c) = row[static_cast<size_t>(c)];
  }
  return CorrelationKernel::tabulated(sg, ig, std::move(table));
}

}  // namespace qiup
