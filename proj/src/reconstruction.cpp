#include "qiup/reconstruction.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "qiup/parallel.hpp"

namespace qiup {
namespace {

constexpr double kMeanFloor = 1e-12;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_phase(double phi) {
  double w = std::remainder(phi, kTwoPi);
  if (w <= -std::numbers::pi) w = std::numbers::pi;  // principal branch (-pi, pi]
  return w;
}

bool is_uniform_full_period(const std::vector<double>& ladder) {
  const int n = static_cast<int>(ladder.size());
  std::vector<double> rel(ladder.size());
  for (int k = 0; k < n; ++k) {
    double d = std::fmod(ladder[k] - ladder[0], kTwoPi);
    if (d < 0.0) d += kTwoPi;
    rel[static_cast<size_t>(k)] = d;
  }
  std::sort(rel.begin(), rel.end());
  for (int k = 0; k < n; ++k)
    if (std::abs(rel[static_cast<size_t>(k)] - kTwoPi * k / n) > 1e-9) return false;
  return true;
}

// axis-flipped copy when the object-plane scale factor is negative; on a
// centered grid reversing both axes maps coord -> -coord exactly
template <typename A>
A oriented(const A& a, bool flip) {
  if (!flip) return a;
  return a.reverse().eval();
}

struct Feature {
  Vec2 centroid;
  double weight;
};

std::vector<Feature> detect_features(const Eigen::ArrayXXd& values, const ValidMask& valid,
                                     const FieldGrid& grid) {
  double lo = 0.0, hi = 0.0;
  bool any = false;
  for (Eigen::Index k = 0; k < values.size(); ++k) {
    if (!valid(k)) continue;
    if (!any) {
      lo = hi = values(k);
      any = true;
    } else {
      lo = std::min(lo, values(k));
      hi = std::max(hi, values(k));
    }
  }
  if (!any || hi - lo <= 1e-9) return {};
  const double thr = 0.5 * (lo + hi);
  constexpr int kMinPixels = 4;

  Eigen::Array<int, Eigen::Dynamic, Eigen::Dynamic> label =
      Eigen::Array<int, Eigen::Dynamic, Eigen::Dynamic>::Constant(values.rows(), values.cols(), -1);
  std::vector<Feature> features;
  std::vector<std::pair<int, int>> queue;
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i) {
      if (label(j, i) >= 0 || !valid(j, i) || values(j, i) <= thr) continue;
      queue.clear();
      queue.emplace_back(i, j);
      label(j, i) = static_cast<int>(features.size());
      double wsum = 0.0;
      Vec2 acc = Vec2::Zero();
      long long pixels = 0;
      while (!queue.empty()) {
        auto [ci, cj] = queue.back();
        queue.pop_back();
        const double w = values(cj, ci) - thr;
        wsum += w;
        acc += w * grid.coord(ci, cj);
        ++pixels;
        const int di[4] = {1, -1, 0, 0};
        const int dj[4] = {0, 0, 1, -1};
        for (int d = 0; d < 4; ++d) {
          const int ni = ci + di[d], nj = cj + dj[d];
          if (ni < 0 || nj < 0 || ni >= grid.nx || nj >= grid.ny) continue;
          if (label(nj, ni) >= 0 || !valid(nj, ni) || values(nj, ni) <= thr) continue;
          label(nj, ni) = static_cast<int>(features.size());
          queue.emplace_back(ni, nj);
        }
      }
      if (pixels >= kMinPixels && wsum > 0.0)
        features.push_back(Feature{acc / wsum, wsum});
    }
  return features;
}

struct ScaleFit {
  double m, rms, denom;
};

ScaleFit fit_scale(const std::vector<Vec2>& a, const std::vector<Vec2>& b) {
  double num = 0.0, den = 0.0;
  for (size_t k = 0; k < a.size(); ++k) {
    num += a[k].dot(b[k]);
    den += a[k].squaredNorm();
  }
  ScaleFit f{};
  f.m = num / den;
  f.denom = den;
  double r2 = 0.0;
  for (size_t k = 0; k < a.size(); ++k) r2 += (b[k] - f.m * a[k]).squaredNorm();
  f.rms = r2;
  return f;
}

}  // namespace

FringeFit fit_fringes(const FringeStack& stack, int workers) {
  const int n = static_cast<int>(stack.frames.size());
  if (n < 3 || static_cast<int>(stack.ladder.size()) != n)
    throw std::invalid_argument("fit_fringes: need at least 3 frames with a matching ladder");
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      if (std::abs(std::remainder(stack.ladder[a] - stack.ladder[b], kTwoPi)) <= 1e-12)
        throw std::invalid_argument("fit_fringes: ladder values must be distinct mod 2*pi");
  for (const auto& f : stack.frames)
    if (f.rows() != stack.grid.ny || f.cols() != stack.grid.nx)
      throw std::invalid_argument("fit_fringes: frame shape does not match stack grid");

  const bool uniform = is_uniform_full_period(stack.ladder);
  std::vector<double> cosk(static_cast<size_t>(n)), sink(static_cast<size_t>(n));
  for (int k = 0; k < n; ++k) {
    cosk[static_cast<size_t>(k)] = std::cos(stack.ladder[static_cast<size_t>(k)]);
    sink[static_cast<size_t>(k)] = std::sin(stack.ladder[static_cast<size_t>(k)]);
  }

  // normal equations for the {1, cos, sin} basis are shared by every pixel
  Eigen::Matrix3d gram = Eigen::Matrix3d::Zero();
  for (int k = 0; k < n; ++k) {
    const Eigen::Vector3d phi(1.0, cosk[static_cast<size_t>(k)], sink[static_cast<size_t>(k)]);
    gram += phi * phi.transpose();
  }
  Eigen::FullPivLU<Eigen::Matrix3d> lu(gram);
  if (!uniform && !lu.isInvertible())
    throw std::invalid_argument("fit_fringes: degenerate ladder, fit is rank-deficient");

  FringeFit fit;
  fit.grid = stack.grid;
  fit.mean.setZero(stack.grid.ny, stack.grid.nx);
  fit.visibility = VisibilityMap{stack.grid, Eigen::ArrayXXd::Zero(stack.grid.ny, stack.grid.nx),
                                 ValidMask::Constant(stack.grid.ny, stack.grid.nx, false)};
  fit.phase = PhaseMap{stack.grid, Eigen::ArrayXXd::Zero(stack.grid.ny, stack.grid.nx),
                       ValidMask::Constant(stack.grid.ny, stack.grid.nx, false)};

  const int nworkers = resolve_workers(workers);
  std::vector<long long> clip_tally(static_cast<size_t>(nworkers), 0);
  std::vector<long long> mask_tally(static_cast<size_t>(nworkers), 0);
  parallel_for_rows_indexed(stack.grid.ny, nworkers, [&](int j, int slot) {
    for (int i = 0; i < stack.grid.nx; ++i) {
      double a, u, v;
      if (uniform) {
        double sum = 0.0, zr = 0.0, zi = 0.0;
        for (int k = 0; k < n; ++k) {
          const double r = stack.frames[static_cast<size_t>(k)](j, i);
          sum += r;
          zr += r * cosk[static_cast<size_t>(k)];
          zi -= r * sink[static_cast<size_t>(k)];
        }
        a = sum / n;
        // z = (2/N) sum R_k exp(-i phi_k) = B exp(iC); u = Re z, v = Im z
        u = 2.0 * zr / n;
        v = 2.0 * zi / n;
      } else {
        Eigen::Vector3d h = Eigen::Vector3d::Zero();
        for (int k = 0; k < n; ++k) {
          const double r = stack.frames[static_cast<size_t>(k)](j, i);
          h += r * Eigen::Vector3d(1.0, cosk[static_cast<size_t>(k)], sink[static_cast<size_t>(k)]);
        }
        const Eigen::Vector3d x = lu.solve(h);
        a = x(0);
        // R = A + p cos(phi) + q sin(phi) with p = B cos C, q = -B sin C
        u = x(1);
        v = -x(2);
      }
      fit.mean(j, i) = a;
      if (a <= kMeanFloor) {
        ++mask_tally[static_cast<size_t>(slot)];
        continue;
      }
      const double b = std::hypot(u, v);
      double vis = b / a;
      if (vis > 1.0) {
        vis = 1.0;
        ++clip_tally[static_cast<size_t>(slot)];
      }
      fit.visibility.values(j, i) = vis;
      fit.visibility.valid(j, i) = true;
      fit.phase.values(j, i) = wrap_phase(std::atan2(v, u));
      fit.phase.valid(j, i) = true;
    }
  });
  for (long long c : clip_tally) fit.clipped += c;
  for (long long m : mask_tally) fit.masked += m;
  return fit;
}

ObjectEstimate visibility_image(const VisibilityMap& v, const PlaneMapping& mapping) {
  validate(mapping);
  if (mapping.eta == 0.0) throw std::invalid_argument("visibility_image: eta must be nonzero");
  const double f = mapping.mi / (mapping.eta * mapping.ms);
  ObjectEstimate out;
  out.grid = make_grid(v.grid.nx, v.grid.ny, v.grid.pitch * std::abs(f));
  out.values = oriented(v.values, f < 0.0);
  out.valid = oriented(v.valid, f < 0.0);
  return out;
}

ObjectEstimate phase_image(const PhaseMap& c, const VisibilityMap& v, const PhaseField& phi_s,
                           const PhaseField& phi_i, const PhaseField& phi_i_prime, double phi_in,
                           const PlaneMapping& mapping, double v_floor) {
  validate(mapping);
  if (mapping.eta == 0.0) throw std::invalid_argument("phase_image: eta must be nonzero");
  if (!same_grid(c.grid, v.grid) || c.values.rows() != v.values.rows())
    throw std::invalid_argument("phase_image: phase and visibility maps must share a grid");
  const double f = mapping.mi / (mapping.eta * mapping.ms);
  ObjectEstimate out;
  out.grid = make_grid(c.grid.nx, c.grid.ny, c.grid.pitch * std::abs(f));
  out.values.setZero(c.grid.ny, c.grid.nx);
  out.valid = ValidMask::Constant(c.grid.ny, c.grid.nx, false);
  for (int j = 0; j < c.grid.ny; ++j)
    for (int i = 0; i < c.grid.nx; ++i) {
      if (!c.valid(j, i) || !v.valid(j, i) || v.values(j, i) < v_floor) continue;
      const Vec2 rho_c = c.grid.coord(i, j);
      const Vec2 rho_o = rho_c * f;
      const double phi_t = -(c.values(j, i) - phi_in - phi_s.at(rho_c) + phi_i.at(rho_o) +
                             phi_i_prime.at(map_object_to_idler(rho_o, mapping)));
      out.values(j, i) = wrap_phase(phi_t);
      out.valid(j, i) = true;
    }
  out.values = oriented(out.values, f < 0.0);
  out.valid = oriented(out.valid, f < 0.0);
  return out;
}

SignedMap image_subtraction(const RateMap& frame_a, const RateMap& frame_b) {
  if (!same_grid(frame_a.grid, frame_b.grid))
    throw std::invalid_argument("image_subtraction: grids differ");
  const double scale = std::max(frame_a.kernel_mass.abs().maxCoeff(), 1e-300);
  if (((frame_a.kernel_mass - frame_b.kernel_mass).abs() > 1e-9 * scale).any())
    throw std::invalid_argument("image_subtraction: normalizations differ");
  return SignedMap{frame_a.grid, frame_a.values - frame_b.values};
}

MagnificationEstimate measure_magnification(const ObjectMask& object_truth,
                                            const VisibilityMap& v) {
  const ValidMask all_valid =
      ValidMask::Constant(object_truth.grid.ny, object_truth.grid.nx, true);
  std::vector<Feature> truth = detect_features(object_truth.amplitude, all_valid, object_truth.grid);
  std::vector<Feature> image = detect_features(v.values, v.valid, v.grid);
  if (truth.size() < 2 || image.size() != truth.size())
    throw std::runtime_error("measure_magnification: feature detection failure (need matching sets of >= 2 features)");

  auto center = [](std::vector<Feature>& fs) {
    Vec2 mean = Vec2::Zero();
    double wsum = 0.0;
    for (const auto& f : fs) {
      mean += f.weight * f.centroid;
      wsum += f.weight;
    }
    mean /= wsum;
    std::vector<Vec2> out;
    out.reserve(fs.size());
    for (const auto& f : fs) out.push_back(f.centroid - mean);
    return out;
  };
  std::vector<Vec2> a = center(truth);
  std::vector<Vec2> b = center(image);
  auto by_angle = [](const Vec2& p, const Vec2& q) {
    return std::atan2(p.y(), p.x()) < std::atan2(q.y(), q.x());
  };
  std::sort(a.begin(), a.end(), by_angle);
  std::sort(b.begin(), b.end(), by_angle);

  // pairing between the constellations is unknown up to cyclic order (and a
  // possible point reflection for negative magnification); pick the shift
  // with the smallest residual
  const size_t nf = a.size();
  double bscale = 0.0;
  for (const Vec2& p : b) bscale += p.squaredNorm();
  ScaleFit best{0.0, std::numeric_limits<double>::infinity(), 1.0};
  for (size_t shift = 0; shift < nf; ++shift) {
    std::vector<Vec2> bs(nf);
    for (size_t k = 0; k < nf; ++k) bs[k] = b[(k + shift) % nf];
    const ScaleFit f = fit_scale(a, bs);
    // a point-symmetric constellation cannot separate m from -m; on residual
    // ties, report the upright interpretation
    const double tie = 1e-18 * bscale;
    if (f.rms < best.rms - tie || (f.rms <= best.rms + tie && f.m > best.m)) best = f;
  }
  MagnificationEstimate est;
  est.m = best.m;
  est.features = static_cast<int>(nf);
  const double dof = std::max(1.0, 2.0 * static_cast<double>(nf) - 1.0);
  est.uncertainty = std::sqrt(best.rms / dof / best.denom);
  return est;
}

}  // namespace qiup
