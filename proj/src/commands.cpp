#include "qiup/commands.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <vector>

#include "qiup/correlation.hpp"
#include "qiup/image_io.hpp"
#include "qiup/interferometer.hpp"
#include "qiup/object_mask.hpp"
#include "qiup/reconstruction.hpp"
#include "qiup/run_config.hpp"
#include "qiup/stack_io.hpp"
#include "qiup/state_oracle.hpp"

namespace qiup::cmd {
namespace {

constexpr double kPi = std::numbers::pi;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<double> default_ladder() { return {0.0, 0.5 * kPi, kPi, 1.5 * kPi}; }

Eigen::ArrayXXd two_disks_raster(const FieldGrid& g, double radius, double separation) {
  Eigen::ArrayXXd a = Eigen::ArrayXXd::Zero(g.ny, g.nx);
  const Vec2 c1(-0.5 * separation, 0.0), c2(0.5 * separation, 0.0);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const Vec2 p = g.coord(i, j);
      if ((p - c1).norm() <= radius || (p - c2).norm() <= radius) a(j, i) = 1.0;
    }
  return a;
}

PhaseField parse_phase(const RunConfig& rc, const std::string& key, const FieldGrid& grid,
                       std::map<std::string, std::string>& echo) {
  const std::string value = rc.get_or(key, "0");
  if (value.rfind("file:", 0) == 0) {
    std::filesystem::path p(value.substr(5));
    if (!p.is_absolute()) p = rc.base_dir() / p;
    Eigen::ArrayXXd map = read_matrix_text(p);
    if (map.rows() != grid.ny || map.cols() != grid.nx)
      throw ConfigError(key + ": phase raster dimensions do not match its plane grid");
    echo[key] = "file:" + p.string();
    return PhaseField(grid, std::move(map));
  }
  const double v = parse_number(value, key);
  echo[key] = fmt(v);
  return PhaseField(v);
}

struct Scenario {
  ObjectMask mask;
  CorrelationKernel kernel;
  InterferometerConfig cfg;
  FieldGrid camera;
  std::vector<double> ladder;
  NoiseSpec noise;
  double v_floor = 0.05;
  std::map<std::string, std::string> echo;

  std::string echo_text() const {
    std::ostringstream out;
    for (const auto& [k, v] : echo) out << k << " = " << v << "\n";
    return out.str();
  }
};

Scenario load_scenario(const RunConfig& rc, const std::optional<std::uint64_t>& seed_override) {
  Scenario sc;
  auto& echo = sc.echo;

  // object plane
  const double opitch = rc.number_or("object.pitch", 1.0);
  if (!(opitch > 0.0)) throw ConfigError("object.pitch must be positive");
  echo["object.pitch"] = fmt(opitch);
  const std::string amp_value = rc.get("object.amplitude");
  Eigen::ArrayXXd amplitude, phase;
  int onx, ony;
  if (amp_value == "builtin:two-disks" || amp_value == "builtin:clear") {
    onx = static_cast<int>(rc.integer_or("object.nx", 96));
    ony = static_cast<int>(rc.integer_or("object.ny", 96));
    echo["object.nx"] = std::to_string(onx);
    echo["object.ny"] = std::to_string(ony);
    const FieldGrid g = make_grid(onx, ony, opitch);
    if (amp_value == "builtin:two-disks") {
      const double radius = rc.number_or("disks.radius", 10.0);
      const double separation = rc.number_or("disks.separation", 32.0);
      echo["disks.radius"] = fmt(radius);
      echo["disks.separation"] = fmt(separation);
      amplitude = two_disks_raster(g, radius, separation);
    } else {
      amplitude = Eigen::ArrayXXd::Ones(ony, onx);
    }
  } else {
    const std::filesystem::path p = rc.resolve_path("object.amplitude");
    amplitude = read_gray_image(p);
    onx = static_cast<int>(amplitude.cols());
    ony = static_cast<int>(amplitude.rows());
    if (rc.has("object.nx") && rc.integer_or("object.nx", onx) != onx)
      throw ConfigError("object.nx does not match the amplitude raster");
    if (rc.has("object.ny") && rc.integer_or("object.ny", ony) != ony)
      throw ConfigError("object.ny does not match the amplitude raster");
    echo["object.amplitude"] = p.string();
  }
  if (amp_value.rfind("builtin:", 0) == 0) echo["object.amplitude"] = amp_value;
  const FieldGrid object_grid = make_grid(onx, ony, opitch);
  if (rc.has("object.phase")) {
    const std::filesystem::path p = rc.resolve_path("object.phase");
    phase = read_matrix_text(p);
    echo["object.phase"] = p.string();
  }
  sc.mask = make_mask(object_grid, std::move(amplitude), std::move(phase));

  // kernel and plane mapping
  const std::string kind = rc.get_or("kernel.kind", "delta");
  echo["kernel.kind"] = kind;
  const double eta = rc.number_or("kernel.eta", 1.0);
  echo["kernel.eta"] = fmt(eta);
  if (kind == "delta") {
    sc.kernel = delta_kernel(eta);
  } else if (kind == "gaussian") {
    const double sm = rc.number("kernel.sigma_minus");
    const double sp = rc.number("kernel.sigma_plus");
    echo["kernel.sigma_minus"] = fmt(sm);
    echo["kernel.sigma_plus"] = fmt(sp);
    sc.kernel = gaussian_kernel(eta, sm, sp);
  } else if (kind == "tabulated") {
    const std::filesystem::path p = rc.resolve_path("kernel.path");
    sc.kernel = load_kernel(p);
    echo["kernel.path"] = p.string();
  } else {
    throw ConfigError("kernel.kind must be delta, gaussian, or tabulated");
  }
  sc.cfg.mapping.ms = rc.number_or("mapping.ms", 1.0);
  sc.cfg.mapping.mi = rc.number_or("mapping.mi", 1.0);
  sc.cfg.mapping.eta = eta;
  echo["mapping.ms"] = fmt(sc.cfg.mapping.ms);
  echo["mapping.mi"] = fmt(sc.cfg.mapping.mi);
  validate(sc.cfg.mapping);

  // camera plane; default pitch is conjugate to the object raster
  const int cnx = static_cast<int>(rc.integer_or("camera.nx", 0));
  const int cny = static_cast<int>(rc.integer_or("camera.ny", 0));
  if (cnx < 2 || cny < 2) throw ConfigError("camera.nx and camera.ny (>= 2) are required");
  const double mag = image_magnification(sc.cfg.mapping);
  const double cpitch = rc.number_or("camera.pitch", opitch * std::abs(mag));
  sc.camera = make_grid(cnx, cny, cpitch);
  echo["camera.nx"] = std::to_string(cnx);
  echo["camera.ny"] = std::to_string(cny);
  echo["camera.pitch"] = fmt(cpitch);

  // source amplitudes
  sc.cfg.a1_mag = rc.number_or("source.alpha1", 1.0 / std::numbers::sqrt2);
  sc.cfg.a2_mag = rc.number_or("source.alpha2", 1.0 / std::numbers::sqrt2);
  echo["source.alpha1"] = fmt(sc.cfg.a1_mag);
  echo["source.alpha2"] = fmt(sc.cfg.a2_mag);

  // system phases, one per plane
  sc.cfg.phi_s = parse_phase(rc, "phase.s", sc.camera, echo);
  sc.cfg.phi_i = parse_phase(rc, "phase.i", object_grid, echo);
  const FieldGrid idler_grid = make_grid(onx, ony, opitch / std::abs(sc.cfg.mapping.mi));
  sc.cfg.phi_i_prime = parse_phase(rc, "phase.i_prime", idler_grid, echo);
  validate(sc.cfg);

  // phase ladder
  sc.ladder = rc.has("ladder") ? rc.number_list("ladder") : default_ladder();
  {
    std::string s;
    for (double v : sc.ladder) s += (s.empty() ? "" : " ") + fmt(v);
    echo["ladder"] = s;
  }

  // noise
  const std::string nkind = rc.get_or("noise.kind", "off");
  echo["noise.kind"] = nkind;
  if (nkind == "poisson") {
    sc.noise.kind = NoiseSpec::Kind::Poisson;
    sc.noise.scale = rc.number("noise.scale");
    if (!(sc.noise.scale > 0.0)) throw ConfigError("noise.scale must be positive");
    sc.noise.seed = static_cast<std::uint64_t>(rc.integer_or("noise.seed", 0));
    if (seed_override) sc.noise.seed = *seed_override;
    echo["noise.scale"] = fmt(sc.noise.scale);
    echo["noise.seed"] = std::to_string(sc.noise.seed);
  } else if (nkind != "off") {
    throw ConfigError("noise.kind must be off or poisson");
  }

  sc.v_floor = rc.number_or("reconstruct.v_floor", 0.05);
  echo["reconstruct.v_floor"] = fmt(sc.v_floor);
  if (rc.has("wavelength")) echo["wavelength"] = fmt(rc.number("wavelength"));

  const std::vector<std::string> unused = rc.unused_keys();
  if (!unused.empty()) {
    std::string msg = "unrecognized config keys:";
    for (const auto& k : unused) msg += " " + k;
    throw ConfigError(msg);
  }
  return sc;
}

void write_map_pair(const std::filesystem::path& dir, const std::string& base,
                    const Eigen::ArrayXXd& values, double scale, double offset = 0.0) {
  write_matrix_text(dir / (base + ".txt"), values);
  write_pgm(dir / (base + ".pgm"), values + offset, scale, 65535);
}

}  // namespace

int simulate(const Options& opts, std::ostream& log) {
  if (opts.out.empty()) throw ConfigError("simulate: --out directory is required");
  const RunConfig rc = RunConfig::from_file(opts.config);
  const Scenario sc = load_scenario(rc, opts.seed);
  FringeStack stack =
      fringe_stack(sc.mask, sc.kernel, sc.cfg, sc.camera, sc.ladder, opts.workers);
  if (sc.noise.kind == NoiseSpec::Kind::Poisson)
    stack = add_shot_noise(stack, sc.noise.scale, sc.noise.seed);
  write_stack(opts.out, stack, sc.echo_text());
  log << "simulate: wrote " << stack.frames.size() << " frames (" << sc.camera.nx << "x"
      << sc.camera.ny << ") to " << opts.out.string() << "\n";
  if (stack.zero_mass_pixels > 0)
    log << "simulate: warning: " << stack.zero_mass_pixels << " camera pixels had kernel mass below 1e-12\n";
  if (stack.clipped_fraction > 0.01)
    log << "simulate: warning: " << fmt(100.0 * stack.clipped_fraction)
        << "% of kernel queries fell outside the tabulated domain\n";
  return 0;
}

int reconstruct(const Options& opts, std::ostream& log) {
  if (opts.out.empty()) throw ConfigError("reconstruct: --out directory is required");
  std::filesystem::path dir = opts.config;
  if (dir.filename() == "manifest.txt") dir = dir.parent_path();
  const StoredStack stored = read_stack(dir);
  const RunConfig rc = RunConfig::from_text(stored.config_echo, dir);
  const Scenario sc = load_scenario(rc, std::nullopt);

  const FringeFit fit = fit_fringes(stored.stack, opts.workers);
  std::filesystem::create_directories(opts.out);
  write_map_pair(opts.out, "visibility", fit.visibility.values, 1.0 / 65535.0);
  write_map_pair(opts.out, "phase", fit.phase.values, 2.0 * kPi / 65535.0, kPi);

  const ObjectEstimate amp_est = visibility_image(fit.visibility, sc.cfg.mapping);
  write_map_pair(opts.out, "object_amplitude", amp_est.values, 1.0 / 65535.0);
  const ObjectEstimate phase_est =
      phase_image(fit.phase, fit.visibility, sc.cfg.phi_s, sc.cfg.phi_i, sc.cfg.phi_i_prime, 0.0,
                  sc.cfg.mapping, sc.v_floor);
  write_map_pair(opts.out, "object_phase", phase_est.values, 2.0 * kPi / 65535.0, kPi);

  // quick-look difference of the two frames closest to opposite phase
  bool have_diff = false;
  size_t da = 0, db = 0;
  double best = 1e-9;
  for (size_t a = 0; a < stored.stack.ladder.size(); ++a)
    for (size_t b = a + 1; b < stored.stack.ladder.size(); ++b) {
      const double off =
          std::abs(std::abs(std::remainder(stored.stack.ladder[a] - stored.stack.ladder[b],
                                           2.0 * kPi)) - kPi);
      if (off < best) {
        best = off;
        da = a;
        db = b;
        have_diff = true;
      }
    }
  if (have_diff) {
    RateMap fa{stored.stack.grid, stored.stack.frames[da], stored.stack.frames[da],
               Eigen::ArrayXXd::Ones(stored.stack.grid.ny, stored.stack.grid.nx), 0, 0.0};
    RateMap fb{stored.stack.grid, stored.stack.frames[db], stored.stack.frames[db],
               Eigen::ArrayXXd::Ones(stored.stack.grid.ny, stored.stack.grid.nx), 0, 0.0};
    write_matrix_text(opts.out / "difference.txt", image_subtraction(fa, fb).values);
  }

  // visibility error against the stored truth object, meaningful in the
  // tight-correlation limit where V should equal |T| pointwise
  std::string rms_line = "rms-visibility-error n/a";
  if (sc.kernel.kind() == CorrelationKernel::Kind::Delta) {
    double se = 0.0;
    long long count = 0;
    PlaneMapping m = sc.cfg.mapping;
    for (int j = 0; j < fit.grid.ny; ++j)
      for (int i = 0; i < fit.grid.nx; ++i) {
        if (!fit.visibility.valid(j, i)) continue;
        const double expected = sc.mask.amplitude_at(map_camera_to_object(fit.grid.coord(i, j), m));
        const double d = fit.visibility.values(j, i) - expected;
        se += d * d;
        ++count;
      }
    if (count > 0) rms_line = "rms-visibility-error " + fmt(std::sqrt(se / count));
  }

  std::string mag_line = "magnification n/a";
  try {
    const MagnificationEstimate est = measure_magnification(sc.mask, fit.visibility);
    mag_line = "magnification " + fmt(est.m) + " +/- " + fmt(est.uncertainty) + " expected " +
               fmt(image_magnification(sc.cfg.mapping)) + " features " +
               std::to_string(est.features);
  } catch (const std::exception&) {
    // scenes without a usable feature constellation simply skip the estimate
  }

  std::ostringstream report;
  report << "frames " << stored.stack.frames.size() << "\n";
  report << "masked-pixels " << fit.masked << "\n";
  report << "clipped-visibility-pixels " << fit.clipped << "\n";
  report << "v-floor " << fmt(sc.v_floor) << "\n";
  report << "zero-mass-pixels " << stored.stack.zero_mass_pixels << "\n";
  report << "clipped-fraction " << fmt(stored.stack.clipped_fraction) << "\n";
  report << rms_line << "\n";
  report << mag_line << "\n";
  if (have_diff)
    report << "difference-frames " << da << " " << db << "\n";
  report << "pgm-encoding visibility v/65535, phase (v+pi)*65535/(2pi)\n";
  std::ofstream rf(opts.out / "report.txt", std::ios::binary);
  rf << report.str();
  log << report.str();
  log << "reconstruct: wrote maps to " << opts.out.string() << "\n";
  return 0;
}

int verify_magnification(const Options& opts, std::ostream& log) {
  const RunConfig rc = RunConfig::from_file(opts.config);
  const double opitch = rc.number_or("object.pitch", 1.0);
  const int onx = static_cast<int>(rc.integer_or("object.nx", 96));
  const int ony = static_cast<int>(rc.integer_or("object.ny", 96));
  const double radius = rc.number_or("disks.radius", 10.0);
  const double separation = rc.number_or("disks.separation", 32.0);
  const std::vector<double> etas =
      rc.has("verify.eta_values") ? rc.number_list("verify.eta_values") : std::vector<double>{0.5, 1.0, 2.0};
  const std::vector<double> ratios = rc.has("verify.ratio_values")
                                         ? rc.number_list("verify.ratio_values")
                                         : std::vector<double>{0.5, 1.0, 2.0};
  const bool has_tol_override = rc.has("verify.tolerance");
  const double tol_override = rc.number_or("verify.tolerance", 0.0);
  if (rc.has("wavelength")) rc.number("wavelength");  // metadata; must not affect results
  {
    const auto unused = rc.unused_keys();
    if (!unused.empty()) {
      std::string msg = "unrecognized config keys:";
      for (const auto& k : unused) msg += " " + k;
      throw ConfigError(msg);
    }
  }

  const FieldGrid object_grid = make_grid(onx, ony, opitch);
  const ObjectMask truth = make_mask(object_grid, two_disks_raster(object_grid, radius, separation),
                                     Eigen::ArrayXXd());

  std::ostringstream report;
  bool all_pass = true;
  auto run_combo = [&](double eta, double ratio) {
    InterferometerConfig cfg;
    cfg.mapping = PlaneMapping{ratio, 1.0, eta};
    const double expected = image_magnification(cfg.mapping);
    int cn = 2 * static_cast<int>(std::floor(onx * std::abs(expected) / 2.0)) - 4;
    cn = std::max(cn, 12);
    const FieldGrid camera = make_grid(cn, cn, opitch);
    const FringeStack stack =
        fringe_stack(truth, delta_kernel(eta), cfg, camera, default_ladder(), opts.workers);
    const FringeFit fit = fit_fringes(stack, opts.workers);
    return std::make_pair(measure_magnification(truth, fit.visibility), fit.visibility);
  };

  for (double eta : etas)
    for (double ratio : ratios) {
      const double expected = eta * ratio;
      const MagnificationEstimate est = run_combo(eta, ratio).first;
      // half a camera pixel of feature displacement at the constellation radius
      const double tol = has_tol_override ? tol_override : 0.5 * opitch / (0.5 * separation);
      const bool pass = std::abs(est.m - expected) <= tol;
      all_pass = all_pass && pass;
      report << "eta " << fmt(eta) << " ratio " << fmt(ratio) << " expected " << fmt(expected)
             << " measured " << fmt(est.m) << " +/- " << fmt(est.uncertainty) << " tol "
             << fmt(tol) << " features " << est.features << (pass ? " PASS" : " FAIL") << "\n";
    }

  // a wavelength label is metadata and must not influence the result
  {
    auto [est_a, va] = run_combo(etas.front(), ratios.front());
    auto [est_b, vb] = run_combo(etas.front(), ratios.front());
    const bool identical = (va.values == vb.values).all() && est_a.m == est_b.m;
    all_pass = all_pass && identical;
    report << "wavelength-independence " << (identical ? "PASS" : "FAIL") << "\n";
  }
  report << (all_pass ? "verify-magnification PASS\n" : "verify-magnification FAIL\n");
  log << report.str();
  if (!opts.out.empty()) {
    std::filesystem::create_directories(opts.out);
    std::ofstream rf(opts.out / "report.txt", std::ios::binary);
    rf << report.str();
  }
  return all_pass ? 0 : 1;
}

namespace {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Eigen::ArrayXXd smooth_field(std::mt19937_64& rng, const FieldGrid& g, double amplitude) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::ArrayXXd f = Eigen::ArrayXXd::Zero(g.ny, g.nx);
  for (int m = 0; m < 3; ++m) {
    const double kx = 1.5 * kPi * u(rng) / g.extent_x();
    const double ky = 1.5 * kPi * u(rng) / g.extent_y();
    const double delta = kPi * u(rng);
    const double c = u(rng);
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        const Vec2 p = g.coord(i, j);
        f(j, i) += c * std::cos(kx * p.x() + ky * p.y() + delta);
      }
  }
  const double peak = f.abs().maxCoeff();
  if (peak > 0.0) f *= amplitude / peak;
  return f;
}

enum class InstanceKind { Random, Alpha2Zero, Opaque };

struct InstanceResult {
  double deviation = 0.0;          // max |oracle - general| / map peak
  double flatness = 0.0;           // (max - min) / max of the general map
  double phase_sensitivity = 0.0;  // map change under a source-phase shift
};

InstanceResult oracle_instance(std::uint64_t seed, int n, double qpitch, int combo,
                               InstanceKind kind, int workers) {
  std::mt19937_64 rng(mix64(seed));
  std::uniform_real_distribution<double> u(-1.0, 1.0);

  const ModeBasis basis = ModeBasis::make(n, qpitch);
  const double rp = basis.rgrid.pitch;
  const double ms_cycle[3] = {1.0, 2.0, 0.5};
  const double mi_cycle[3] = {1.0, 0.5, 2.0};
  const double ms = ms_cycle[combo % 3];
  const double mi = mi_cycle[(combo / 3) % 3];

  const FieldGrid mask_grid = make_grid(n, n, mi * rp);
  Eigen::ArrayXXd amplitude;
  if (kind == InstanceKind::Opaque) {
    amplitude = Eigen::ArrayXXd::Zero(n, n);
  } else {
    // binary-ish transmission: smooth field squashed toward {0.05, 0.95}
    const Eigen::ArrayXXd s = smooth_field(rng, mask_grid, 1.0);
    amplitude = 0.5 + 0.45 * (3.0 * s).tanh();
  }
  const Eigen::ArrayXXd phi_t = smooth_field(rng, mask_grid, 1.0);
  const ObjectMask mask = make_mask(mask_grid, amplitude, phi_t);

  InterferometerConfig cfg;
  cfg.mapping = PlaneMapping{ms, mi, 1.0};
  cfg.phi_i = PhaseField(mask_grid, smooth_field(rng, mask_grid, 0.8));
  const FieldGrid idler_grid = basis.rgrid;
  cfg.phi_i_prime = PhaseField(idler_grid, smooth_field(rng, idler_grid, 0.8));
  const FieldGrid camera = make_grid(n, n, ms * rp);
  cfg.phi_s = PhaseField(camera, smooth_field(rng, camera, 0.8));

  std::complex<double> alpha1, alpha2;
  if (kind == InstanceKind::Alpha2Zero) {
    alpha1 = 1.0;
    alpha2 = 0.0;
    cfg.phi_in = 0.3;
  } else {
    const double split = 0.5 * (0.5 + 0.35 * u(rng)) * kPi;  // keep both arms populated
    const double psi1 = kPi * u(rng), psi2 = kPi * u(rng), phi_s0 = kPi * u(rng);
    alpha1 = std::polar(std::cos(split), psi1);
    alpha2 = std::polar(std::sin(split), psi2);
    cfg.phi_in = phi_s0 + psi2 - psi1;
  }
  cfg.a1_mag = std::abs(alpha1);
  cfg.a2_mag = std::abs(alpha2);

  const int total = basis.mode_count();
  Eigen::MatrixXcd c(total, total);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (Eigen::Index col = 0; col < total; ++col)
    for (Eigen::Index row = 0; row < total; ++row)
      c(row, col) = std::complex<double>(gauss(rng), gauss(rng));
  BiphotonAmplitude amp = make_amplitude(basis.qgrid, std::move(c));
  amp.normalize();

  const CorrelationKernel kernel = position_pdf_from_amplitude(amp, basis.rgrid);
  const RateMap general = rate_map_general(mask, kernel, cfg, camera, workers);

  const ObjectKernels kmats = object_kernel_matrices(mask, cfg.phi_i, cfg.phi_i_prime, mi, basis);
  const TwoPhotonStateVector state = build_state(amp, alpha1, alpha2, kmats);
  const RateMap oracle = oracle_rate_map(state, cfg, camera, workers);

  InstanceResult res;
  const double peak = std::max(general.values.maxCoeff(), 1e-12);
  res.deviation = (oracle.values - general.values).abs().maxCoeff() / peak;
  const double lo = general.values.minCoeff();
  res.flatness = peak > 0.0 ? (general.values.maxCoeff() - lo) / peak : 0.0;
  if (kind == InstanceKind::Opaque) {
    // nothing returns from the object arm, so shifting the source phase must
    // leave the rate untouched on both routes
    InterferometerConfig shifted = cfg;
    shifted.phi_in += 0.5 * kPi;
    const RateMap general2 = rate_map_general(mask, kernel, shifted, camera, workers);
    const RateMap oracle2 = oracle_rate_map(state, shifted, camera, workers);
    res.phase_sensitivity =
        std::max((general2.values - general.values).abs().maxCoeff(),
                 (oracle2.values - oracle.values).abs().maxCoeff()) / peak;
  }
  return res;
}

}  // namespace

int oracle_check(const Options& opts, std::ostream& log) {
  const RunConfig rc = RunConfig::from_file(opts.config);
  std::vector<int> modes;
  if (rc.has("oracle.modes")) {
    for (double v : rc.number_list("oracle.modes")) {
      const int n = static_cast<int>(v);
      if (static_cast<double>(n) != v || n < 2 || n > 16)
        throw ConfigError("oracle.modes entries must be integers in [2, 16]");
      modes.push_back(n);
    }
  } else {
    modes = {8, 10, 12};
  }
  const long long instances = rc.integer_or("oracle.instances", 10);
  if (instances < 1) throw ConfigError("oracle.instances must be >= 1");
  const double qpitch = rc.number_or("oracle.qpitch", 0.7);
  if (!(qpitch > 0.0)) throw ConfigError("oracle.qpitch must be positive");
  const std::uint64_t seed = static_cast<std::uint64_t>(rc.integer_or("oracle.seed", 7));
  const double tol = rc.number_or("oracle.tolerance", 1e-6);
  {
    const auto unused = rc.unused_keys();
    if (!unused.empty()) {
      std::string msg = "unrecognized config keys:";
      for (const auto& k : unused) msg += " " + k;
      throw ConfigError(msg);
    }
  }

  std::ostringstream report;
  bool pass = true;
  double worst = 0.0;
  for (long long k = 0; k < instances; ++k) {
    const int n = modes[static_cast<size_t>(k) % modes.size()];
    const InstanceResult r = oracle_instance(seed + static_cast<std::uint64_t>(k), n, qpitch,
                                             static_cast<int>(k), InstanceKind::Random,
                                             opts.workers);
    worst = std::max(worst, r.deviation);
    const bool ok = r.deviation <= tol;
    pass = pass && ok;
    report << "instance " << k << " modes " << n << "x" << n << " deviation " << fmt(r.deviation)
           << (ok ? " PASS" : " FAIL") << "\n";
  }
  {
    // no second source: both paths reduce to the marginal intensity
    const InstanceResult r =
        oracle_instance(seed + 101, modes.front(), qpitch, 0, InstanceKind::Alpha2Zero, opts.workers);
    const bool ok = r.deviation <= 1e-12;
    pass = pass && ok;
    report << "alpha2-zero deviation " << fmt(r.deviation) << (ok ? " PASS" : " FAIL") << "\n";
  }
  {
    // opaque object: flat rate, no interference, blind to the source phase
    const InstanceResult r =
        oracle_instance(seed + 202, modes.front(), qpitch, 0, InstanceKind::Opaque, opts.workers);
    const bool ok = r.deviation <= tol && r.flatness <= 1e-9 && r.phase_sensitivity <= 1e-12;
    pass = pass && ok;
    report << "opaque deviation " << fmt(r.deviation) << " flatness " << fmt(r.flatness)
           << " phase-sensitivity " << fmt(r.phase_sensitivity) << (ok ? " PASS" : " FAIL")
           << "\n";
  }
  report << "max-deviation " << fmt(worst) << "\n";
  report << (pass ? "oracle-check PASS\n" : "oracle-check FAIL\n");
  log << report.str();
  if (!opts.out.empty()) {
    std::filesystem::create_directories(opts.out);
    std::ofstream rf(opts.out / "report.txt", std::ios::binary);
    rf << report.str();
  }
  return pass ? 0 : 1;
}

}  // namespace qiup::cmd
