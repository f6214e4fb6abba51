#include "surftrap/designer.hpp"

#include "parallel.hpp"
#include "surftrap/constants.hpp"
#include "surftrap/efield.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <sstream>

namespace surftrap {

namespace {

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    std::ostringstream os;
    os << name << " must be positive, got " << v;
    throw InvalidParameter(os.str());
  }
}

void require_widths(double a, double b, double c) {
  require_positive(a, "width a");
  require_positive(b, "width b");
  require_positive(c, "width c");
}

void check_bounds(const WidthBounds& w, const char* name) {
  if (!(w.lo > 0.0) || !(w.hi >= w.lo) || !std::isfinite(w.hi)) {
    std::ostringstream os;
    os << "bounds on " << name << " must satisfy 0 < lo <= hi, got [" << w.lo << ", " << w.hi << "]";
    throw InvalidParameter(os.str());
  }
}

double b_for_equal_rails(double a, double h) { return (4.0 * h * h - a * a) / (2.0 * a); }
double a_for_equal_rails(double b, double h) { return -b + std::sqrt(b * b + 4.0 * h * h); }

std::string step_label(int k) { return "step " + std::to_string(k); }

}  // namespace

double ion_height_formula(double a, double b, double c) {
  require_widths(a, b, c);
  return std::sqrt(a * b * c * (a + b + c)) / (b + c);
}

double gamma(double v_rf, double omega_rf, const IonSpecies& ion) {
  require_positive(v_rf, "v_rf");
  require_positive(omega_rf, "omega_rf");
  ion.check();
  const double q = ion.charge_C();
  return q * q * v_rf * v_rf / (constants::kPi * constants::kPi * ion.mass_kg() * omega_rf * omega_rf);
}

double secular_estimate(double v_rf, double omega_rf, const IonSpecies& ion, double h_um) {
  require_positive(v_rf, "v_rf");
  require_positive(omega_rf, "omega_rf");
  require_positive(h_um, "ion height");
  ion.check();
  const double h = h_um * kMicron;
  const double omega_s = ion.charge_C() * v_rf / (std::sqrt(2.0) * ion.mass_kg() * h * h * omega_rf);
  return omega_s / constants::kTwoPi;
}

double extract_kappa(double a, double b, double c) {
  require_widths(a, b, c);
  LayoutParams params;
  params.a = a;
  params.b = b;
  params.c = c;
  // Keep every length proportional to the cross-section so kappa is exactly
  // scale free; DC segments carry no voltage here.
  params.dc_width = 0.5 * (a + b + c);
  const ElectrodeLayout layout = build_five_wire(params);

  const DriveConfig drive = DriveConfig::reference();
  const IonSpecies ion;
  const double h = ion_height_formula(a, b, c);
  const ZoneCenter& zone = layout.zone_centers().front();
  const NilResult nil = find_rf_nil(layout, drive, Vec3(zone.x, h, zone.z));
  const EscapeResult esc = trap_depth(layout, drive, ion, nil.position_um);
  const double h_m = h * kMicron;
  return esc.depth_eV * constants::kElectronVolt * h_m * h_m / gamma(drive.v_rf, drive.omega_rf, ion);
}

double KappaCache::get(double a, double b, double c) {
  require_widths(a, b, c);
  const std::pair<double, double> key{b / a, c / a};
  {
    std::shared_lock lock(mutex_);
    if (auto it = values_.find(key); it != values_.end()) return it->second;
  }
  // Evaluate on a fixed-scale representative so the cached value does not
  // depend on which caller got there first.
  const double kappa = extract_kappa(100.0, 100.0 * key.first, 100.0 * key.second);
  std::unique_lock lock(mutex_);
  return values_.emplace(key, kappa).first->second;
}

std::size_t KappaCache::size() const {
  std::shared_lock lock(mutex_);
  return values_.size();
}

void KappaCache::clear() {
  std::unique_lock lock(mutex_);
  values_.clear();
}

double kappa_of_geometry(double a, double b, double c) {
  static KappaCache cache;
  return cache.get(a, b, c);
}

DepthEstimate depth_formula(double a, double b, double c, double v_rf, double omega_rf, const IonSpecies& ion) {
  DepthEstimate out;
  out.h_um = ion_height_formula(a, b, c);
  out.gamma = gamma(v_rf, omega_rf, ion);
  out.kappa = kappa_of_geometry(a, b, c);
  const double h = out.h_um * kMicron;
  out.depth_eV = out.kappa * out.gamma / (h * h) / constants::kElectronVolt;
  return out;
}

double heating_scale(double h_ref, double h_new) {
  require_positive(h_ref, "reference height");
  require_positive(h_new, "new height");
  return std::pow(h_new / h_ref, -4.0);
}

std::optional<double> rail_width_for_height(double a, double b, double target_h_um, const WidthBounds& c_bounds) {
  // h^2 (b + c)^2 = a b c (a + b + c), quadratic in c.
  const double h2 = target_h_um * target_h_um;
  const double qa = h2 - a * b;
  const double qb = 2.0 * b * h2 - a * b * (a + b);
  const double qc = h2 * b * b;
  std::vector<double> roots;
  if (std::abs(qa) < 1e-12 * h2) {
    if (qb != 0.0) roots.push_back(-qc / qb);
  } else {
    const double disc = qb * qb - 4.0 * qa * qc;
    if (disc < 0.0) return std::nullopt;
    const double s = std::sqrt(disc);
    // Numerically stable pair.
    const double q = -0.5 * (qb + std::copysign(s, qb));
    roots.push_back(q / qa);
    if (q != 0.0) roots.push_back(qc / q);
  }
  std::optional<double> best;
  for (double c : roots) {
    if (!(c > 0.0) || !c_bounds.contains(c)) continue;
    if (!best || std::abs(c - b) < std::abs(*best - b)) best = c;
  }
  return best;
}

namespace {

struct FeasibleA {
  double lo = 0.0, hi = 0.0;
};

/// Interval of a for which b = c = b(a) stays inside both rail bounds.
std::optional<FeasibleA> equal_rail_interval(const OptimizeRequest& r) {
  const double h = r.target_h_um;
  const double b_lo = std::max(r.b.lo, r.c.lo);
  const double b_hi = std::min(r.b.hi, r.c.hi);
  if (b_lo > b_hi) return std::nullopt;
  FeasibleA out;
  out.lo = std::max(r.a.lo, a_for_equal_rails(b_hi, h));
  out.hi = std::min(r.a.hi, a_for_equal_rails(b_lo, h));
  if (!(out.lo <= out.hi)) return std::nullopt;
  return out;
}

OptimizeResult finish(const OptimizeRequest& r, double a, double b, double c, int evaluations) {
  OptimizeResult out;
  out.a = a;
  out.b = b;
  out.c = c;
  const DepthEstimate est = depth_formula(a, b, c, r.drive.v_rf, r.drive.omega_rf, r.ion);
  out.h_um = est.h_um;
  out.kappa = est.kappa;
  out.depth_eV = est.depth_eV;
  out.evaluations = evaluations;
  return out;
}

OptimizeResult optimize_equal_rails(const OptimizeRequest& r) {
  const auto interval = equal_rail_interval(r);
  if (!interval) {
    std::ostringstream os;
    os << "no equal-rail geometry reaches h = " << r.target_h_um << " um within the width bounds";
    throw Infeasible(os.str());
  }
  const double h = r.target_h_um;
  auto objective = [&](double a) {
    const double b = b_for_equal_rails(a, h);
    return kappa_of_geometry(a, b, b);
  };
  if (interval->hi - interval->lo <= 1e-9 * interval->hi) {
    const double a = interval->lo;
    const double b = b_for_equal_rails(a, h);
    return finish(r, a, b, b, 1);
  }

  // Coarse scan, then golden section inside the best bracket.
  constexpr int kScan = 24;
  std::vector<double> xs(kScan), fs(kScan);
  for (int i = 0; i < kScan; ++i) xs[i] = interval->lo + (interval->hi - interval->lo) * i / (kScan - 1);
  detail::parallel_for(kScan, [&](std::size_t i) { fs[i] = objective(xs[i]); });
  int evaluations = kScan;
  const int best = static_cast<int>(std::max_element(fs.begin(), fs.end()) - fs.begin());
  double lo = xs[std::max(best - 1, 0)];
  double hi = xs[std::min(best + 1, kScan - 1)];

  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = hi - inv_phi * (hi - lo);
  double d = lo + inv_phi * (hi - lo);
  double fc = objective(c), fd = objective(d);
  evaluations += 2;
  while (hi - lo > 1e-5 * hi) {
    if (fc > fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - inv_phi * (hi - lo);
      fc = objective(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + inv_phi * (hi - lo);
      fd = objective(d);
    }
    ++evaluations;
  }
  double a = 0.5 * (lo + hi);
  if (fs[best] > std::max(fc, fd)) a = xs[best];
  const double b = b_for_equal_rails(a, h);
  return finish(r, a, b, b, evaluations);
}

OptimizeResult optimize_free_rails(const OptimizeRequest& r) {
  const double h = r.target_h_um;
  int evaluations = 0;
  // Minimise -kappa over (a, b); c follows from the height constraint.
  auto cost = [&](const Eigen::Vector2d& x) {
    ++evaluations;
    if (!r.a.contains(x(0)) || !r.b.contains(x(1))) return std::numeric_limits<double>::infinity();
    const auto c = rail_width_for_height(x(0), x(1), h, r.c);
    if (!c) return std::numeric_limits<double>::infinity();
    return -kappa_of_geometry(x(0), x(1), *c);
  };

  Eigen::Vector2d start;
  if (const auto interval = equal_rail_interval(r)) {
    OptimizeRequest eq = r;
    eq.equal_rails = true;
    const OptimizeResult seed = optimize_equal_rails(eq);
    start = {seed.a, seed.b};
  } else {
    std::mt19937_64 rng(r.seed);
    std::optional<std::array<double, 3>> s;
    for (int i = 0; i < 100 && !s; ++i) s = sample_feasible_geometry(r, rng);
    if (!s) {
      std::ostringstream os;
      os << "no geometry reaches h = " << h << " um within the width bounds";
      throw Infeasible(os.str());
    }
    start = {(*s)[0], (*s)[1]};
  }

  std::mt19937_64 rng(r.seed);
  std::uniform_real_distribution<double> jitter(0.03, 0.07);
  std::array<Eigen::Vector2d, 3> simplex{start, start, start};
  simplex[1](0) *= 1.0 + jitter(rng);
  simplex[2](1) *= 1.0 + jitter(rng);
  std::array<double, 3> f{cost(simplex[0]), cost(simplex[1]), cost(simplex[2])};

  for (int it = 0; it < 200; ++it) {
    std::array<int, 3> order{0, 1, 2};
    std::sort(order.begin(), order.end(), [&](int i, int j) { return f[i] < f[j]; });
    const int best = order[0], mid = order[1], worst = order[2];
    const double spread = std::abs(f[worst] - f[best]);
    const double size = (simplex[worst] - simplex[best]).norm() / simplex[best].norm();
    if (std::isfinite(f[worst]) && spread <= 1e-9 * std::abs(f[best]) && size < 1e-5) break;
    if (size < 1e-7) break;

    const Eigen::Vector2d centroid = 0.5 * (simplex[best] + simplex[mid]);
    const Eigen::Vector2d xr = centroid + (centroid - simplex[worst]);
    const double fr = cost(xr);
    if (fr < f[best]) {
      const Eigen::Vector2d xe = centroid + 2.0 * (centroid - simplex[worst]);
      const double fe = cost(xe);
      if (fe < fr) {
        simplex[worst] = xe;
        f[worst] = fe;
      } else {
        simplex[worst] = xr;
        f[worst] = fr;
      }
    } else if (fr < f[mid]) {
      simplex[worst] = xr;
      f[worst] = fr;
    } else {
      const Eigen::Vector2d xc = centroid + 0.5 * (simplex[worst] - centroid);
      const double fc = cost(xc);
      if (fc < f[worst]) {
        simplex[worst] = xc;
        f[worst] = fc;
      } else {
        for (int i : {mid, worst}) {
          simplex[i] = simplex[best] + 0.5 * (simplex[i] - simplex[best]);
          f[i] = cost(simplex[i]);
        }
      }
    }
  }
  const int best = static_cast<int>(std::min_element(f.begin(), f.end()) - f.begin());
  const Eigen::Vector2d x = simplex[best];
  const double c = *rail_width_for_height(x(0), x(1), h, r.c);
  return finish(r, x(0), x(1), c, evaluations);
}

}  // namespace

std::optional<std::array<double, 3>> sample_feasible_geometry(const OptimizeRequest& request, std::mt19937_64& rng) {
  const double h = request.target_h_um;
  if (request.equal_rails) {
    const auto interval = equal_rail_interval(request);
    if (!interval) return std::nullopt;
    std::uniform_real_distribution<double> pick(interval->lo, interval->hi);
    const double a = pick(rng);
    const double b = b_for_equal_rails(a, h);
    return std::array<double, 3>{a, b, b};
  }
  std::uniform_real_distribution<double> pick_a(request.a.lo, request.a.hi);
  std::uniform_real_distribution<double> pick_b(request.b.lo, request.b.hi);
  for (int i = 0; i < 1000; ++i) {
    const double a = pick_a(rng);
    const double b = pick_b(rng);
    if (const auto c = rail_width_for_height(a, b, h, request.c)) return std::array<double, 3>{a, b, *c};
  }
  return std::nullopt;
}

OptimizeResult optimize_geometry(const OptimizeRequest& request) {
  require_positive(request.target_h_um, "target height");
  check_bounds(request.a, "a");
  check_bounds(request.b, "b");
  check_bounds(request.c, "c");
  request.drive.check();
  request.ion.check();
  return request.equal_rails ? optimize_equal_rails(request) : optimize_free_rails(request);
}

DcSolution solve_dc_voltages(const ElectrodeLayout& layout, const WellSpec& well, const VoltageBounds& bounds,
                             const DcSolveOptions& options) {
  well.ion.check();
  if (!(well.axial_freq_hz >= 0.0) || !std::isfinite(well.axial_freq_hz)) {
    throw InvalidParameter("axial frequency must be >= 0");
  }
  if (!(bounds.lo <= bounds.hi)) throw InvalidParameter("voltage bounds must satisfy lo <= hi");
  if (!(well.center_um.y() > 0.0)) throw OutOfDomain("well center must lie above the trap plane (y > 0)");

  std::vector<const RectPatch*> electrodes;
  for (const auto& p : layout.patches()) {
    if (std::find(options.roles.begin(), options.roles.end(), p.role) != options.roles.end()) {
      electrodes.push_back(&p);
    }
  }
  if (electrodes.empty()) throw InvalidParameter("no electrodes available for the static-voltage solve");
  const int n = static_cast<int>(electrodes.size());

  // Rows: dphi/dx, dphi/dy, dphi/dz, d2phi/dz2, made dimensionless with the
  // height so the conditioning does not depend on units.
  const double h = well.center_um.y() * kMicron;
  Eigen::MatrixXd A(4, n);
  for (int k = 0; k < n; ++k) {
    const FieldSample s = patch_basis(*electrodes[k], well.center_um);
    A(0, k) = s.grad.x() * h;
    A(1, k) = s.grad.y() * h;
    A(2, k) = s.grad.z() * h;
    A(3, k) = s.hessian(2, 2) * h * h;
  }
  const double omega = constants::kTwoPi * well.axial_freq_hz;
  const double target_curv = well.ion.mass_kg() * omega * omega / well.ion.charge_C();
  Eigen::Vector4d t(0.0, 0.0, 0.0, target_curv * h * h);

  // Regularised smallest-norm solve restricted to the free columns, with
  // iterated refinement so the residual reaches the consistent solution.
  auto solve_free = [&](const std::vector<int>& free, const Eigen::Vector4d& rhs) {
    const int m = static_cast<int>(free.size());
    Eigen::MatrixXd Af(4, m);
    for (int j = 0; j < m; ++j) Af.col(j) = A.col(free[j]);
    const Eigen::Matrix4d g = Af * Af.transpose();
    const double lambda = options.regularization * g.trace() / 4.0;
    const auto ldlt = (g + lambda * Eigen::Matrix4d::Identity()).ldlt();
    Eigen::VectorXd v = Af.transpose() * ldlt.solve(rhs);
    for (int it = 0; it < 50; ++it) {
      const Eigen::Vector4d r = rhs - Af * v;
      if (r.norm() <= 1e-14 * std::max(rhs.norm(), 1e-300)) break;
      v += Af.transpose() * ldlt.solve(r);
    }
    return v;
  };

  Eigen::VectorXd volts = Eigen::VectorXd::Zero(n);
  std::vector<bool> clamped(n, false);
  Eigen::VectorXd unconstrained;
  for (int round = 0; round <= n; ++round) {
    std::vector<int> free;
    Eigen::Vector4d rhs = t;
    for (int k = 0; k < n; ++k) {
      if (clamped[k]) {
        rhs -= A.col(k) * volts(k);
      } else {
        free.push_back(k);
      }
    }
    if (free.empty()) break;
    const Eigen::VectorXd v = solve_free(free, rhs);
    if (round == 0) unconstrained = v;
    bool violated = false;
    for (std::size_t j = 0; j < free.size(); ++j) {
      const int k = free[j];
      volts(k) = v(j);
      if (v(j) > bounds.hi || v(j) < bounds.lo) {
        volts(k) = std::clamp(v(j), bounds.lo, bounds.hi);
        clamped[k] = true;
        violated = true;
      }
    }
    if (!violated) break;
  }

  const Eigen::Vector4d achieved = A * volts;
  DcSolution out;
  out.target_curvature = target_curv;
  out.achieved_curvature = achieved(3) / (h * h);
  out.residual_gradient = achieved.head<3>().norm() / h;
  for (int k = 0; k < n; ++k) out.voltages[electrodes[k]->id] = volts(k);

  const double grad_tol = 1e-3 * target_curv * h;
  const double curv_err = std::abs(out.achieved_curvature - target_curv);
  const bool grad_ok = out.residual_gradient <= grad_tol || (target_curv == 0.0 && out.residual_gradient == 0.0);
  const bool curv_ok = curv_err <= 1e-3 * target_curv;
  if (!grad_ok || !curv_ok) {
    std::vector<std::pair<double, std::string>> excess;
    for (int k = 0; k < n; ++k) {
      const double v = unconstrained.size() == n ? unconstrained(k) : volts(k);
      const double over = std::max(v - bounds.hi, bounds.lo - v);
      if (over > 0.0) excess.emplace_back(over, electrodes[k]->id);
    }
    std::sort(excess.begin(), excess.end(), [](const auto& x, const auto& y) { return x.first > y.first; });
    std::vector<std::string> items;
    for (std::size_t i = 0; i < excess.size() && i < 5; ++i) items.push_back(excess[i].second);
    std::ostringstream os;
    os << "static-voltage solve infeasible within [" << bounds.lo << ", " << bounds.hi
       << "] V: residual gradient " << out.residual_gradient << " V/m, curvature " << out.achieved_curvature
       << " of " << target_curv << " V/m^2";
    if (!items.empty()) {
      os << "; worst electrodes:";
      for (const auto& id : items) os << ' ' << id;
    }
    throw Infeasible(os.str(), items);
  }
  return out;
}

Waveform transport_waveform(const ElectrodeLayout& layout, const DriveConfig& drive, const Vec3& start_um,
                            const Vec3& end_um, int n_steps, const WellSpec& well, const VoltageBounds& bounds,
                            const TransportOptions& options) {
  if (n_steps < 2) throw InvalidParameter("transport needs at least 2 steps");
  drive.check();
  well.ion.check();
  if (options.duration_s && !(*options.duration_s > 0.0)) throw InvalidParameter("duration must be positive");

  Waveform out;
  out.steps.resize(n_steps);
  out.target_positions_um.resize(n_steps);
  out.well_positions_um.resize(n_steps);
  out.depths_eV.resize(n_steps);

  const double span = n_steps - 1;
  auto run_step = [&](std::size_t i) {
    const int k = static_cast<int>(i);
    // Symmetric interpolation weights keep start/end reversal exact.
    const double t = k / span;
    const double s = (n_steps - 1 - k) / span;
    const Vec3 target = start_um * s + end_um * t;
    out.target_positions_um[i] = target;
    try {
      const NilResult nil = find_rf_nil(layout, drive, target);
      WellSpec w = well;
      w.center_um = Vec3(nil.position_um.x(), nil.position_um.y(), target.z());
      const DcSolution sol = solve_dc_voltages(layout, w, bounds, options.dc);

      DriveConfig step_drive = drive;
      for (const auto& [id, v] : sol.voltages) step_drive.dc_voltages[id] = v;
      const ValidationReport limits = check_voltage_limits(step_drive, options.min_gap_um);
      if (!limits.ok()) throw Infeasible(limits.defects.front().message, limits.defects.front().ids);

      const TrapPotential pot(layout, step_drive, well.ion, true);
      const Vec3 minimum = find_potential_minimum(pot, um_to_m(w.center_um));
      const EscapeResult esc = find_escape(pot, minimum, options.escape);
      if (esc.depth_eV < options.depth_floor_eV) {
        std::ostringstream os;
        os << "well depth " << esc.depth_eV << " eV is below the floor of " << options.depth_floor_eV << " eV";
        throw Infeasible(os.str());
      }
      out.steps[i] = sol.voltages;
      out.well_positions_um[i] = m_to_um(minimum);
      out.depths_eV[i] = esc.depth_eV;
    } catch (const Error& e) {
      std::vector<std::string> items{step_label(k)};
      if (const auto* inf = dynamic_cast<const Infeasible*>(&e)) {
        items.insert(items.end(), inf->items().begin(), inf->items().end());
      }
      throw Infeasible(step_label(k) + ": " + e.what(), items);
    }
  };
  detail::parallel_for(static_cast<std::size_t>(n_steps), run_step);

  const Vec3 travel = end_um - start_um;
  if (travel.norm() > 0.0) {
    const Vec3 dir = travel.normalized();
    for (int k = 1; k < n_steps; ++k) {
      const double prev = (out.well_positions_um[k - 1] - start_um).dot(dir);
      const double cur = (out.well_positions_um[k] - start_um).dot(dir);
      if (cur < prev - 1e-6) {
        std::ostringstream os;
        os << step_label(k) << ": well moved backwards by " << prev - cur << " um";
        throw Infeasible(os.str(), {step_label(k)});
      }
    }
  }

  for (const auto& [id, v] : out.steps.front()) out.electrode_ids.push_back(id);
  if (options.duration_s) {
    out.timestamps_s.resize(n_steps);
    for (int k = 0; k < n_steps; ++k) out.timestamps_s[k] = *options.duration_s * k / span;
  }
  return out;
}

VerticalShift vertical_shift(const ElectrodeLayout& layout, const DriveConfig& drive, const IonSpecies& ion,
                             const Vec3& nil_um, double delta_h_um, const VoltageBounds& bounds) {
  drive.check();
  ion.check();
  if (!(bounds.lo <= bounds.hi)) throw InvalidParameter("voltage bounds must satisfy lo <= hi");
  const NilResult nil = find_rf_nil(layout, drive, nil_um);

  std::vector<std::string> controls;
  for (const auto* p : layout.with_role(ElectrodeRole::CenterControl)) {
    if (p->contains(nil.position_um.x(), nil.position_um.z())) controls.push_back(p->id);
  }
  if (controls.empty()) throw InvalidParameter("no center-control electrode lies under the zone");

  MinimumOptions mo;
  mo.freeze_axial = true;
  auto minimum_for = [&](double v, const Vec3& guess_m) {
    DriveConfig d = drive;
    for (const auto& id : controls) d.dc_voltages[id] += v;
    const TrapPotential pot(layout, d, ion, true);
    return find_potential_minimum(pot, guess_m, mo);
  };

  const Vec3 base = minimum_for(0.0, um_to_m(nil.position_um));
  VerticalShift out;
  out.base_height_um = base.y() / kMicron;
  if (!(std::abs(delta_h_um) < 0.5 * out.base_height_um)) {
    std::ostringstream os;
    os << "vertical shift " << delta_h_um << " um must be smaller than half the ion height ("
       << 0.5 * out.base_height_um << " um)";
    throw InvalidParameter(os.str());
  }
  auto absolute = [&](double v) {
    VoltageMap m;
    for (const auto& id : controls) {
      const auto it = drive.dc_voltages.find(id);
      m[id] = (it == drive.dc_voltages.end() ? 0.0 : it->second) + v;
    }
    return m;
  };
  auto in_bounds = [&](double v) {
    for (const auto& [id, total] : absolute(v)) {
      if (total < bounds.lo || total > bounds.hi) return false;
    }
    return true;
  };
  if (delta_h_um == 0.0) {
    out.voltages = absolute(0.0);
    return out;
  }

  const double target = base.y() + delta_h_um * kMicron;
  Vec3 guess = base;
  auto residual = [&](double v) {
    guess = minimum_for(v, guess);
    return guess.y() - target;
  };

  // Linear response of the frozen-axial minimum to the control voltage seeds
  // the secant iteration.
  DriveConfig d0 = drive;
  const TrapPotential pot0(layout, d0, ion, true);
  Eigen::Matrix2d h2 = pot0.hessian(base).topLeftCorner<2, 2>();
  Eigen::Vector2d force = Eigen::Vector2d::Zero();
  for (const auto& id : controls) {
    const FieldSample s = patch_basis(*layout.find(id), m_to_um(base));
    force += ion.charge_C() * Eigen::Vector2d(s.grad.x(), s.grad.y());
  }
  const double slope = -(h2.ldlt().solve(force))(1);  // m per volt
  if (!(std::abs(slope) > 0.0) || !std::isfinite(slope)) {
    throw Infeasible("control electrode has no vertical leverage on the minimum", controls);
  }

  double v0 = 0.0, f0 = base.y() - target;
  double v1 = -f0 / slope;
  double f1 = residual(v1);
  const double tol = 1e-4 * std::abs(delta_h_um) * kMicron;
  for (int it = 0; it < 40 && std::abs(f1) > tol; ++it) {
    const double denom = f1 - f0;
    double v2 = denom != 0.0 ? v1 - f1 * (v1 - v0) / denom : v1 - f1 / slope;
    if (!std::isfinite(v2)) v2 = v1 - f1 / slope;
    v0 = v1;
    f0 = f1;
    v1 = v2;
    f1 = residual(v1);
  }
  if (std::abs(f1) > tol) {
    throw Infeasible("vertical shift did not converge on a control voltage", controls);
  }
  if (!in_bounds(v1)) {
    std::ostringstream os;
    os << "vertical shift of " << delta_h_um << " um needs " << v1 << " V on the control electrode, outside ["
       << bounds.lo << ", " << bounds.hi << "] V";
    throw Infeasible(os.str(), controls);
  }
  out.voltages = absolute(v1);
  out.achieved_shift_um = (guess.y() - base.y()) / kMicron;
  return out;
}

ValidationReport check_voltage_limits(const DriveConfig& drive, double min_gap_um, const VoltageLimits& limits) {
  ValidationReport report;
  const double allowed = min_gap_um >= limits.min_gap_um
                             ? limits.max_rf_amplitude
                             : limits.max_rf_amplitude * std::max(min_gap_um, 0.0) / limits.min_gap_um;
  std::ostringstream cite;
  cite << "limit: " << limits.max_rf_amplitude << " V amplitude for electrode gaps of at least " << limits.min_gap_um
       << " um";
  if (drive.v_rf > limits.max_rf_amplitude) {
    std::ostringstream os;
    os << "RF amplitude " << drive.v_rf << " V exceeds the safe amplitude (" << cite.str() << ")";
    report.defects.push_back({DefectKind::VoltageLimit, {}, os.str()});
  } else if (drive.v_rf > allowed) {
    std::ostringstream os;
    os << "RF amplitude " << drive.v_rf << " V exceeds " << allowed << " V allowed at a " << min_gap_um
       << " um gap (" << cite.str() << ")";
    report.defects.push_back({DefectKind::GapLimit, {}, os.str()});
  }
  for (const auto& [id, v] : drive.dc_voltages) {
    if (std::abs(v) > allowed) {
      std::ostringstream os;
      os << "static voltage " << v << " V on '" << id << "' exceeds " << allowed << " V (" << cite.str() << ")";
      report.defects.push_back({DefectKind::VoltageLimit, {id}, os.str()});
    }
  }
  if (min_gap_um < limits.min_gap_um) {
    std::ostringstream os;
    os << "minimum gap " << min_gap_um << " um is below the rated " << limits.min_gap_um << " um";
    report.notes.push_back(os.str());
  }
  return report;
}

}  // namespace surftrap
