#include "surftrap/pseudo.hpp"

#include "rect_kernel.hpp"
#include "surftrap/constants.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <tuple>
#include <sstream>

namespace surftrap {

using detail::Dual3;
using detail::Order;
using detail::RectM;
using detail::rect_derivs;

void IonSpecies::check() const {
  if (!(mass_amu > 0.0) || !std::isfinite(mass_amu)) throw InvalidParameter("ion mass must be positive");
  if (charge < 1) throw InvalidParameter("ion charge number must be >= 1");
}

void DriveConfig::check() const {
  if (!(v_rf >= 0.0) || !std::isfinite(v_rf)) throw InvalidParameter("v_rf must be >= 0");
  if (!(omega_rf > 0.0) || !std::isfinite(omega_rf)) throw InvalidParameter("omega_rf must be > 0");
}

namespace {

void require_above_plane_m(const Vec3& p) {
  if (!(p.y() > 0.0)) {
    std::ostringstream os;
    os << "point must lie above the trap plane (y > 0), got y = " << p.y() / kMicron << " um";
    throw OutOfDomain(os.str());
  }
}

constexpr const char* kAxisName[3] = {"x", "y", "z"};

}  // namespace

TrapPotential::TrapPotential(const ElectrodeLayout& layout, const DriveConfig& drive, const IonSpecies& ion,
                             bool include_dc) {
  drive.check();
  ion.check();
  for (const auto* p : layout.with_role(ElectrodeRole::RF)) {
    rf_.push_back({p->x_min * kMicron, p->x_max * kMicron, p->z_min * kMicron, p->z_max * kMicron});
  }
  if (include_dc) {
    for (const auto& [id, volts] : drive.dc_voltages) {
      const RectPatch* p = layout.find(id);
      if (p == nullptr) throw InvalidParameter("voltage assigned to unknown electrode '" + id + "'");
      if (volts == 0.0) continue;
      dc_.push_back({{p->x_min * kMicron, p->x_max * kMicron, p->z_min * kMicron, p->z_max * kMicron}, volts});
    }
  }
  const double q = ion.charge_C();
  pseudo_coeff_ = q * q * drive.v_rf * drive.v_rf / (4.0 * ion.mass_kg() * drive.omega_rf * drive.omega_rf);
  charge_ = q;
  mass_kg_ = ion.mass_kg();
}

Vec3 TrapPotential::rf_gradient_per_volt(const Vec3& p) const {
  require_above_plane_m(p);
  Vec3 g = Vec3::Zero();
  for (const auto& r : rf_) {
    const auto d = rect_derivs<double>({r.x1, r.x2, r.z1, r.z2}, p.x(), p.y(), p.z(), false, Order::Gradient);
    g += Vec3(d.gx, d.gy, d.gz);
  }
  return g;
}

Mat3 TrapPotential::rf_hessian_per_volt(const Vec3& p) const {
  require_above_plane_m(p);
  Mat3 h = Mat3::Zero();
  for (const auto& r : rf_) {
    const auto d = rect_derivs<double>({r.x1, r.x2, r.z1, r.z2}, p.x(), p.y(), p.z(), false, Order::Hessian);
    Mat3 m;
    m << d.hxx, d.hxy, d.hxz, d.hxy, d.hyy, d.hyz, d.hxz, d.hyz, d.hzz;
    h += m;
  }
  return h;
}

double TrapPotential::pseudo_energy(const Vec3& p) const {
  if (pseudo_coeff_ == 0.0) {
    require_above_plane_m(p);
    return 0.0;
  }
  return pseudo_coeff_ * rf_gradient_per_volt(p).squaredNorm();
}

double TrapPotential::static_energy(const Vec3& p) const {
  require_above_plane_m(p);
  double phi = 0.0;
  for (const auto& [r, volts] : dc_) {
    phi += volts * rect_derivs<double>({r.x1, r.x2, r.z1, r.z2}, p.x(), p.y(), p.z(), true, Order::Gradient).phi;
  }
  return charge_ * phi;
}

double TrapPotential::energy(const Vec3& p) const { return pseudo_energy(p) + static_energy(p); }

Vec3 TrapPotential::gradient(const Vec3& p) const {
  require_above_plane_m(p);
  Vec3 out = Vec3::Zero();
  if (pseudo_coeff_ != 0.0) {
    Vec3 g = Vec3::Zero();
    Mat3 h = Mat3::Zero();
    for (const auto& r : rf_) {
      const auto d = rect_derivs<double>({r.x1, r.x2, r.z1, r.z2}, p.x(), p.y(), p.z(), false, Order::Hessian);
      g += Vec3(d.gx, d.gy, d.gz);
      Mat3 m;
      m << d.hxx, d.hxy, d.hxz, d.hxy, d.hyy, d.hyz, d.hxz, d.hyz, d.hzz;
      h += m;
    }
    out += 2.0 * pseudo_coeff_ * h * g;
  }
  for (const auto& [r, volts] : dc_) {
    const auto d = rect_derivs<double>({r.x1, r.x2, r.z1, r.z2}, p.x(), p.y(), p.z(), false, Order::Gradient);
    out += charge_ * volts * Vec3(d.gx, d.gy, d.gz);
  }
  return out;
}

Mat3 TrapPotential::hessian(const Vec3& p) const {
  require_above_plane_m(p);
  Mat3 out = Mat3::Zero();
  if (pseudo_coeff_ != 0.0) {
    const Dual3 x(p.x(), 0), y(p.y(), 1), z(p.z(), 2);
    Vec3 g = Vec3::Zero();
    Mat3 h = Mat3::Zero();
    // third[l](i, k) = d^3 phi / dx_i dx_k dx_l
    std::array<Mat3, 3> third{Mat3::Zero(), Mat3::Zero(), Mat3::Zero()};
    for (const auto& r : rf_) {
      const auto d = rect_derivs<Dual3>({r.x1, r.x2, r.z1, r.z2}, x, y, z, false, Order::Hessian);
      g += Vec3(d.gx.v, d.gy.v, d.gz.v);
      const Dual3* entries[3][3] = {{&d.hxx, &d.hxy, &d.hxz}, {&d.hxy, &d.hyy, &d.hyz}, {&d.hxz, &d.hyz, &d.hzz}};
      for (int i = 0; i < 3; ++i) {
        for (int k = 0; k < 3; ++k) {
          h(i, k) += entries[i][k]->v;
          for (int l = 0; l < 3; ++l) third[l](i, k) += entries[i][k]->d[l];
        }
      }
    }
    Mat3 hp = h.transpose() * h;
    for (int l = 0; l < 3; ++l) {
      // column l of sum_i g_i * d/dx_l H_ik
      hp.col(l) += third[l].transpose() * g;
    }
    out += 2.0 * pseudo_coeff_ * 0.5 * (hp + hp.transpose());
  }
  for (const auto& [r, volts] : dc_) {
    const auto d = rect_derivs<double>({r.x1, r.x2, r.z1, r.z2}, p.x(), p.y(), p.z(), false, Order::Hessian);
    Mat3 m;
    m << d.hxx, d.hxy, d.hxz, d.hxy, d.hyy, d.hyz, d.hxz, d.hyz, d.hzz;
    out += charge_ * volts * m;
  }
  return out;
}

double pseudopotential(const ElectrodeLayout& layout, const DriveConfig& drive, const IonSpecies& ion,
                       const Vec3& point_um) {
  const TrapPotential pot(layout, drive, ion, /*include_dc=*/false);
  return pot.pseudo_energy(um_to_m(point_um)) / constants::kElectronVolt;
}

double total_potential(const ElectrodeLayout& layout, const DriveConfig& drive, const IonSpecies& ion,
                       const Vec3& point_um) {
  const TrapPotential pot(layout, drive, ion, /*include_dc=*/true);
  return pot.energy(um_to_m(point_um)) / constants::kElectronVolt;
}

NilResult find_rf_nil(const ElectrodeLayout& layout, const DriveConfig& drive, const Vec3& guess_um,
                      const NilOptions& options) {
  if (!(guess_um.y() > 0.0)) throw OutOfDomain("nil search guess must lie above the trap plane (y > 0)");
  if (layout.with_role(ElectrodeRole::RF).empty()) throw InvalidParameter("layout has no RF electrodes");
  // The nil is a property of the RF geometry alone; evaluate per unit volt.
  DriveConfig unit = drive;
  unit.dc_voltages.clear();
  const TrapPotential pot(layout, unit, IonSpecies{}, false);

  Vec3 p = um_to_m(guess_um);
  auto transverse = [&](const Vec3& q) {
    const Vec3 g = pot.rf_gradient_per_volt(q);
    return Eigen::Vector2d(g.x(), g.y());
  };

  Eigen::Vector2d g = transverse(p);
  double r = g.norm();
  Vec3 best = p;
  double best_r = r;
  int it = 0;
  for (; it < options.max_iterations && r >= options.tol_grad; ++it) {
    const Mat3 h3 = pot.rf_hessian_per_volt(p);
    const Eigen::Matrix2d j = h3.topLeftCorner<2, 2>();
    const double max_step = 0.25 * p.y();

    auto try_direction = [&](Eigen::Vector2d step) {
      if (!step.allFinite()) return false;
      if (step.norm() > max_step) step *= max_step / step.norm();
      for (int k = 0; k < 40; ++k) {
        Vec3 q = p;
        q.x() += step.x();
        q.y() += step.y();
        if (q.y() > 0.0) {
          const Eigen::Vector2d gq = transverse(q);
          if (gq.norm() < r) {
            p = q;
            g = gq;
            r = gq.norm();
            return true;
          }
        }
        step *= 0.5;
      }
      return false;
    };

    bool moved = false;
    if (std::abs(j.determinant()) > 0.0) moved = try_direction(-j.fullPivLu().solve(g));
    if (!moved) {
      // Steepest descent on |grad|^2.
      Eigen::Vector2d d = -(j.transpose() * g);
      if (d.norm() > 0.0) moved = try_direction(d * (max_step / d.norm()));
    }
    if (r < best_r) {
      best_r = r;
      best = p;
    }
    if (!moved) break;
  }
  if (best_r >= options.tol_grad) {
    std::ostringstream os;
    os << "RF nil search did not converge after " << it << " iterations (|grad| per volt = " << best_r
       << " 1/m, tolerance " << options.tol_grad << ")";
    throw SearchFailed(os.str(), m_to_um(best), best_r);
  }
  const Vec3 g3 = pot.rf_gradient_per_volt(best);
  return {m_to_um(best), std::hypot(g3.x(), g3.y()), std::abs(g3.z()), it};
}

Vec3 find_potential_minimum(const Potential& potential, const Vec3& guess_m, const MinimumOptions& options) {
  require_above_plane_m(guess_m);
  Vec3 p = guess_m;
  auto masked_gradient = [&](const Vec3& q) {
    Vec3 g = potential.gradient(q);
    if (options.freeze_axial) g.z() = 0.0;
    return g;
  };
  Vec3 g = masked_gradient(p);
  for (int it = 0; it < options.max_iterations; ++it) {
    Mat3 h = potential.hessian(p);
    if (options.freeze_axial) {
      // Placeholder axial curvature on the scale of the radial block.
      const double scale = h.topLeftCorner<2, 2>().cwiseAbs().maxCoeff();
      h.row(2).setZero();
      h.col(2).setZero();
      h(2, 2) = scale > 0.0 ? scale : 1.0;
    }
    Eigen::SelfAdjointEigenSolver<Mat3> es(h);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().cwiseAbs().maxCoeff();
    Mat3 shifted = h;
    if (lo <= 1e-9 * hi) shifted += (std::abs(lo) + 1e-3 * hi) * Mat3::Identity();
    Vec3 step = -shifted.ldlt().solve(g);
    if (options.freeze_axial) step.z() = 0.0;
    const double max_step = 0.2 * p.y();
    if (step.norm() > max_step) step *= max_step / step.norm();

    const double e0 = potential.energy(p);
    bool accepted = false;
    for (int k = 0; k < 40; ++k) {
      const Vec3 q = p + step;
      if (q.y() > 0.0) {
        const Vec3 gq = masked_gradient(q);
        const double eq = potential.energy(q);
        if (eq <= e0 + 1e-12 * std::abs(e0) || gq.norm() < g.norm()) {
          p = q;
          g = gq;
          accepted = true;
          break;
        }
      }
      step *= 0.5;
    }
    if (!accepted) {
      // No further progress at a convex point: rounding floor of the minimum.
      if (lo > 0.0) return p;
      break;
    }
    if (step.norm() < options.step_tol_m) return p;
  }
  throw SearchFailed("potential minimum search did not converge", m_to_um(p), g.norm());
}

namespace {

struct RayHit {
  double barrier = std::numeric_limits<double>::infinity();
  Vec3 point = Vec3::Zero();
  Vec3 dir = Vec3::Zero();
  double t = 0.0;
  double dt = 0.0;
};

}  // namespace

namespace {

struct Pass {
  double barrier = 0.0;
  Vec3 point = Vec3::Zero();
};

[[noreturn]] void throw_no_escape(double reach) {
  std::ostringstream os;
  os << "no escape saddle within " << reach << " x height of the minimum";
  throw NoEscapePoint(os.str());
}

Pass ray_scan_pass(const Potential& potential, const Vec3& minimum_m, const EscapeOptions& options) {
  const double height = minimum_m.y();
  const double reach = options.reach * height;
  const double dt = reach / options.n_radial;
  const double floor = options.floor_fraction * height;

  RayHit best;
  bool any_turning = false;
  for (int k = 0; k < options.n_rays; ++k) {
    const double theta = constants::kTwoPi * k / options.n_rays;
    const Vec3 dir(std::cos(theta), std::sin(theta), 0.0);
    double ray_max = -std::numeric_limits<double>::infinity();
    int arg = -1;
    int last = 0;
    for (int s = 1; s <= options.n_radial; ++s) {
      const Vec3 q = minimum_m + (s * dt) * dir;
      if (q.y() < floor) break;
      last = s;
      const double u = potential.energy(q);
      // The first turning point is the barrier along this ray.
      if (u < ray_max) break;
      ray_max = u;
      arg = s;
    }
    // Still climbing at its last sample (full reach or the floor): no turning point.
    if (arg < 0 || arg == last) continue;
    if (ray_max < best.barrier) {
      any_turning = true;
      best = {ray_max, minimum_m + (arg * dt) * dir, dir, arg * dt, dt};
    }
  }
  if (!any_turning) throw_no_escape(options.reach);

  // Golden-section polish of the maximum along the best ray.
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = std::max(best.t - best.dt, 0.0);
  double hi = best.t + best.dt;
  auto along = [&](double t) {
    const Vec3 q = minimum_m + t * best.dir;
    return q.y() > 0.0 ? potential.energy(q) : -std::numeric_limits<double>::infinity();
  };
  double c = hi - inv_phi * (hi - lo);
  double d = lo + inv_phi * (hi - lo);
  double fc = along(c), fd = along(d);
  for (int i = 0; i < 80; ++i) {
    if (fc > fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - inv_phi * (hi - lo);
      fc = along(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + inv_phi * (hi - lo);
      fd = along(d);
    }
  }
  const double t = 0.5 * (lo + hi);
  const double u = along(t);
  if (u > best.barrier) {
    best.barrier = u;
    best.point = minimum_m + t * best.dir;
  }
  return {best.barrier, best.point};
}

/// Priority flood from the minimum: cells are visited in order of energy and
/// the running maximum is the water level. The level at which the flood first
/// runs downhill (into another basin) or reaches the box edge is the pass.
Pass flood_pass(const Potential& potential, const Vec3& minimum_m, const EscapeOptions& options) {
  const double height = minimum_m.y();
  const double dx = height / options.cells_per_height;
  const int n = static_cast<int>(std::ceil(options.reach * options.cells_per_height));
  const int iy_min = static_cast<int>(std::ceil((options.floor_fraction * height - height) / dx));
  const int nx = 2 * n + 1;
  const int ny = n - iy_min + 1;
  const double e0 = potential.energy(minimum_m);

  auto flat = [&](int ix, int iy) { return static_cast<std::size_t>(ix + n) * ny + (iy - iy_min); };
  auto point = [&](int ix, int iy) { return Vec3(minimum_m.x() + ix * dx, minimum_m.y() + iy * dx, minimum_m.z()); };
  std::vector<char> queued(static_cast<std::size_t>(nx) * ny, 0);

  using Entry = std::tuple<double, int, int>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> frontier;
  frontier.emplace(e0, 0, 0);
  queued[flat(0, 0)] = 1;

  double level = e0;
  int level_ix = 0, level_iy = 0;
  while (!frontier.empty()) {
    const auto [u, ix, iy] = frontier.top();
    frontier.pop();
    if (u > level) {
      level = u;
      level_ix = ix;
      level_iy = iy;
    }
    const bool on_edge = std::abs(ix) == n || iy == n;
    // Downhill beyond grid noise: the flood has spilled over a pass.
    const bool spilled = u < level - 1e-3 * (level - e0);
    if (spilled || on_edge) {
      const bool pass_on_edge = std::abs(level_ix) == n || level_iy == n;
      if (pass_on_edge) throw_no_escape(options.reach);
      return {level, point(level_ix, level_iy)};
    }
    for (int dxi = -1; dxi <= 1; ++dxi) {
      for (int dyi = -1; dyi <= 1; ++dyi) {
        const int jx = ix + dxi, jy = iy + dyi;
        if ((dxi == 0 && dyi == 0) || jy < iy_min || jy > n || std::abs(jx) > n) continue;
        char& q = queued[flat(jx, jy)];
        if (q) continue;
        q = 1;
        frontier.emplace(potential.energy(point(jx, jy)), jx, jy);
      }
    }
  }
  throw_no_escape(options.reach);
}

}  // namespace

EscapeResult find_escape(const Potential& potential, const Vec3& minimum_m, const EscapeOptions& options) {
  require_above_plane_m(minimum_m);
  if (options.reach <= 0.0 || options.cells_per_height < 2 || options.n_rays < 4 || options.n_radial < 4) {
    throw InvalidParameter("escape search options out of range");
  }
  const double height = minimum_m.y();
  const double e0 = potential.energy(minimum_m);
  const Pass pass = options.method == EscapeMethod::Flood ? flood_pass(potential, minimum_m, options)
                                                          : ray_scan_pass(potential, minimum_m, options);
  RayHit best;
  best.barrier = pass.barrier;
  best.point = pass.point;

  EscapeResult result;
  result.escape_point_um = m_to_um(best.point);
  result.depth_eV = (best.barrier - e0) / constants::kElectronVolt;
  if (!options.refine) return result;

  // Newton on the in-plane gradient converges to the nearby saddle.
  Vec3 q = best.point;
  bool converged = false;
  for (int it = 0; it < 60; ++it) {
    const Vec3 g = potential.gradient(q);
    const Mat3 h = potential.hessian(q);
    const Eigen::Matrix2d h2 = h.topLeftCorner<2, 2>();
    Eigen::Vector2d step = -h2.fullPivLu().solve(Eigen::Vector2d(g.x(), g.y()));
    if (!step.allFinite()) break;
    const double cap = 0.05 * height;
    if (step.norm() > cap) step *= cap / step.norm();
    q.x() += step.x();
    q.y() += step.y();
    if (q.y() <= 0.0) break;
    if (step.norm() < 1e-13) {
      converged = true;
      break;
    }
  }
  if (converged) {
    const Mat3 h = potential.hessian(q);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(Eigen::Matrix2d(h.topLeftCorner<2, 2>()));
    const bool is_saddle = es.eigenvalues()(0) < 0.0 && es.eigenvalues()(1) > 0.0;
    const double u = potential.energy(q);
    const bool nearby = (q - best.point).norm() < 0.5 * height;
    // The grid pass may sit a little below the true saddle it approximates.
    const double slack = 0.05 * std::abs(best.barrier - e0);
    if (is_saddle && nearby && u <= best.barrier + slack) {
      result.escape_point_um = m_to_um(q);
      result.depth_eV = (u - e0) / constants::kElectronVolt;
      result.refined = true;
    }
  }
  return result;
}

EscapeResult trap_depth(const ElectrodeLayout& layout, const DriveConfig& drive, const IonSpecies& ion,
                        const Vec3& nil_um, const EscapeOptions& options) {
  const TrapPotential pot(layout, drive, ion, true);
  return find_escape(pot, um_to_m(nil_um), options);
}

SecularResult secular_from_hessian(const Mat3& hessian, double mass_kg, bool require_minimum) {
  if (!(mass_kg > 0.0)) throw InvalidParameter("mass must be positive");
  const Mat3 sym = 0.5 * (hessian + hessian.transpose());
  Eigen::SelfAdjointEigenSolver<Mat3> es(sym);
  const Mat3 vecs = es.eigenvectors();
  const Vec3 vals = es.eigenvalues();

  // Assign modes to axes by the permutation with the largest total alignment.
  std::array<int, 3> perm{0, 1, 2};
  std::array<int, 3> best_perm = perm;
  double best_score = -1.0;
  do {
    double score = 0.0;
    for (int axis = 0; axis < 3; ++axis) score += std::abs(vecs(axis, perm[axis]));
    if (score > best_score + 1e-15) {
      best_score = score;
      best_perm = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));

  SecularResult out;
  for (int axis = 0; axis < 3; ++axis) {
    Vec3 v = vecs.col(best_perm[axis]);
    if (v(axis) < 0.0) v = -v;
    out.axes.col(axis) = v;
    const double lambda = vals(best_perm[axis]);
    out.eigenvalues[axis] = lambda;
    if (lambda <= 0.0) {
      if (require_minimum) {
        std::ostringstream os;
        os << "not a minimum: curvature along the " << kAxisName[axis] << " mode is " << lambda << " J/m^2";
        throw NotAMinimum(os.str(), axis);
      }
      out.freqs_hz[axis] = 0.0;
    } else {
      out.freqs_hz[axis] = std::sqrt(lambda / mass_kg) / constants::kTwoPi;
    }
  }
  return out;
}

SecularResult secular_frequencies(const Potential& potential, double mass_kg, const Vec3& minimum_m) {
  return secular_from_hessian(potential.hessian(minimum_m), mass_kg, true);
}

SecularResult secular_frequencies(const ElectrodeLayout& layout, const DriveConfig& drive, const IonSpecies& ion,
                                  const Vec3& minimum_um) {
  const TrapPotential pot(layout, drive, ion, true);
  return secular_frequencies(pot, ion.mass_kg(), um_to_m(minimum_um));
}

RotationResult principal_axis_rotation(const SecularResult& secular) {
  RotationResult out;
  const double l1 = secular.eigenvalues[0];
  const double l2 = secular.eigenvalues[1];
  const double scale = std::max(std::abs(l1), std::abs(l2));
  out.degenerate = scale == 0.0 || std::abs(l1 - l2) / scale < 1e-6;
  double best = 90.0;
  for (int axis = 0; axis < 2; ++axis) {
    const Vec3 v = secular.axes.col(axis).normalized();
    const double elevation = std::asin(std::min(1.0, std::abs(v.y()))) * 180.0 / constants::kPi;
    best = std::min(best, elevation);
  }
  out.degrees = best;
  return out;
}

RotationResult principal_axis_rotation(const TrapCharacterization& c) {
  SecularResult s;
  s.axes = c.principal_axes;
  // Curvature ordering only matters for the degeneracy flag, which the
  // characterisation already carries.
  RotationResult r = principal_axis_rotation(s);
  r.degenerate = c.rotation_degenerate;
  return r;
}

TrapCharacterization characterize(const ElectrodeLayout& layout, const DriveConfig& drive, const IonSpecies& ion,
                                  const Vec3& guess_um, const CharacterizeOptions& options) {
  TrapCharacterization out;
  const NilResult nil = find_rf_nil(layout, drive, guess_um, options.nil);
  out.nil_position_um = nil.position_um;
  out.nil_residual = nil.transverse_grad;

  const TrapPotential pot(layout, drive, ion, true);
  const Vec3 nil_m = um_to_m(nil.position_um);
  const Mat3 h_nil = pot.hessian(nil_m);
  const double h_scale = Eigen::SelfAdjointEigenSolver<Mat3>(h_nil).eigenvalues().cwiseAbs().maxCoeff();
  out.axially_confined = h_scale > 0.0 && h_nil(2, 2) > 1e-6 * h_scale;

  Vec3 minimum = nil_m;
  if (pot.has_static_field()) {
    MinimumOptions mo;
    mo.freeze_axial = !out.axially_confined;
    minimum = find_potential_minimum(pot, nil_m, mo);
  }
  out.minimum_um = m_to_um(minimum);
  out.ion_height_um = out.minimum_um.y();

  const Mat3 h = pot.hessian(minimum);
  SecularResult sec = secular_from_hessian(h, ion.mass_kg(), /*require_minimum=*/false);
  for (int axis = 0; axis < 2; ++axis) {
    if (sec.eigenvalues[axis] <= 0.0) {
      throw NotAMinimum(std::string("not a minimum: radial curvature along ") + kAxisName[axis] + " is non-positive",
                        axis);
    }
  }
  if (!out.axially_confined) sec.freqs_hz[2] = 0.0;
  out.secular_freqs_hz = sec.freqs_hz;
  out.principal_axes = sec.axes;
  const RotationResult rot = principal_axis_rotation(sec);
  out.rotation_deg = rot.degrees;
  out.rotation_degenerate = rot.degenerate;

  const EscapeResult esc = find_escape(pot, minimum, options.escape);
  out.trap_depth_eV = esc.depth_eV;
  out.escape_point_um = esc.escape_point_um;
  out.escape_refined = esc.refined;
  return out;
}

}  // namespace surftrap
