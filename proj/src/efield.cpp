#include "surftrap/efield.hpp"

#include "rect_kernel.hpp"
#include "surftrap/pseudo.hpp"

#include <algorithm>
#include <sstream>
#include <thread>

namespace surftrap {

namespace detail {

RectM to_metres(const RectPatch& p) {
  return {p.x_min * kMicron, p.x_max * kMicron, p.z_min * kMicron, p.z_max * kMicron};
}

FieldSample basis_sample_m(const RectM& r, const Vec3& p_m) {
  const auto d = rect_derivs<double>(r, p_m.x(), p_m.y(), p_m.z(), true, Order::Hessian);
  FieldSample s;
  s.phi = d.phi;
  s.grad = {d.gx, d.gy, d.gz};
  s.hessian << d.hxx, d.hxy, d.hxz,
               d.hxy, d.hyy, d.hyz,
               d.hxz, d.hyz, d.hzz;
  return s;
}

}  // namespace detail

namespace {

void require_above_plane(const Vec3& point_um) {
  if (!(point_um.y() > 0.0)) {
    std::ostringstream os;
    os << "field point must lie above the trap plane (y > 0), got y = " << point_um.y() << " um";
    throw OutOfDomain(os.str());
  }
}

}  // namespace

FieldSample patch_basis(const RectPatch& patch, const Vec3& point_um) {
  require_above_plane(point_um);
  return detail::basis_sample_m(detail::to_metres(patch), um_to_m(point_um));
}

FieldSample superpose(const ElectrodeLayout& layout, const VoltageMap& voltages, const Vec3& point_um) {
  require_above_plane(point_um);
  const Vec3 p = um_to_m(point_um);
  FieldSample total;
  for (const auto& [id, volts] : voltages) {
    const RectPatch* patch = layout.find(id);
    if (patch == nullptr) throw InvalidParameter("voltage assigned to unknown electrode '" + id + "'");
    if (volts == 0.0) continue;
    total += detail::basis_sample_m(detail::to_metres(*patch), p).scaled(volts);
  }
  return total;
}

FieldSample rf_field_sample(const ElectrodeLayout& layout, const DriveConfig& drive, const Vec3& point_um) {
  VoltageMap rf;
  for (const auto* p : layout.with_role(ElectrodeRole::RF)) rf[p->id] = drive.v_rf;
  return superpose(layout, rf, point_um);
}

std::size_t FieldGrid::index(int ix, int iy, int iz) const {
  const auto& n = region.resolution;
  return (static_cast<std::size_t>(ix) * n[1] + iy) * n[2] + iz;
}

Vec3 FieldGrid::point_um(std::size_t flat) const {
  const auto& n = region.resolution;
  const std::size_t iz = flat % n[2];
  const std::size_t iy = (flat / n[2]) % n[1];
  const std::size_t ix = flat / (static_cast<std::size_t>(n[1]) * n[2]);
  return {axes_um[0][ix], axes_um[1][iy], axes_um[2][iz]};
}

FieldGrid grid_map(const ElectrodeLayout& layout, const VoltageMap& voltages, const GridRegion& region,
                   const std::optional<PseudoRequest>& pseudo) {
  for (int k = 0; k < 3; ++k) {
    const int n = region.resolution[k];
    if (n < 1) throw InvalidParameter("grid resolution must be >= 1 on every axis");
    if (n == 1 && region.min_um[k] != region.max_um[k]) {
      throw InvalidParameter("an axis with resolution 1 must have min == max");
    }
    if (region.max_um[k] < region.min_um[k]) throw InvalidParameter("grid region has max < min");
  }
  if (!(region.min_um.y() > 0.0)) {
    throw OutOfDomain("grid region must lie entirely above the trap plane (y > 0)");
  }
  for (const auto& [id, v] : voltages) {
    if (layout.find(id) == nullptr) throw InvalidParameter("voltage assigned to unknown electrode '" + id + "'");
  }
  if (pseudo) {
    pseudo->drive.check();
    pseudo->ion.check();
  }

  FieldGrid grid;
  grid.region = region;
  for (int k = 0; k < 3; ++k) {
    const int n = region.resolution[k];
    auto& axis = grid.axes_um[k];
    axis.resize(n);
    for (int i = 0; i < n; ++i) {
      axis[i] = n == 1 ? region.min_um[k]
                       : region.min_um[k] + (region.max_um[k] - region.min_um[k]) * i / (n - 1);
    }
  }
  const std::size_t total =
      static_cast<std::size_t>(region.resolution[0]) * region.resolution[1] * region.resolution[2];
  grid.samples.resize(total);
  if (pseudo) grid.pseudo_eV.resize(total);

  std::optional<TrapPotential> trap;
  if (pseudo) trap.emplace(layout, pseudo->drive, pseudo->ion, /*include_dc=*/false);

  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const Vec3 p = grid.point_um(i);
      grid.samples[i] = superpose(layout, voltages, p);
      if (trap) grid.pseudo_eV[i] = trap->energy(um_to_m(p)) / constants::kElectronVolt;
    }
  };
  const std::size_t n_threads =
      std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, std::max<std::size_t>(1, total / 256));
  if (n_threads <= 1) {
    work(0, total);
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (total + n_threads - 1) / n_threads;
    for (std::size_t t = 0; t < n_threads; ++t) {
      const std::size_t b = t * chunk;
      const std::size_t e = std::min(total, b + chunk);
      if (b < e) pool.emplace_back(work, b, e);
    }
  }
  return grid;
}

}  // namespace surftrap
