#include "surftrap/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace surftrap {

std::string_view to_string(ElectrodeRole role) {
  switch (role) {
    case ElectrodeRole::RF: return "RF";
    case ElectrodeRole::DC: return "DC";
    case ElectrodeRole::CenterControl: return "CenterControl";
    case ElectrodeRole::Ground: return "Ground";
  }
  return "Ground";
}

ElectrodeRole role_from_string(std::string_view name) {
  if (name == "RF") return ElectrodeRole::RF;
  if (name == "DC") return ElectrodeRole::DC;
  if (name == "CenterControl") return ElectrodeRole::CenterControl;
  if (name == "Ground") return ElectrodeRole::Ground;
  throw InvalidParameter("unknown electrode role '" + std::string(name) + "'");
}

int LayoutParams::resolved_axial_rows() const {
  if (axial_rows) return *axial_rows;
  if (n_zones < 1) return 1;
  int rows = 1;
  for (int r = 1; r * r <= n_zones; ++r) {
    if (n_zones % r == 0) rows = r;
  }
  return rows;
}

void LayoutParams::check() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      std::ostringstream os;
      os << "layout parameter '" << name << "' must be a positive length, got " << v;
      throw InvalidParameter(os.str());
    }
  };
  positive(a, "a");
  positive(b, "b");
  positive(c, "c");
  positive(dc_width, "dc_width");
  positive(resolved_rail_length(), "rail_length");
  positive(resolved_inter_cell_ground(), "inter_cell_ground");
  if (n_zones < 1) throw InvalidParameter("n_zones must be >= 1");
  if (dc_segments_per_zone < 1) throw InvalidParameter("dc_segments_per_zone must be >= 1");
  const int rows = resolved_axial_rows();
  if (rows < 1 || n_zones % rows != 0) {
    throw InvalidParameter("axial_rows must divide n_zones");
  }
  if ((dc_segments_per_zone * transverse_cells()) % 2 != 0) {
    throw InvalidParameter(
        "dc_segments_per_zone * transverse cells must be even (segments are split "
        "between the two DC columns)");
  }
  const double row_length = 0.5 * dc_segments_per_zone * transverse_cells() * dc_width;
  if (rows * row_length > resolved_rail_length() * (1.0 + 1e-12)) {
    throw InvalidParameter("DC segment rows do not fit within rail_length");
  }
}

LayoutParams LayoutParams::scaled(double s) const {
  LayoutParams out = *this;
  out.a *= s;
  out.b *= s;
  out.c *= s;
  out.dc_width *= s;
  if (rail_length) out.rail_length = *rail_length * s;
  if (inter_cell_ground) out.inter_cell_ground = *inter_cell_ground * s;
  return out;
}

ElectrodeLayout::ElectrodeLayout(std::vector<RectPatch> patches,
                                 std::vector<ZoneCenter> zone_centers,
                                 std::optional<LayoutParams> params)
    : patches_(std::move(patches)),
      zone_centers_(std::move(zone_centers)),
      params_(std::move(params)) {
  std::set<std::string> ids;
  for (const auto& p : patches_) {
    for (double v : {p.x_min, p.x_max, p.z_min, p.z_max}) {
      if (!std::isfinite(v)) throw InvalidParameter("patch '" + p.id + "' has a non-finite coordinate");
    }
    if (p.x_min > p.x_max || p.z_min > p.z_max) {
      throw InvalidParameter("patch '" + p.id + "' has inverted extents");
    }
    if (!ids.insert(p.id).second) throw InvalidParameter("duplicate electrode id '" + p.id + "'");
  }
}

const RectPatch* ElectrodeLayout::find(std::string_view id) const {
  for (const auto& p : patches_) {
    if (p.id == id) return &p;
  }
  return nullptr;
}

std::vector<const RectPatch*> ElectrodeLayout::with_role(ElectrodeRole role) const {
  std::vector<const RectPatch*> out;
  for (const auto& p : patches_) {
    if (p.role == role) out.push_back(&p);
  }
  return out;
}

std::vector<std::string> ElectrodeLayout::ids_with_role(ElectrodeRole role) const {
  std::vector<std::string> out;
  for (const auto& p : patches_) {
    if (p.role == role) out.push_back(p.id);
  }
  return out;
}

ElectrodeLayout ElectrodeLayout::translated(double dx, double dz) const {
  auto patches = patches_;
  for (auto& p : patches) {
    p.x_min += dx;
    p.x_max += dx;
    p.z_min += dz;
    p.z_max += dz;
  }
  auto zones = zone_centers_;
  for (auto& zc : zones) {
    zc.x += dx;
    zc.z += dz;
  }
  // Generator parameters no longer describe a translated layout.
  return ElectrodeLayout(std::move(patches), std::move(zones));
}

ElectrodeLayout build_multizone(const LayoutParams& params) {
  params.check();
  const int rows = params.resolved_axial_rows();
  const int cols = params.transverse_cells();
  const double gap = params.resolved_inter_cell_ground();
  const double rail_len = params.resolved_rail_length();
  const double half_len = 0.5 * rail_len;
  const double total_width = cols * (params.a + params.b + params.c) + (cols - 1) * gap;

  std::vector<RectPatch> patches;
  std::vector<double> cell_x;
  double x = -0.5 * total_width;
  for (int k = 0; k < cols; ++k) {
    const std::string sfx = std::to_string(k);
    patches.push_back({"rf" + std::to_string(2 * k), ElectrodeRole::RF, x, x + params.b, -half_len, half_len});
    x += params.b;
    patches.push_back({"ctrl" + sfx, ElectrodeRole::CenterControl, x, x + params.a, -half_len, half_len});
    cell_x.push_back(x + 0.5 * params.a);
    x += params.a;
    patches.push_back({"rf" + std::to_string(2 * k + 1), ElectrodeRole::RF, x, x + params.c, -half_len, half_len});
    x += params.c;
    if (k + 1 < cols) {
      patches.push_back({"gnd" + sfx, ElectrodeRole::Ground, x, x + gap, -half_len, half_len});
      x += gap;
    }
  }

  const int per_side = params.dc_segments_per_zone * cols / 2;
  const double row_length = per_side * params.dc_width;
  std::vector<double> row_z;
  for (int r = 0; r < rows; ++r) row_z.push_back((r - 0.5 * (rows - 1)) * row_length);
  const double dc_lo = row_z.front() - 0.5 * row_length;
  const double dc_hi = row_z.back() + 0.5 * row_length;

  struct Column {
    char tag;
    double x0, x1;
  };
  const Column columns[] = {
      {'L', -0.5 * total_width - params.dc_width, -0.5 * total_width},
      {'R', 0.5 * total_width, 0.5 * total_width + params.dc_width},
  };
  for (const auto& col : columns) {
    const std::string side(1, col.tag);
    for (int r = 0; r < rows; ++r) {
      const double z0 = row_z[r] - 0.5 * row_length;
      for (int s = 0; s < per_side; ++s) {
        patches.push_back({"dc" + side + std::to_string(r) + "_" + std::to_string(s), ElectrodeRole::DC,
                           col.x0, col.x1, z0 + s * params.dc_width, z0 + (s + 1) * params.dc_width});
      }
    }
    // Ground fill for the rest of the DC column.
    if (dc_lo > -half_len) {
      patches.push_back({"gnd" + side + "_lo", ElectrodeRole::Ground, col.x0, col.x1, -half_len, dc_lo});
    }
    if (dc_hi < half_len) {
      patches.push_back({"gnd" + side + "_hi", ElectrodeRole::Ground, col.x0, col.x1, dc_hi, half_len});
    }
  }

  std::vector<ZoneCenter> zones;
  for (int r = 0; r < rows; ++r) {
    for (int k = 0; k < cols; ++k) zones.push_back({cell_x[k], row_z[r]});
  }
  return ElectrodeLayout(std::move(patches), std::move(zones), params);
}

ElectrodeLayout build_five_wire(const LayoutParams& params) {
  if (params.n_zones != 1) throw InvalidParameter("five-wire layout requires n_zones = 1");
  return build_multizone(params);
}

void ValidationReport::merge(const ValidationReport& other) {
  defects.insert(defects.end(), other.defects.begin(), other.defects.end());
  notes.insert(notes.end(), other.notes.begin(), other.notes.end());
}

ValidationReport validate(const ElectrodeLayout& layout) {
  ValidationReport report;
  const auto& ps = layout.patches();
  // Shared edges are exact in generated layouts; the tolerance only absorbs
  // round-off in hand-written or rescaled ones.
  constexpr double kTol = 1e-9;
  for (const auto& p : ps) {
    if (p.width() <= kTol || p.length() <= kTol) {
      report.defects.push_back({DefectKind::ZeroArea, {p.id}, "patch '" + p.id + "' has zero area"});
    }
  }
  for (std::size_t i = 0; i < ps.size(); ++i) {
    for (std::size_t j = i + 1; j < ps.size(); ++j) {
      const double ox = std::min(ps[i].x_max, ps[j].x_max) - std::max(ps[i].x_min, ps[j].x_min);
      const double oz = std::min(ps[i].z_max, ps[j].z_max) - std::max(ps[i].z_min, ps[j].z_min);
      if (ox > kTol && oz > kTol) {
        std::ostringstream os;
        os << "patches '" << ps[i].id << "' and '" << ps[j].id << "' overlap (area " << ox * oz << " um^2)";
        report.defects.push_back({DefectKind::Overlap, {ps[i].id, ps[j].id}, os.str()});
      }
    }
  }
  report.notes.push_back(
      "gapless model: minimum electrode gap is 0 um; breakdown limits are checked against the "
      "configured fabrication gap");
  return report;
}

namespace {

bool glob_one(std::string_view p, std::string_view t) {
  std::size_t pi = 0, ti = 0, star = std::string_view::npos, mark = 0;
  while (ti < t.size()) {
    if (pi < p.size() && (p[pi] == '?' || p[pi] == t[ti])) {
      ++pi;
      ++ti;
    } else if (pi < p.size() && p[pi] == '*') {
      star = pi++;
      mark = ti;
    } else if (star != std::string_view::npos) {
      pi = star + 1;
      ti = ++mark;
    } else {
      return false;
    }
  }
  while (pi < p.size() && p[pi] == '*') ++pi;
  return pi == p.size();
}

}  // namespace

bool glob_match(std::string_view pattern, std::string_view text) {
  std::size_t start = 0;
  while (start <= pattern.size()) {
    const auto comma = pattern.find(',', start);
    const auto end = comma == std::string_view::npos ? pattern.size() : comma;
    if (glob_one(pattern.substr(start, end - start), text)) return true;
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return false;
}

}  // namespace surftrap
