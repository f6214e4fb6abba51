#include "surftrap/geometry.hpp"
#include "surftrap/io.hpp"

#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

using namespace surftrap;

namespace {

int count_role(const ElectrodeLayout& l, ElectrodeRole r) { return static_cast<int>(l.with_role(r).size()); }

// Brute-force overlap oracle: positive-area intersection of any pair.
int overlapping_pairs(const ElectrodeLayout& l) {
  int n = 0;
  const auto& ps = l.patches();
  for (std::size_t i = 0; i < ps.size(); ++i) {
    for (std::size_t j = i + 1; j < ps.size(); ++j) {
      const double w = std::min(ps[i].x_max, ps[j].x_max) - std::max(ps[i].x_min, ps[j].x_min);
      const double h = std::min(ps[i].z_max, ps[j].z_max) - std::max(ps[i].z_min, ps[j].z_min);
      if (w > 0 && h > 0) ++n;
    }
  }
  return n;
}

using Box = std::tuple<ElectrodeRole, double, double, double, double>;

std::multiset<Box> geometry_of(const ElectrodeLayout& l) {
  std::multiset<Box> out;
  for (const auto& p : l.patches()) out.insert({p.role, p.x_min, p.x_max, p.z_min, p.z_max});
  return out;
}

}  // namespace

TEST_CASE("five-wire reference widths give two rails, a control strip and six DC segments") {
  const ElectrodeLayout l = build_five_wire(LayoutParams{});
  CHECK(count_role(l, ElectrodeRole::RF) == 2);
  CHECK(count_role(l, ElectrodeRole::CenterControl) == 1);
  CHECK(count_role(l, ElectrodeRole::DC) == 6);
  REQUIRE(l.zone_centers().size() == 1);

  const RectPatch* ctrl = l.with_role(ElectrodeRole::CenterControl).front();
  CHECK(ctrl->width() == doctest::Approx(85.0));
  for (const RectPatch* rf : l.with_role(ElectrodeRole::RF)) CHECK(rf->width() == doctest::Approx(315.0));
  for (const RectPatch* dc : l.with_role(ElectrodeRole::DC)) {
    CHECK(dc->width() == doctest::Approx(310.0));
    CHECK(dc->length() == doctest::Approx(310.0));
  }
  // Rails separated by exactly the control width.
  auto rails = l.with_role(ElectrodeRole::RF);
  std::sort(rails.begin(), rails.end(), [](auto* a, auto* b) { return a->x_min < b->x_min; });
  CHECK(rails[1]->x_min - rails[0]->x_max == doctest::Approx(85.0));
  CHECK(l.zone_centers()[0].x == doctest::Approx(ctrl->x_center()));
}

TEST_CASE("symmetric five-wire layout is mirror symmetric about the center plane") {
  const ElectrodeLayout l = build_five_wire(LayoutParams{});
  const double xc = l.zone_centers()[0].x;
  std::multiset<Box> mirrored;
  for (const auto& p : l.patches()) mirrored.insert({p.role, 2 * xc - p.x_max, 2 * xc - p.x_min, p.z_min, p.z_max});
  CHECK(mirrored == geometry_of(l));
}

TEST_CASE("non-positive widths are rejected") {
  for (double LayoutParams::*field : {&LayoutParams::a, &LayoutParams::b, &LayoutParams::c, &LayoutParams::dc_width}) {
    LayoutParams p;
    p.*field = 0.0;
    CHECK_THROWS_AS(build_five_wire(p), InvalidParameter);
    p.*field = -1.0;
    CHECK_THROWS_AS(build_multizone(p), InvalidParameter);
  }
  LayoutParams p;
  p.n_zones = 0;
  CHECK_THROWS_AS(build_multizone(p), InvalidParameter);
  p.n_zones = 2;
  CHECK_THROWS_AS(build_five_wire(p), InvalidParameter);
}

TEST_CASE("four-zone layout has four rails, 24 DC segments and four zones") {
  LayoutParams p;
  p.n_zones = 4;
  const ElectrodeLayout l = build_multizone(p);
  CHECK(count_role(l, ElectrodeRole::RF) == 4);
  CHECK(count_role(l, ElectrodeRole::DC) == 24);
  CHECK(l.zone_centers().size() == 4);
  CHECK(validate(l).ok());
  CHECK(overlapping_pairs(l) == 0);
}

TEST_CASE("one-zone multizone reduces to the five-wire trap") {
  const LayoutParams p;
  CHECK(geometry_of(build_multizone(p)) == geometry_of(build_five_wire(p)));
}

TEST_CASE("transverse zone spacing equals the unit-cell pitch") {
  LayoutParams p;
  p.n_zones = 2;
  p.axial_rows = 1;
  const ElectrodeLayout l = build_multizone(p);
  REQUIRE(l.zone_centers().size() == 2);
  // Pitch from the generated rails: distance between the two control strips.
  auto ctrls = l.with_role(ElectrodeRole::CenterControl);
  REQUIRE(ctrls.size() == 2);
  const double measured = std::abs(ctrls[1]->x_center() - ctrls[0]->x_center());
  const double dz = std::abs(l.zone_centers()[1].x - l.zone_centers()[0].x);
  CHECK(dz == doctest::Approx(measured).epsilon(1e-12));
  CHECK(dz == doctest::Approx(p.b + p.a + p.c + p.resolved_inter_cell_ground()).epsilon(1e-12));

  p.inter_cell_ground = 200.0;
  const ElectrodeLayout wide = build_multizone(p);
  CHECK(std::abs(wide.zone_centers()[1].x - wide.zone_centers()[0].x) == doctest::Approx(915.0));
}

TEST_CASE("generated layouts validate cleanly for many parameter choices") {
  for (int n : {1, 2, 3, 4, 6, 9}) {
    for (double a : {20.0, 85.0, 250.0}) {
      LayoutParams p;
      p.n_zones = n;
      p.a = a;
      p.c = 200.0;
      p.dc_segments_per_zone = 4;
      p.rail_length = 20000.0;
      const ElectrodeLayout l = build_multizone(p);
      CHECK(validate(l).ok());
      CHECK(overlapping_pairs(l) == 0);
      CHECK(static_cast<int>(l.zone_centers().size()) == n);
    }
  }
}

TEST_CASE("validate reports overlaps, zero-area patches and the gap note") {
  const RectPatch a{"one", ElectrodeRole::DC, 0, 10, 0, 10};
  RectPatch b = a;
  b.id = "two";
  const ValidationReport dup = validate(ElectrodeLayout({a, b}, {}));
  REQUIRE(dup.defects.size() == 1);
  CHECK(dup.defects[0].kind == DefectKind::Overlap);
  CHECK(dup.defects[0].ids == std::vector<std::string>{"one", "two"});

  const RectPatch flat{"flat", ElectrodeRole::DC, 20, 20, 0, 10};
  const ValidationReport zero = validate(ElectrodeLayout({a, flat}, {}));
  REQUIRE(zero.defects.size() == 1);
  CHECK(zero.defects[0].kind == DefectKind::ZeroArea);

  // Touching edges are not an overlap.
  const RectPatch touch{"touch", ElectrodeRole::DC, 10, 20, 0, 10};
  CHECK(validate(ElectrodeLayout({a, touch}, {})).ok());
  CHECK_FALSE(validate(build_five_wire({})).notes.empty());
}

TEST_CASE("constructor rejects inverted extents and duplicate ids") {
  CHECK_THROWS_AS(ElectrodeLayout({{"x", ElectrodeRole::DC, 10, 0, 0, 10}}, {}), InvalidParameter);
  CHECK_THROWS_AS(ElectrodeLayout({{"x", ElectrodeRole::DC, 0, 1, 0, 1}, {"x", ElectrodeRole::DC, 2, 3, 0, 1}}, {}),
                  InvalidParameter);
}

TEST_CASE("scaling all lengths scales every coordinate") {
  LayoutParams p;
  p.n_zones = 4;
  for (double s : {0.5, 2.0, 3.7}) {
    const ElectrodeLayout base = build_multizone(p);
    const ElectrodeLayout scaled = build_multizone(p.scaled(s));
    REQUIRE(base.patches().size() == scaled.patches().size());
    for (std::size_t i = 0; i < base.patches().size(); ++i) {
      const auto& u = base.patches()[i];
      const auto& v = scaled.patches()[i];
      CHECK(v.x_min == doctest::Approx(s * u.x_min).epsilon(1e-12));
      CHECK(v.x_max == doctest::Approx(s * u.x_max).epsilon(1e-12));
      CHECK(v.z_min == doctest::Approx(s * u.z_min).epsilon(1e-12));
      CHECK(v.z_max == doctest::Approx(s * u.z_max).epsilon(1e-12));
    }
  }
}

TEST_CASE("layout JSON round trip is lossless") {
  LayoutParams p;
  p.n_zones = 4;
  p.a = 85.123456789012;
  const ElectrodeLayout l = build_multizone(p);
  const io::json doc = io::to_json(l);
  CHECK(doc.contains("params"));
  CHECK(doc.contains("patches"));
  CHECK(doc.contains("zone_centers"));
  const ElectrodeLayout back = io::layout_from_json(io::json::parse(doc.dump()));
  REQUIRE(back.patches().size() == l.patches().size());
  for (std::size_t i = 0; i < l.patches().size(); ++i) {
    const auto& u = l.patches()[i];
    const auto& v = back.patches()[i];
    CHECK(u.id == v.id);
    CHECK(u.role == v.role);
    CHECK(std::abs(u.x_min - v.x_min) <= 1e-9);
    CHECK(std::abs(u.x_max - v.x_max) <= 1e-9);
    CHECK(std::abs(u.z_min - v.z_min) <= 1e-9);
    CHECK(std::abs(u.z_max - v.z_max) <= 1e-9);
  }
  CHECK(back.zone_centers() == l.zone_centers());
  CHECK(back.params() == l.params());
}

TEST_CASE("layout JSON errors carry the offending path") {
  const io::json bad = io::json::parse(R"({"patches": [{"id": "p", "role": "RF", "x_min": 0, "x_max": "wide",
                                           "z_min": 0, "z_max": 1}]})");
  try {
    io::layout_from_json(bad);
    FAIL("expected InvalidParameter");
  } catch (const InvalidParameter& e) {
    CHECK(std::string(e.what()).find("patches[0].x_max") != std::string::npos);
  }
  CHECK_THROWS_AS(io::layout_from_json(io::json::parse(R"({"patches": [], "extra": 1})")), InvalidParameter);
}

TEST_CASE("glob matching supports wildcards and alternatives") {
  CHECK(glob_match("rf*", "rf0"));
  CHECK(glob_match("rf?", "rf3"));
  CHECK_FALSE(glob_match("rf?", "rf10"));
  CHECK(glob_match("rf0,rf1", "rf1"));
  CHECK_FALSE(glob_match("rf0,rf1", "rf2"));
  CHECK(glob_match("*", "anything"));
}

TEST_CASE("role names round trip") {
  for (ElectrodeRole r : {ElectrodeRole::RF, ElectrodeRole::DC, ElectrodeRole::CenterControl, ElectrodeRole::Ground}) {
    CHECK(role_from_string(to_string(r)) == r);
  }
  CHECK_THROWS_AS(role_from_string("bogus"), InvalidParameter);
}
