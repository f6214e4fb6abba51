#include "support/oracles.hpp"

#include "surftrap/designer.hpp"
#include "surftrap/efield.hpp"
#include "surftrap/io.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>

using namespace surftrap;
using surftrap::testing::rel_diff;

namespace {

const ElectrodeLayout& five_wire() {
  static const ElectrodeLayout l = build_five_wire({});
  return l;
}

const Vec3& reference_nil() {
  static const Vec3 nil = find_rf_nil(five_wire(), DriveConfig::reference(), {0, 120, 0}).position_um;
  return nil;
}

// Vertical argmin of the total potential above the trap center by a fine scan.
double scanned_min_height(const DriveConfig& drive, double lo, double hi, double step) {
  const Vec3& nil = reference_nil();
  double best_y = lo, best = 1e300;
  for (double y = lo; y <= hi; y += step) {
    const double u = total_potential(five_wire(), drive, {}, {nil.x(), y, nil.z()});
    if (u < best) best = u, best_y = y;
  }
  return best_y;
}

}  // namespace

TEST_CASE("closed-form ion height") {
  CHECK(ion_height_formula(85, 315, 315) == doctest::Approx(123.3).epsilon(1e-3));
  const double h = ion_height_formula(70, 210, 450);
  CHECK(ion_height_formula(140, 420, 900) == 2 * h);
  CHECK(ion_height_formula(70, 450, 210) == h);
  // Direct evaluation.
  CHECK(h == doctest::Approx(std::sqrt(70.0 * 210 * 450 * 730) / 660).epsilon(1e-15));
  CHECK_THROWS_AS(ion_height_formula(0, 1, 1), InvalidParameter);
  CHECK_THROWS_AS(ion_height_formula(1, -1, 1), InvalidParameter);
}

TEST_CASE("Gamma for the reference drive") {
  const IonSpecies ion;
  const double w = 2 * std::numbers::pi * 22e6;
  const double e = 1.602176634e-19, m = 171 * 1.66053906660e-27;
  const double by_hand = e * e * 200.0 * 200.0 / (std::numbers::pi * std::numbers::pi * m * w * w);
  CHECK(gamma(200, w, ion) == doctest::Approx(by_hand).epsilon(1e-12));
  CHECK(gamma(200, w, ion) == doctest::Approx(1.92e-26).epsilon(0.005));
  CHECK(gamma(400, w, ion) / gamma(200, w, ion) == doctest::Approx(4.0).epsilon(1e-14));
  CHECK(gamma(200, 2 * w, ion) / gamma(200, w, ion) == doctest::Approx(0.25).epsilon(1e-14));
  CHECK_THROWS_AS(gamma(200, 0, ion), InvalidParameter);
}

TEST_CASE("secular frequency estimator") {
  const IonSpecies ion;
  const double w = 2 * std::numbers::pi * 22e6;
  CHECK(secular_estimate(200, w, ion, 123.3) == doctest::Approx(6.07e6).epsilon(0.01));
  CHECK(secular_estimate(200, w, ion, 246.6) / secular_estimate(200, w, ion, 123.3) == doctest::Approx(0.25));
  CHECK(secular_estimate(400, w, ion, 123.3) / secular_estimate(200, w, ion, 123.3) == doctest::Approx(2.0));
}

TEST_CASE("heating rate scale") {
  CHECK(heating_scale(123, 123) == 1.0);
  CHECK(heating_scale(50, 100) == 1.0 / 16.0);
  CHECK(std::abs(heating_scale(123, 136) - 0.669) <= 1e-3);
  CHECK(std::log(heating_scale(123, 136)) == doctest::Approx(4 * std::log(123.0 / 136.0)).epsilon(1e-12));
  CHECK_THROWS_AS(heating_scale(0, 1), InvalidParameter);
}

TEST_CASE("geometric factor of the reference trap") {
  const double k = kappa_of_geometry(85, 315, 315);
  CHECK(k == doctest::Approx(0.0225).epsilon(0.10));
  const DepthEstimate d = depth_formula(85, 315, 315, 200, 2 * std::numbers::pi * 22e6, {});
  CHECK(d.depth_eV == doctest::Approx(0.177).epsilon(0.10));
  CHECK(d.h_um == doctest::Approx(ion_height_formula(85, 315, 315)));
  CHECK(d.depth_eV * 1.602176634e-19 == doctest::Approx(d.kappa * d.gamma / std::pow(d.h_um * 1e-6, 2)));
  const DepthEstimate d2 = depth_formula(85, 315, 315, 400, 2 * std::numbers::pi * 22e6, {});
  CHECK(d2.depth_eV / d.depth_eV == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("geometric factor is scale invariant and mirror symmetric") {
  const double k = extract_kappa(85, 315, 315);
  for (double s : {0.5, 2.0}) CHECK(extract_kappa(85 * s, 315 * s, 315 * s) == doctest::Approx(k).epsilon(1e-3));
  CHECK(extract_kappa(85, 250, 400) == doctest::Approx(extract_kappa(85, 400, 250)).epsilon(1e-6));
}

TEST_CASE("kappa cache is shared by ratio and safe under concurrent use") {
  KappaCache cache;
  const double k1 = cache.get(85, 315, 315);
  CHECK(cache.get(170, 630, 630) == k1);
  CHECK(cache.size() == 1);
  std::vector<double> got(8);
  {
    std::vector<std::jthread> pool;
    for (int t = 0; t < 8; ++t) pool.emplace_back([&, t] { got[t] = cache.get(100, 200 + 50 * (t % 2), 300); });
  }
  CHECK(cache.size() == 3);
  CHECK(got[0] == got[2]);
  CHECK(got[1] == got[3]);
  cache.clear();
  CHECK(cache.size() == 0);
}

TEST_CASE("closed-form depth tracks the full escape search on random geometries") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> ua(40, 200), ub(150, 500);
  // A drive unlike the one kappa is extracted with.
  const DriveConfig drive{150.0, 2 * std::numbers::pi * 30e6, {}};
  const IonSpecies ion{40.0, 1, "40Ca+"};
  for (int i = 0; i < 10; ++i) {
    LayoutParams p;
    p.a = ua(rng);
    p.b = ub(rng);
    p.c = ub(rng);
    const ElectrodeLayout l = build_five_wire(p);
    const double h = ion_height_formula(p.a, p.b, p.c);
    const Vec3 guess(l.zone_centers()[0].x, h, 0);
    const Vec3 nil = find_rf_nil(l, drive, guess).position_um;
    const double full = trap_depth(l, drive, ion, nil).depth_eV;
    const double est = depth_formula(p.a, p.b, p.c, drive.v_rf, drive.omega_rf, ion).depth_eV;
    CAPTURE(p.a);
    CAPTURE(p.b);
    CAPTURE(p.c);
    CHECK(rel_diff(full, est) < 0.02);
  }
}

TEST_CASE("optimizer recovers the reference widths and dominates random designs") {
  OptimizeRequest req;
  const OptimizeResult r = optimize_geometry(req);
  CHECK(r.a == doctest::Approx(85).epsilon(0.10));
  CHECK(r.b == doctest::Approx(315).epsilon(0.10));
  CHECK(r.c == r.b);
  CHECK(r.h_um == doctest::Approx(123.3).epsilon(1e-3));

  std::mt19937_64 rng(2024);
  int sampled = 0;
  while (sampled < 20) {
    const auto g = sample_feasible_geometry(req, rng);
    REQUIRE(g.has_value());
    const auto [a, b, c] = *g;
    CHECK(ion_height_formula(a, b, c) == doctest::Approx(123.3).epsilon(1e-3));
    CHECK(r.depth_eV >= depth_formula(a, b, c, req.drive.v_rf, req.drive.omega_rf, req.ion).depth_eV);
    ++sampled;
  }

  const OptimizeResult again = optimize_geometry(req);
  CHECK(again.a == r.a);
  CHECK(again.depth_eV == r.depth_eV);
}

TEST_CASE("optimizer is invariant under joint rescaling") {
  OptimizeRequest req;
  const OptimizeResult base = optimize_geometry(req);

  OptimizeRequest big = req;
  big.target_h_um *= 2;
  for (WidthBounds* w : {&big.a, &big.b, &big.c}) w->lo *= 2, w->hi *= 2;
  const OptimizeResult scaled = optimize_geometry(big);
  CHECK(scaled.a == doctest::Approx(2 * base.a).epsilon(1e-3));
  CHECK(scaled.b == doctest::Approx(2 * base.b).epsilon(1e-3));

  OptimizeRequest drive = req;
  drive.drive.v_rf *= 1.7;
  drive.drive.omega_rf *= 0.8;
  const OptimizeResult redriven = optimize_geometry(drive);
  CHECK(redriven.a == doctest::Approx(base.a).epsilon(1e-3));
  CHECK(redriven.b == doctest::Approx(base.b).epsilon(1e-3));
}

TEST_CASE("free-rail optimizer meets the height and does no worse than equal rails") {
  OptimizeRequest req;
  req.equal_rails = false;
  const OptimizeResult r = optimize_geometry(req);
  CHECK(r.h_um == doctest::Approx(123.3).epsilon(1e-3));
  CHECK(req.a.contains(r.a));
  CHECK(req.b.contains(r.b));
  CHECK(req.c.contains(r.c));
  req.equal_rails = true;
  CHECK(r.depth_eV >= optimize_geometry(req).depth_eV * (1 - 1e-6));
}

TEST_CASE("optimizer reports an infeasible height") {
  OptimizeRequest req;
  req.target_h_um = 5000;
  req.a = {20, 40};
  req.b = {50, 60};
  req.c = {50, 60};
  CHECK_THROWS_AS(optimize_geometry(req), Infeasible);
  req.target_h_um = -1;
  CHECK_THROWS_AS(optimize_geometry(req), InvalidParameter);
}

TEST_CASE("DC well on the reference trap") {
  const IonSpecies ion;
  const WellSpec well{reference_nil(), 0.2e6, ion};
  const DcSolution sol = solve_dc_voltages(five_wire(), well, {-50, 50});
  REQUIRE(sol.voltages.size() == 6);

  // Alternating sign along each DC column, mirrored across the trap.
  for (const char* side : {"dcL0_", "dcR0_"}) {
    const std::string s(side);
    const double v0 = sol.voltages.at(s + "0"), v1 = sol.voltages.at(s + "1"), v2 = sol.voltages.at(s + "2");
    CHECK(v0 * v1 < 0);
    CHECK(v1 * v2 < 0);
    for (double v : {v0, v1, v2}) {
      CHECK(std::abs(v) > 1.0);
      CHECK(std::abs(v) < 50.0);
    }
  }
  CHECK(sol.voltages.at("dcL0_1") == doctest::Approx(sol.voltages.at("dcR0_1")).epsilon(1e-6));

  const double h = reference_nil().y() * kMicron;
  CHECK(sol.residual_gradient < 1e-3 * sol.target_curvature * h);
  CHECK(sol.achieved_curvature == doctest::Approx(sol.target_curvature).epsilon(1e-3));

  DriveConfig drive = DriveConfig::reference();
  drive.dc_voltages = sol.voltages;
  const TrapCharacterization c = characterize(five_wire(), drive, ion, reference_nil());
  CHECK(c.axially_confined);
  CHECK(c.secular_freqs_hz[2] == doctest::Approx(0.2e6).epsilon(0.05));
}

TEST_CASE("flat DC target admits zero voltages") {
  const DcSolution sol = solve_dc_voltages(five_wire(), {reference_nil(), 0.0, {}}, {-50, 50});
  for (const auto& [id, v] : sol.voltages) CHECK(std::abs(v) < 1e-9);
  CHECK(sol.residual_gradient < 1e-9);
}

TEST_CASE("DC well outside the bounds names the electrodes") {
  try {
    solve_dc_voltages(five_wire(), {reference_nil(), 2e6, {}}, {-1, 1});
    FAIL("expected Infeasible");
  } catch (const Infeasible& e) {
    CHECK_FALSE(e.items().empty());
    CHECK(e.items().size() <= 5);
    for (const auto& id : e.items()) CHECK(five_wire().find(id) != nullptr);
  }
}

TEST_CASE("transport with coincident endpoints repeats the same voltages") {
  const WellSpec well{reference_nil(), 0.2e6, {}};
  const Waveform w = transport_waveform(five_wire(), DriveConfig::reference(), reference_nil(), reference_nil(), 2, well,
                                        {-50, 50});
  REQUIRE(w.steps.size() == 2);
  CHECK(w.steps[0] == w.steps[1]);
  CHECK_THROWS_AS(transport_waveform(five_wire(), DriveConfig::reference(), reference_nil(), reference_nil(), 1, well,
                                     {-50, 50}),
                  InvalidParameter);
}

TEST_CASE("axial transport over 300 um") {
  const WellSpec well{reference_nil(), 0.2e6, {}};
  const Vec3 start = reference_nil() - Vec3(0, 0, 150), end = reference_nil() + Vec3(0, 0, 150);
  TransportOptions opts;
  opts.duration_s = 21e-6;
  const Waveform w = transport_waveform(five_wire(), DriveConfig::reference(), start, end, 21, well, {-50, 50}, opts);
  REQUIRE(w.steps.size() == 21);
  REQUIRE(w.well_positions_um.size() == 21);
  const double nominal = 300.0 / 20;
  for (std::size_t k = 1; k < 21; ++k) {
    const double jump = w.well_positions_um[k].z() - w.well_positions_um[k - 1].z();
    CHECK(jump > 0);
    CHECK(jump <= 2 * nominal);
    CHECK(w.timestamps_s[k] > w.timestamps_s[k - 1]);
  }
  for (std::size_t k = 0; k < 21; ++k) {
    CHECK(w.depths_eV[k] > opts.depth_floor_eV);
    DriveConfig d = DriveConfig::reference();
    d.dc_voltages = w.steps[k];
    CHECK(check_voltage_limits(d, opts.min_gap_um).ok());
    for (const auto& [id, v] : w.steps[k]) CHECK(std::abs(v) <= 50.0);
  }

  const Waveform back = transport_waveform(five_wire(), DriveConfig::reference(), end, start, 21, well, {-50, 50});
  for (std::size_t k = 0; k < 21; ++k) {
    for (const auto& [id, v] : w.steps[k]) CHECK(back.steps[20 - k].at(id) == doctest::Approx(v).epsilon(1e-9));
  }

  std::ostringstream os;
  io::write_waveform_csv(os, w);
  std::istringstream in(os.str());
  std::string header;
  std::getline(in, header);
  CHECK(header.rfind("step,", 0) == 0);
  CHECK(header.find("well_x_um,well_y_um,well_z_um") != std::string::npos);
}

TEST_CASE("vertical shift") {
  const DriveConfig drive = DriveConfig::reference();
  const VerticalShift zero = vertical_shift(five_wire(), drive, {}, reference_nil(), 0.0, {-50, 50});
  for (const auto& [id, v] : zero.voltages) CHECK(std::abs(v) < 1e-9);

  // Positive control voltage raises the minimum.
  DriveConfig pushed = drive;
  pushed.dc_voltages["ctrl0"] = 0.2;
  const double y0 = scanned_min_height(drive, 110, 140, 0.005);
  const double y1 = scanned_min_height(pushed, 110, 140, 0.005);
  CHECK(y1 > y0);

  const VerticalShift up = vertical_shift(five_wire(), drive, {}, reference_nil(), 10.0, {-50, 50});
  REQUIRE(up.voltages.count("ctrl0") == 1);
  CHECK(up.voltages.at("ctrl0") > 0);
  DriveConfig shifted = drive;
  for (const auto& [id, v] : up.voltages) shifted.dc_voltages[id] = v;
  const double y2 = scanned_min_height(shifted, y0 + 5, y0 + 15, 0.005);
  CHECK(y2 - y0 == doctest::Approx(10.0).epsilon(0.02));

  CHECK_THROWS(vertical_shift(five_wire(), drive, {}, reference_nil(), 10.0, {-0.1, 0.1}));
  CHECK_THROWS_AS(vertical_shift(five_wire(), drive, {}, reference_nil(), 0.6 * reference_nil().y(), {-50, 50}),
                  InvalidParameter);
}

TEST_CASE("voltage limit advisory") {
  auto check = [](double v_rf, double gap) {
    return check_voltage_limits({v_rf, 1.0, {}}, gap);
  };
  CHECK(check(200, 10).ok());
  const ValidationReport over = check(600, 10);
  REQUIRE_FALSE(over.ok());
  CHECK(over.defects[0].message.find("500") != std::string::npos);
  CHECK(check(500, 5).ok());
  CHECK_FALSE(check(500.001, 5).ok());
  CHECK_FALSE(check(500, 4.9).ok());
  // Derated ceiling below the rated gap.
  const ValidationReport narrow = check(100, 2);
  CHECK(narrow.ok());
  CHECK_FALSE(narrow.notes.empty());
  CHECK_FALSE(check(300, 2).ok());
  CHECK_FALSE(check_voltage_limits({100, 1.0, {{"dc", -700}}}, 10).ok());
}
