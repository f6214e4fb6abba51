#include "cli.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace surftrap;
namespace fs = std::filesystem;
using cli::json;

namespace {

struct Outcome {
  int code = -1;
  std::string out;
  std::string err;
};

Outcome invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "surftrap");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Outcome o;
  o.code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  o.out = out.str();
  o.err = err.str();
  return o;
}

class Scratch {
 public:
  Scratch() {
    std::random_device rd;
    dir_ = fs::temp_directory_path() / ("surftrap_cli_" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(dir_);
  }
  ~Scratch() { fs::remove_all(dir_); }
  fs::path path(const std::string& name) const { return dir_ / name; }
  std::string write(const std::string& name, const std::string& text) const {
    std::ofstream(dir_ / name) << text;
    return (dir_ / name).string();
  }
  std::string write_json(const std::string& name, const json& doc) const { return write(name, doc.dump(2)); }

 private:
  fs::path dir_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

json read_json(const fs::path& p) { return json::parse(slurp(p)); }

json five_wire_config() {
  return json::parse(R"({
    "layout": {"generator": "five_wire", "params": {"a": 85, "b": 315, "c": 315, "dc_width": 310}},
    "drive": {"v_rf_V": 200, "rf_frequency_Hz": 22e6},
    "ion": {"label": "171Yb+", "mass_amu": 171, "charge": 1}
  })");
}

json multizone_config() {
  json cfg = five_wire_config();
  cfg["layout"] = {{"generator", "multizone"}, {"params", {{"n_zones", 4}}}};
  return cfg;
}

std::string configs_dir() { return SURFTRAP_SOURCE_DIR "/configs"; }

}  // namespace

TEST_CASE("validate: shipped configs pass") {
  Scratch tmp;
  for (const char* name : {"five_wire.json", "multizone.json"}) {
    const Outcome o = invoke({"validate", "--config", configs_dir() + "/" + name, "--out", tmp.path(name).string()});
    CHECK(o.code == 0);
    const json report = read_json(tmp.path(name) / "validation.json");
    CHECK(report["ok"] == true);
  }
}

TEST_CASE("validate: overlapping patches are an analysis failure") {
  Scratch tmp;
  json cfg = five_wire_config();
  cfg["layout"] = json::parse(R"({"patches": [
      {"id": "rf0", "role": "RF", "x_min": 0, "x_max": 100, "z_min": 0, "z_max": 100},
      {"id": "rf1", "role": "RF", "x_min": 50, "x_max": 150, "z_min": 0, "z_max": 100}]})");
  const Outcome o = invoke({"validate", "--config", tmp.write_json("c.json", cfg), "--out", tmp.path("o").string()});
  CHECK(o.code == 1);
  CHECK(o.out.find("rf0") != std::string::npos);
  const json report = read_json(tmp.path("o") / "validation.json");
  CHECK(report["defects"][0]["kind"] == "overlap");
}

TEST_CASE("validate: RF amplitude above the limit fails") {
  Scratch tmp;
  json cfg = five_wire_config();
  cfg["drive"]["v_rf_V"] = 600;
  CHECK(invoke({"validate", "--config", tmp.write_json("c.json", cfg)}).code == 1);
}

TEST_CASE("input errors exit with code 2 and say where") {
  Scratch tmp;
  const Outcome syntax = invoke({"validate", "--config", tmp.write("bad.json", "{\n  \"layout\": {,\n}")});
  CHECK(syntax.code == 2);
  CHECK(syntax.err.find("bad.json:2:") != std::string::npos);
  CHECK(syntax.err.find("\"exit_code\":2") != std::string::npos);

  json unknown = five_wire_config();
  unknown["drive"]["voltage"] = 3;
  const Outcome u = invoke({"validate", "--config", tmp.write_json("u.json", unknown)});
  CHECK(u.code == 2);
  CHECK(u.err.find("drive.voltage") != std::string::npos);

  json wrong_type = five_wire_config();
  wrong_type["ion"]["mass_amu"] = "heavy";
  CHECK(invoke({"validate", "--config", tmp.write_json("t.json", wrong_type)}).code == 2);

  json missing = five_wire_config();
  missing["layout"] = {{"file", "nowhere.json"}};
  const Outcome m = invoke({"validate", "--config", tmp.write_json("m.json", missing)});
  CHECK(m.code == 2);
  CHECK(m.err.find("nowhere.json") != std::string::npos);

  json bad_id = five_wire_config();
  bad_id["drive"]["dc_voltages_V"] = {{"dcX", 1.0}};
  CHECK(invoke({"validate", "--config", tmp.write_json("i.json", bad_id)}).code == 2);

  CHECK(invoke({"validate", "--config", tmp.path("absent.json").string()}).code == 2);
  CHECK(invoke({"frobnicate"}).code == 2);
  CHECK(invoke({"validate"}).code == 2);
  CHECK(invoke({"map", "--config", tmp.write_json("f.json", five_wire_config()), "--format", "xml"}).code == 2);
  CHECK(invoke({"characterize", "--config", tmp.write_json("z.json", five_wire_config()), "--out", tmp.path("o").string(),
                "--zones", "3"})
            .code == 2);
}

TEST_CASE("layout may come from a referenced file") {
  Scratch tmp;
  tmp.write("layout.json", R"({"patches": [
      {"id": "rf0", "role": "RF", "x_min": -400, "x_max": -85, "z_min": -4000, "z_max": 4000},
      {"id": "rf1", "role": "RF", "x_min": 0, "x_max": 315, "z_min": -4000, "z_max": 4000}],
      "zone_centers": [{"x": -42.5, "z": 0}]})");
  json cfg = five_wire_config();
  cfg["layout"] = {{"file", "layout.json"}};
  CHECK(invoke({"validate", "--config", tmp.write_json("c.json", cfg)}).code == 0);
}

TEST_CASE("characterize: rail masks reproduce the single-trap and four-rail columns") {
  Scratch tmp;
  const std::string cfg = tmp.write_json("mz.json", multizone_config());

  const Outcome two = invoke({"characterize", "--config", cfg, "--out", tmp.path("two").string(), "--zones", "0",
                              "--mask", "rf0,rf1"});
  REQUIRE(two.code == 0);
  const json r2 = read_json(tmp.path("two") / "characterization.json")["zones"][0]["result"];
  CHECK(r2["ion_height_um"].get<double>() == doctest::Approx(123.0).epsilon(0.02));
  CHECK(r2["trap_depth_eV"].get<double>() == doctest::Approx(0.177).epsilon(0.10));

  const Outcome four = invoke({"characterize", "--config", cfg, "--out", tmp.path("four").string()});
  REQUIRE(four.code == 0);
  const json zones = read_json(tmp.path("four") / "characterization.json")["zones"];
  CHECK(zones.size() == 4);
  for (const auto& z : zones) CHECK(z["result"]["ion_height_um"].get<double>() == doctest::Approx(136.0).epsilon(0.05));
}

TEST_CASE("characterize: an analysis failure exits 1 and names the zone") {
  Scratch tmp;
  json cfg = five_wire_config();
  cfg["analysis"]["characterize"]["escape"] = {{"reach", 0.5}};
  const Outcome o = invoke({"characterize", "--config", tmp.write_json("c.json", cfg), "--out", tmp.path("o").string()});
  CHECK(o.code == 1);
  CHECK(o.err.find("zone 0") != std::string::npos);
  CHECK(fs::exists(tmp.path("o") / "error.json"));
}

TEST_CASE("flags override the document") {
  Scratch tmp;
  json cfg = five_wire_config();
  cfg["analysis"]["optimize"] = {{"format", "json"}};
  cfg["output_dir"] = "from_doc";
  const std::string path = tmp.write_json("c.json", cfg);
  REQUIRE(invoke({"optimize", "--config", path, "--out", tmp.path("flag").string(), "--format", "csv"}).code == 0);
  CHECK(fs::exists(tmp.path("flag") / "optimize.csv"));
  CHECK_FALSE(fs::exists(tmp.path("flag") / "optimize.json"));
  // Without --out the document's directory, relative to the config, is used.
  REQUIRE(invoke({"optimize", "--config", path}).code == 0);
  CHECK(fs::exists(tmp.path("from_doc") / "optimize.json"));
}

TEST_CASE("optimize recovers the reference widths") {
  Scratch tmp;
  json cfg = five_wire_config();
  cfg["analysis"]["optimize"] = {{"target_h_um", 123.3}, {"equal_rails", true}};
  REQUIRE(invoke({"optimize", "--config", tmp.write_json("c.json", cfg), "--out", tmp.path("o").string()}).code == 0);
  const json r = read_json(tmp.path("o") / "optimize.json");
  CHECK(r["result"]["a_um"].get<double>() == doctest::Approx(85).epsilon(0.10));
  CHECK(r["result"]["b_um"].get<double>() == doctest::Approx(315).epsilon(0.10));
}

TEST_CASE("map argmin agrees with the characterized nil") {
  Scratch tmp;
  const std::string cfg = tmp.write_json("c.json", five_wire_config());
  REQUIRE(invoke({"map", "--config", cfg, "--out", tmp.path("m").string()}).code == 0);
  REQUIRE(invoke({"characterize", "--config", cfg, "--out", tmp.path("c").string()}).code == 0);

  const json meta = read_json(tmp.path("m") / "grid.json");
  std::ifstream csv(tmp.path("m") / "grid.csv");
  std::string line;
  std::getline(csv, line);
  REQUIRE(line == "x_um,y_um,z_um,phi_V,Ex,Ey,Ez,psi_eV");
  double best = 1e300, bx = 0, by = 0;
  while (std::getline(csv, line)) {
    std::stringstream row(line);
    std::vector<double> v;
    for (std::string cell; std::getline(row, cell, ',');) v.push_back(std::stod(cell));
    REQUIRE(v.size() == 8);
    if (v[7] < best) best = v[7], bx = v[0], by = v[1];
  }
  const json nil = read_json(tmp.path("c") / "characterization.json")["zones"][0]["result"]["nil_position_um"];
  const double cell_x = (meta["max_um"][0].get<double>() - meta["min_um"][0].get<double>()) /
                        (meta["resolution"][0].get<double>() - 1);
  const double cell_y = (meta["max_um"][1].get<double>() - meta["min_um"][1].get<double>()) /
                        (meta["resolution"][1].get<double>() - 1);
  CHECK(std::abs(bx - nil["x_um"].get<double>()) <= cell_x);
  CHECK(std::abs(by - nil["y_um"].get<double>()) <= cell_y);
}

TEST_CASE("sense reports the single-ion baseline") {
  Scratch tmp;
  json cfg = five_wire_config();
  cfg["analysis"]["sense"] = {{"n", 1}, {"t2_s", 1}, {"t_tot_s", 1}, {"target_T_per_rtHz", 4e-12},
                              {"solve_for", "t2=t_tot"}, {"bias_field_T", 1e-4}};
  REQUIRE(invoke({"sense", "--config", tmp.write_json("c.json", cfg), "--out", tmp.path("s").string()}).code == 0);
  const json r = read_json(tmp.path("s") / "sensing.json");
  CHECK(r["sensitivity_pT_per_rtHz"].get<double>() == doctest::Approx(26.5).epsilon(0.005));
  CHECK(r["resources"]["spec"]["t2_s"].get<double>() == doctest::Approx(6.62).epsilon(0.005));
  CHECK(r["tuning"]["in_range"] == true);
}

TEST_CASE("every command reproduces its primary outputs byte for byte") {
  Scratch tmp;
  json cfg = json::parse(slurp(configs_dir() + "/multizone.json"));
  cfg["analysis"]["waveform"] = {{"n_steps", 5}, {"zone", 0}};
  cfg["analysis"]["map"]["resolution"] = {21, 21, 1};
  const std::string path = tmp.write_json("c.json", cfg);
  const std::vector<std::pair<std::string, std::vector<std::string>>> commands = {
      {"validate", {"validation.json"}},
      {"characterize", {"characterization.json"}},
      {"map", {"grid.csv", "grid.json"}},
      {"optimize", {"optimize.json"}},
      {"waveform", {"waveform.csv"}},
      {"sense", {"sensing.json", "gradiometer.csv"}}};
  for (const auto& [cmd, files] : commands) {
    const fs::path a = tmp.path(cmd + "_a"), b = tmp.path(cmd + "_b");
    CAPTURE(cmd);
    REQUIRE(invoke({cmd, "--config", path, "--out", a.string(), "--seed", "7"}).code == 0);
    REQUIRE(invoke({cmd, "--config", path, "--out", b.string(), "--seed", "7"}).code == 0);
    for (const auto& f : files) {
      CAPTURE(f);
      REQUIRE(fs::exists(a / f));
      CHECK(slurp(a / f) == slurp(b / f));
    }
    CHECK(fs::exists(a / "meta.json"));
  }
}
