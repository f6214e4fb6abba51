#include "cli.hpp"

#include "surftrap/constants.hpp"
#include "surftrap/designer.hpp"
#include "surftrap/sensing.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <ctime>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <ostream>
#include <random>
#include <sstream>

namespace surftrap::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "0.1.0";

/// Everything a command needs once flags and document are merged.
struct Context {
  ProjectConfig config;
  CommonFlags flags;
  std::string command;
  fs::path out_dir;
  std::ostream* out = nullptr;

  std::string format(const Section& s, const std::string& fallback) const {
    std::string f = flags.format.empty() ? s.string("format", fallback) : flags.format;
    if (f != "csv" && f != "json") throw InputError("--format: expected csv or json, got '" + f + "'");
    return f;
  }
  std::string mask(const Section& s) const { return flags.mask.empty() ? s.string("mask", "") : flags.mask; }
  std::string zones(const Section& s) const {
    if (!flags.zones.empty()) return flags.zones;
    if (!s.has("zones")) return "";
    const json& z = s.node()->at("zones");
    if (z.is_string()) return z.get<std::string>();
    if (!z.is_array()) s.fail("zones", "expected an array of zone indices or \"all\"");
    std::string joined;
    for (const auto& v : z) {
      if (!v.is_number_integer()) s.fail("zones", "expected integer zone indices");
      if (!joined.empty()) joined += ',';
      joined += std::to_string(v.get<int>());
    }
    return joined;
  }
  std::uint64_t seed(const Section& s) const {
    if (flags.seed) return *flags.seed;
    return static_cast<std::uint64_t>(s.integer("seed", 0));
  }
};

void ensure_out_dir(Context& ctx) {
  std::string dir = ctx.flags.out;
  if (dir.empty() && ctx.config.output_dir) {
    fs::path p = *ctx.config.output_dir;
    if (p.is_relative()) p = ctx.config.source.parent_path() / p;
    dir = p.string();
  }
  if (dir.empty()) throw InputError("no output directory: pass --out or set output_dir in the config");
  ctx.out_dir = dir;
  std::error_code ec;
  fs::create_directories(ctx.out_dir, ec);
  if (ec) throw InputError("--out: cannot create '" + dir + "': " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write '" + path.string() + "'");
  f << text;
}

void write_json(const fs::path& path, const json& doc) { write_text(path, doc.dump(2) + "\n"); }

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

void write_meta(const Context& ctx, const std::vector<std::string>& outputs) {
  json meta = {{"command", ctx.command},
               {"tool", "surftrap"},
               {"version", kVersion},
               {"created_utc", utc_now()},
               {"config", fs::absolute(ctx.config.source).string()},
               {"outputs", outputs}};
  if (ctx.flags.seed) meta["seed"] = *ctx.flags.seed;
  write_json(ctx.out_dir / "meta.json", meta);
}

double default_guess_height(const ProjectConfig& cfg) {
  if (const auto& p = cfg.layout.params()) return ion_height_formula(p->a, p->b, p->c);
  return 100.0;
}

EscapeOptions escape_section(const Section& s) {
  s.reject_unknown({"method", "reach", "cells_per_height", "n_rays", "n_radial", "floor_fraction", "refine"});
  EscapeOptions e;
  const std::string method = s.string("method", "flood");
  if (method == "flood") {
    e.method = EscapeMethod::Flood;
  } else if (method == "rays") {
    e.method = EscapeMethod::RayScan;
  } else {
    s.fail("method", "expected flood or rays");
  }
  e.reach = s.number("reach", e.reach);
  e.cells_per_height = s.integer("cells_per_height", e.cells_per_height);
  e.n_rays = s.integer("n_rays", e.n_rays);
  e.n_radial = s.integer("n_radial", e.n_radial);
  e.floor_fraction = s.number("floor_fraction", e.floor_fraction);
  e.refine = s.boolean("refine", e.refine);
  return e;
}

VoltageBounds bounds_from(const Section& s, const char* key) {
  VoltageBounds b;
  if (const auto r = s.range(key)) b = {(*r)[0], (*r)[1]};
  return b;
}

// ---------------------------------------------------------------- validate

int cmd_validate(Context& ctx) {
  const Section s = ctx.config.analysis("validate");
  s.reject_unknown({"min_gap_um"});
  ValidationReport report = validate(ctx.config.layout);
  report.merge(check_voltage_limits(ctx.config.drive, s.number("min_gap_um", 10.0)));

  std::ostream& out = *ctx.out;
  out << (report.ok() ? "OK" : "FAIL") << ": " << report.defects.size() << " defect(s)\n";
  for (const auto& d : report.defects) out << "  defect: " << d.message << '\n';
  for (const auto& n : report.notes) out << "  note: " << n << '\n';
  if (!ctx.flags.out.empty() || ctx.config.output_dir) {
    ensure_out_dir(ctx);
    write_json(ctx.out_dir / "validation.json", io::to_json(report));
    write_meta(ctx, {"validation.json"});
  }
  return report.ok() ? kSuccess : kAnalysisFailure;
}

// ------------------------------------------------------------ characterize

int cmd_characterize(Context& ctx) {
  const Section s = ctx.config.analysis("characterize");
  s.reject_unknown({"zones", "mask", "guess_height_um", "nil_tol_per_m", "escape", "dc_well", "format"});
  const std::string mask = ctx.mask(s);
  const ElectrodeLayout layout = apply_mask(ctx.config.layout, mask);
  const DriveConfig base_drive = apply_mask(ctx.config.drive, mask);
  const std::vector<int> zones = parse_zone_selector(ctx.zones(s), layout.zone_centers().size());
  if (zones.empty()) throw InputError("layout has no zone centers to characterize");
  const double guess_h = s.number("guess_height_um", default_guess_height(ctx.config));
  CharacterizeOptions opts;
  opts.nil.tol_grad = s.number("nil_tol_per_m", opts.nil.tol_grad);
  opts.escape = escape_section(s.child("escape"));

  const Section well = s.child("dc_well");
  well.reject_unknown({"axial_freq_Hz", "voltage_bounds_V"});
  ensure_out_dir(ctx);

  json report = {{"drive", io::to_json(base_drive)}, {"ion", io::to_json(ctx.config.ion)}, {"mask", mask}};
  json results = json::array();
  std::vector<std::string> failures;
  std::optional<std::pair<std::string, std::string>> first_error;
  for (int z : zones) {
    const ZoneCenter& zc = layout.zone_centers()[z];
    json entry = {{"zone", z}, {"zone_center_um", {{"x", zc.x}, {"z", zc.z}}}};
    try {
      DriveConfig drive = base_drive;
      if (well.present()) {
        const NilResult nil = find_rf_nil(layout, drive, Vec3(zc.x, guess_h, zc.z), opts.nil);
        const DcSolution sol = solve_dc_voltages(layout, {nil.position_um, well.number("axial_freq_Hz", 2e5), ctx.config.ion},
                                                 bounds_from(well, "voltage_bounds_V"));
        for (const auto& [id, v] : sol.voltages) drive.dc_voltages[id] += v;
        json dc = json::object();
        for (const auto& [id, v] : sol.voltages) dc[id] = v;
        entry["solved_dc_voltages_V"] = std::move(dc);
      }
      const TrapCharacterization c = characterize(layout, drive, ctx.config.ion, Vec3(zc.x, guess_h, zc.z), opts);
      entry["result"] = io::to_json(c);
      *ctx.out << "zone " << z << ": height " << io::format_number(c.ion_height_um) << " um, depth "
               << io::format_number(c.trap_depth_eV) << " eV, secular " << io::format_number(c.secular_freqs_hz[0])
               << " / " << io::format_number(c.secular_freqs_hz[1]) << " / "
               << io::format_number(c.secular_freqs_hz[2]) << " Hz, rotation " << io::format_number(c.rotation_deg)
               << " deg\n";
    } catch (const Error& e) {
      entry["error"] = {{"kind", e.kind()}, {"message", e.what()}};
      failures.push_back("zone " + std::to_string(z));
      if (!first_error) first_error.emplace(e.kind(), "zone " + std::to_string(z) + ": " + e.what());
    }
    results.push_back(std::move(entry));
  }
  report["zones"] = std::move(results);
  write_json(ctx.out_dir / "characterization.json", report);
  write_meta(ctx, {"characterization.json"});
  if (first_error) {
    throw Infeasible("characterization failed for " + std::to_string(failures.size()) + " zone(s); first: " +
                         first_error->second,
                     failures);
  }
  return kSuccess;
}

// --------------------------------------------------------------------- map

int cmd_map(Context& ctx) {
  const Section s = ctx.config.analysis("map");
  s.reject_unknown({"zone", "mask", "min_um", "max_um", "resolution", "field", "pseudo", "format"});
  const std::string mask = ctx.mask(s);
  const ElectrodeLayout layout = apply_mask(ctx.config.layout, mask);
  const DriveConfig drive = apply_mask(ctx.config.drive, mask);

  GridRegion region;
  if (s.has("min_um") || s.has("max_um")) {
    if (!s.has("min_um") || !s.has("max_um")) s.fail("", "min_um and max_um go together");
    region.min_um = *s.vec3("min_um");
    region.max_um = *s.vec3("max_um");
    region.resolution = {101, 101, 1};
  } else {
    // Transverse slice through the zone: x-y plane at the zone's axial center.
    const int zone = s.integer("zone", 0);
    if (zone < 0 || static_cast<std::size_t>(zone) >= layout.zone_centers().size()) s.fail("zone", "no such zone");
    const ZoneCenter& zc = layout.zone_centers()[zone];
    const double h = default_guess_height(ctx.config);
    region.min_um = Vec3(zc.x - 1.5 * h, 0.25 * h, zc.z);
    region.max_um = Vec3(zc.x + 1.5 * h, 2.5 * h, zc.z);
    region.resolution = {101, 101, 1};
  }
  if (s.has("resolution")) {
    const json& r = s.node()->at("resolution");
    if (!r.is_array() || r.size() != 3) s.fail("resolution", "expected [nx, ny, nz]");
    for (int k = 0; k < 3; ++k) {
      if (!r[k].is_number_integer()) s.fail("resolution", "expected integers");
      region.resolution[k] = r[k].get<int>();
    }
  }

  const std::string field = s.string("field", "rf");
  VoltageMap volts;
  if (field == "rf" || field == "all") {
    for (const auto* p : layout.with_role(ElectrodeRole::RF)) volts[p->id] = drive.v_rf;
  }
  if (field == "dc" || field == "all") {
    for (const auto& [id, v] : drive.dc_voltages) volts[id] += v;
  }
  if (field != "rf" && field != "dc" && field != "all") s.fail("field", "expected rf, dc or all");
  std::optional<PseudoRequest> pseudo;
  if (s.boolean("pseudo", true)) pseudo = PseudoRequest{drive, ctx.config.ion};

  const std::string fmt = ctx.format(s, "csv");
  const FieldGrid grid = grid_map(layout, volts, region, pseudo);
  ensure_out_dir(ctx);
  json meta = io::grid_metadata(grid);
  meta["field"] = field;
  meta["mask"] = mask;
  std::vector<std::string> outputs;
  if (fmt == "csv") {
    std::ostringstream csv;
    io::write_grid_csv(csv, grid);
    write_text(ctx.out_dir / "grid.csv", csv.str());
    write_json(ctx.out_dir / "grid.json", meta);
    outputs = {"grid.csv", "grid.json"};
  } else {
    json samples = json::array();
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const Vec3 p = grid.point_um(i);
      const FieldSample& f = grid.samples[i];
      json row = {p.x(), p.y(), p.z(), f.phi, -f.grad.x(), -f.grad.y(), -f.grad.z()};
      if (!grid.pseudo_eV.empty()) row.push_back(grid.pseudo_eV[i]);
      samples.push_back(std::move(row));
    }
    meta["samples"] = std::move(samples);
    write_json(ctx.out_dir / "grid.json", meta);
    outputs = {"grid.json"};
  }
  write_meta(ctx, outputs);
  *ctx.out << "wrote " << grid.size() << " samples to " << (ctx.out_dir / outputs.front()).string() << '\n';
  return kSuccess;
}

// ---------------------------------------------------------------- optimize

int cmd_optimize(Context& ctx) {
  const Section s = ctx.config.analysis("optimize");
  s.reject_unknown({"target_h_um", "a_bounds_um", "b_bounds_um", "c_bounds_um", "equal_rails", "seed",
                    "dominance_samples", "format"});
  OptimizeRequest req;
  req.target_h_um = s.number("target_h_um", req.target_h_um);
  if (const auto r = s.range("a_bounds_um")) req.a = {(*r)[0], (*r)[1]};
  if (const auto r = s.range("b_bounds_um")) req.b = {(*r)[0], (*r)[1]};
  if (const auto r = s.range("c_bounds_um")) req.c = {(*r)[0], (*r)[1]};
  req.equal_rails = s.boolean("equal_rails", true);
  req.drive = ctx.config.drive;
  req.drive.dc_voltages.clear();
  req.ion = ctx.config.ion;
  req.seed = ctx.seed(s);
  const int samples = s.integer("dominance_samples", 0);
  if (samples < 0) s.fail("dominance_samples", "expected >= 0");
  const std::string fmt = ctx.format(s, "json");

  const OptimizeResult result = optimize_geometry(req);
  json doc = {{"request",
               {{"target_h_um", req.target_h_um},
                {"a_bounds_um", {req.a.lo, req.a.hi}},
                {"b_bounds_um", {req.b.lo, req.b.hi}},
                {"c_bounds_um", {req.c.lo, req.c.hi}},
                {"equal_rails", req.equal_rails},
                {"seed", req.seed}}},
              {"drive", io::to_json(req.drive)},
              {"ion", io::to_json(req.ion)},
              {"result", io::to_json(result)}};
  if (samples > 0) {
    std::mt19937_64 rng(req.seed);
    double best_sample = 0.0;
    int dominated = 0;
    for (int i = 0; i < samples; ++i) {
      const auto g = sample_feasible_geometry(req, rng);
      if (!g) continue;
      const double d = depth_formula((*g)[0], (*g)[1], (*g)[2], req.drive.v_rf, req.drive.omega_rf, req.ion).depth_eV;
      best_sample = std::max(best_sample, d);
      if (d <= result.depth_eV) ++dominated;
    }
    doc["dominance"] = {{"samples", samples}, {"dominated", dominated}, {"best_sample_depth_eV", best_sample}};
  }
  ensure_out_dir(ctx);
  std::string name;
  if (fmt == "json") {
    name = "optimize.json";
    write_json(ctx.out_dir / name, doc);
  } else {
    name = "optimize.csv";
    std::ostringstream csv;
    csv << "a_um,b_um,c_um,h_um,kappa,depth_eV\n"
        << io::format_number(result.a) << ',' << io::format_number(result.b) << ',' << io::format_number(result.c)
        << ',' << io::format_number(result.h_um) << ',' << io::format_number(result.kappa) << ','
        << io::format_number(result.depth_eV) << '\n';
    write_text(ctx.out_dir / name, csv.str());
  }
  write_meta(ctx, {name});
  *ctx.out << "a = " << io::format_number(result.a) << " um, b = " << io::format_number(result.b)
           << " um, c = " << io::format_number(result.c) << " um, depth " << io::format_number(result.depth_eV)
           << " eV\n";
  return kSuccess;
}

// ---------------------------------------------------------------- waveform

int cmd_waveform(Context& ctx) {
  const Section s = ctx.config.analysis("waveform");
  s.reject_unknown({"zone", "start_um", "end_um", "n_steps", "axial_freq_Hz", "voltage_bounds_V", "depth_floor_eV",
                    "min_gap_um", "duration_s", "escape", "format"});
  const ElectrodeLayout& layout = ctx.config.layout;
  const int zone = s.integer("zone", 0);
  if (zone < 0 || static_cast<std::size_t>(zone) >= layout.zone_centers().size()) s.fail("zone", "no such zone");
  const ZoneCenter& zc = layout.zone_centers()[zone];
  const double h = default_guess_height(ctx.config);
  const Vec3 center(zc.x, h, zc.z);
  const Vec3 start = s.vec3("start_um").value_or(center - Vec3(0.0, 0.0, 150.0));
  const Vec3 end = s.vec3("end_um").value_or(center + Vec3(0.0, 0.0, 150.0));
  const int n_steps = s.integer("n_steps", 21);

  WellSpec well;
  well.center_um = start;
  well.axial_freq_hz = s.number("axial_freq_Hz", 2e5);
  well.ion = ctx.config.ion;
  TransportOptions opts;
  opts.depth_floor_eV = s.number("depth_floor_eV", opts.depth_floor_eV);
  opts.min_gap_um = s.number("min_gap_um", opts.min_gap_um);
  opts.duration_s = s.optional_number("duration_s");
  if (s.has("escape")) opts.escape = escape_section(s.child("escape"));
  const std::string fmt = ctx.format(s, "csv");

  const Waveform w = transport_waveform(layout, ctx.config.drive, start, end, n_steps, well,
                                        bounds_from(s, "voltage_bounds_V"), opts);
  ensure_out_dir(ctx);
  std::string name;
  if (fmt == "csv") {
    name = "waveform.csv";
    std::ostringstream csv;
    io::write_waveform_csv(csv, w);
    write_text(ctx.out_dir / name, csv.str());
  } else {
    name = "waveform.json";
    write_json(ctx.out_dir / name, io::to_json(w));
  }
  write_meta(ctx, {name});
  *ctx.out << "wrote " << w.steps.size() << " steps over " << w.electrode_ids.size() << " electrodes to "
           << (ctx.out_dir / name).string() << '\n';
  return kSuccess;
}

// ------------------------------------------------------------------- sense

int cmd_sense(Context& ctx) {
  const Section s = ctx.config.analysis("sense");
  s.reject_unknown({"n", "t2_s", "t_tot_s", "entangled", "target_T_per_rtHz", "solve_for", "n_max", "bias_field_T",
                    "band", "gradiometer", "format"});
  SensitivitySpec spec;
  spec.n = s.integer("n", spec.n);
  spec.t2_s = s.number("t2_s", spec.t2_s);
  spec.t_tot_s = s.number("t_tot_s", spec.t_tot_s);
  spec.entangled = s.boolean("entangled", spec.entangled);
  try {
    spec.check();
  } catch (const InvalidParameter& e) {
    s.fail("", e.what());
  }
  const double sens = sensitivity(spec);
  json doc = {{"inputs", io::to_json(spec)},
              {"sensitivity_T_per_rtHz", sens},
              {"sensitivity_pT_per_rtHz", sens * 1e12}};

  if (const auto target = s.optional_number("target_T_per_rtHz")) {
    ResourceRequest rr;
    rr.target_T = *target;
    rr.fixed = spec;
    rr.solve_for = resource_from_string(s.string("solve_for", "n"));
    rr.n_max = s.integer("n_max", rr.n_max);
    const ResourceResult res = required_resources(rr);
    doc["resources"] = {{"target_T_per_rtHz", rr.target_T},
                        {"solve_for", std::string(to_string(rr.solve_for))},
                        {"spec", io::to_json(res.spec)},
                        {"achieved_T_per_rtHz", res.achieved_T}};
  }
  if (const auto b = s.optional_number("bias_field_T")) {
    doc["tuning"] = io::to_json(tune(*b, band_from_string(s.string("band", "rf"))));
  }

  std::vector<GradientPair> pairs;
  const Section g = s.child("gradiometer");
  g.reject_unknown({"zone_positions_um", "sensitivities_T_per_rtHz", "pairing"});
  ZoneArray array;
  if (g.has("zone_positions_um")) {
    const json& arr = g.node()->at("zone_positions_um");
    if (!arr.is_array()) g.fail("zone_positions_um", "expected an array of [x, y, z]");
    for (const auto& p : arr) {
      if (!p.is_array() || p.size() != 3) g.fail("zone_positions_um", "expected an array of [x, y, z]");
      array.positions_um.emplace_back(p[0].get<double>(), p[1].get<double>(), p[2].get<double>());
    }
  } else {
    const double h = default_guess_height(ctx.config);
    for (const auto& zc : ctx.config.layout.zone_centers()) array.positions_um.emplace_back(zc.x, h, zc.z);
  }
  if (g.has("sensitivities_T_per_rtHz")) {
    const json& arr = g.node()->at("sensitivities_T_per_rtHz");
    if (!arr.is_array()) g.fail("sensitivities_T_per_rtHz", "expected an array of numbers");
    for (const auto& v : arr) {
      if (!v.is_number()) g.fail("sensitivities_T_per_rtHz", "expected an array of numbers");
      array.sensitivity_T.push_back(v.get<double>());
    }
  } else {
    array.sensitivity_T.assign(array.positions_um.size(), sens);
  }
  const bool gradiometry = array.positions_um.size() >= 2;
  if (gradiometry) {
    pairs = gradiometer_resolution(array, pairing_from_string(g.string("pairing", "adjacent")));
    doc["gradiometer"] = io::to_json(pairs);
  } else if (g.present()) {
    g.fail("", "gradiometry needs at least 2 zones");
  }

  ensure_out_dir(ctx);
  write_json(ctx.out_dir / "sensing.json", doc);
  std::vector<std::string> outputs{"sensing.json"};
  if (gradiometry) {
    std::ostringstream csv;
    io::write_gradiometer_csv(csv, pairs);
    write_text(ctx.out_dir / "gradiometer.csv", csv.str());
    outputs.push_back("gradiometer.csv");
  }
  write_meta(ctx, outputs);
  *ctx.out << "sensitivity " << io::format_number(sens * 1e12) << " pT/sqrt(Hz)\n";
  return kSuccess;
}

int exit_code_for(const Error& e) {
  if (dynamic_cast<const InputError*>(&e) != nullptr) return kInputError;
  if (dynamic_cast<const InvalidParameter*>(&e) != nullptr) return kInputError;
  return kAnalysisFailure;
}

void report_error(std::ostream& err, const Context* ctx, const std::string& kind, const std::string& message,
                  const std::vector<std::string>& items, int code) {
  json block = {{"error", {{"kind", kind}, {"message", message}, {"exit_code", code}}}};
  if (!items.empty()) block["error"]["items"] = items;
  err << "error: " << message << '\n' << block.dump() << '\n';
  if (ctx != nullptr && !ctx->out_dir.empty()) {
    try {
      write_json(ctx->out_dir / "error.json", block);
    } catch (const std::exception&) {
      // The stderr block is authoritative.
    }
  }
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Surface-electrode ion trap modelling and design", "surftrap"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  CommonFlags flags;
  std::uint64_t seed_value = 0;
  using Handler = std::function<int(Context&)>;
  std::map<CLI::App*, std::pair<std::string, Handler>> handlers;

  auto add = [&](const char* name, const char* help, Handler h) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", flags.config, "Project configuration (JSON)")->required();
    sub->add_option("--out", flags.out, "Output directory");
    sub->add_option("--zones", flags.zones, "Zone indices, e.g. 0,2 (default: all)");
    sub->add_option("--mask", flags.mask, "Electrode-id glob of energised electrodes (comma = alternatives)");
    sub->add_option("--format", flags.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--seed", seed_value, "Random seed");
    handlers[sub] = {name, std::move(h)};
  };
  add("validate", "Check layout overlaps and voltage limits", cmd_validate);
  add("characterize", "Nil, height, depth, secular frequencies and axes per zone", cmd_characterize);
  add("map", "Export a field / pseudopotential grid", cmd_map);
  add("optimize", "Maximise depth at a fixed ion height", cmd_optimize);
  add("waveform", "Generate a DC transport waveform", cmd_waveform);
  add("sense", "Magnetometer sensitivity, tuning and gradiometry", cmd_sense);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kSuccess;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << '\n';
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    report_error(err, nullptr, "usage_error", e.what(), {}, kInputError);
    return kInputError;
  }

  Context ctx;
  ctx.out = &out;
  ctx.flags = flags;
  for (const auto& [sub, entry] : handlers) {
    if (!sub->parsed()) continue;
    ctx.command = entry.first;
    if (sub->count("--seed") > 0) ctx.flags.seed = seed_value;
    try {
      ctx.config = load_config(ctx.flags.config);
      return entry.second(ctx);
    } catch (const Infeasible& e) {
      const int code = exit_code_for(e);
      report_error(err, &ctx, e.kind(), e.what(), e.items(), code);
      return code;
    } catch (const Error& e) {
      const int code = exit_code_for(e);
      report_error(err, &ctx, e.kind(), e.what(), {}, code);
      return code;
    } catch (const std::exception& e) {
      report_error(err, &ctx, "internal_error", e.what(), {}, kAnalysisFailure);
      return kAnalysisFailure;
    }
  }
  report_error(err, nullptr, "usage_error", "no subcommand given", {}, kInputError);
  return kInputError;
}

}  // namespace surftrap::cli
