#include "cli.hpp"

#include "surftrap/constants.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace surftrap::cli {

namespace fs = std::filesystem;

Section::Section(const json* node, std::string path, std::string source)
    : node_(node), path_(std::move(path)), source_(std::move(source)) {
  if (node_ != nullptr && !node_->is_null() && !node_->is_object()) fail("", "expected an object");
}

void Section::fail(const std::string& key, const std::string& what) const {
  std::string where = path_;
  if (!key.empty()) where += "." + key;
  throw InputError(source_ + ": " + where + ": " + what);
}

bool Section::has(const char* key) const { return present() && node_->contains(key) && !node_->at(key).is_null(); }

Section Section::child(const char* key) const {
  return Section(has(key) ? &node_->at(key) : nullptr, path_ + "." + key, source_);
}

void Section::reject_unknown(std::initializer_list<const char*> known) const {
  if (!present()) return;
  const std::set<std::string> allowed(known.begin(), known.end());
  for (const auto& item : node_->items()) {
    if (!allowed.count(item.key())) fail(item.key(), "unknown key");
  }
}

double Section::number(const char* key, double fallback) const { return optional_number(key).value_or(fallback); }

std::optional<double> Section::optional_number(const char* key) const {
  if (!has(key)) return std::nullopt;
  const json& v = node_->at(key);
  if (!v.is_number()) fail(key, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) fail(key, "expected a finite number");
  return d;
}

int Section::integer(const char* key, int fallback) const {
  if (!has(key)) return fallback;
  const json& v = node_->at(key);
  if (!v.is_number_integer()) fail(key, "expected an integer");
  return v.get<int>();
}

bool Section::boolean(const char* key, bool fallback) const {
  if (!has(key)) return fallback;
  const json& v = node_->at(key);
  if (!v.is_boolean()) fail(key, "expected true or false");
  return v.get<bool>();
}

std::string Section::string(const char* key, const std::string& fallback) const {
  if (!has(key)) return fallback;
  const json& v = node_->at(key);
  if (!v.is_string()) fail(key, "expected a string");
  return v.get<std::string>();
}

std::optional<Vec3> Section::vec3(const char* key) const {
  if (!has(key)) return std::nullopt;
  const json& v = node_->at(key);
  if (!v.is_array() || v.size() != 3) fail(key, "expected [x, y, z]");
  Vec3 out;
  for (int i = 0; i < 3; ++i) {
    if (!v[i].is_number()) fail(key, "expected [x, y, z] of numbers");
    out(i) = v[i].get<double>();
  }
  return out;
}

std::optional<std::array<double, 2>> Section::range(const char* key) const {
  if (!has(key)) return std::nullopt;
  const json& v = node_->at(key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) fail(key, "expected [lo, hi]");
  std::array<double, 2> out{v[0].get<double>(), v[1].get<double>()};
  if (!(out[0] <= out[1])) fail(key, "expected lo <= hi");
  return out;
}

Section ProjectConfig::analysis(const char* command) const {
  const json* node = nullptr;
  if (document.contains("analysis") && document.at("analysis").contains(command)) {
    node = &document.at("analysis").at(command);
  }
  return Section(node, std::string("analysis.") + command, source.string());
}

namespace {

std::string line_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return std::to_string(line) + ":" + std::to_string(col);
}

json parse_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(path.string() + ": cannot open file");
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    // e.byte is one past the offending character.
    const std::size_t at = e.byte > 0 ? e.byte - 1 : 0;
    std::string msg = e.what();
    if (const auto p = msg.find("parse error"); p != std::string::npos) msg = msg.substr(p);
    throw InputError(path.string() + ":" + line_column(text, at) + ": " + msg);
  }
}

ElectrodeLayout layout_section(const Section& s, const fs::path& source) {
  if (!s.present()) s.fail("", "missing layout block");
  const int forms = s.has("generator") + s.has("file") + s.has("patches");
  if (forms != 1) s.fail("", "give exactly one of 'generator', 'file' or inline 'patches'");
  try {
    if (s.has("file")) {
      s.reject_unknown({"file"});
      fs::path file = s.string("file", "");
      if (file.is_relative()) file = source.parent_path() / file;
      if (!fs::exists(file)) s.fail("file", "referenced file '" + file.string() + "' does not exist");
      return io::layout_from_json(parse_file(file), file.string());
    }
    if (s.has("patches")) return io::layout_from_json(*s.node(), source.string() + ": " + s.path());
    s.reject_unknown({"generator", "params"});
    const std::string gen = s.string("generator", "");
    const LayoutParams params = s.has("params") ? io::params_from_json(s.node()->at("params"),
                                                                        source.string() + ": " + s.path() + ".params")
                                                : LayoutParams{};
    if (gen == "five_wire") return build_five_wire(params);
    if (gen == "multizone") return build_multizone(params);
    s.fail("generator", "unknown generator '" + gen + "' (expected five_wire or multizone)");
  } catch (const InputError&) {
    throw;
  } catch (const InvalidParameter& e) {
    throw InputError(e.what());
  }
}

DriveConfig drive_section(const Section& s, const ElectrodeLayout& layout) {
  s.reject_unknown({"v_rf_V", "rf_frequency_Hz", "omega_rf_rad_per_s", "dc_voltages_V"});
  DriveConfig drive = DriveConfig::reference();
  drive.v_rf = s.number("v_rf_V", drive.v_rf);
  if (s.has("rf_frequency_Hz") && s.has("omega_rf_rad_per_s")) {
    s.fail("", "give either rf_frequency_Hz or omega_rf_rad_per_s, not both");
  }
  if (s.has("rf_frequency_Hz")) drive.omega_rf = constants::kTwoPi * s.number("rf_frequency_Hz", 0.0);
  if (s.has("omega_rf_rad_per_s")) drive.omega_rf = s.number("omega_rf_rad_per_s", 0.0);
  if (s.has("dc_voltages_V")) {
    const json& dc = s.node()->at("dc_voltages_V");
    if (!dc.is_object()) s.fail("dc_voltages_V", "expected an object of electrode id -> volts");
    for (const auto& item : dc.items()) {
      if (!item.value().is_number()) s.fail("dc_voltages_V." + item.key(), "expected a number");
      if (layout.find(item.key()) == nullptr) s.fail("dc_voltages_V." + item.key(), "unknown electrode id");
      drive.dc_voltages[item.key()] = item.value().get<double>();
    }
  }
  try {
    drive.check();
  } catch (const InvalidParameter& e) {
    s.fail("", e.what());
  }
  return drive;
}

IonSpecies ion_section(const Section& s) {
  s.reject_unknown({"label", "mass_amu", "charge"});
  IonSpecies ion;
  ion.label = s.string("label", ion.label);
  ion.mass_amu = s.number("mass_amu", ion.mass_amu);
  ion.charge = s.integer("charge", ion.charge);
  try {
    ion.check();
  } catch (const InvalidParameter& e) {
    s.fail("", e.what());
  }
  return ion;
}

}  // namespace

ProjectConfig config_from_json(const json& doc, const fs::path& source) {
  const Section root(&doc, "$", source.string());
  if (!root.present()) root.fail("", "expected a JSON object");
  root.reject_unknown({"layout", "drive", "ion", "analysis", "output_dir"});
  ProjectConfig cfg;
  cfg.source = source;
  cfg.document = doc;
  cfg.layout = layout_section(root.child("layout"), source);
  cfg.drive = drive_section(root.child("drive"), cfg.layout);
  cfg.ion = ion_section(root.child("ion"));
  if (root.has("output_dir")) cfg.output_dir = root.string("output_dir", "");
  const Section analysis = root.child("analysis");
  analysis.reject_unknown({"validate", "characterize", "map", "optimize", "waveform", "sense"});
  return cfg;
}

ProjectConfig load_config(const fs::path& path) { return config_from_json(parse_file(path), path); }

std::vector<int> parse_zone_selector(const std::string& text, std::size_t n_zones) {
  std::vector<int> out;
  if (text.empty() || text == "all") {
    for (std::size_t i = 0; i < n_zones; ++i) out.push_back(static_cast<int>(i));
    return out;
  }
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    int z = -1;
    try {
      z = std::stoi(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size() || z < 0) throw InputError("--zones: '" + item + "' is not a zone index");
    if (static_cast<std::size_t>(z) >= n_zones) {
      throw InputError("--zones: zone " + item + " does not exist (layout has " + std::to_string(n_zones) + ")");
    }
    if (std::find(out.begin(), out.end(), z) == out.end()) out.push_back(z);
  }
  return out;
}

ElectrodeLayout apply_mask(const ElectrodeLayout& layout, const std::string& mask) {
  if (mask.empty()) return layout;
  std::vector<RectPatch> patches = layout.patches();
  for (auto& p : patches) {
    if (p.role == ElectrodeRole::RF && !glob_match(mask, p.id)) p.role = ElectrodeRole::Ground;
  }
  return ElectrodeLayout(std::move(patches), layout.zone_centers(), layout.params());
}

DriveConfig apply_mask(const DriveConfig& drive, const std::string& mask) {
  if (mask.empty()) return drive;
  DriveConfig out = drive;
  out.dc_voltages.clear();
  for (const auto& [id, v] : drive.dc_voltages) {
    if (glob_match(mask, id)) out.dc_voltages[id] = v;
  }
  return out;
}

}  // namespace surftrap::cli
