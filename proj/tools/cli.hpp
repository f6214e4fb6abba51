#pragma once

// Batch command-line front end. Everything the executable does lives here so
// tests can drive it in-process.

#include "surftrap/geometry.hpp"
#include "surftrap/io.hpp"

#include <filesystem>
#include <initializer_list>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace surftrap::cli {

using io::json;

/// Malformed or inconsistent input; maps to exit code 2.
class InputError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "input_error"; }
};

enum ExitCode : int { kSuccess = 0, kAnalysisFailure = 1, kInputError = 2 };

/// Read-only view of one JSON object in the config with path-aware errors.
class Section {
 public:
  Section(const json* node, std::string path, std::string source);

  bool present() const { return node_ != nullptr && !node_->is_null(); }
  bool has(const char* key) const;
  const std::string& path() const { return path_; }
  const json* node() const { return node_; }
  Section child(const char* key) const;
  void reject_unknown(std::initializer_list<const char*> known) const;

  double number(const char* key, double fallback) const;
  std::optional<double> optional_number(const char* key) const;
  int integer(const char* key, int fallback) const;
  bool boolean(const char* key, bool fallback) const;
  std::string string(const char* key, const std::string& fallback) const;
  std::optional<Vec3> vec3(const char* key) const;
  std::optional<std::array<double, 2>> range(const char* key) const;

  [[noreturn]] void fail(const std::string& key, const std::string& what) const;

 private:
  const json* node_;
  std::string path_;
  std::string source_;
};

struct ProjectConfig {
  std::filesystem::path source;
  json document;
  ElectrodeLayout layout;
  DriveConfig drive;
  IonSpecies ion;
  std::optional<std::string> output_dir;

  Section analysis(const char* command) const;
};

/// Parses and validates units of the layout, drive and ion blocks. Throws
/// InputError with `file:line:column` for syntax errors and a JSON path for
/// schema errors.
ProjectConfig load_config(const std::filesystem::path& path);
ProjectConfig config_from_json(const json& doc, const std::filesystem::path& source);

/// Flags common to every subcommand. Set flags take precedence over the
/// document, which takes precedence over built-in defaults.
struct CommonFlags {
  std::string config;
  std::string out;
  std::string zones;
  std::string mask;
  std::string format;
  std::optional<std::uint64_t> seed;
};

/// Zone indices from "0,2" or "all"; empty selects every zone.
std::vector<int> parse_zone_selector(const std::string& text, std::size_t n_zones);

/// Copy of `layout` in which RF patches not matching `mask` are grounded.
ElectrodeLayout apply_mask(const ElectrodeLayout& layout, const std::string& mask);
/// Drops static voltages on electrodes not matching `mask`.
DriveConfig apply_mask(const DriveConfig& drive, const std::string& mask);

/// Entry point; returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace surftrap::cli
