#pragma once
#include <iosfwd>
#include <string>
#include <vector>

#include "qoct/biphoton.hpp"
#include "qoct/interferometer.hpp"
#include "qoct/sample.hpp"

namespace qoct {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Fully resolved run description: every field validated before any
/// computation or output happens.
struct Scenario {
  std::string name = "custom";

  PumpSpec pump;
  std::string crystal_material = "bbo";
  double crystal_length_mm = 1.5;
  double degenerate_wavelength_nm = 800.0;
  bool exact_phase_matching = false;
  int grid_size = 512;

  std::string sample_preset = "mirror";  // empty when sample_file is used
  std::string sample_file;
  SamplePresetParams sample_params;

  ScanConfig scan;

  bool fit_features = true;
  bool apply_noise = false;
  bool run_dither = false;
  bool run_polarization = false;
  bool run_oct = false;
  double dither_initial_span_nm = 0.0;  // 0: derive from the feature separation

  std::string output_dir = "qoct_out";

  void validate() const;
  SampleStack build_sample() const;
  CrystalSpec build_crystal() const;
};

/// Parse the structured-text scenario format ([pump]/[crystal]/[sample]/
/// [scan]/[analysis]/[output] sections, unit-suffixed keys). Unknown keys
/// are errors.
Scenario parse_scenario(std::istream& in);
Scenario load_scenario_file(const std::string& path);

struct PresetInfo {
  std::string name;
  std::string description;
};

/// Stable preset catalog: fig4a..fig9b and materials_table.
std::vector<PresetInfo> list_presets();
bool is_preset(const std::string& name);
Scenario preset_scenario(const std::string& name);

struct RunResult {
  int exit_code = 0;                  // 0 ok, 2 invalid config, 3 numerical failure
  std::vector<std::string> flags;     // non-fatal notes ("clamped", "visibility>1", ...)
  std::vector<std::string> outputs;   // files written
  std::string summary_json;
};

/// Execute a scenario: forward scan(s), optional noise/analysis/dither/
/// polarization/OCT, CSV + report + machine-readable summary in output_dir.
/// Deterministic for a given seed.
RunResult run_scenario(const Scenario& sc);

}  // namespace qoct
