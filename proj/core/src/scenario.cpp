#include "qoct/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "qoct/units.hpp"

namespace qoct {

void Scenario::validate() const {
  if (pump.envelope == PumpSpec::Envelope::gaussian && !(pump.bandwidth_fwhm_nm > 0))
    throw ConfigError("gaussian pump needs bandwidth_fwhm_nm > 0");
  if (!(pump.center_wavelength_nm > 0)) throw ConfigError("bad pump center wavelength");
  if (!(crystal_length_mm > 0)) throw ConfigError("crystal length must be positive");
  if (grid_size < 32 || grid_size > 8192) throw ConfigError("grid_size out of range [32, 8192]");
  if (!MaterialDatabase::builtin().contains(crystal_material))
    throw ConfigError("unknown crystal material '" + crystal_material + "'");
  if (sample_file.empty()) {
    const auto names = sample_preset_names();
    if (std::find(names.begin(), names.end(), sample_preset) == names.end())
      throw ConfigError("unknown sample preset '" + sample_preset + "'");
  } else {
    std::ifstream f(sample_file);
    if (!f) throw ConfigError("cannot open sample file '" + sample_file + "'");
  }
  try {
    scan.validate();
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  if (output_dir.empty()) throw ConfigError("output directory not set");
}

SampleStack Scenario::build_sample() const {
  if (!sample_file.empty()) return load_sample_file(sample_file);
  return preset_sample(sample_preset, sample_params);
}

CrystalSpec Scenario::build_crystal() const {
  return CrystalSpec::type_ii(MaterialDatabase::builtin().get(crystal_material),
                              crystal_length_mm, degenerate_wavelength_nm,
                              exact_phase_matching);
}

// ---------------------------------------------------------------------------
// scenario file parsing

namespace {

struct IniData {
  // section -> key -> value
  std::map<std::string, std::map<std::string, std::string>> sections;
};

IniData parse_ini(std::istream& in) {
  IniData ini;
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line.erase(hash);
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      if (b == std::string::npos) return std::string();
      const auto e = s.find_last_not_of(" \t\r");
      return s.substr(b, e - b + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("scenario line " + std::to_string(lineno) + ": bad section header");
      section = trim(line.substr(1, line.size() - 2));
      ini.sections[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("scenario line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (section.empty())
      throw ConfigError("scenario line " + std::to_string(lineno) + ": key outside a section");
    ini.sections[section][key] = val;
  }
  return ini;
}

double to_double(const std::string& section, const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("[" + section + "] " + key + ": not a number: '" + v + "'");
  }
}

bool to_bool(const std::string& section, const std::string& key, const std::string& v) {
  if (v == "true" || v == "on" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "off" || v == "0" || v == "no") return false;
  throw ConfigError("[" + section + "] " + key + ": not a boolean: '" + v + "'");
}

}  // namespace

Scenario parse_scenario(std::istream& in) {
  const IniData ini = parse_ini(in);
  Scenario sc;
  for (const auto& [section, kv] : ini.sections) {
    for (const auto& [key, val] : kv) {
      auto num = [&] { return to_double(section, key, val); };
      auto flag = [&] { return to_bool(section, key, val); };
      if (section == "pump") {
        if (key == "center_wavelength_nm") sc.pump.center_wavelength_nm = num();
        else if (key == "bandwidth_fwhm_nm") sc.pump.bandwidth_fwhm_nm = num();
        else if (key == "pulse_duration_ps")
          sc.pump.bandwidth_fwhm_nm = PumpSpec::transform_limited_bandwidth_nm(num());
        else if (key == "detuning_nm") sc.pump.detuning_nm = num();
        else if (key == "envelope") {
          if (val == "gaussian") sc.pump.envelope = PumpSpec::Envelope::gaussian;
          else if (val == "cw") sc.pump.envelope = PumpSpec::Envelope::cw;
          else throw ConfigError("[pump] envelope must be gaussian or cw");
        } else throw ConfigError("[pump] unknown key '" + key + "'");
      } else if (section == "crystal") {
        if (key == "material") sc.crystal_material = val;
        else if (key == "length_mm") sc.crystal_length_mm = num();
        else if (key == "degenerate_wavelength_nm") sc.degenerate_wavelength_nm = num();
        else if (key == "exact_phase_matching") sc.exact_phase_matching = flag();
        else if (key == "grid_size") sc.grid_size = static_cast<int>(num());
        else throw ConfigError("[crystal] unknown key '" + key + "'");
      } else if (section == "sample") {
        if (key == "preset") sc.sample_preset = val;
        else if (key == "file") { sc.sample_file = val; sc.sample_preset.clear(); }
        else if (key == "losses") sc.sample_params.include_transmission_losses = flag();
        else if (key == "flat_thickness_um") sc.sample_params.flat_thickness_um = num();
        else if (key == "flat_index") sc.sample_params.flat_index = num();
        else if (key == "quartz_thickness_um") sc.sample_params.quartz_thickness_um = num();
        else if (key == "quartz_axis_deg") sc.sample_params.quartz_axis_deg = num();
        else if (key == "bs_gap_um") sc.sample_params.bs_gap_um = num();
        else if (key == "znse_thickness_mm") sc.sample_params.znse_thickness_mm = num();
        else throw ConfigError("[sample] unknown key '" + key + "'");
      } else if (section == "scan") {
        if (key == "delay_start_um") sc.scan.delay_start_um = num();
        else if (key == "delay_end_um") sc.scan.delay_end_um = num();
        else if (key == "delay_step_um") sc.scan.delay_step_um = num();
        else if (key == "mode_overlap") sc.scan.mode_overlap = num();
        else if (key == "reference_polarization") {
          if (val == "H") sc.scan.reference_polarization = Polarization::H;
          else if (val == "V") sc.scan.reference_polarization = Polarization::V;
          else throw ConfigError("[scan] reference_polarization must be H or V");
        } else if (key == "integration_time_s") sc.scan.integration_time_s = num();
        else if (key == "rate_scale_cps") sc.scan.rate_scale_cps = num();
        else if (key == "rng_seed") sc.scan.rng_seed = static_cast<std::uint64_t>(num());
        else throw ConfigError("[scan] unknown key '" + key + "'");
      } else if (section == "analysis") {
        if (key == "fit") sc.fit_features = flag();
        else if (key == "noise") sc.apply_noise = flag();
        else if (key == "dither") sc.run_dither = flag();
        else if (key == "polarization") sc.run_polarization = flag();
        else if (key == "oct") sc.run_oct = flag();
        else if (key == "dither_span_nm") sc.dither_initial_span_nm = num();
        else throw ConfigError("[analysis] unknown key '" + key + "'");
      } else if (section == "output") {
        if (key == "directory") sc.output_dir = val;
        else throw ConfigError("[output] unknown key '" + key + "'");
      } else {
        throw ConfigError("unknown section [" + section + "]");
      }
    }
  }
  sc.validate();
  return sc;
}

Scenario load_scenario_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open scenario file '" + path + "'");
  return parse_scenario(f);
}

}  // namespace qoct
