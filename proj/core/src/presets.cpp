#include <stdexcept>

#include "qoct/scenario.hpp"
#include "qoct/units.hpp"

namespace qoct {

namespace {

// Stage position of a mirror buried under the ZnSe slab: one-way group path.
double znse_mirror_position_um(double thickness_mm) {
  const auto& znse = MaterialDatabase::builtin().get("znse");
  return znse.group_index(800.0, Axis::iso) * thickness_mm * 1000.0;
}

double ps_pump_bandwidth_nm() {
  // transform-limited bandwidth of the 10-ps frequency-doubled pulses
  return PumpSpec::transform_limited_bandwidth_nm(10.0, 400.0);
}

Scenario base_ps_scenario() {
  Scenario sc;
  sc.pump.center_wavelength_nm = 400.0;
  sc.pump.bandwidth_fwhm_nm = ps_pump_bandwidth_nm();
  sc.pump.envelope = PumpSpec::Envelope::gaussian;
  sc.crystal_length_mm = 1.5;
  sc.scan.rate_scale_cps = 200.0;
  sc.scan.integration_time_s = 5.0;
  return sc;
}

Scenario base_fs_scenario() {
  Scenario sc;
  sc.pump.center_wavelength_nm = 400.0;
  sc.pump.bandwidth_fwhm_nm = 2.0;  // measured fs-pump spectral width
  sc.pump.envelope = PumpSpec::Envelope::gaussian;
  sc.crystal_length_mm = 0.5;
  sc.scan.rate_scale_cps = 200.0;
  sc.scan.integration_time_s = 10.0;
  return sc;
}

}  // namespace

std::vector<PresetInfo> list_presets() {
  return {
      {"fig4a", "ps pump, 1.5 mm BBO, bare mirror: dispersion-cancelled HOM dip"},
      {"fig4b", "ps pump, mirror buried under 6 mm ZnSe: dip width unchanged"},
      {"fig5a", "fs pump (2 nm), 0.5 mm BBO, bare mirror: narrow dip"},
      {"fig5b", "fs pump, mirror under 6 mm ZnSe: dispersion-broadened dip"},
      {"fig7", "ps pump, mirror, mode overlap 0.85, counting noise"},
      {"fig8", "ps pump, 100 um silica flat: two dips plus midway cross feature, dither set"},
      {"fig9a", "quartz quarter-wave plate over mirror: polarization set R_H/R_V/R_T"},
      {"fig9b", "50/50 beam splitter + quartz plate + mirror: polarization set"},
      {"materials_table", "dispersion tables n(lambda), GVD for the built-in materials"},
  };
}

bool is_preset(const std::string& name) {
  for (const auto& p : list_presets())
    if (p.name == name) return true;
  return false;
}

Scenario preset_scenario(const std::string& name) {
  if (name == "fig4a") {
    Scenario sc = base_ps_scenario();
    sc.name = name;
    sc.sample_preset = "mirror";
    sc.scan.delay_start_um = -90.0;
    sc.scan.delay_end_um = 90.0;
    sc.scan.delay_step_um = 0.5;
    return sc;
  }
  if (name == "fig4b") {
    Scenario sc = base_ps_scenario();
    sc.name = name;
    sc.sample_preset = "buried_mirror_znse";
    sc.scan.integration_time_s = 20.0;
    const double d0 = znse_mirror_position_um(sc.sample_params.znse_thickness_mm);
    sc.scan.delay_start_um = d0 - 90.0;
    sc.scan.delay_end_um = d0 + 90.0;
    sc.scan.delay_step_um = 0.5;
    return sc;
  }
  if (name == "fig5a") {
    Scenario sc = base_fs_scenario();
    sc.name = name;
    sc.sample_preset = "mirror";
    sc.scan.delay_start_um = -30.0;
    sc.scan.delay_end_um = 30.0;
    sc.scan.delay_step_um = 0.25;
    return sc;
  }
  if (name == "fig5b") {
    Scenario sc = base_fs_scenario();
    sc.name = name;
    sc.sample_preset = "buried_mirror_znse";
    const double d0 = znse_mirror_position_um(sc.sample_params.znse_thickness_mm);
    sc.scan.delay_start_um = d0 - 100.0;
    sc.scan.delay_end_um = d0 + 100.0;
    sc.scan.delay_step_um = 0.25;
    return sc;
  }
  if (name == "fig7") {
    Scenario sc = base_ps_scenario();
    sc.name = name;
    sc.sample_preset = "mirror";
    sc.scan.mode_overlap = 0.85;  // calibrated to the reported visibility
    sc.scan.delay_start_um = -90.0;
    sc.scan.delay_end_um = 90.0;
    sc.scan.delay_step_um = 0.5;
    sc.apply_noise = true;
    return sc;
  }
  if (name == "fig8") {
    Scenario sc = base_ps_scenario();
    sc.name = name;
    sc.sample_preset = "silica_flat";
    sc.scan.delay_start_um = -75.0;
    sc.scan.delay_end_um = 220.0;
    sc.scan.delay_step_um = 0.5;
    sc.run_dither = true;
    return sc;
  }
  if (name == "fig9a" || name == "fig9b") {
    Scenario sc;
    sc.name = name;
    sc.pump.envelope = PumpSpec::Envelope::cw;
    sc.pump.bandwidth_fwhm_nm = 0.0;
    sc.crystal_length_mm = 0.5;
    sc.sample_preset = name == "fig9a" ? "quartz_mirror" : "bs_quartz_mirror";
    sc.run_polarization = true;
    const double extra = name == "fig9b" ? sc.sample_params.bs_gap_um : 0.0;
    sc.scan.delay_start_um = -20.0;
    sc.scan.delay_end_um = 80.0 + extra;
    sc.scan.delay_step_um = 0.2;
    return sc;
  }
  if (name == "materials_table") {
    Scenario sc;
    sc.name = name;
    sc.sample_preset = "mirror";  // unused; tables only
    sc.fit_features = false;
    return sc;
  }
  throw ConfigError("unknown preset '" + name + "'");
}

}  // namespace qoct
