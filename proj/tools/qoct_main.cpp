// qoct command-line tool: scenario runner and figure-reproduction harness.
//   qoct run <preset|scenario-file> [--out DIR] [--seed N]
//   qoct list-presets
//   qoct materials [--material NAME] [--axis AXIS] [--from NM] [--to NM] [--points N]
//   qoct analyze <interferogram.csv> [--out DIR] [--gvd-length-mm L]

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "qoct/analysis.hpp"
#include "qoct/csv.hpp"
#include "qoct/scenario.hpp"

namespace {

using namespace qoct;
using nlohmann::json;

int cmd_run(const std::string& target, const std::string& out_dir, long long seed) {
  Scenario sc;
  if (is_preset(target)) {
    sc = preset_scenario(target);
  } else if (std::filesystem::exists(target)) {
    sc = load_scenario_file(target);
  } else {
    throw ConfigError("'" + target + "' is neither a preset nor a scenario file");
  }
  if (!out_dir.empty()) sc.output_dir = out_dir;
  else if (sc.output_dir == "qoct_out") sc.output_dir = "qoct_out/" + sc.name;
  if (seed >= 0) sc.scan.rng_seed = static_cast<std::uint64_t>(seed);

  const RunResult res = run_scenario(sc);
  std::cout << res.summary_json;
  for (const auto& f : res.flags) std::cerr << "flag: " << f << "\n";
  return res.exit_code;
}

int cmd_materials(const std::string& material, const std::string& axis, double lo, double hi,
                  int points, const std::string& out_file) {
  const auto& db = MaterialDatabase::builtin();
  std::ostream* os = &std::cout;
  std::ofstream f;
  if (!out_file.empty()) {
    f.open(out_file, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + out_file);
    os = &f;
  }
  auto dump = [&](const Material& m, Axis ax) {
    const double a = std::max(lo, m.validity_min_nm());
    const double b = std::min(hi, m.validity_max_nm());
    write_dispersion_table(*os, m, ax, a, b, points);
  };
  if (!material.empty()) {
    const Material& m = db.get(material);
    if (!axis.empty()) dump(m, axis_from_string(axis));
    else if (m.uniaxial()) {
      dump(m, Axis::ordinary);
      dump(m, Axis::extraordinary);
    } else {
      dump(m, Axis::iso);
    }
    return 0;
  }
  for (const auto& name : db.names()) {
    const Material& m = db.get(name);
    if (m.uniaxial()) {
      dump(m, Axis::ordinary);
      dump(m, Axis::extraordinary);
    } else {
      dump(m, Axis::iso);
    }
  }
  return 0;
}

int cmd_analyze(const std::string& csv_path, const std::string& out_dir,
                double gvd_length_mm) {
  const Interferogram ig = load_interferogram_csv(csv_path);
  const auto features = detect_features(ig);
  std::vector<DipFit> fits;
  for (const auto& fe : features) fits.push_back(fit_gaussian(ig, fe));

  json summary;
  summary["input"] = csv_path;
  json jf = json::array();
  for (const auto& fi : fits)
    jf.push_back(json{{"center_um", fi.center_um},
                      {"fwhm_um", fi.fwhm_um},
                      {"visibility", fi.visibility},
                      {"polarity", fi.polarity < 0 ? "dip" : "peak"}});
  summary["features"] = jf;

  std::vector<const DipFit*> dips;
  for (const auto& fi : fits)
    if (fi.polarity < 0) dips.push_back(&fi);
  if (dips.size() >= 2)
    summary["separation_um"] = std::abs(dips.back()->center_um - dips.front()->center_um);

  if (gvd_length_mm > 0) {
    if (fits.size() < 3)
      throw std::runtime_error("GVD estimation needs two surface dips and a cross feature");
    // outer dips are the surfaces, the middle feature is the cross term
    std::vector<DipFit> sorted = fits;
    std::sort(sorted.begin(), sorted.end(),
              [](const DipFit& a, const DipFit& b) { return a.center_um < b.center_um; });
    const ForwardContext ctx = ForwardContext::from_interferogram(ig);
    const GvdEstimate est = estimate_gvd(sorted.front(), sorted.back(),
                                         sorted[sorted.size() / 2], gvd_length_mm, ctx);
    summary["gvd"] = json{{"beta2_fs2_mm", est.beta2_fs2_mm},
                          {"uncertainty_fs2_mm", est.uncertainty_fs2_mm},
                          {"interstitial_length_mm", est.interstitial_length_mm},
                          {"consistent_with_zero", est.consistent_with_zero}};
  }

  bool flagged = false;
  for (const auto& fi : fits) flagged |= fi.flagged;
  summary["flags"] = flagged ? json::array({"visibility above 1"}) : json::array();

  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    std::ofstream fc(std::filesystem::path(out_dir) / "features.csv", std::ios::binary);
    write_feature_csv(fc, fits);
    std::ofstream fs(std::filesystem::path(out_dir) / "analysis.json", std::ios::binary);
    fs << summary.dump(2) << "\n";
  }
  std::cout << summary.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Type-II polarization-sensitive quantum OCT simulator and analysis toolkit"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run a preset or scenario file");
  std::string target, out_dir;
  long long seed = -1;
  run->add_option("target", target, "preset name or scenario file")->required();
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--seed", seed, "override the RNG seed");

  auto* lp = app.add_subcommand("list-presets", "list the preset catalog");

  auto* mat = app.add_subcommand("materials", "dump dispersion tables as CSV");
  std::string material, axis, mat_out;
  double lo = 600.0, hi = 1000.0;
  int points = 81;
  mat->add_option("--material", material, "material name (default: all)");
  mat->add_option("--axis", axis, "o, e or iso");
  mat->add_option("--from", lo, "start wavelength, nm");
  mat->add_option("--to", hi, "end wavelength, nm");
  mat->add_option("--points", points, "table rows");
  mat->add_option("--out", mat_out, "output file (default: stdout)");

  auto* an = app.add_subcommand("analyze", "analyze an existing interferogram CSV");
  std::string csv_path, an_out;
  double gvd_length = 0.0;
  an->add_option("csv", csv_path, "interferogram CSV")->required();
  an->add_option("--out", an_out, "output directory");
  an->add_option("--gvd-length-mm", gvd_length,
                 "interstitial physical length; enables GVD estimation");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*run) return cmd_run(target, out_dir, seed);
    if (*lp) {
      for (const auto& p : qoct::list_presets())
        std::cout << p.name << "  " << p.description << "\n";
      return 0;
    }
    if (*mat) return cmd_materials(material, axis, lo, hi, points, mat_out);
    if (*an) return cmd_analyze(csv_path, an_out, gvd_length);
  } catch (const qoct::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 2;
}
