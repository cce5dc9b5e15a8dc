#include <chrono>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "qoct/analysis.hpp"
#include "qoct/csv.hpp"
#include "qoct/scenario.hpp"
#include "qoct/units.hpp"

namespace qoct {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string out_path(const Scenario& sc, const std::string& file) {
  return (fs::path(sc.output_dir) / file).string();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << text;
}

json fit_to_json(const DipFit& f) {
  return json{{"center_um", f.center_um},     {"fwhm_um", f.fwhm_um},
              {"visibility", f.visibility},   {"amplitude", f.amplitude},
              {"polarity", f.polarity < 0 ? "dip" : "peak"},
              {"model", f.model},             {"flagged", f.flagged}};
}

void flatten(const json& j, const std::string& prefix, std::string& out) {
  if (j.is_object()) {
    for (const auto& [k, v] : j.items())
      flatten(v, prefix.empty() ? k : prefix + "." + k, out);
  } else if (j.is_array()) {
    for (size_t i = 0; i < j.size(); ++i)
      flatten(j[i], prefix + "[" + std::to_string(i) + "]", out);
  } else {
    out += prefix + " = " + (j.is_string() ? j.get<std::string>() : j.dump()) + "\n";
  }
}

void run_materials_table(const Scenario& sc, RunResult& res, json& summary) {
  const auto& db = MaterialDatabase::builtin();
  for (const auto& name : db.names()) {
    const Material& m = db.get(name);
    const std::vector<Axis> axes =
        m.uniaxial() ? std::vector<Axis>{Axis::ordinary, Axis::extraordinary}
                     : std::vector<Axis>{Axis::iso};
    for (const Axis ax : axes) {
      const double lo = std::max(600.0, m.validity_min_nm());
      const double hi = std::min(1000.0, m.validity_max_nm());
      const std::string file = "dispersion_" + name +
                               (m.uniaxial() ? std::string("_") + to_string(ax) : "") + ".csv";
      std::ofstream f(out_path(sc, file), std::ios::binary);
      if (!f) throw std::runtime_error("cannot write " + file);
      write_dispersion_table(f, m, ax, lo, hi, 81);
      res.outputs.push_back(file);
    }
  }
  summary["tables"] = res.outputs;
}

// Forward ratio-vs-delta handle for the quartz-over-mirror sample family:
// rebuilds the stack with the quartz thickness that realizes the trial
// retardation (alpha and everything else held at the scenario values).
std::function<double(double)> make_ratio_of_delta(const Scenario& sc, const JointSpectrum& js,
                                                  double mirror_position_um) {
  return [&sc, js, mirror_position_um](double delta) {
    SamplePresetParams p = sc.sample_params;
    p.quartz_thickness_um = std::max(quartz_thickness_for_retardation(delta), 1e-3);
    const SampleStack stack = preset_sample(sc.sample_preset, p);
    std::vector<double> grid(js.n);
    for (int k = 0; k < js.n; ++k) grid[k] = js.omega(k);
    const TransferFunction tf = stack_response(stack, grid);

    // the mirror feature moves with the quartz thickness; scan around it
    const auto& quartz = MaterialDatabase::builtin().get("quartz");
    const double ng = 0.5 * (quartz.group_index(800.0, Axis::ordinary) +
                             quartz.group_index(800.0, Axis::extraordinary));
    const double lq0 = sc.sample_params.quartz_thickness_um > 0
                           ? sc.sample_params.quartz_thickness_um
                           : quartz_thickness_for_retardation(kPi / 2);
    const double pos = mirror_position_um + ng * (p.quartz_thickness_um - lq0);
    ScanConfig cfg;
    cfg.delay_step_um = sc.scan.delay_step_um;
    cfg.delay_start_um = pos - 12.0;
    cfg.delay_end_um = pos + 12.0;
    cfg.mode_overlap = sc.scan.mode_overlap;
    const PolarizationScan scan = polarization_scan(js, tf, cfg);
    const PolarizationSet set = PolarizationSet::from_scan(scan);
    const PolarizationReport rep = combine_polarization(set, {pos});
    return rep.ratios.front().ratio;
  };
}

void run_polarization_outputs(const Scenario& sc, const JointSpectrum& js,
                              const TransferFunction& tf, RunResult& res, json& summary) {
  const PolarizationScan scan = polarization_scan(js, tf, sc.scan);
  write_interferogram_csv(out_path(sc, "r_h.csv"), scan.r_h);
  write_interferogram_csv(out_path(sc, "r_v.csv"), scan.r_v);
  res.outputs.push_back("r_h.csv");
  res.outputs.push_back("r_v.csv");

  const PolarizationSet set = PolarizationSet::from_scan(scan);
  const PolarizationReport rep = combine_polarization(set);
  write_interferogram_csv(out_path(sc, "r_t.csv"), rep.r_t);
  res.outputs.push_back("r_t.csv");

  json ratios = json::array();
  for (const auto& r : rep.ratios)
    ratios.push_back(json{{"position_um", r.position_um},
                          {"lambda_ratio_v_over_h", r.ratio},
                          {"amplitude_h", r.amplitude_h},
                          {"amplitude_v", r.amplitude_v}});
  summary["polarization"]["ratios"] = ratios;
  summary["polarization"]["lambda0"] = set.lambda0;

  const bool quartz_family =
      sc.sample_preset == "quartz_mirror" || sc.sample_preset == "bs_quartz_mirror";
  if (quartz_family && !rep.ratios.empty()) {
    // the mirror is the strongest (last) feature; invert the ratio there
    const double pos = rep.ratios.back().position_um;
    try {
      const auto handle = make_ratio_of_delta(sc, js, pos);
      const BirefringenceEstimate est = extract_birefringence(set, pos, handle);
      summary["polarization"]["delta_rad"] = est.delta_rad;
      summary["polarization"]["delta_ambiguous"] = est.ambiguous;
      summary["polarization"]["delta_roots"] = est.roots_rad;
      if (est.ambiguous) res.flags.push_back("retardation ambiguous");
    } catch (const std::domain_error& e) {
      res.flags.push_back(std::string("retardation not recovered: ") + e.what());
    }
    const double chi = third_measurement_angle(js, tf, sc.scan, pos);
    summary["polarization"]["max_coincidence_analyzer_rad"] = chi;
  }
}

}  // namespace

RunResult run_scenario(const Scenario& sc) {
  sc.validate();
  RunResult res;
  json summary;
  summary["preset"] = sc.name;
  const auto t0 = std::chrono::steady_clock::now();

  fs::create_directories(sc.output_dir);

  if (sc.name == "materials_table") {
    run_materials_table(sc, res, summary);
  } else {
    const CrystalSpec crystal = sc.build_crystal();
    const JointSpectrum js = joint_spectral_amplitude(sc.pump, crystal, sc.grid_size);
    const SampleStack stack = sc.build_sample();
    std::vector<double> grid(js.n);
    for (int k = 0; k < js.n; ++k) grid[k] = js.omega(k);
    const TransferFunction tf = stack_response(stack, grid);

    summary["anticorrelation"] = anticorrelation(js);

    if (sc.run_polarization) {
      run_polarization_outputs(sc, js, tf, res, summary);
    } else {
      const auto h = project_channel(tf, sc.scan.reference_polarization);
      Interferogram ig = qoct_scan(js, h, sc.scan);
      ig.meta["sample"] = stack.name;
      if (sc.apply_noise) ig = apply_counting_noise(ig, sc.scan);
      if (ig.clamped) res.flags.push_back("rate clamped at zero within numerical noise");
      write_interferogram_csv(out_path(sc, "interferogram.csv"), ig);
      res.outputs.push_back("interferogram.csv");

      std::vector<DipFit> fits;
      std::vector<int> labels;
      std::vector<Feature> features;
      if (sc.fit_features) {
        features = detect_features(ig);
        for (const auto& f : features) {
          try {
            fits.push_back(fit_gaussian(ig, f));
          } catch (const FitError& e) {
            res.flags.push_back(std::string("fit failed at ") +
                                std::to_string(f.center_um) + " um: " + e.what());
          }
        }
        json jf = json::array();
        for (const auto& f : fits) jf.push_back(fit_to_json(f));
        summary["features"] = jf;
        // headline numbers: deepest dip
        const DipFit* deepest = nullptr;
        for (const auto& f : fits)
          if (f.polarity < 0 && (!deepest || f.visibility > deepest->visibility)) deepest = &f;
        if (deepest) {
          summary["fwhm_um"] = deepest->fwhm_um;
          summary["visibility"] = deepest->visibility;
          summary["center_um"] = deepest->center_um;
        }
        for (const auto& f : fits)
          if (f.flagged) res.flags.push_back("fit visibility above 1");
      }

      if (sc.run_dither) {
        // polarity period from the outermost dips
        std::vector<const DipFit*> dips;
        for (const auto& f : fits)
          if (f.polarity < 0) dips.push_back(&f);
        if (dips.size() < 2)
          throw std::runtime_error("dither requested but fewer than two dips found");
        const double sep = std::abs(dips.back()->center_um - dips.front()->center_um);
        const double span0 = sc.dither_initial_span_nm > 0
                                 ? sc.dither_initial_span_nm
                                 : dither_polarity_period_nm(sep, sc.pump.center_wavelength_nm);
        auto runner = [&](double det) {
          PumpSpec p = sc.pump;
          p.detuning_nm = det;
          const JointSpectrum jsd = joint_spectral_amplitude(p, crystal, sc.grid_size);
          std::vector<double> g(jsd.n);
          for (int k = 0; k < jsd.n; ++k) g[k] = jsd.omega(k);
          const auto hd = project_channel(stack_response(stack, g),
                                          sc.scan.reference_polarization);
          return qoct_scan(jsd, hd, sc.scan);
        };
        const DitherPlan plan = plan_dither_schedule(ig, runner, span0);
        write_interferogram_csv(out_path(sc, "dither_mean.csv"), plan.classification.class1_scan);
        res.outputs.push_back("dither_mean.csv");
        Interferogram resid = plan.classification.class1_scan;
        resid.rate = plan.classification.class2_residual;
        for (auto& r : resid.rate) r += 1.0;  // unit-baseline framing for the CSV
        write_interferogram_csv(out_path(sc, "dither_residual.csv"), resid);
        res.outputs.push_back("dither_residual.csv");

        labels = plan.classification.labels;
        json jd;
        jd["span_nm"] = plan.span_nm;
        jd["detunings_nm"] = plan.detunings_nm;
        jd["labels"] = plan.classification.labels;
        jd["suppression"] = plan.classification.suppression;
        summary["dither"] = jd;

        // class-1 layer structure
        std::vector<DipFit> class1;
        for (size_t i = 0; i < fits.size() && i < labels.size(); ++i)
          if (labels[i] == 1 && fits[i].polarity < 0) class1.push_back(fits[i]);
        if (class1.size() >= 2) {
          const LayerEstimate layers = extract_layers(class1);
          summary["layers"]["surface_delays_um"] = layers.surface_delays_um;
          summary["layers"]["optical_path_lengths_um"] = layers.optical_path_lengths_um;
          summary["layers"]["relative_reflectances"] = layers.relative_reflectances;
          summary["separation_um"] = layers.optical_path_lengths_um.front();
        }
      } else if (sc.fit_features) {
        std::vector<const DipFit*> dips;
        for (const auto& f : fits)
          if (f.polarity < 0) dips.push_back(&f);
        if (dips.size() >= 2)
          summary["separation_um"] =
              std::abs(dips.back()->center_um - dips.front()->center_um);
      }

      if (!fits.empty()) {
        std::ofstream f(out_path(sc, "features.csv"), std::ios::binary);
        write_feature_csv(f, fits, labels);
        res.outputs.push_back("features.csv");
      }

      if (sc.run_oct) {
        const auto S = signal_marginal(js);
        const OctScan oct = oct_scan(js, S, h, sc.scan);
        std::ofstream f(out_path(sc, "oct.csv"), std::ios::binary);
        write_oct_csv(f, oct);
        res.outputs.push_back("oct.csv");
      }
    }
  }

  const auto t1 = std::chrono::steady_clock::now();
  summary["runtime_s"] =
      std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count() / 1000.0;
  summary["flags"] = res.flags;

  res.summary_json = summary.dump(2) + "\n";
  write_text(out_path(sc, "summary.json"), res.summary_json);
  res.outputs.push_back("summary.json");
  std::string report;
  flatten(summary, "", report);
  write_text(out_path(sc, "report.txt"), report);
  res.outputs.push_back("report.txt");
  res.exit_code = 0;
  return res;
}

}  // namespace qoct
