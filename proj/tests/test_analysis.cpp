#include <doctest.h>

#include <cmath>
#include <functional>
#include <algorithm>
#include <random>

#include "qoct/analysis.hpp"
#include "qoct/units.hpp"

using namespace qoct;

namespace {

Interferogram synthetic(const std::vector<double>& delays,
                        const std::function<double(double)>& f) {
  Interferogram ig;
  ig.delay_um = delays;
  for (const double d : delays) ig.rate.push_back(f(d));
  ig.baseline = 1.0;
  return ig;
}

std::vector<double> axis(double lo, double hi, double step) {
  std::vector<double> x;
  for (double d = lo; d <= hi + 1e-9; d += step) x.push_back(d);
  return x;
}

double gauss(double x, double c, double fwhm) {
  const double s = fwhm / 2.3548200450309493;
  return std::exp(-(x - c) * (x - c) / (2 * s * s));
}

JointSpectrum cw_js(double length_mm, int n = 512) {
  PumpSpec cw;
  cw.envelope = PumpSpec::Envelope::cw;
  return joint_spectral_amplitude(cw, CrystalSpec::type_ii_bbo(length_mm), n);
}

Interferogram scan_stack(const JointSpectrum& js, const SampleStack& stack,
                         const ScanConfig& cfg) {
  std::vector<double> grid(js.n);
  for (int k = 0; k < js.n; ++k) grid[k] = js.omega(k);
  const auto h = project_channel(stack_response(stack, grid), Polarization::H);
  Interferogram ig = qoct_scan(js, h, cfg);
  ig.meta["sample"] = stack.name;
  return ig;
}

}  // namespace

TEST_CASE("feature detection") {
  SUBCASE("flat interferogram yields nothing") {
    const auto ig = synthetic(axis(-50, 50, 0.5), [](double) { return 1.0; });
    CHECK(detect_features(ig).empty());
  }

  SUBCASE("three synthetic features recovered at the right centers") {
    const auto ig = synthetic(axis(-50, 150, 0.25), [](double d) {
      return 1.0 - 0.4 * gauss(d, 0, 12) + 0.25 * gauss(d, 60, 10) - 0.5 * gauss(d, 120, 12);
    });
    const auto feats = detect_features(ig);
    REQUIRE(feats.size() == 3);
    CHECK(std::abs(feats[0].center_um - 0) <= 0.25);
    CHECK(std::abs(feats[1].center_um - 60) <= 0.25);
    CHECK(std::abs(feats[2].center_um - 120) <= 0.25);
    CHECK(feats[0].polarity == -1);
    CHECK(feats[1].polarity == +1);
    CHECK(feats[2].polarity == -1);
    // windows never cross the neighbor midpoints
    CHECK(feats[0].window_hi_um < 30.0);
    CHECK(feats[1].window_lo_um > 30.0);
  }

  SUBCASE("short scans are rejected") {
    const auto ig = synthetic(axis(0, 3, 0.5), [](double) { return 1.0; });
    CHECK_THROWS_AS(detect_features(ig), std::invalid_argument);
  }
}

TEST_CASE("gaussian fit") {
  SUBCASE("exact gaussian recovered to 1e-9") {
    const auto ig = synthetic(axis(-60, 60, 0.4), [](double d) {
      return 1.02 - 0.63 * gauss(d, 3.7, 17.0);
    });
    const DipFit fit = fit_gaussian(ig.delay_um, ig.rate, -60, 60);
    CHECK(fit.converged);
    CHECK(fit.center_um == doctest::Approx(3.7).epsilon(1e-9));
    CHECK(fit.fwhm_um == doctest::Approx(17.0).epsilon(1e-9));
    CHECK(fit.baseline == doctest::Approx(1.02).epsilon(1e-9));
    CHECK(fit.amplitude == doctest::Approx(-0.63 / 1.02).epsilon(1e-7));
    CHECK(fit.polarity == -1);
    CHECK(fit.residual_rms < 1e-10);
  }

  SUBCASE("moment oracle agreement on analytic gaussians") {
    // second-moment width of a pure gaussian equals the fitted sigma
    const double c = -5.0, fwhm = 9.0;
    const auto x = axis(-45, 35, 0.2);
    std::vector<double> y;
    for (const double xi : x) y.push_back(1.0 - 0.4 * gauss(xi, c, fwhm));
    double w = 0, m1 = 0;
    for (size_t i = 0; i < x.size(); ++i) {
      w += 1.0 - y[i];
      m1 += (1.0 - y[i]) * x[i];
    }
    m1 /= w;
    double m2 = 0;
    for (size_t i = 0; i < x.size(); ++i) m2 += (1.0 - y[i]) * (x[i] - m1) * (x[i] - m1);
    m2 = std::sqrt(m2 / w);
    const DipFit fit = fit_gaussian(x, y, -45, 35);
    CHECK(fit.center_um == doctest::Approx(m1).epsilon(1e-6));
    CHECK(fit.sigma_um == doctest::Approx(m2).epsilon(1e-4));
  }

  SUBCASE("peaks fit with positive amplitude") {
    const auto ig = synthetic(axis(-30, 30, 0.2), [](double d) {
      return 1.0 + 0.2 * gauss(d, 0, 8.0);
    });
    const DipFit fit = fit_gaussian(ig.delay_um, ig.rate, -30, 30);
    CHECK(fit.polarity == +1);
    CHECK(fit.amplitude == doctest::Approx(0.2).epsilon(1e-6));
  }

  SUBCASE("triangular model") {
    const auto ig = synthetic(axis(-30, 30, 0.1), [](double d) {
      const double u = std::abs(d - 2.0) / 15.0;
      return 1.0 - 0.8 * (u < 1 ? 1 - u : 0.0);
    });
    const DipFit fit = fit_triangular(ig.delay_um, ig.rate, -30, 30);
    CHECK(fit.model == "triangular");
    CHECK(fit.center_um == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(fit.fwhm_um == doctest::Approx(15.0).epsilon(1e-6));
  }

  SUBCASE("fit window too small") {
    const auto ig = synthetic(axis(-30, 30, 0.5), [](double) { return 1.0; });
    CHECK_THROWS_AS(fit_gaussian(ig.delay_um, ig.rate, 0, 1.4), FitError);
  }
}

TEST_CASE("noisy fit robustness (fs preset regime)") {
  // 100 seeded realizations at 200 cps baseline, 10 s per point
  PumpSpec fs;
  fs.bandwidth_fwhm_nm = 2.0;
  const JointSpectrum js = joint_spectral_amplitude(fs, CrystalSpec::type_ii_bbo(0.5), 256);
  std::vector<cplx> h(js.n, cplx(-1.0));
  ScanConfig cfg;
  cfg.delay_start_um = -30;
  cfg.delay_end_um = 30;
  cfg.delay_step_um = 0.25;
  cfg.rate_scale_cps = 200;
  cfg.integration_time_s = 10;
  const Interferogram clean = qoct_scan(js, h, cfg);
  const DipFit ref = fit_gaussian(clean.delay_um, clean.rate, -30, 30);

  double sum = 0;
  int fails = 0;
  for (int seed = 1; seed <= 100; ++seed) {
    ScanConfig c = cfg;
    c.rng_seed = seed;
    const Interferogram noisy = apply_counting_noise(clean, c);
    try {
      sum += fit_gaussian(noisy.delay_um, noisy.measured_rate(), -30, 30).fwhm_um;
    } catch (const FitError&) {
      ++fails;
    }
  }
  REQUIRE(fails == 0);
  CHECK(sum / 100.0 == doctest::Approx(ref.fwhm_um).epsilon(0.15));
}

TEST_CASE("extract layers") {
  CHECK_THROWS_AS(extract_layers({}), std::invalid_argument);

  DipFit a, b;
  a.center_um = 3.0;
  a.visibility = 0.4;
  b.center_um = 148.0;
  b.visibility = 0.38;
  const LayerEstimate est = extract_layers({b, a});
  REQUIRE(est.surface_delays_um.size() == 2);
  CHECK(est.surface_delays_um[0] == 3.0);
  CHECK(est.optical_path_lengths_um[0] == doctest::Approx(145.0));
  CHECK(est.relative_reflectances[1] == doctest::Approx(0.95));
}

TEST_CASE("dither classification on the silica flat") {
  const JointSpectrum js = cw_js(1.5);  // quasi-cw
  PumpSpec ps;
  ps.bandwidth_fwhm_nm = PumpSpec::transform_limited_bandwidth_nm(10.0);
  const CrystalSpec crystal = CrystalSpec::type_ii_bbo(1.5);
  const SampleStack flat = preset_sample("silica_flat");

  ScanConfig cfg;
  cfg.delay_start_um = -75;
  cfg.delay_end_um = 220;
  cfg.delay_step_um = 0.5;

  auto run_at = [&](double det) {
    PumpSpec p = ps;
    p.detuning_nm = det;
    const JointSpectrum jsd = joint_spectral_amplitude(p, crystal, 512);
    return scan_stack(jsd, flat, cfg);
  };
  const Interferogram und = run_at(0.0);

  SUBCASE("single scan is insufficient") {
    CHECK_THROWS_AS(classify_by_dither(und, {und}), InsufficientDitherSpan);
  }

  SUBCASE("mismatched axes are rejected") {
    ScanConfig c2 = cfg;
    c2.delay_step_um = 1.0;
    const Interferogram other = scan_stack(joint_spectral_amplitude(ps, crystal, 512), flat, c2);
    std::vector<Interferogram> scans(5, other);
    CHECK_THROWS_AS(classify_by_dither(und, scans), std::invalid_argument);
  }

  SUBCASE("full dither pass separates the classes") {
    const auto feats = detect_features(und);
    REQUIRE(feats.size() == 3);  // two dips plus the midway feature
    const double sep = feats.back().center_um - feats.front().center_um;
    const double period = dither_polarity_period_nm(sep);
    CHECK(period == doctest::Approx(400.0 * 400.0 / (145.0 * 1000.0)).epsilon(0.02));

    const DitherPlan plan = plan_dither_schedule(und, run_at, period);
    REQUIRE(plan.classification.labels.size() == 3);
    CHECK(plan.classification.labels[0] == 1);
    CHECK(plan.classification.labels[1] == 2);
    CHECK(plan.classification.labels[2] == 1);
    CHECK(plan.classification.suppression[1] >= 10.0);

    // class-1 dips survive essentially unchanged in the mean
    const auto& mean = plan.classification.class1_scan.rate;
    for (const size_t idx : {size_t(0), size_t(2)}) {
      const double c = plan.classification.features[idx].center_um;
      size_t i = 0;
      for (size_t k = 0; k < und.delay_um.size(); ++k)
        if (std::abs(und.delay_um[k] - c) < std::abs(und.delay_um[i] - c)) i = k;
      CHECK(std::abs(mean[i] - und.rate[i]) / std::abs(und.rate[i] - 1.0) < 0.05);
    }

    // exact reconstruction: mean + residual == undithered
    for (size_t i = 0; i < und.rate.size(); ++i)
      CHECK(std::abs(mean[i] + plan.classification.class2_residual[i] - und.rate[i]) < 1e-12);
  }
}

TEST_CASE("dither on a bare mirror leaves no residual") {
  PumpSpec ps;
  ps.bandwidth_fwhm_nm = PumpSpec::transform_limited_bandwidth_nm(10.0);
  const CrystalSpec crystal = CrystalSpec::type_ii_bbo(1.5);
  const SampleStack mirror = preset_sample("mirror");
  ScanConfig cfg;
  cfg.delay_start_um = -80;
  cfg.delay_end_um = 80;
  cfg.delay_step_um = 0.5;
  auto run_at = [&](double det) {
    PumpSpec p = ps;
    p.detuning_nm = det;
    return scan_stack(joint_spectral_amplitude(p, crystal, 512), mirror, cfg);
  };
  const Interferogram und = run_at(0.0);
  std::vector<Interferogram> scans;
  for (const double det : dither_detunings(1.1, 9)) scans.push_back(run_at(det));
  const DitherClassification cls = classify_by_dither(und, scans);
  for (const double r : cls.class2_residual) CHECK(std::abs(r) < 5e-3);
  for (const int label : cls.labels) CHECK(label == 1);
}

TEST_CASE("gvd estimation closed loop") {
  // cw pump, 0.5 mm crystal; the fine grid keeps the deep two-surface
  // features inside the unambiguous delay range
  const JointSpectrum js = cw_js(0.5, 2048);
  ForwardContext ctx{js, 1.0, 0.1};
  const auto& db = MaterialDatabase::builtin();

  auto gap_scan = [&](const Material& medium, double gap_um) {
    SampleStack s;
    s.name = "gap";
    s.include_transmission_losses = false;
    s.interfaces.push_back({cplx(0.2), "s0"});
    s.layers.push_back(Layer::from_material(medium, gap_um));
    s.interfaces.push_back({cplx(0.2), "s1"});
    const double sep = stage_position_of_group_path(
        medium.group_index(800.0, medium.uniaxial() ? Axis::ordinary : Axis::iso), gap_um);
    const double margin = 0.12 * sep + 40.0;  // keep features out of the baseline wings
    ScanConfig cfg;
    cfg.delay_start_um = -margin;
    cfg.delay_end_um = sep + margin;
    cfg.delay_step_um = 0.1;
    return scan_stack(js, s, cfg);
  };

  auto recover = [&](const Material& medium, double gap_um) {
    const Interferogram ig = gap_scan(medium, gap_um);
    const auto feats = detect_features(ig, 0.005);
    REQUIRE(feats.size() == 3);
    const DipFit f0 = fit_gaussian(ig, feats[0]);
    const DipFit fc = fit_gaussian(ig, feats[1]);
    const DipFit f1 = fit_gaussian(ig, feats[2]);
    return estimate_gvd(f0, f1, fc, gap_um * 1e-3, ctx);
  };

  SUBCASE("vacuum gap: beta2 consistent with zero") {
    const GvdEstimate est = recover(db.get("vacuum"), 1000.0);
    CHECK(est.consistent_with_zero);
    CHECK(std::abs(est.beta2_fs2_mm) < 5.0);
  }

  SUBCASE("silica gap within 10%") {
    const GvdEstimate est = recover(db.get("fused_silica"), 1000.0);
    const double truth = db.get("fused_silica").gvd_coefficient(800, Axis::iso);
    CHECK(est.beta2_fs2_mm == doctest::Approx(truth).epsilon(0.10));
    CHECK(!est.consistent_with_zero);
  }

  SUBCASE("znse gap within 10% and ratio to silica above 10") {
    const GvdEstimate znse = recover(db.get("znse"), 500.0);
    const double truth = db.get("znse").gvd_coefficient(800, Axis::iso);
    CHECK(znse.beta2_fs2_mm == doctest::Approx(truth).epsilon(0.10));
    const GvdEstimate silica = recover(db.get("fused_silica"), 1000.0);
    CHECK(znse.beta2_fs2_mm / silica.beta2_fs2_mm > 10.0);
  }

  SUBCASE("monotone in the true beta2") {
    // synthetic gaps 0, silica, 5x silica, znse via beta expansions
    const double b2_silica = db.get("fused_silica").gvd_coefficient(800, Axis::iso);
    std::vector<double> truths = {0.0, b2_silica, 5 * b2_silica,
                                  db.get("znse").gvd_coefficient(800, Axis::iso)};
    double prev = -1.0;
    for (const double b2 : truths) {
      BetaExpansion gap;
      gap.omega0 = js.omega0;
      gap.beta0 = 0.0;
      gap.beta1 = 1.45 / kSpeedOfLightMmPerFs;
      gap.beta2 = b2;
      SampleStack s;
      s.include_transmission_losses = false;
      s.interfaces.push_back({cplx(0.2), "s0"});
      s.layers.push_back(Layer::from_expansion(gap, 1000.0));
      s.interfaces.push_back({cplx(0.2), "s1"});
      const double sep = stage_position_of_group_path(gap.beta1 * kSpeedOfLightMmPerFs, 1000.0);
      const double margin = 0.12 * sep + 40.0;
      ScanConfig cfg;
      cfg.delay_start_um = -margin;
      cfg.delay_end_um = sep + margin;
      cfg.delay_step_um = 0.1;
      const Interferogram ig = scan_stack(js, s, cfg);
      const auto feats = detect_features(ig, 0.005);
      REQUIRE(feats.size() == 3);
      const GvdEstimate est = estimate_gvd(fit_gaussian(ig, feats[0]), fit_gaussian(ig, feats[2]),
                                           fit_gaussian(ig, feats[1]), 1.0, ctx);
      CHECK(est.beta2_fs2_mm >= prev - 1.0);
      prev = est.beta2_fs2_mm;
    }
  }
}

TEST_CASE("polarization combination") {
  const JointSpectrum js = cw_js(0.5);
  std::vector<double> grid(js.n);
  for (int k = 0; k < js.n; ++k) grid[k] = js.omega(k);

  SUBCASE("baseline identity R_T = 1 when both channels are flat") {
    PolarizationSet ps;
    ps.r_h.delay_um = axis(-10, 10, 0.5);
    ps.r_h.rate.assign(ps.r_h.delay_um.size(), 1.0);
    ps.r_v = ps.r_h;
    ps.lambda0 = 1.0;
    const PolarizationReport rep = combine_polarization(ps);
    for (const double r : rep.r_t.rate) CHECK(r == doctest::Approx(1.0));
  }

  SUBCASE("bare mirror: V channel dark, ratio zero, R_T pointwise identity") {
    const SampleStack mirror = preset_sample("mirror");
    const TransferFunction tf = stack_response(mirror, grid);
    ScanConfig cfg;
    cfg.delay_start_um = -20;
    cfg.delay_end_um = 20;
    cfg.delay_step_um = 0.1;
    const PolarizationScan scan = polarization_scan(js, tf, cfg);
    const PolarizationSet set = PolarizationSet::from_scan(scan);
    const PolarizationReport rep = combine_polarization(set, {0.0});
    REQUIRE(rep.ratios.size() == 1);
    CHECK(rep.ratios[0].ratio == 0.0);

    // R_T = (R_V + R_H - L0)/L0 holds pointwise by construction
    for (size_t i = 0; i < rep.r_t.rate.size(); ++i)
      CHECK(rep.r_t.rate[i] ==
            doctest::Approx(scan.r_v.rate[i] + scan.r_h.rate[i] - 1.0).epsilon(1e-12));

    // V channel never dips
    for (const double r : scan.r_v.rate) CHECK(std::abs(r - 1.0) < 1e-9);
  }
}

TEST_CASE("retardation recovery closed loop (quartz quarter-wave)") {
  const JointSpectrum js = cw_js(0.5);
  const double alpha = 30.0 * kPi / 180.0;
  const auto& quartz = MaterialDatabase::builtin().get("quartz");
  const double ng = 0.5 * (quartz.group_index(800, Axis::ordinary) +
                           quartz.group_index(800, Axis::extraordinary));

  auto scan_for_delta = [&](double delta) {
    SamplePresetParams p;
    p.quartz_thickness_um = quartz_thickness_for_retardation(delta);
    p.quartz_axis_deg = 30.0;
    const SampleStack s = preset_sample("quartz_mirror", p);
    std::vector<double> grid(js.n);
    for (int k = 0; k < js.n; ++k) grid[k] = js.omega(k);
    const TransferFunction tf = stack_response(s, grid);
    const double pos = ng * p.quartz_thickness_um;
    ScanConfig cfg;
    cfg.delay_start_um = pos - 12;
    cfg.delay_end_um = pos + 12;
    cfg.delay_step_um = 0.2;
    return std::pair(PolarizationSet::from_scan(polarization_scan(js, tf, cfg)), pos);
  };

  auto ratio_of_delta = [&](double delta) {
    const auto [set, pos] = scan_for_delta(delta);
    return combine_polarization(set, {pos}).ratios.front().ratio;
  };

  const auto [measured, pos] = scan_for_delta(kPi / 2);
  const BirefringenceEstimate est =
      extract_birefringence(measured, pos, ratio_of_delta, 0.05, kPi - 0.05, 49);
  CHECK(std::abs(est.delta_rad - kPi / 2) < 0.05);

  SUBCASE("isotropic layer recovers zero retardation") {
    const auto [m0, p0] = scan_for_delta(1e-3);
    const double r0 = combine_polarization(m0, {p0}).ratios.front().ratio;
    CHECK(r0 < 0.01);  // ratio -> 0 as delta -> 0
  }
}

TEST_CASE("third measurement angle on a bare mirror") {
  // all the return is H polarized: the analyzer maximizing the envelope is H
  const JointSpectrum js = cw_js(0.5, 256);
  const SampleStack mirror = preset_sample("mirror");
  std::vector<double> grid(js.n);
  for (int k = 0; k < js.n; ++k) grid[k] = js.omega(k);
  const TransferFunction tf = stack_response(mirror, grid);
  ScanConfig cfg;
  cfg.delay_start_um = -10;
  cfg.delay_end_um = 10;
  cfg.delay_step_um = 0.25;
  const double chi = third_measurement_angle(js, tf, cfg, 0.0);
  CHECK((chi < 0.05 || chi > kPi - 0.05));
}
