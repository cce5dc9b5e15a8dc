#include <doctest.h>

#include <cmath>
#include <functional>
#include <algorithm>

#include "qoct/interferometer.hpp"
#include "qoct/units.hpp"

using namespace qoct;

namespace {

std::vector<cplx> mirror_channel(const JointSpectrum& js) {
  return std::vector<cplx>(js.n, cplx(-1.0));
}

std::vector<cplx> phase_channel(const JointSpectrum& js,
                                const std::function<double(double)>& phase_of_detuning) {
  std::vector<cplx> h(js.n);
  for (int k = 0; k < js.n; ++k) h[k] = -std::polar(1.0, phase_of_detuning(js.detuning(k)));
  return h;
}

// half-depth width with linear interpolation at both flanks
double dip_fwhm(const Interferogram& ig) {
  const auto& r = ig.rate;
  const auto& x = ig.delay_um;
  size_t imin = 0;
  for (size_t i = 1; i < r.size(); ++i)
    if (r[i] < r[imin]) imin = i;
  const double half = 1.0 - (1.0 - r[imin]) / 2.0;
  size_t l = imin;
  while (l > 0 && r[l] < half) --l;
  size_t h = imin;
  while (h + 1 < r.size() && r[h] < half) ++h;
  const double xl = x[l] + (half - r[l]) * (x[l + 1] - x[l]) / (r[l + 1] - r[l]);
  const double xh = x[h - 1] + (half - r[h - 1]) * (x[h] - x[h - 1]) / (r[h] - r[h - 1]);
  return xh - xl;
}

double peak_fwhm(const std::vector<double>& x, const std::vector<double>& e) {
  size_t imax = 0;
  for (size_t i = 1; i < e.size(); ++i)
    if (e[i] > e[imax]) imax = i;
  const double half = e[imax] / 2;
  size_t l = imax;
  while (l > 0 && e[l] > half) --l;
  size_t h = imax;
  while (h + 1 < e.size() && e[h] > half) ++h;
  const double xl = x[l] + (half - e[l]) * (x[l + 1] - x[l]) / (e[l + 1] - e[l]);
  const double xh = x[h - 1] + (half - e[h - 1]) * (x[h] - x[h - 1]) / (e[h] - e[h - 1]);
  return xh - xl;
}

JointSpectrum cw_js(double length_mm, int n = 512) {
  PumpSpec cw;
  cw.envelope = PumpSpec::Envelope::cw;
  return joint_spectral_amplitude(cw, CrystalSpec::type_ii_bbo(length_mm), n);
}

}  // namespace

TEST_CASE("scan config validation") {
  ScanConfig cfg;
  cfg.delay_step_um = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = ScanConfig{};
  cfg.delay_end_um = cfg.delay_start_um;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = ScanConfig{};
  cfg.mode_overlap = 1.5;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("cw mirror dip: full visibility at zero stage position") {
  const JointSpectrum js = cw_js(1.5);
  ScanConfig cfg;
  cfg.delay_start_um = -90;
  cfg.delay_end_um = 90;
  cfg.delay_step_um = 0.25;
  const Interferogram ig = qoct_scan(js, mirror_channel(js), cfg);

  double rmin = 1e9, dmin = 0;
  for (size_t i = 0; i < ig.rate.size(); ++i)
    if (ig.rate[i] < rmin) {
      rmin = ig.rate[i];
      dmin = ig.delay_um[i];
    }
  CHECK(rmin == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(std::abs(rmin) < 1e-6);
  CHECK(std::abs(dmin) <= cfg.delay_step_um / 2 + 1e-9);

  // baseline at the scan ends
  CHECK(ig.rate.front() == doctest::Approx(1.0).epsilon(0.01));
  CHECK(ig.rate.back() == doctest::Approx(1.0).epsilon(0.01));
  for (const double r : ig.rate) CHECK(r >= 0.0);
}

TEST_CASE("brute-force expanded-modulus oracle") {
  // |A(w1,w2) h(w1) e^{-i w2 t} - A(w2,w1) h(w2) e^{-i w1 t}|^2 summed over a
  // 32x32 grid equals 2 (Lambda0 - Re Lambda)
  PumpSpec fs;
  fs.bandwidth_fwhm_nm = 2.0;
  const JointSpectrum js = joint_spectral_amplitude(fs, CrystalSpec::type_ii_bbo(0.5), 32);
  const auto& silica = MaterialDatabase::builtin().get("fused_silica");
  std::vector<cplx> h(js.n);
  for (int k = 0; k < js.n; ++k) {
    const double kk = silica.k_jet(js.omega(k), Axis::iso).f;
    h[k] = 0.3 + 0.5 * std::polar(1.0, 2 * kk * 0.05);
  }
  ScanConfig cfg;
  cfg.delay_start_um = -40;
  cfg.delay_end_um = 40;
  cfg.delay_step_um = 5.0;
  const Interferogram ig = qoct_scan(js, h, cfg);

  const double tau_c =
      (js.crystal.beta1_idler() - js.crystal.beta1_signal()) * js.crystal.length_mm() / 2.0;
  const double w2 = js.step * js.step;
  for (size_t id = 0; id < ig.delay_um.size(); ++id) {
    const double tau = 2.0 * ig.delay_um[id] / kSpeedOfLightUmPerFs + tau_c;
    double brute = 0.0;
    for (int a = 0; a < js.n; ++a)
      for (int b = 0; b < js.n; ++b) {
        // engine phase convention: e^{-i w tau} per detected frequency
        const cplx x = js.at(a, b) * h[a] * std::polar(1.0, js.detuning(b) * tau);
        const cplx y = js.at(b, a) * h[b] * std::polar(1.0, js.detuning(a) * tau);
        brute += std::norm(x - y);
      }
    brute *= w2 / 2.0;  // half the expanded modulus
    const double engine = ig.rate[id] * ig.baseline;
    CHECK(std::abs(brute - engine) <= 1e-10 * ig.baseline);
  }
}

TEST_CASE("collapsed path equals the direct reference path") {
  PumpSpec fs;
  fs.bandwidth_fwhm_nm = 2.0;
  const JointSpectrum js = joint_spectral_amplitude(fs, CrystalSpec::type_ii_bbo(0.5), 128);
  std::vector<cplx> h(js.n);
  for (int k = 0; k < js.n; ++k)
    h[k] = 0.4 + 0.4 * std::polar(1.0, 3000.0 * js.detuning(k));
  ScanConfig cfg;
  cfg.delay_start_um = -25;
  cfg.delay_end_um = 25;
  cfg.delay_step_um = 1.0;
  const Interferogram fast = qoct_scan(js, h, cfg);
  const Interferogram ref = qoct_scan_direct(js, h, cfg);
  for (size_t i = 0; i < fast.rate.size(); ++i)
    CHECK(std::abs(fast.rate[i] - ref.rate[i]) < 1e-9);
}

TEST_CASE("channel/grid mismatch is rejected") {
  const JointSpectrum js = cw_js(0.5, 64);
  std::vector<cplx> h(32, cplx(1.0));
  ScanConfig cfg;
  CHECK_THROWS_AS(qoct_scan(js, h, cfg), std::invalid_argument);
}

TEST_CASE("even-order dispersion immunity, odd-order shift") {
  const JointSpectrum js = cw_js(0.5);
  ScanConfig cfg;
  cfg.delay_start_um = -25;
  cfg.delay_end_um = 25;
  cfg.delay_step_um = 0.05;
  const Interferogram base = qoct_scan(js, mirror_channel(js), cfg);
  const double w_base = dip_fwhm(base);

  SUBCASE("quadratic + quartic leave the width unchanged") {
    // 2x the round-trip GVD of 6 mm ZnSe
    const double b2 = MaterialDatabase::builtin().get("znse").gvd_coefficient(800, Axis::iso);
    const double a2 = 2.0 * (b2 * 12.0) / 2.0;
    const double a4 = 1e6;
    const auto h = phase_channel(js, [&](double om) { return a2 * om * om + a4 * std::pow(om, 4); });
    const Interferogram ig = qoct_scan(js, h, cfg);
    CHECK(dip_fwhm(ig) == doctest::Approx(w_base).epsilon(1e-3));
    double rmin = 1e9;
    for (const double r : ig.rate) rmin = std::min(rmin, r);
    CHECK(rmin < 1e-6);  // visibility intact too
  }

  SUBCASE("linear phase shifts the center without reshaping") {
    const double a1 = 20.0;  // fs
    const auto h = phase_channel(js, [&](double om) { return a1 * om; });
    ScanConfig c2 = cfg;
    const double expected_shift = a1 * kSpeedOfLightUmPerFs / 2.0;
    c2.delay_start_um += expected_shift;
    c2.delay_end_um += expected_shift;
    const Interferogram ig = qoct_scan(js, h, c2);
    size_t imin = 0;
    for (size_t i = 0; i < ig.rate.size(); ++i)
      if (ig.rate[i] < ig.rate[imin]) imin = i;
    CHECK(std::abs(ig.delay_um[imin] - expected_shift) <= cfg.delay_step_um);
    CHECK(dip_fwhm(ig) == doctest::Approx(w_base).epsilon(1e-3));
  }
}

TEST_CASE("fs-pump dispersion degradation is monotone in bandwidth") {
  const CrystalSpec c = CrystalSpec::type_ii_bbo(0.5);
  const auto& znse = MaterialDatabase::builtin().get("znse");
  const double d0 = stage_position_of_group_path(znse.group_index(800, Axis::iso), 6000.0);
  double prev = 0.0;
  for (const double dl : {0.01, 1.0, 2.0, 4.0}) {
    PumpSpec p;
    p.bandwidth_fwhm_nm = dl;
    const JointSpectrum js = joint_spectral_amplitude(p, c, 512);
    std::vector<cplx> h(js.n);
    for (int k = 0; k < js.n; ++k)
      h[k] = -std::polar(1.0, 2 * znse.k_jet(js.omega(k), Axis::iso).f * 6.0);
    ScanConfig cfg;
    cfg.delay_start_um = d0 - 120;
    cfg.delay_end_um = d0 + 120;
    cfg.delay_step_um = 0.25;
    const double w = dip_fwhm(qoct_scan(js, h, cfg));
    CHECK(w >= prev - 1e-6);
    prev = w;
  }
}

TEST_CASE("visibility bounded by the mode overlap") {
  const JointSpectrum js = cw_js(1.5);
  for (const double gamma : {1.0, 0.85, 0.75, 0.3}) {
    ScanConfig cfg;
    cfg.delay_start_um = -60;
    cfg.delay_end_um = 60;
    cfg.delay_step_um = 0.25;
    cfg.mode_overlap = gamma;
    const Interferogram ig = qoct_scan(js, mirror_channel(js), cfg);
    double rmin = 1e9;
    for (const double r : ig.rate) rmin = std::min(rmin, r);
    CHECK(1.0 - rmin <= gamma + 0.01);
    CHECK(1.0 - rmin == doctest::Approx(gamma).epsilon(1e-3));
  }
}

TEST_CASE("classical OCT comparator") {
  const JointSpectrum js = cw_js(0.5);
  const auto S = signal_marginal(js);
  const auto h = mirror_channel(js);

  ScanConfig cfg;
  cfg.delay_start_um = -40;
  cfg.delay_end_um = 40;
  cfg.delay_step_um = 0.05;
  const OctScan oct = oct_scan(js, S, h, cfg);
  const double w_oct = peak_fwhm(oct.fringes.delay_um, oct.envelope);

  SUBCASE("mirror envelope width equals the source coherence length") {
    // Wiener-Khinchin oracle: |FT of the marginal| evaluated by quadrature
    std::vector<double> env;
    for (const double d : oct.fringes.delay_um) {
      const double tau = 2 * d / kSpeedOfLightUmPerFs;
      cplx g(0.0);
      for (int k = 0; k < js.n; ++k)
        g += S[k] * std::polar(1.0, -js.detuning(k) * tau);
      env.push_back(std::abs(g));
    }
    const double w_oracle = peak_fwhm(oct.fringes.delay_um, env);
    CHECK(w_oct == doctest::Approx(w_oracle).epsilon(1e-6));
  }

  SUBCASE("QOCT dip is half the OCT envelope width") {
    ScanConfig cq = cfg;
    const Interferogram q = qoct_scan(js, h, cq);
    CHECK(dip_fwhm(q) == doctest::Approx(0.5 * w_oct).epsilon(0.02));
  }

  SUBCASE("ZnSe broadens OCT while the cw QOCT dip stays put") {
    const auto& znse = MaterialDatabase::builtin().get("znse");
    const double d0 = stage_position_of_group_path(znse.group_index(800, Axis::iso), 6000.0);
    auto znse_channel = [&](const JointSpectrum& jsx) {
      std::vector<cplx> hz(jsx.n);
      for (int k = 0; k < jsx.n; ++k)
        hz[k] = -std::polar(1.0, 2 * znse.k_jet(jsx.omega(k), Axis::iso).f * 6.0);
      return hz;
    };

    // OCT broadening in a broadband regime (0.75 mm crystal)
    const JointSpectrum js75 = cw_js(0.75);
    const auto S75 = signal_marginal(js75);
    ScanConfig c75;
    c75.delay_start_um = -120;
    c75.delay_end_um = 120;
    c75.delay_step_um = 0.1;
    const OctScan oct75 = oct_scan(js75, S75, mirror_channel(js75), c75);
    ScanConfig cz = c75;
    cz.delay_start_um = d0 - 250;
    cz.delay_end_um = d0 + 250;
    cz.delay_step_um = 0.25;
    const OctScan octz = oct_scan(js75, S75, znse_channel(js75), cz);
    const double ratio = peak_fwhm(octz.fringes.delay_um, octz.envelope) /
                         peak_fwhm(oct75.fringes.delay_um, oct75.envelope);
    CHECK(ratio > 1.5);

    // QOCT immunity in the ps regime (1.5 mm crystal); what survives here is
    // third-order (odd) phase, well under 1%
    const JointSpectrum js15 = cw_js(1.5);
    ScanConfig cq;
    cq.delay_start_um = d0 - 60;
    cq.delay_end_um = d0 + 60;
    cq.delay_step_um = 0.05;
    const Interferogram qz = qoct_scan(js15, znse_channel(js15), cq);
    ScanConfig cb = cq;
    cb.delay_start_um = -60;
    cb.delay_end_um = 60;
    const Interferogram qb = qoct_scan(js15, mirror_channel(js15), cb);
    CHECK(std::abs(dip_fwhm(qz) / dip_fwhm(qb) - 1.0) < 0.01);
  }
}

TEST_CASE("counting noise") {
  SUBCASE("baseline mean: 200 cps for 5 s gives 1000") {
    double sum = 0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) sum += poisson_sample(1000.0, 42, i);
    CHECK(sum / n == doctest::Approx(1000.0).epsilon(0.05));
  }

  SUBCASE("mean and variance agree within 5% over 1e4 draws") {
    const double lam = 37.5;
    const int n = 10000;
    double s = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
      const double v = poisson_sample(lam, 7, i);
      s += v;
      s2 += v * v;
    }
    const double mean = s / n;
    const double var = s2 / n - mean * mean;
    CHECK(mean == doctest::Approx(lam).epsilon(0.05));
    CHECK(var == doctest::Approx(lam).epsilon(0.05));
  }

  SUBCASE("determinism and scan integration") {
    const JointSpectrum js = cw_js(0.5, 128);
    ScanConfig cfg;
    cfg.delay_start_um = -20;
    cfg.delay_end_um = 20;
    cfg.delay_step_um = 0.5;
    cfg.rate_scale_cps = 200;
    cfg.integration_time_s = 5;
    cfg.rng_seed = 99;
    const Interferogram ig = qoct_scan(js, mirror_channel(js), cfg);
    const Interferogram n1 = apply_counting_noise(ig, cfg);
    const Interferogram n2 = apply_counting_noise(ig, cfg);
    CHECK(n1.counts == n2.counts);
    ScanConfig cfg2 = cfg;
    cfg2.rng_seed = 100;
    const Interferogram n3 = apply_counting_noise(ig, cfg2);
    CHECK(n1.counts != n3.counts);

    // baseline counts average near rate_scale * T
    double sum = 0;
    int m = 0;
    for (size_t i = 0; i < n1.counts.size(); ++i)
      if (std::abs(n1.delay_um[i]) > 15) {
        sum += n1.counts[i];
        ++m;
      }
    CHECK(sum / m == doctest::Approx(1000.0).epsilon(0.15));

    Interferogram bad = ig;
    bad.rate[0] = -0.5;
    CHECK_THROWS_AS(apply_counting_noise(bad, cfg), std::invalid_argument);
  }
}
