#include "qoct/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace qoct {

namespace {

double mean_of(const std::vector<double>& v, size_t lo, size_t hi) {
  double s = 0;
  for (size_t i = lo; i < hi; ++i) s += v[i];
  return s / std::max<size_t>(1, hi - lo);
}

// Linear interpolation of y at position x0 on an ascending axis.
double interp(const std::vector<double>& x, const std::vector<double>& y, double x0) {
  if (x0 <= x.front()) return y.front();
  if (x0 >= x.back()) return y.back();
  const auto it = std::upper_bound(x.begin(), x.end(), x0);
  const size_t j = static_cast<size_t>(it - x.begin());
  const double t = (x0 - x[j - 1]) / (x[j] - x[j - 1]);
  return y[j - 1] + t * (y[j] - y[j - 1]);
}

// Solve the 4x4 system A x = b in place (partial pivoting).
void solve4(std::array<double, 16>& a, std::array<double, 4>& b) {
  for (int col = 0; col < 4; ++col) {
    int piv = col;
    for (int r = col + 1; r < 4; ++r)
      if (std::abs(a[r * 4 + col]) > std::abs(a[piv * 4 + col])) piv = r;
    if (std::abs(a[piv * 4 + col]) < 1e-300) throw FitError("singular normal equations");
    if (piv != col) {
      for (int c = 0; c < 4; ++c) std::swap(a[col * 4 + c], a[piv * 4 + c]);
      std::swap(b[col], b[piv]);
    }
    const double d = a[col * 4 + col];
    for (int r = col + 1; r < 4; ++r) {
      const double f = a[r * 4 + col] / d;
      if (f == 0.0) continue;
      for (int c = col; c < 4; ++c) a[r * 4 + c] -= f * a[col * 4 + c];
      b[r] -= f * b[col];
    }
  }
  for (int r = 3; r >= 0; --r) {
    double s = b[r];
    for (int c = r + 1; c < 4; ++c) s -= a[r * 4 + c] * b[c];
    b[r] = s / a[r * 4 + r];
  }
}

std::array<double, 16> invert4(std::array<double, 16> a) {
  std::array<double, 16> inv{};
  for (int col = 0; col < 4; ++col) {
    std::array<double, 16> ac = a;
    std::array<double, 4> e{};
    e[col] = 1.0;
    solve4(ac, e);
    for (int r = 0; r < 4; ++r) inv[r * 4 + col] = e[r];
  }
  return inv;
}

struct WindowData {
  std::vector<double> x, y;
};

WindowData slice_window(const std::vector<double>& x, const std::vector<double>& y,
                        double lo, double hi) {
  WindowData w;
  for (size_t i = 0; i < x.size(); ++i)
    if (x[i] >= lo && x[i] <= hi) {
      w.x.push_back(x[i]);
      w.y.push_back(y[i]);
    }
  if (w.x.size() < 8) throw FitError("fit window holds fewer than 8 samples");
  return w;
}

// Shared Levenberg-Marquardt driver for the 4-parameter feature models.
// model(p, x, f, J) fills the model value and the 4 partials at x.
template <typename Model>
DipFit lm_fit(const WindowData& w, std::array<double, 4> p, Model&& model,
              const char* model_name) {
  const size_t m = w.x.size();
  double lambda = 1e-3;
  double prev_ssr = 0.0;
  auto ssr_of = [&](const std::array<double, 4>& q) {
    double s = 0;
    std::array<double, 4> jrow;
    for (size_t i = 0; i < m; ++i) {
      const double f = model(q, w.x[i], jrow);
      s += (f - w.y[i]) * (f - w.y[i]);
    }
    return s;
  };
  prev_ssr = ssr_of(p);

  bool converged = false;
  for (int it = 0; it < 200 && !converged; ++it) {
    std::array<double, 16> jtj{};
    std::array<double, 4> jtr{};
    std::array<double, 4> jrow;
    for (size_t i = 0; i < m; ++i) {
      const double f = model(p, w.x[i], jrow);
      const double r = f - w.y[i];
      for (int a = 0; a < 4; ++a) {
        jtr[a] += jrow[a] * r;
        for (int b = 0; b < 4; ++b) jtj[a * 4 + b] += jrow[a] * jrow[b];
      }
    }
    bool stepped = false;
    for (int attempt = 0; attempt < 40 && !stepped; ++attempt) {
      std::array<double, 16> ad = jtj;
      for (int a = 0; a < 4; ++a) ad[a * 4 + a] += lambda * std::max(jtj[a * 4 + a], 1e-12);
      std::array<double, 4> step = {-jtr[0], -jtr[1], -jtr[2], -jtr[3]};
      try {
        solve4(ad, step);
      } catch (const FitError&) {
        lambda *= 10;
        continue;
      }
      std::array<double, 4> q = {p[0] + step[0], p[1] + step[1], p[2] + step[2], p[3] + step[3]};
      const double ssr = ssr_of(q);
      if (ssr <= prev_ssr) {
        double rel = 0;
        for (int a = 0; a < 4; ++a)
          rel = std::max(rel, std::abs(step[a]) / (std::abs(q[a]) + 1e-12));
        p = q;
        if (prev_ssr - ssr <= 1e-15 * (prev_ssr + 1e-30) || rel < 1e-12) converged = true;
        prev_ssr = ssr;
        lambda = std::max(lambda * 0.3, 1e-12);
        stepped = true;
      } else {
        lambda *= 10;
      }
    }
    if (!stepped) converged = true;  // stuck at a minimum sharper than the damping
  }
  if (!(prev_ssr >= 0) || !std::isfinite(p[0]) || !std::isfinite(p[3]))
    throw FitError("feature fit did not converge");

  DipFit fit;
  fit.model = model_name;
  fit.converged = true;
  fit.baseline = p[0];
  fit.amplitude = p[1] / p[0];
  fit.center_um = p[2];
  fit.sigma_um = std::abs(p[3]);
  fit.polarity = p[1] < 0 ? -1 : +1;
  fit.residual_rms = std::sqrt(prev_ssr / m);

  // covariance = ssr/(m-4) (J^T J)^{-1}
  std::array<double, 16> jtj{};
  std::array<double, 4> jrow;
  for (size_t i = 0; i < m; ++i) {
    model(p, w.x[i], jrow);
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) jtj[a * 4 + b] += jrow[a] * jrow[b];
  }
  const double s2 = prev_ssr / std::max<size_t>(1, m - 4);
  try {
    fit.covariance = invert4(jtj);
    for (auto& c : fit.covariance) c *= s2;
  } catch (const FitError&) {
    throw FitError("ill-conditioned fit covariance");
  }

  // Raw fractional depth at the fitted center; bounded by the mode overlap.
  const double yc = interp(w.x, w.y, fit.center_um);
  fit.visibility = fit.polarity < 0 ? (fit.baseline - yc) / fit.baseline
                                    : (yc - fit.baseline) / fit.baseline;
  if (fit.visibility > 1.0) fit.flagged = true;
  return fit;
}

}  // namespace

// ---------------------------------------------------------------------------

std::vector<Feature> detect_features(const Interferogram& ig, double min_prominence) {
  const auto y = ig.measured_rate();
  const auto& x = ig.delay_um;
  const size_t n = y.size();
  if (n < 20) throw std::invalid_argument("scan too short to estimate a baseline");

  const size_t wing = std::max<size_t>(3, static_cast<size_t>(0.15 * n) / 2);
  double base = 0.5 * (mean_of(y, 0, wing) + mean_of(y, n - wing, n));
  double var = 0.0;
  for (size_t i = 0; i < wing; ++i) {
    var += (y[i] - base) * (y[i] - base);
    var += (y[n - 1 - i] - base) * (y[n - 1 - i] - base);
  }
  const double noise = std::sqrt(var / (2.0 * wing));
  const double thr = std::max(min_prominence, 4.0 * noise);
  const double enter = 0.5 * thr;

  std::vector<Feature> out;
  size_t i = 0;
  while (i < n) {
    if (std::abs(y[i] - base) <= enter) {
      ++i;
      continue;
    }
    const int sign = y[i] > base ? +1 : -1;
    size_t j = i, ext = i;
    while (j < n && sign * (y[j] - base) > enter) {
      if (sign * (y[j] - base) > sign * (y[ext] - base)) ext = j;
      ++j;
    }
    const double dev = y[ext] - base;
    if (std::abs(dev) >= thr) {
      Feature f;
      f.center_um = x[ext];
      f.polarity = sign;
      f.amplitude_est = dev;
      // half-extremum crossings inside the run
      const double half = base + dev / 2.0;
      size_t l = ext, r = ext;
      while (l > i && sign * (y[l] - half) > 0) --l;
      while (r + 1 < j && sign * (y[r] - half) > 0) ++r;
      f.width_est_um = std::max(x[r] - x[l], 2.0 * (x[1] - x[0]));
      out.push_back(f);
    }
    i = j;
  }

  // fitting windows: +-3 widths, clipped against neighbors and scan edges
  for (size_t k = 0; k < out.size(); ++k) {
    double half = 3.0 * out[k].width_est_um;
    if (k > 0) half = std::min(half, 0.45 * (out[k].center_um - out[k - 1].center_um));
    if (k + 1 < out.size())
      half = std::min(half, 0.45 * (out[k + 1].center_um - out[k].center_um));
    out[k].window_lo_um = std::max(out[k].center_um - half, x.front());
    out[k].window_hi_um = std::min(out[k].center_um + half, x.back());
  }
  return out;
}

DipFit fit_gaussian(const std::vector<double>& x, const std::vector<double>& y,
                    double window_lo, double window_hi) {
  const WindowData w = slice_window(x, y, window_lo, window_hi);
  // initial guesses from the window itself
  const size_t m = w.x.size();
  const size_t edge = std::max<size_t>(2, m / 8);
  const double b0 = 0.5 * (mean_of(w.y, 0, edge) + mean_of(w.y, m - edge, m));
  size_t ext = 0;
  for (size_t i = 1; i < m; ++i)
    if (std::abs(w.y[i] - b0) > std::abs(w.y[ext] - b0)) ext = i;
  const double a0 = w.y[ext] - b0;
  const double half = b0 + a0 / 2;
  size_t l = ext, r = ext;
  while (l > 0 && (a0 < 0 ? w.y[l] < half : w.y[l] > half)) --l;
  while (r + 1 < m && (a0 < 0 ? w.y[r] < half : w.y[r] > half)) ++r;
  const double s0 = std::max((w.x[r] - w.x[l]) / 2.3548, (w.x[1] - w.x[0]));

  auto model = [](const std::array<double, 4>& p, double x0, std::array<double, 4>& J) {
    const double dx = x0 - p[2];
    const double s2 = p[3] * p[3];
    const double g = std::exp(-dx * dx / (2 * s2));
    J[0] = 1.0;
    J[1] = g;
    J[2] = p[1] * g * dx / s2;
    J[3] = p[1] * g * dx * dx / (s2 * p[3]);
    return p[0] + p[1] * g;
  };
  DipFit fit = lm_fit(WindowData{w.x, w.y}, {b0, a0, w.x[ext], s0}, model, "gaussian");
  fit.fwhm_um = 2.3548200450309493 * fit.sigma_um;
  return fit;
}

DipFit fit_gaussian(const Interferogram& ig, const Feature& feature) {
  return fit_gaussian(ig.delay_um, ig.measured_rate(), feature.window_lo_um,
                      feature.window_hi_um);
}

DipFit fit_triangular(const std::vector<double>& x, const std::vector<double>& y,
                      double window_lo, double window_hi) {
  const WindowData w = slice_window(x, y, window_lo, window_hi);
  const size_t m = w.x.size();
  const size_t edge = std::max<size_t>(2, m / 8);
  const double b0 = 0.5 * (mean_of(w.y, 0, edge) + mean_of(w.y, m - edge, m));
  size_t ext = 0;
  for (size_t i = 1; i < m; ++i)
    if (std::abs(w.y[i] - b0) > std::abs(w.y[ext] - b0)) ext = i;
  const double a0 = w.y[ext] - b0;
  const double s0 = std::max(0.25 * (window_hi - window_lo), 2 * (w.x[1] - w.x[0]));

  auto model = [](const std::array<double, 4>& p, double x0, std::array<double, 4>& J) {
    const double u = std::abs(x0 - p[2]) / std::abs(p[3]);
    const double tri = u < 1.0 ? 1.0 - u : 0.0;
    J[0] = 1.0;
    J[1] = tri;
    if (u < 1.0 && u > 0) {
      const double sgn = x0 > p[2] ? 1.0 : -1.0;
      J[2] = p[1] * sgn / std::abs(p[3]);
      J[3] = p[1] * u / std::abs(p[3]);
    } else {
      J[2] = 0.0;
      J[3] = 0.0;
    }
    return p[0] + p[1] * tri;
  };
  DipFit fit = lm_fit(WindowData{w.x, w.y}, {b0, a0, w.x[ext], s0}, model, "triangular");
  fit.fwhm_um = std::abs(fit.sigma_um);  // half-base of the triangle = its FWHM
  return fit;
}

LayerEstimate extract_layers(const std::vector<DipFit>& class1_fits) {
  if (class1_fits.empty())
    throw std::invalid_argument("extract_layers: no class-1 surface features");
  std::vector<DipFit> fits = class1_fits;
  std::sort(fits.begin(), fits.end(),
            [](const DipFit& a, const DipFit& b) { return a.center_um < b.center_um; });
  LayerEstimate est;
  for (const auto& f : fits) est.surface_delays_um.push_back(f.center_um);
  for (size_t i = 1; i < fits.size(); ++i)
    est.optical_path_lengths_um.push_back(fits[i].center_um - fits[i - 1].center_um);
  const double v0 = fits.front().visibility;
  for (const auto& f : fits)
    est.relative_reflectances.push_back(v0 > 0 ? f.visibility / v0 : 0.0);
  return est;
}

// ---------------------------------------------------------------------------

DitherClassification classify_by_dither(const Interferogram& undithered,
                                        const std::vector<Interferogram>& dithered,
                                        double suppression_threshold, double min_prominence) {
  if (dithered.size() < 5)
    throw InsufficientDitherSpan("need at least 5 dithered scans");
  for (const auto& s : dithered)
    if (s.delay_um != undithered.delay_um)
      throw std::invalid_argument("classify_by_dither: mismatched delay axes");

  DitherClassification cls;
  cls.class1_scan = undithered;
  const size_t n = undithered.rate.size();
  std::vector<double> mean(n, 0.0);
  for (const auto& s : dithered) {
    const auto r = s.measured_rate();
    for (size_t i = 0; i < n; ++i) mean[i] += r[i];
  }
  for (auto& v : mean) v /= dithered.size();
  cls.class1_scan.rate = mean;
  cls.class1_scan.counts.clear();

  const auto und = undithered.measured_rate();
  cls.class2_residual.resize(n);
  for (size_t i = 0; i < n; ++i) cls.class2_residual[i] = und[i] - mean[i];

  cls.features = detect_features(undithered, min_prominence);
  for (const auto& f : cls.features) {
    const double und_dev = interp(undithered.delay_um, und, f.center_um) - 1.0;
    const double mean_dev = interp(undithered.delay_um, mean, f.center_um) - 1.0;
    const bool class1 = std::abs(mean_dev) >= std::abs(und_dev) / 2.0;
    cls.labels.push_back(class1 ? 1 : 2);
    cls.suppression.push_back(std::abs(und_dev) / std::max(std::abs(mean_dev), 1e-15));
  }
  for (size_t k = 0; k < cls.features.size(); ++k) {
    if (cls.labels[k] == 2 && cls.suppression[k] < suppression_threshold)
      throw InsufficientDitherSpan("class-2 suppression " + std::to_string(cls.suppression[k]) +
                                   " below threshold");
  }
  return cls;
}

double dither_polarity_period_nm(double separation_um, double pump_center_nm) {
  if (separation_um <= 0) throw std::invalid_argument("separation must be positive");
  return pump_center_nm * pump_center_nm / (separation_um * 1000.0);
}

std::vector<double> dither_detunings(double span_nm, int count) {
  if (count < 2) throw std::invalid_argument("dither_detunings: count must be >= 2");
  std::vector<double> d(count);
  for (int j = 0; j < count; ++j) d[j] = (j - count / 2) * span_nm / count;
  return d;
}

DitherPlan plan_dither_schedule(const Interferogram& undithered,
                                const std::function<Interferogram(double)>& run_at_detuning,
                                double initial_span_nm, int count, int max_doublings,
                                double suppression_threshold) {
  double span = initial_span_nm;
  for (int attempt = 0; attempt <= max_doublings; ++attempt, span *= 2) {
    DitherPlan plan;
    plan.span_nm = span;
    plan.detunings_nm = dither_detunings(span, count);
    std::vector<Interferogram> scans;
    scans.reserve(count);
    for (const double det : plan.detunings_nm) scans.push_back(run_at_detuning(det));
    try {
      plan.classification =
          classify_by_dither(undithered, scans, suppression_threshold);
      return plan;
    } catch (const InsufficientDitherSpan&) {
      if (attempt == max_doublings) throw;
    }
  }
  throw InsufficientDitherSpan("dither span search failed");
}

// ---------------------------------------------------------------------------

ForwardContext ForwardContext::from_interferogram(const Interferogram& ig) {
  const auto& m = ig.meta;
  auto need = [&](const std::string& k) -> const std::string& {
    const auto it = m.find(k);
    if (it == m.end())
      throw std::invalid_argument("interferogram metadata lacks '" + k + "'");
    return it->second;
  };
  PumpSpec pump;
  pump.center_wavelength_nm = std::stod(need("pump_center_nm"));
  pump.bandwidth_fwhm_nm = std::stod(need("pump_bandwidth_fwhm_nm"));
  pump.detuning_nm = std::stod(need("pump_detuning_nm"));
  pump.envelope = need("pump_envelope") == "cw" ? PumpSpec::Envelope::cw
                                                : PumpSpec::Envelope::gaussian;
  const CrystalSpec crystal = CrystalSpec::type_ii(
      MaterialDatabase::builtin().get(need("crystal_material")),
      std::stod(need("crystal_length_mm")), std::stod(need("degenerate_wavelength_nm")),
      need("exact_phase_matching") == "1");
  ForwardContext ctx{joint_spectral_amplitude(pump, crystal,
                                              static_cast<int>(std::stod(need("grid_size")))),
                     std::stod(need("mode_overlap")), 0.25};
  if (ig.delay_um.size() > 1) ctx.delay_step_um = ig.delay_um[1] - ig.delay_um[0];
  return ctx;
}

namespace {

// Width of the cross feature of a synthetic two-surface stack whose gap has
// the trial beta2 (separation and everything else held at the measurement).
double forward_cross_width(const ForwardContext& ctx, double separation_um,
                           double gap_length_mm, double beta2, double cross_fwhm_guess) {
  BetaExpansion gap;
  gap.omega0 = ctx.js.omega0;
  gap.beta0 = 0.0;  // polarity is irrelevant to the width
  gap.beta1 = separation_um / (kSpeedOfLightUmPerFs * gap_length_mm);
  gap.beta2 = beta2;
  gap.beta3 = 0.0;

  SampleStack stack;
  stack.name = "gvd-trial";
  stack.include_transmission_losses = false;
  stack.interfaces.push_back({cplx(0.2), "s0"});
  stack.layers.push_back(Layer::from_expansion(gap, gap_length_mm * 1000.0));
  stack.interfaces.push_back({cplx(0.2), "s1"});

  const double mid = separation_um / 2.0;
  ScanConfig cfg;
  const double half = std::max(6.0 * cross_fwhm_guess, 0.3 * separation_um * 0.9);
  cfg.delay_start_um = mid - std::min(half, 0.45 * separation_um);
  cfg.delay_end_um = mid + std::min(half, 0.45 * separation_um);
  cfg.delay_step_um = ctx.delay_step_um;
  cfg.mode_overlap = ctx.mode_overlap;

  std::vector<double> grid(ctx.js.n);
  for (int k = 0; k < ctx.js.n; ++k) grid[k] = ctx.js.omega(k);
  const auto tf = stack_response(stack, grid);
  const auto h = project_channel(tf, Polarization::H);
  const Interferogram ig = qoct_scan(ctx.js, h, cfg);
  const DipFit fit = fit_gaussian(ig.delay_um, ig.rate, cfg.delay_start_um, cfg.delay_end_um);
  return fit.fwhm_um;
}

}  // namespace

GvdEstimate estimate_gvd(const DipFit& surface0, const DipFit& surface1, const DipFit& cross,
                         double interstitial_length_mm, const ForwardContext& ctx) {
  if (interstitial_length_mm <= 0)
    throw std::invalid_argument("estimate_gvd: interstitial length must be positive");
  const double separation = std::abs(surface1.center_um - surface0.center_um);
  const double target = cross.fwhm_um;

  GvdEstimate est;
  est.interstitial_length_mm = interstitial_length_mm;

  auto width_of = [&](double b2) {
    return forward_cross_width(ctx, separation, interstitial_length_mm, b2, cross.fwhm_um);
  };

  const double w0 = width_of(0.0);
  // width uncertainty from the cross fit, floored at the numerical noise of
  // the forward pipeline
  const double sigma_w = std::max(cross.fwhm_sigma(), 1e-6 * target);
  if (target <= w0 + sigma_w) {
    est.beta2_fs2_mm = 0.0;
    est.uncertainty_fs2_mm = sigma_w > 0 ? sigma_w : 0.0;
    est.consistent_with_zero = true;
    return est;
  }

  double hi = 64.0;
  while (width_of(hi) < target) {
    hi *= 2.0;
    if (hi > 4.0e5) throw std::runtime_error("estimate_gvd: bracket search failed");
  }
  double lo = 0.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (width_of(mid) < target) lo = mid;
    else hi = mid;
    if (hi - lo < std::max(1e-10, 1e-12 * hi)) break;
  }
  est.beta2_fs2_mm = 0.5 * (lo + hi);

  // propagate the width uncertainty through the local slope of the map
  const double db = std::max(1.0, 0.05 * est.beta2_fs2_mm);
  const double slope = (width_of(est.beta2_fs2_mm + db) -
                        width_of(std::max(0.0, est.beta2_fs2_mm - db))) /
                       (est.beta2_fs2_mm + db - std::max(0.0, est.beta2_fs2_mm - db));
  est.uncertainty_fs2_mm = slope > 0 ? sigma_w / slope : 0.0;
  est.consistent_with_zero = est.beta2_fs2_mm <= est.uncertainty_fs2_mm;
  return est;
}

// ---------------------------------------------------------------------------

PolarizationSet PolarizationSet::from_scan(const PolarizationScan& ps) {
  PolarizationSet set;
  set.r_h = ps.r_h;
  set.r_v = ps.r_v;
  set.lambda0 = ps.lambda0;
  set.validate();
  return set;
}

void PolarizationSet::validate() const {
  if (r_h.delay_um != r_v.delay_um)
    throw std::invalid_argument("polarization set: R_H and R_V axes differ");
}

PolarizationReport combine_polarization(const PolarizationSet& ps,
                                        const std::vector<double>& feature_positions_um) {
  ps.validate();
  PolarizationReport rep;
  rep.r_t = ps.r_h;
  rep.r_t.counts.clear();
  rep.r_t.meta["reference_polarization"] = "T";
  const auto rh = ps.r_h.measured_rate();
  const auto rv = ps.r_v.measured_rate();
  for (size_t i = 0; i < rh.size(); ++i) rep.r_t.rate[i] = rh[i] + rv[i] - 1.0;

  std::vector<double> positions = feature_positions_um;
  std::vector<Feature> detected;
  // windows come from whichever channel shows the feature more strongly
  const auto feats_h = detect_features(ps.r_h, 0.005);
  std::vector<Feature> feats_v;
  try {
    feats_v = detect_features(ps.r_v, 0.005);
  } catch (const std::exception&) {
  }
  auto all = feats_h;
  all.insert(all.end(), feats_v.begin(), feats_v.end());
  if (positions.empty())
    for (const auto& f : feats_h) positions.push_back(f.center_um);

  for (const double pos : positions) {
    const Feature* best = nullptr;
    for (const auto& f : all)
      if (!best || std::abs(f.center_um - pos) < std::abs(best->center_um - pos)) best = &f;
    if (!best || std::abs(best->center_um - pos) > 0.25 * (ps.r_h.delay_um.back() -
                                                           ps.r_h.delay_um.front()))
      throw std::invalid_argument("combine_polarization: no feature near position " +
                                  std::to_string(pos));
    LambdaRatio lr;
    lr.position_um = pos;
    auto amp_of = [&](const Interferogram& ig) {
      const auto y = ig.measured_rate();
      double dev = 0.0;
      for (size_t i = 0; i < y.size(); ++i)
        if (ig.delay_um[i] >= best->window_lo_um && ig.delay_um[i] <= best->window_hi_um)
          dev = std::max(dev, std::abs(y[i] - 1.0));
      if (dev < 1e-9) return 0.0;  // dark channel at this feature
      const DipFit f = fit_gaussian(ig.delay_um, y, best->window_lo_um, best->window_hi_um);
      return std::abs(f.amplitude) * f.baseline;
    };
    lr.amplitude_h = amp_of(ps.r_h);
    lr.amplitude_v = amp_of(ps.r_v);
    lr.ratio = lr.amplitude_h > 0 ? lr.amplitude_v / lr.amplitude_h
                                  : (lr.amplitude_v > 0
                                         ? std::numeric_limits<double>::infinity()
                                         : 0.0);
    rep.ratios.push_back(lr);
  }
  return rep;
}

namespace {

// Scan a forward curve for all crossings of `target`, refining each bracket
// by bisection. Shared by the retardation and axis-angle inversions.
std::vector<double> scan_roots(const std::function<double(double)>& f, double lo, double hi,
                               int samples, double target, bool& flat) {
  std::vector<double> xs(samples), ys(samples);
  double ymin = 1e300, ymax = -1e300;
  for (int i = 0; i < samples; ++i) {
    xs[i] = lo + (hi - lo) * i / (samples - 1);
    ys[i] = f(xs[i]) - target;
    ymin = std::min(ymin, ys[i] + target);
    ymax = std::max(ymax, ys[i] + target);
  }
  flat = (ymax - ymin) < 1e-9 * (std::abs(ymax) + 1.0);
  std::vector<double> roots;
  for (int i = 0; i + 1 < samples; ++i) {
    if (ys[i] == 0.0) {
      roots.push_back(xs[i]);
      continue;
    }
    if (ys[i] * ys[i + 1] < 0) {
      double a = xs[i], b = xs[i + 1], fa = ys[i];
      for (int it = 0; it < 80; ++it) {
        const double m = 0.5 * (a + b);
        const double fm = f(m) - target;
        if (fa * fm <= 0) b = m;
        else { a = m; fa = fm; }
      }
      roots.push_back(0.5 * (a + b));
    }
  }
  if (ys.back() == 0.0) roots.push_back(xs.back());

  // A target at an extremum of the curve (e.g. the half-wave null) produces
  // no sign change; accept the touching point when the curve comes within
  // numerical reach of the target there.
  if (roots.empty() && !flat) {
    size_t best = 0;
    double spread = 0;
    for (size_t i = 0; i < ys.size(); ++i) {
      if (std::abs(ys[i]) < std::abs(ys[best])) best = i;
      spread = std::max(spread, std::abs(ys[i]));
    }
    if (std::abs(ys[best]) < 1e-3 * spread) {
      double a = xs[best > 0 ? best - 1 : 0];
      double b = xs[std::min(best + 1, xs.size() - 1)];
      for (int it = 0; it < 120; ++it) {
        const double m1 = a + (b - a) / 3, m2 = b - (b - a) / 3;
        if (std::abs(f(m1) - target) < std::abs(f(m2) - target)) b = m2;
        else a = m1;
      }
      roots.push_back(0.5 * (a + b));
    }
  }

  // cluster near-identical roots (two brackets straddling the same point)
  std::sort(roots.begin(), roots.end());
  std::vector<double> unique;
  const double tol = 0.02 * (hi - lo);
  for (const double r : roots) {
    if (!unique.empty() && r - unique.back() <= tol)
      unique.back() = 0.5 * (unique.back() + r);
    else
      unique.push_back(r);
  }
  return unique;
}

}  // namespace

BirefringenceEstimate extract_birefringence(const PolarizationSet& ps, double layer_position_um,
                                            const std::function<double(double)>& ratio_of_delta,
                                            double delta_min, double delta_max,
                                            int scan_samples) {
  const PolarizationReport rep = combine_polarization(ps, {layer_position_um});
  const double target = rep.ratios.front().ratio;

  BirefringenceEstimate est;
  est.target_ratio = target;
  bool flat = false;
  // The ratio diverges where the H channel nulls (half-wave round trip), so
  // the inversion runs on the bounded transform atan(ratio).
  auto bounded = [&ratio_of_delta](double delta) { return std::atan(ratio_of_delta(delta)); };
  est.roots_rad = scan_roots(bounded, delta_min, delta_max, scan_samples,
                             std::atan(target), flat);
  est.non_identifiable = flat;
  if (est.roots_rad.empty()) {
    if (flat) return est;  // flagged, nothing recoverable
    throw std::domain_error(
        "extract_birefringence: measured ratio outside the achievable range of the "
        "forward curve");
  }
  est.ambiguous = est.roots_rad.size() > 1;
  est.delta_rad = est.roots_rad.front();
  return est;
}

double third_measurement_angle(const JointSpectrum& js, const TransferFunction& tf,
                               const ScanConfig& cfg, double layer_position_um) {
  // envelope amplitude at the layer as a function of the reference analyzer
  // angle; coarse scan then parabolic refinement
  auto amp_at = [&](double chi) {
    const Interferogram ig = rotated_reference_scan(js, tf, cfg, chi);
    double dev = 0.0;
    for (size_t i = 0; i < ig.rate.size(); ++i)
      if (std::abs(ig.delay_um[i] - layer_position_um) < 20 * cfg.delay_step_um)
        dev = std::max(dev, std::abs(ig.rate[i] - 1.0));
    return dev;
  };
  const int n = 90;
  double best_chi = 0, best_amp = -1;
  std::vector<double> amps(n);
  for (int i = 0; i < n; ++i) {
    const double chi = kPi * i / n;
    amps[i] = amp_at(chi);
    if (amps[i] > best_amp) {
      best_amp = amps[i];
      best_chi = chi;
    }
  }
  // parabolic refinement on the periodic neighbors
  const int i0 = static_cast<int>(std::round(best_chi / (kPi / n)));
  const double ym = amps[(i0 + n - 1) % n], y0 = amps[i0 % n], yp = amps[(i0 + 1) % n];
  const double denom = ym - 2 * y0 + yp;
  double off = 0.0;
  if (std::abs(denom) > 1e-15) off = 0.5 * (ym - yp) / denom;
  double chi = best_chi + off * (kPi / n);
  if (chi < 0) chi += kPi;
  if (chi >= kPi) chi -= kPi;
  return chi;
}

BirefringenceEstimate invert_axis_angle(double measured_chi,
                                        const std::function<double(double)>& chi_of_alpha,
                                        double alpha_min, double alpha_max, int scan_samples) {
  BirefringenceEstimate est;
  est.target_ratio = measured_chi;
  bool flat = false;
  est.roots_rad =
      scan_roots(chi_of_alpha, alpha_min, alpha_max, scan_samples, measured_chi, flat);
  est.non_identifiable = flat;
  if (est.roots_rad.empty() && !flat)
    throw std::domain_error("invert_axis_angle: angle outside the forward curve range");
  if (!est.roots_rad.empty()) {
    est.ambiguous = est.roots_rad.size() > 1;
    est.delta_rad = est.roots_rad.front();
  }
  return est;
}

}  // namespace qoct
