#include "qoct/interferometer.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "qoct/units.hpp"

namespace qoct {

void ScanConfig::validate() const {
  if (!(delay_step_um > 0)) throw std::invalid_argument("delay_step_um must be positive");
  if (!(delay_end_um > delay_start_um)) throw std::invalid_argument("empty scan window");
  if (!(mode_overlap >= 0.0 && mode_overlap <= 1.0))
    throw std::invalid_argument("mode_overlap must lie in [0, 1]");
  if (!(integration_time_s > 0) || !(rate_scale_cps > 0))
    throw std::invalid_argument("integration time and rate scale must be positive");
}

std::vector<double> ScanConfig::delays() const {
  std::vector<double> d;
  const int n = static_cast<int>(std::floor((delay_end_um - delay_start_um) / delay_step_um + 1e-9)) + 1;
  d.reserve(n);
  for (int k = 0; k < n; ++k) d.push_back(delay_start_um + k * delay_step_um);
  return d;
}

std::vector<double> Interferogram::measured_rate() const {
  if (counts.empty()) return rate;
  std::vector<double> out(counts.size());
  const double scale = 1.0 / (rate_scale_cps * integration_time_s);
  for (size_t i = 0; i < counts.size(); ++i) out[i] = counts[i] * scale;
  return out;
}

namespace {

// Anti-diagonal collapse of the interference kernel: terms grouped by the
// difference index m = s - i, so Lambda(tau) = sum_m C[m] e^{-i m dW tau}.
struct EngineTerms {
  std::vector<cplx> c;  // index m + (n-1)
  double lambda0 = 0.0;
};

EngineTerms build_terms(const JointSpectrum& js, const std::vector<cplx>& h) {
  if (static_cast<int>(h.size()) != js.n)
    throw std::invalid_argument("channel length does not match the joint-spectrum grid");
  const int n = js.n;
  EngineTerms t;
  t.c.assign(2 * n - 1, cplx(0.0));
  const double w2 = js.step * js.step;
  for (int s = 0; s < n; ++s) {
    const double hs2 = std::norm(h[s]);
    for (int i = 0; i < n; ++i) {
      const cplx a = js.at(s, i);
      if (a == cplx(0.0)) continue;
      t.lambda0 += std::norm(a) * hs2;
      const cplx p = a * std::conj(js.at(i, s)) * h[s] * std::conj(h[i]);
      t.c[s - i + n - 1] += p;
    }
  }
  t.lambda0 *= w2;
  for (auto& v : t.c) v *= w2;
  return t;
}

// Crystal calibration: with this offset a bare mirror at zero depth dips at
// stage position d = 0 (matched group delays).
double crystal_delay_offset(const CrystalSpec& c) {
  return (c.beta1_idler() - c.beta1_signal()) * c.length_mm() / 2.0;
}

// The discrete frequency grid resolves delays only within one period of
// 2 pi / dW; wider windows would fold features onto aliases.
void check_delay_range(const JointSpectrum& js, const ScanConfig& cfg) {
  const double tau_span =
      2.0 * (cfg.delay_end_um - cfg.delay_start_um) / kSpeedOfLightUmPerFs;
  if (tau_span >= 2.0 * kPi / js.step)
    throw std::invalid_argument(
        "scan window exceeds the unambiguous delay range of the frequency grid; "
        "increase grid_size");
}

double clamp_rate(double r, bool& clamped) {
  if (r >= 0.0) return r;
  if (r < -1e-9) throw std::runtime_error("coincidence rate negative beyond numerical noise");
  clamped = true;
  return 0.0;
}

void fill_meta(Interferogram& ig, const JointSpectrum& js, const ScanConfig& cfg,
               double lambda0) {
  auto& m = ig.meta;
  auto put = [&](const std::string& k, double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    m[k] = os.str();
  };
  m["pump_envelope"] = js.pump.envelope == PumpSpec::Envelope::cw ? "cw" : "gaussian";
  put("pump_center_nm", js.pump.center_wavelength_nm);
  put("pump_bandwidth_fwhm_nm", js.pump.bandwidth_fwhm_nm);
  put("pump_detuning_nm", js.pump.detuning_nm);
  m["crystal_material"] = js.crystal.material().name();
  put("crystal_length_mm", js.crystal.length_mm());
  put("degenerate_wavelength_nm", js.crystal.degenerate_wavelength_nm());
  m["exact_phase_matching"] = js.crystal.exact_phase_matching() ? "1" : "0";
  put("grid_size", js.n);
  put("grid_span_rad_fs", js.span);
  put("mode_overlap", cfg.mode_overlap);
  m["reference_polarization"] = to_string(cfg.reference_polarization);
  put("rate_scale_cps", cfg.rate_scale_cps);
  put("integration_time_s", cfg.integration_time_s);
  m["rng_seed"] = std::to_string(cfg.rng_seed);
  put("lambda0", lambda0);
}

Interferogram scan_from_terms(const JointSpectrum& js, const EngineTerms& t,
                              double lambda0_norm, const ScanConfig& cfg) {
  cfg.validate();
  check_delay_range(js, cfg);
  Interferogram ig;
  ig.delay_um = cfg.delays();
  ig.rate.reserve(ig.delay_um.size());
  ig.baseline = lambda0_norm;
  ig.reference_polarization = cfg.reference_polarization;
  ig.rate_scale_cps = cfg.rate_scale_cps;
  ig.integration_time_s = cfg.integration_time_s;
  ig.rng_seed = cfg.rng_seed;

  const int n = js.n;
  const double tau_c = crystal_delay_offset(js.crystal);
  for (const double d : ig.delay_um) {
    const double tau = 2.0 * d / kSpeedOfLightUmPerFs + tau_c;
    cplx lam(0.0);
    for (int m = -(n - 1); m <= n - 1; ++m) {
      const cplx& cm = t.c[m + n - 1];
      if (cm == cplx(0.0)) continue;
      lam += cm * std::polar(1.0, -m * js.step * tau);
    }
    const double r = (lambda0_norm - cfg.mode_overlap * lam.real()) / lambda0_norm;
    ig.rate.push_back(clamp_rate(r, ig.clamped));
  }
  fill_meta(ig, js, cfg, lambda0_norm);
  return ig;
}

}  // namespace

Interferogram qoct_scan(const JointSpectrum& js, const std::vector<cplx>& channel,
                        const ScanConfig& cfg) {
  const EngineTerms t = build_terms(js, channel);
  if (t.lambda0 <= 0.0) throw std::runtime_error("scan baseline is zero (dark channel)");
  return scan_from_terms(js, t, t.lambda0, cfg);
}

Interferogram qoct_scan_direct(const JointSpectrum& js, const std::vector<cplx>& channel,
                               const ScanConfig& cfg) {
  cfg.validate();
  check_delay_range(js, cfg);
  if (static_cast<int>(channel.size()) != js.n)
    throw std::invalid_argument("channel length does not match the joint-spectrum grid");
  const int n = js.n;
  const double w2 = js.step * js.step;
  double lambda0 = 0.0;
  for (int s = 0; s < n; ++s)
    for (int i = 0; i < n; ++i) lambda0 += std::norm(js.at(s, i)) * std::norm(channel[s]);
  lambda0 *= w2;
  if (lambda0 <= 0.0) throw std::runtime_error("scan baseline is zero (dark channel)");

  Interferogram ig;
  ig.delay_um = cfg.delays();
  ig.baseline = lambda0;
  ig.reference_polarization = cfg.reference_polarization;
  ig.rate_scale_cps = cfg.rate_scale_cps;
  ig.integration_time_s = cfg.integration_time_s;
  ig.rng_seed = cfg.rng_seed;
  const double tau_c = crystal_delay_offset(js.crystal);
  for (const double d : ig.delay_um) {
    const double tau = 2.0 * d / kSpeedOfLightUmPerFs + tau_c;
    cplx lam(0.0);
    for (int s = 0; s < n; ++s) {
      for (int i = 0; i < n; ++i) {
        const cplx a = js.at(s, i);
        if (a == cplx(0.0)) continue;
        lam += a * std::conj(js.at(i, s)) * channel[s] * std::conj(channel[i]) *
               std::polar(1.0, -(js.detuning(s) - js.detuning(i)) * tau);
      }
    }
    lam *= w2;
    const double r = (lambda0 - cfg.mode_overlap * lam.real()) / lambda0;
    ig.rate.push_back(clamp_rate(r, ig.clamped));
  }
  fill_meta(ig, js, cfg, lambda0);
  return ig;
}

PolarizationScan polarization_scan(const JointSpectrum& js, const TransferFunction& tf,
                                   const ScanConfig& cfg) {
  const auto h_h = project_channel(tf, Polarization::H);
  const auto h_v = project_channel(tf, Polarization::V);
  const EngineTerms th = build_terms(js, h_h);
  const EngineTerms tv = build_terms(js, h_v);
  const double lambda0 = th.lambda0 + tv.lambda0;
  if (lambda0 <= 0.0) throw std::runtime_error("polarization scan baseline is zero");

  PolarizationScan out;
  out.lambda0 = lambda0;
  ScanConfig ch = cfg;
  ch.reference_polarization = Polarization::H;
  out.r_h = scan_from_terms(js, th, lambda0, ch);
  ScanConfig cv = cfg;
  cv.reference_polarization = Polarization::V;
  out.r_v = scan_from_terms(js, tv, lambda0, cv);
  return out;
}

Interferogram rotated_reference_scan(const JointSpectrum& js, const TransferFunction& tf,
                                     const ScanConfig& cfg, double chi_rad) {
  const auto h_h = project_channel(tf, Polarization::H);
  const auto h_v = project_channel(tf, Polarization::V);
  std::vector<cplx> h(h_h.size());
  const double c = std::cos(chi_rad), s = std::sin(chi_rad);
  for (size_t i = 0; i < h.size(); ++i) h[i] = c * h_h[i] + s * h_v[i];
  const double lambda0 = build_terms(js, h_h).lambda0 + build_terms(js, h_v).lambda0;
  const EngineTerms t = build_terms(js, h);
  return scan_from_terms(js, t, lambda0, cfg);
}

OctScan oct_scan(const JointSpectrum& js, const std::vector<double>& source_spectrum,
                 const std::vector<cplx>& channel, const ScanConfig& cfg) {
  cfg.validate();
  check_delay_range(js, cfg);
  if (source_spectrum.size() != channel.size() ||
      static_cast<int>(channel.size()) != js.n)
    throw std::invalid_argument("oct_scan: spectrum/channel/grid size mismatch");
  double total = 0.0;
  for (const double s : source_spectrum) {
    if (s < 0) throw std::invalid_argument("oct_scan: negative spectral density");
    total += s;
  }
  if (total <= 0) throw std::invalid_argument("oct_scan: empty source spectrum");

  OctScan out;
  out.fringes.delay_um = cfg.delays();
  out.fringes.baseline = total;
  out.fringes.rate_scale_cps = cfg.rate_scale_cps;
  out.fringes.integration_time_s = cfg.integration_time_s;
  out.fringes.rng_seed = cfg.rng_seed;
  out.envelope.reserve(out.fringes.delay_um.size());
  for (const double d : out.fringes.delay_um) {
    const double tau = 2.0 * d / kSpeedOfLightUmPerFs;
    cplx g(0.0);
    for (int k = 0; k < js.n; ++k)
      g += source_spectrum[k] * channel[k] * std::polar(1.0, -js.omega(k) * tau);
    g /= total;
    out.fringes.rate.push_back(1.0 + cfg.mode_overlap * g.real());
    out.envelope.push_back(cfg.mode_overlap * std::abs(g));
  }
  fill_meta(out.fringes, js, cfg, total);
  out.fringes.meta["scan_kind"] = "oct";
  return out;
}

// ---------------------------------------------------------------------------
// counting noise

namespace {

inline std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline double uniform01(std::uint64_t& state) {
  return (splitmix64(state) >> 11) * 0x1.0p-53;
}

// Knuth's product-of-uniforms method, exact for small means.
std::int64_t poisson_knuth(double mean, std::uint64_t& state) {
  const double limit = std::exp(-mean);
  std::int64_t k = -1;
  double p = 1.0;
  do {
    ++k;
    p *= uniform01(state);
  } while (p > limit);
  return k;
}

}  // namespace

std::int64_t poisson_sample(double mean, std::uint64_t seed, std::uint64_t counter) {
  if (mean < 0) throw std::invalid_argument("poisson_sample: negative mean");
  if (mean == 0) return 0;
  std::uint64_t state = seed ^ (counter * 0xD1B54A32D192ED03ULL + 0x2545F4914F6CDD1DULL);
  splitmix64(state);  // decorrelate nearby counters
  // Split large means into exact partial sums so the product method stays
  // numerically safe.
  std::int64_t total = 0;
  double remaining = mean;
  while (remaining > 30.0) {
    total += poisson_knuth(30.0, state);
    remaining -= 30.0;
  }
  total += poisson_knuth(remaining, state);
  return total;
}

Interferogram apply_counting_noise(const Interferogram& ig, const ScanConfig& cfg) {
  Interferogram out = ig;
  out.counts.resize(ig.rate.size());
  out.rate_scale_cps = cfg.rate_scale_cps;
  out.integration_time_s = cfg.integration_time_s;
  out.rng_seed = cfg.rng_seed;
  for (size_t k = 0; k < ig.rate.size(); ++k) {
    if (ig.rate[k] < 0) throw std::invalid_argument("apply_counting_noise: negative rate");
    const double mean = cfg.rate_scale_cps * ig.rate[k] * cfg.integration_time_s;
    out.counts[k] = poisson_sample(mean, cfg.rng_seed, k);
  }
  out.meta["rng_seed"] = std::to_string(cfg.rng_seed);
  {
    std::ostringstream os;
    os.precision(17);
    os << cfg.rate_scale_cps;
    out.meta["rate_scale_cps"] = os.str();
    os.str("");
    os << cfg.integration_time_s;
    out.meta["integration_time_s"] = os.str();
  }
  return out;
}

}  // namespace qoct
