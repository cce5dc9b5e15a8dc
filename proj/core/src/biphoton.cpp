#include "qoct/biphoton.hpp"

#include <cmath>

#include "qoct/units.hpp"

namespace qoct {

double PumpSpec::transform_limited_bandwidth_nm(double duration_fwhm_ps,
                                                double center_wavelength_nm) {
  // Gaussian time-bandwidth product dt * dnu = 2 ln2 / pi = 0.4413
  const double dt_fs = duration_fwhm_ps * 1000.0;
  const double dnu_per_fs = 2.0 * std::log(2.0) / kPi / dt_fs;  // 1/fs
  const double domega = 2.0 * kPi * dnu_per_fs;                 // rad/fs
  return domega * center_wavelength_nm * center_wavelength_nm /
         (2.0 * kPi * kSpeedOfLightNmPerFs);
}

double PumpSpec::omega_center() const {
  return omega_from_wavelength_nm(center_wavelength_nm + detuning_nm);
}

double PumpSpec::sigma_omega() const {
  const double dw = bandwidth_nm_to_omega_fwhm(bandwidth_fwhm_nm, center_wavelength_nm);
  return dw / (2.0 * std::sqrt(std::log(2.0)));
}

// ---------------------------------------------------------------------------

namespace {

// e-wave index at propagation angle theta from the optic axis:
// 1/n^2 = cos^2/n_o^2 + sin^2/n_e^2
Jet3 index_e_theta(const Material& m, const Jet3& lambda_um, double theta) {
  const Jet3 no2 = m.n2_jet(lambda_um, Axis::ordinary);
  const Jet3 ne2 = m.n2_jet(lambda_um, Axis::extraordinary);
  const double c2 = std::cos(theta) * std::cos(theta);
  const double s2 = 1.0 - c2;
  const Jet3 inv = c2 * reciprocal(no2) + s2 * reciprocal(ne2);
  return reciprocal(sqrt(inv));
}

double index_e_theta_value(const Material& m, double lambda_nm, double theta) {
  return index_e_theta(m, Jet3::constant(lambda_nm * 1e-3), theta).f;
}

Jet3 k_e_theta_jet(const Material& m, double omega, double theta) {
  const Jet3 w = Jet3::variable(omega);
  const Jet3 lambda_um = 2.0 * kPi * kSpeedOfLightUmPerFs / w;
  return w * index_e_theta(m, lambda_um, theta) / kSpeedOfLightMmPerFs;
}

}  // namespace

CrystalSpec CrystalSpec::type_ii_bbo(double length_mm, double degenerate_wavelength_nm,
                                     bool exact_phase_matching) {
  return type_ii(MaterialDatabase::builtin().get("bbo"), length_mm,
                 degenerate_wavelength_nm, exact_phase_matching);
}

CrystalSpec CrystalSpec::type_ii(const Material& material, double length_mm,
                                 double degenerate_wavelength_nm, bool exact_phase_matching) {
  if (length_mm <= 0) throw std::invalid_argument("crystal length must be positive");
  CrystalSpec c;
  c.material_ = material;
  c.length_mm_ = length_mm;
  c.degenerate_wavelength_nm_ = degenerate_wavelength_nm;
  c.omega0_ = omega_from_wavelength_nm(degenerate_wavelength_nm);
  c.exact_ = exact_phase_matching;

  // Bisect the cut angle for collinear degenerate Type-II phase matching:
  // 2 n_p(theta, lam/2) = n_e(theta, lam) + n_o(lam).
  const double lam = degenerate_wavelength_nm;
  const double no_deg = material.refractive_index(lam, Axis::ordinary);
  auto gap = [&](double th) {
    return 2.0 * index_e_theta_value(material, lam / 2, th) -
           index_e_theta_value(material, lam, th) - no_deg;
  };
  double lo = 1e-3, hi = kPi / 2 - 1e-3;
  double glo = gap(lo);
  if (glo * gap(hi) > 0)
    throw std::runtime_error(material.name() +
                             ": no Type-II collinear degenerate phase-matching angle");
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (glo * gap(mid) <= 0) hi = mid;
    else { lo = mid; glo = gap(lo); }
  }
  c.theta_ = 0.5 * (lo + hi);

  const Jet3 ks = k_e_theta_jet(material, c.omega0_, c.theta_);
  const Jet3 kp = k_e_theta_jet(material, 2 * c.omega0_, c.theta_);
  const Jet3 ki = material.k_jet(c.omega0_, Axis::ordinary);
  c.beta1_signal_ = ks.d1;
  c.beta1_idler_ = ki.d1;
  c.beta1_pump_ = kp.d1;
  c.k_const_ = kp.f - ks.f - ki.f;  // ~0 after the angle solve
  return c;
}

Jet3 CrystalSpec::index_e_theta_jet(double omega) const {
  const Jet3 w = Jet3::variable(omega);
  const Jet3 lambda_um = 2.0 * kPi * kSpeedOfLightUmPerFs / w;
  return index_e_theta(material_, lambda_um, theta_);
}

double CrystalSpec::k_signal(double omega) const {
  material_.check_wavelength(wavelength_nm_from_omega(omega));
  return k_e_theta_jet(material_, omega, theta_).f;
}
double CrystalSpec::k_idler(double omega) const {
  return material_.k_jet(omega, Axis::ordinary).f;
}
double CrystalSpec::k_pump(double omega) const {
  material_.check_wavelength(wavelength_nm_from_omega(omega));
  return k_e_theta_jet(material_, omega, theta_).f;
}

// ---------------------------------------------------------------------------

std::complex<double> pump_envelope(const PumpSpec& pump, double total_detuning,
                                   double grid_step) {
  // energy-conservation ridge center relative to the undetuned 2*w0
  const double ridge = pump.omega_center() -
                       omega_from_wavelength_nm(pump.center_wavelength_nm);
  const double x = total_detuning - ridge;
  if (pump.envelope == PumpSpec::Envelope::cw) {
    const double tol = grid_step > 0 ? grid_step / 2 : 1e-12;
    return std::abs(x) <= tol ? 1.0 : 0.0;
  }
  const double s = pump.sigma_omega();
  if (!(s > 0)) throw std::invalid_argument("gaussian pump needs positive bandwidth");
  return std::exp(-x * x / (2.0 * s * s));
}

double phase_mismatch(const CrystalSpec& c, double omega_s, double omega_i) {
  const double w0 = c.omega_degenerate();
  if (c.exact_phase_matching()) {
    const double full = c.k_pump(omega_s + omega_i) - c.k_signal(omega_s) - c.k_idler(omega_i);
    const double at_deg = c.k_pump(2 * w0) - c.k_signal(w0) - c.k_idler(w0);
    return full - at_deg;
  }
  return c.beta1_pump() * (omega_s + omega_i - 2 * w0) -
         c.beta1_signal() * (omega_s - w0) - c.beta1_idler() * (omega_i - w0);
}

JointSpectrum joint_spectral_amplitude(const PumpSpec& pump, const CrystalSpec& crystal,
                                       int grid_size, double span_rad_fs) {
  if (grid_size < 8) throw std::invalid_argument("grid_size too small");
  JointSpectrum js;
  js.n = grid_size;
  js.omega0 = crystal.omega_degenerate();
  js.pump = pump;
  js.crystal = crystal;

  const double gvm = std::abs(crystal.signal_idler_gvm());
  const double pm_span = 4.0 * 2.0 * kPi / (gvm * crystal.length_mm());
  const double ridge = pump.omega_center() - omega_from_wavelength_nm(pump.center_wavelength_nm);
  double pump_span = std::abs(ridge);
  if (pump.envelope == PumpSpec::Envelope::gaussian)
    pump_span += 6.0 * pump.sigma_omega();
  js.span = span_rad_fs > 0 ? span_rad_fs : std::max(pm_span, pump_span);
  js.step = 2.0 * js.span / grid_size;

  const int n = js.n;
  js.amp.resize(static_cast<size_t>(n) * n);
  const double L = crystal.length_mm();
  const double w0 = js.omega0;
  // The collinear degenerate operating point follows the pump: the residual
  // mismatch at (w_p/2, w_p/2) is removed so exact degeneracy stays phase
  // matched under detuning.
  const double w_deg = 0.5 * (2 * w0 + ridge);
  const double dk_ridge = phase_mismatch(crystal, w_deg, w_deg);
  double norm2 = 0.0;
  for (int s = 0; s < n; ++s) {
    const double ws = w0 + js.detuning(s);
    for (int i = 0; i < n; ++i) {
      const double wi = w0 + js.detuning(i);
      const std::complex<double> env =
          pump_envelope(pump, ws + wi - 2 * w0, js.step);
      std::complex<double> a;
      if (env == std::complex<double>(0.0)) {
        a = 0.0;
      } else {
        const double dk = phase_mismatch(crystal, ws, wi) - dk_ridge;
        a = env * sinc(dk * L / 2) * std::polar(1.0, dk * L / 2);
      }
      js.amp[static_cast<size_t>(s) * n + i] = a;
      norm2 += std::norm(a);
    }
  }
  if (norm2 <= 0) throw std::runtime_error("joint spectrum has no support on the grid");
  const double scale = 1.0 / std::sqrt(norm2 * js.step * js.step);
  for (auto& a : js.amp) a *= scale;

  const double border = js.border_mass(0.10);
  if (border > 0.01) {
    throw InsufficientGridSpan("joint spectrum grid span too small: " +
                               std::to_string(100 * border) +
                               "% of |A|^2 mass in the outer 10% border");
  }
  return js;
}

double JointSpectrum::border_mass(double frac) const {
  const int b = static_cast<int>(std::ceil(n * frac));
  double total = 0.0, inner = 0.0;
  for (int s = 0; s < n; ++s)
    for (int i = 0; i < n; ++i) {
      const double p = std::norm(at(s, i));
      total += p;
      if (s >= b && s < n - b && i >= b && i < n - b) inner += p;
    }
  return total > 0 ? (total - inner) / total : 0.0;
}

double anticorrelation(const JointSpectrum& js) {
  double w = 0, ms = 0, mi = 0;
  for (int s = 0; s < js.n; ++s)
    for (int i = 0; i < js.n; ++i) {
      const double p = std::norm(js.at(s, i));
      w += p;
      ms += p * js.detuning(s);
      mi += p * js.detuning(i);
    }
  ms /= w;
  mi /= w;
  double vss = 0, vii = 0, vsi = 0;
  for (int s = 0; s < js.n; ++s)
    for (int i = 0; i < js.n; ++i) {
      const double p = std::norm(js.at(s, i));
      const double ds = js.detuning(s) - ms, di = js.detuning(i) - mi;
      vss += p * ds * ds;
      vii += p * di * di;
      vsi += p * ds * di;
    }
  if (vss <= 0 || vii <= 0)
    throw std::domain_error("anticorrelation: zero-variance joint spectrum");
  return vsi / std::sqrt(vss * vii);
}

std::vector<double> signal_marginal(const JointSpectrum& js) {
  std::vector<double> out(js.n, 0.0);
  for (int s = 0; s < js.n; ++s) {
    double acc = 0.0;
    for (int i = 0; i < js.n; ++i) acc += std::norm(js.at(s, i));
    out[s] = acc * js.step;
  }
  return out;
}

}  // namespace qoct
