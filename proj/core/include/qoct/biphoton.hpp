#pragma once
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include "qoct/material.hpp"
#include "qoct/units.hpp"

namespace qoct {

/// Pump pulse spectrum at the second harmonic (400 nm presets).
struct PumpSpec {
  enum class Envelope { gaussian, cw };

  double center_wavelength_nm = 400.0;
  double bandwidth_fwhm_nm = 2.0;  // spectral intensity FWHM; ignored for cw
  Envelope envelope = Envelope::gaussian;
  double detuning_nm = 0.0;  // dither offset added to the center wavelength

  /// Transform-limited spectral bandwidth (intensity FWHM, nm) of a Gaussian
  /// pulse of the given duration, at this pump's center wavelength.
  static double transform_limited_bandwidth_nm(double duration_fwhm_ps,
                                               double center_wavelength_nm = 400.0);

  double omega_center() const;     // rad/fs, detuning included
  double sigma_omega() const;      // amplitude-envelope sigma, rad/fs
};

/// Type-II collinear degenerate SPDC crystal. The cut angle is fixed at
/// construction so that k_p(2 w0) = k_e(w0) + k_o(w0) holds exactly at the
/// degenerate point (signal extraordinary, idler ordinary).
class CrystalSpec {
 public:
  static CrystalSpec type_ii_bbo(double length_mm,
                                 double degenerate_wavelength_nm = 800.0,
                                 bool exact_phase_matching = false);
  static CrystalSpec type_ii(const Material& material, double length_mm,
                             double degenerate_wavelength_nm = 800.0,
                             bool exact_phase_matching = false);

  const Material& material() const { return material_; }
  double length_mm() const { return length_mm_; }
  double degenerate_wavelength_nm() const { return degenerate_wavelength_nm_; }
  double omega_degenerate() const { return omega0_; }
  bool exact_phase_matching() const { return exact_; }
  double cut_angle_rad() const { return theta_; }

  double beta1_signal() const { return beta1_signal_; }  // fs/mm, e wave at the cut angle
  double beta1_idler() const { return beta1_idler_; }    // fs/mm, o wave
  double beta1_pump() const { return beta1_pump_; }      // fs/mm, e wave at 2 w0

  /// Group-velocity mismatch beta1_o - beta1_e between idler and signal, fs/mm.
  double signal_idler_gvm() const { return beta1_idler_ - beta1_signal_; }

  /// Extraordinary index at the cut angle (jet in omega).
  Jet3 index_e_theta_jet(double omega) const;
  double k_signal(double omega) const;  // rad/mm
  double k_idler(double omega) const;
  double k_pump(double omega) const;

 private:
  Material material_;
  double length_mm_ = 0.0;
  double degenerate_wavelength_nm_ = 800.0;
  double omega0_ = 0.0;
  bool exact_ = false;
  double theta_ = 0.0;
  double beta1_signal_ = 0.0, beta1_idler_ = 0.0, beta1_pump_ = 0.0;
  double k_const_ = 0.0;  // residual k_p(2w0)-k_e(w0)-k_o(w0), subtracted
};

struct InsufficientGridSpan : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Complex biphoton amplitude A(omega_s, omega_i) on an N x N grid of
/// detunings from the degenerate frequency. Immutable after construction;
/// normalized so sum |A|^2 (dOmega)^2 = 1.
struct JointSpectrum {
  int n = 0;
  double span = 0.0;  // rad/fs, grid covers [-span, span] per axis
  double step = 0.0;  // rad/fs
  double omega0 = 0.0;
  std::vector<std::complex<double>> amp;  // row-major, amp[s*n + i]
  PumpSpec pump;
  CrystalSpec crystal;

  double detuning(int k) const { return (k - (n - 1) * 0.5) * step; }
  double omega(int k) const { return omega0 + detuning(k); }
  const std::complex<double>& at(int s, int i) const { return amp[static_cast<size_t>(s) * n + i]; }

  /// Fraction of |A|^2 mass in the outer `frac` border of the grid.
  double border_mass(double frac = 0.10) const;
};

/// Pump spectral amplitude at a given total detuning omega_s+omega_i-2*w0
/// (rad/fs), unit peak. For cw this is an indicator used on the grid.
std::complex<double> pump_envelope(const PumpSpec& pump, double total_detuning,
                                   double grid_step = 0.0);

/// Delta k = k_p(ws+wi) - k_e(ws) - k_o(wi) in rad/mm, with the constant
/// removed so the degenerate point is exactly phase matched. First-order
/// group-velocity-mismatch expansion by default; exact Sellmeier evaluation
/// when the crystal was built with exact_phase_matching.
double phase_mismatch(const CrystalSpec& crystal, double omega_s, double omega_i);

/// Build A = pump_envelope * sinc(dk L/2) * exp(i dk L/2), normalized.
/// span_rad_fs <= 0 selects the automatic span (covers pump and
/// phase-matching bandwidths). Throws InsufficientGridSpan if more than 1%
/// of the |A|^2 mass falls in the outer 10% border.
JointSpectrum joint_spectral_amplitude(const PumpSpec& pump, const CrystalSpec& crystal,
                                       int grid_size = 512, double span_rad_fs = 0.0);

/// Pearson correlation of (omega_s, omega_i) under |A|^2; -1 is perfect
/// anti-correlation. Throws std::domain_error for a zero-variance spectrum.
double anticorrelation(const JointSpectrum& js);

/// Signal-beam marginal spectrum sum_i |A(s,i)|^2 dOmega over the signal grid.
std::vector<double> signal_marginal(const JointSpectrum& js);

}  // namespace qoct
