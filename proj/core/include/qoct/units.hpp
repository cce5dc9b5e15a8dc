#pragma once
#include <cmath>
#include <complex>

// Unit conventions used throughout:
//   wavelength   nm        (material interfaces) or um (Sellmeier internals)
//   length       um        (samples, delay axis), mm (crystals, slabs)
//   time         fs
//   frequency    rad/fs    (angular)
//   wavenumber   rad/mm
//   dispersion   beta1 fs/mm, beta2 fs^2/mm, beta3 fs^3/mm

namespace qoct {

using cplx = std::complex<double>;

inline constexpr double kSpeedOfLightUmPerFs = 0.299792458;
inline constexpr double kSpeedOfLightNmPerFs = 299.792458;
inline constexpr double kSpeedOfLightMmPerFs = 2.99792458e-4;
inline constexpr double kPi = 3.14159265358979323846;

/// Angular frequency (rad/fs) of a vacuum wavelength in nm.
inline double omega_from_wavelength_nm(double lambda_nm) {
  return 2.0 * kPi * kSpeedOfLightNmPerFs / lambda_nm;
}

/// Vacuum wavelength (nm) of an angular frequency in rad/fs.
inline double wavelength_nm_from_omega(double omega) {
  return 2.0 * kPi * kSpeedOfLightNmPerFs / omega;
}

/// FWHM of a spectral intensity profile, nm at lambda -> rad/fs.
inline double bandwidth_nm_to_omega_fwhm(double dlambda_nm, double lambda_nm) {
  return 2.0 * kPi * kSpeedOfLightNmPerFs * dlambda_nm / (lambda_nm * lambda_nm);
}

/// sin(x)/x with the removable singularity made explicit.
inline double sinc(double x) {
  if (std::abs(x) < 1e-8) return 1.0 - x * x / 6.0;
  return std::sin(x) / x;
}

}  // namespace qoct
