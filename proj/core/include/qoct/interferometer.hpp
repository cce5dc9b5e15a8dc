#pragma once
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "qoct/biphoton.hpp"
#include "qoct/sample.hpp"

namespace qoct {

/// Delay axis and acquisition settings. Delays are translation-stage
/// positions in um: moving the stage by d lengthens the round-trip reference
/// path by 2d, so the interferometric delay is tau = 2 d / c. The axis is
/// calibrated so that a bare mirror at zero depth dips at d = 0 (reference
/// and sample group delays matched), which puts two-surface dips one optical
/// path length apart, as plotted in the source figures.
struct ScanConfig {
  double delay_start_um = -60.0;
  double delay_end_um = 60.0;
  double delay_step_um = 0.5;
  double mode_overlap = 1.0;  // gamma in [0,1], scales the interference term
  Polarization reference_polarization = Polarization::H;
  double integration_time_s = 1.0;
  double rate_scale_cps = 200.0;  // coincidences/s at the unit baseline
  std::uint64_t rng_seed = 1;

  void validate() const;
  std::vector<double> delays() const;
};

/// Coincidence (or classical) interferogram with provenance metadata.
struct Interferogram {
  std::vector<double> delay_um;
  std::vector<double> rate;             // baseline-normalized
  std::vector<std::int64_t> counts;     // filled by apply_counting_noise
  double baseline = 0.0;                // raw Lambda_0 before normalization
  Polarization reference_polarization = Polarization::H;
  bool clamped = false;                 // negative numerical noise clamped to 0
  std::map<std::string, std::string> meta;

  double rate_scale_cps = 200.0;
  double integration_time_s = 1.0;
  std::uint64_t rng_seed = 1;

  /// rate if no counts are present, otherwise counts rescaled to the unit
  /// baseline; what the analysis operates on.
  std::vector<double> measured_rate() const;
};

/// Both polarization channels of one scan sharing the physical baseline
/// Lambda_0 = sum |A|^2 (|h_H|^2 + |h_V|^2).
struct PolarizationScan {
  Interferogram r_h;
  Interferogram r_v;
  double lambda0 = 0.0;
};

/// Classical OCT comparator result: fringing interferogram plus its complex
/// envelope magnitude.
struct OctScan {
  Interferogram fringes;
  std::vector<double> envelope;  // gamma * |Gamma(d)|, unit baseline scale
};

/// Fourth-order coincidence scan R(d) = (L0 - gamma Re Lambda) / L0 with
///   L0      = sum |A(w1,w2)|^2 |h(w1)|^2 dW^2
///   Lambda  = sum A(w1,w2) A*(w2,w1) h(w1) h*(w2) e^{i (w1-w2) tau} dW^2.
/// Collapsed evaluation over the difference frequency; matches qoct_scan_direct
/// to better than 1e-9.
Interferogram qoct_scan(const JointSpectrum& js, const std::vector<cplx>& channel,
                        const ScanConfig& cfg);

/// Reference implementation, direct O(N^2) sum per delay point.
Interferogram qoct_scan_direct(const JointSpectrum& js, const std::vector<cplx>& channel,
                               const ScanConfig& cfg);

/// Scan both analyzer channels of a transfer function with the shared
/// baseline; R_H and R_V both normalize to 1 far from features.
PolarizationScan polarization_scan(const JointSpectrum& js, const TransferFunction& tf,
                                   const ScanConfig& cfg);

/// Single scan with the reference polarization rotated to angle chi from H
/// (linear rotator before the final beam splitter), normalized by the shared
/// two-channel baseline.
Interferogram rotated_reference_scan(const JointSpectrum& js, const TransferFunction& tf,
                                     const ScanConfig& cfg, double chi_rad);

/// Classical second-order comparator against a mirror reference:
/// I(d) = 1 + gamma Re[ sum S h e^{i w tau} / sum S ].
OctScan oct_scan(const JointSpectrum& js, const std::vector<double>& source_spectrum,
                 const std::vector<cplx>& channel, const ScanConfig& cfg);

/// Poisson counting noise, counts[k] ~ Poisson(rate_scale * rate * T).
/// Deterministic per seed (per-point counter-based substreams).
Interferogram apply_counting_noise(const Interferogram& ig, const ScanConfig& cfg);

/// Portable Poisson sampler used by apply_counting_noise (exposed for tests).
std::int64_t poisson_sample(double mean, std::uint64_t seed, std::uint64_t counter);

/// Stage position of the feature produced by a one-way optical group path
/// n_g * length through a medium (um): where a buried mirror dips.
inline double stage_position_of_group_path(double group_index, double physical_length_um) {
  return group_index * physical_length_um;
}

}  // namespace qoct
