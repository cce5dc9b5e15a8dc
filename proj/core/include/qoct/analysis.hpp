#pragma once
#include <array>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qoct/interferometer.hpp"
#include "qoct/units.hpp"

namespace qoct {

struct FitError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InsufficientDitherSpan : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Candidate feature from detect_features: a local extremum exceeding the
/// prominence threshold, with its fitting window.
struct Feature {
  double center_um = 0.0;
  int polarity = -1;  // -1 dip, +1 peak
  double amplitude_est = 0.0;
  double width_est_um = 0.0;
  double window_lo_um = 0.0;
  double window_hi_um = 0.0;
};

/// Fitted feature parameters. `amplitude` is the signed fitted model
/// amplitude relative to the fitted baseline; `visibility` is the raw
/// fractional depth (or height) of the measured curve at the fitted center,
/// which is what bounds against the mode overlap.
struct DipFit {
  double center_um = 0.0;
  double fwhm_um = 0.0;
  double visibility = 0.0;
  int polarity = -1;
  double amplitude = 0.0;
  double baseline = 1.0;
  double sigma_um = 0.0;
  double residual_rms = 0.0;
  std::array<double, 16> covariance{};  // row-major over (baseline, amplitude, center, sigma)
  std::string model = "gaussian";
  bool converged = false;
  bool flagged = false;  // visibility above 1

  double center_sigma() const { return std::sqrt(covariance[2 * 4 + 2]); }
  double fwhm_sigma() const { return 2.3548200450309493 * std::sqrt(covariance[3 * 4 + 3]); }
};

struct LayerEstimate {
  std::vector<double> surface_delays_um;
  std::vector<double> optical_path_lengths_um;  // consecutive differences
  std::vector<double> relative_reflectances;    // visibility ratios to surface 0
};

struct GvdEstimate {
  double beta2_fs2_mm = 0.0;
  double uncertainty_fs2_mm = 0.0;
  double interstitial_length_mm = 0.0;
  bool consistent_with_zero = false;
  std::string method = "cross-feature width inversion";
};

struct PolarizationSet {
  Interferogram r_h;
  Interferogram r_v;
  double lambda0 = 0.0;

  static PolarizationSet from_scan(const PolarizationScan& ps);
  void validate() const;  // common axes
};

struct LambdaRatio {
  double position_um = 0.0;
  double ratio = 0.0;  // |Lambda_V| / |Lambda_H|
  double amplitude_h = 0.0;
  double amplitude_v = 0.0;
};

struct PolarizationReport {
  Interferogram r_t;  // (R_V + R_H - Lambda0) / Lambda0, unit baseline
  std::vector<LambdaRatio> ratios;
};

struct DitherClassification {
  Interferogram class1_scan;             // pointwise mean over the dither set
  std::vector<double> class2_residual;   // undithered minus mean
  std::vector<Feature> features;         // detected on the undithered scan
  std::vector<int> labels;               // 1 or 2 per feature
  std::vector<double> suppression;       // mean-amplitude suppression per feature
};

struct BirefringenceEstimate {
  double delta_rad = 0.0;
  std::vector<double> roots_rad;  // all solutions found in the search domain
  bool ambiguous = false;
  bool non_identifiable = false;
  double target_ratio = 0.0;
};

// ---------------------------------------------------------------------------

/// Local extrema exceeding a prominence threshold relative to the baseline
/// noise (baseline estimated from the outer 15% of the scan). Windows are
/// +-3 estimated widths, clipped against neighbors and the scan edges.
std::vector<Feature> detect_features(const Interferogram& ig, double min_prominence = 0.02);

/// Nonlinear least squares of baseline + amplitude exp(-(x-c)^2 / 2 s^2)
/// over the feature window; FWHM = 2.355 s. Throws FitError on
/// non-convergence or an ill-conditioned covariance.
DipFit fit_gaussian(const Interferogram& ig, const Feature& feature);
DipFit fit_gaussian(const std::vector<double>& x, const std::vector<double>& y,
                    double window_lo, double window_hi);

/// Alternative triangular feature model baseline + amplitude max(0, 1-|x-c|/w).
DipFit fit_triangular(const std::vector<double>& x, const std::vector<double>& y,
                      double window_lo, double window_hi);

/// Surface delays, interstitial optical path lengths, and relative
/// reflectances from class-1 feature fits. Throws if no fits given.
LayerEstimate extract_layers(const std::vector<DipFit>& class1_fits);

/// Pointwise mean of the dithered scans (class-1 estimate), residual of the
/// undithered scan against it, and per-feature class labels. Throws
/// InsufficientDitherSpan when fewer than 5 scans are given or when any
/// class-2 feature is suppressed by less than `suppression_threshold`.
DitherClassification classify_by_dither(const Interferogram& undithered,
                                        const std::vector<Interferogram>& dithered,
                                        double suppression_threshold = 10.0,
                                        double min_prominence = 0.02);

/// Pump-frequency polarity period (nm) of the cross feature between two
/// surfaces separated by the given optical path (stage um).
double dither_polarity_period_nm(double separation_um, double pump_center_nm = 400.0);

/// Evenly spaced detunings covering the span as a cyclic grid (span/count
/// spacing, centered on zero; count odd keeps the undithered point).
std::vector<double> dither_detunings(double span_nm, int count = 9);

struct DitherPlan {
  double span_nm = 0.0;
  std::vector<double> detunings_nm;
  DitherClassification classification;
};

/// Adaptive schedule: doubles the detuning span until every class-2 feature
/// is suppressed by at least the threshold.
DitherPlan plan_dither_schedule(const Interferogram& undithered,
                                const std::function<Interferogram(double)>& run_at_detuning,
                                double initial_span_nm, int count = 9,
                                int max_doublings = 8, double suppression_threshold = 10.0);

/// Forward-model handle the inverse operations simulate against.
struct ForwardContext {
  JointSpectrum js;
  double mode_overlap = 1.0;
  double delay_step_um = 0.25;

  static ForwardContext from_interferogram(const Interferogram& ig);
};

/// beta2 of the interstitial medium from the excess width of the class-2
/// cross feature over the quadrature-combined class-1 widths, by monotone
/// bracketing of the forward model's width-vs-beta2 map.
GvdEstimate estimate_gvd(const DipFit& surface0, const DipFit& surface1, const DipFit& cross,
                         double interstitial_length_mm, const ForwardContext& ctx);

/// R_T = (R_V + R_H - Lambda0)/Lambda0 plus the Lambda_V/Lambda_H envelope
/// ratio at each requested feature position (auto-detected when empty).
PolarizationReport combine_polarization(const PolarizationSet& ps,
                                        const std::vector<double>& feature_positions_um = {});

/// Invert a forward ratio-vs-delta curve for the retardation at a layer.
/// All roots in [delta_min, delta_max] are reported; multiple roots set the
/// ambiguity flag. Throws std::domain_error when the target ratio is outside
/// the achievable range of the curve.
BirefringenceEstimate extract_birefringence(const PolarizationSet& ps, double layer_position_um,
                                            const std::function<double(double)>& ratio_of_delta,
                                            double delta_min = 0.0, double delta_max = kPi,
                                            int scan_samples = 65);

/// Third measurement: reference-arm analyzer angle (rad, in [0, pi)) that
/// maximizes the interference envelope at the layer position.
double third_measurement_angle(const JointSpectrum& js, const TransferFunction& tf,
                               const ScanConfig& cfg, double layer_position_um);

/// Invert a forward angle-vs-alpha curve for the optic-axis angle.
BirefringenceEstimate invert_axis_angle(double measured_chi,
                                        const std::function<double(double)>& chi_of_alpha,
                                        double alpha_min = 0.0, double alpha_max = kPi,
                                        int scan_samples = 65);

}  // namespace qoct
