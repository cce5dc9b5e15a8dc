#pragma once
#include <complex>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "qoct/jones.hpp"
#include "qoct/material.hpp"

namespace qoct {

enum class Polarization { H, V };
const char* to_string(Polarization p);

/// Reflecting interface with a complex amplitude coefficient, |r| <= 1.
struct Interface {
  cplx r{0.0, 0.0};
  std::string label;
};

/// One propagation layer. Either material-backed (possibly birefringent,
/// optic axis at axis_angle) or defined by an explicit Taylor expansion of
/// k(omega) for synthetic interstitial media.
struct Layer {
  double thickness_um = 0.0;
  Material material;
  double axis_angle_rad = 0.0;             // alpha in [0, pi)
  bool use_exact_phase = true;             // false: BetaExpansion truncation of k
  std::optional<BetaExpansion> expansion;  // isotropic synthetic medium

  static Layer from_material(const Material& m, double thickness_um,
                             double axis_angle_rad = 0.0, bool use_exact_phase = true);
  static Layer from_expansion(const BetaExpansion& b, double thickness_um);

  bool birefringent() const { return !expansion && material.uniaxial(); }
  double k_ordinary(double omega) const;       // rad/mm (fast axis for quartz)
  double k_extraordinary(double omega) const;  // rad/mm
  /// Retardation delta(omega) = (k_e - k_o) * L, single pass, radians.
  double retardation(double omega) const;
};

/// Alternating interface/layer sequence, first and last entries interfaces.
/// Single-pass reflection model: one reflection per surface, no internal
/// multiple bounces.
struct SampleStack {
  std::vector<Interface> interfaces;  // size = layers.size() + 1
  std::vector<Layer> layers;
  bool include_transmission_losses = true;
  std::string name = "sample";

  void validate() const;

  /// Effective scalar amplitude of surface j: r_j times the accumulated
  /// double-pass transmission factors of the interfaces above it (1 when
  /// losses are off).
  cplx surface_amplitude(size_t j) const;
};

/// Round-trip Jones response per frequency, (H, V) basis, including the
/// double-passed quarter-wave plate at 45 degrees.
struct TransferFunction {
  std::vector<double> omega;          // rad/fs
  std::vector<JonesMatrix> jones;
};

/// Normal-incidence amplitude coefficients r = (n1-n2)/(n1+n2), t = 2 n1/(n1+n2).
std::pair<cplx, cplx> fresnel_coefficients(double n1, double n2);

/// Double-pass (passes=2) Jones matrix of one layer:
/// R(-alpha) diag(e^{i k_o L p}, e^{i k_e L p}) R(alpha); scalar phase times
/// identity for isotropic layers.
JonesMatrix layer_jones(const Layer& layer, double omega, int passes = 2);

/// Sum-over-surfaces response H(w) = Q45 [ sum_j a_j prod_m layer_jones ] Q45.
TransferFunction stack_response(const SampleStack& stack, const std::vector<double>& omega_grid);

/// Scalar channel for a V-polarized input and the given analyzer.
std::vector<cplx> project_channel(const TransferFunction& tf, Polarization analyzer);

/// Parameters for the built-in sample presets.
struct SamplePresetParams {
  bool include_transmission_losses = true;
  double znse_thickness_mm = 6.0;
  double flat_thickness_um = 100.0;
  double flat_index = 1.45;              // paper-idealized nondispersive flat
  double quartz_thickness_um = 0.0;      // 0: quarter-wave at 800 nm
  double quartz_axis_deg = 30.0;
  double bs_gap_um = 200.0;              // spacer between beam splitter and quartz
};

/// mirror | buried_mirror_znse | silica_flat | quartz_mirror | bs_quartz_mirror
SampleStack preset_sample(const std::string& name, const SamplePresetParams& params = {});

std::vector<std::string> sample_preset_names();

/// Quartz thickness (um) giving single-pass retardation delta at 800 nm.
double quartz_thickness_for_retardation(double delta_rad, double wavelength_nm = 800.0);

/// Sample description file: `losses on|off`, `interface R2 phase_deg [label]`,
/// `layer <material|n=value> thickness_um axis_deg`.
SampleStack parse_sample_description(std::istream& in);
SampleStack load_sample_file(const std::string& path);

}  // namespace qoct
