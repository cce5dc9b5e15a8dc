#pragma once
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "qoct/jet.hpp"

namespace qoct {

enum class Axis { iso, ordinary, extraordinary };

const char* to_string(Axis a);
Axis axis_from_string(const std::string& s);

/// One additive term of a dispersion relation for n^2(lambda), lambda in um:
///   constant:   n2 += b
///   resonance:  n2 += b * x / (x - c)     with x = lambda^2 (um^2)
///   pole:       n2 += b / (x - c)
///   lambda2:    n2 += b * x
struct SellmeierTerm {
  enum class Kind { constant, resonance, pole, lambda2 };
  Kind kind = Kind::constant;
  double b = 0.0;
  double c = 0.0;  // um^2, unused for constant/lambda2
};

/// Taylor expansion of the propagation constant k(omega) about omega0.
/// beta0 rad/mm, beta1 fs/mm, beta2 fs^2/mm, beta3 fs^3/mm.
struct BetaExpansion {
  double omega0 = 0.0;  // rad/fs
  double beta0 = 0.0;
  double beta1 = 0.0;
  double beta2 = 0.0;
  double beta3 = 0.0;
  int max_order = 3;

  /// Truncated phase k(omega0 + detuning) in rad/mm.
  double phase(double detuning) const;
};

/// Dispersion model for one optical material. Immutable after construction;
/// all evaluators are pure and safe for concurrent use.
class Material {
 public:
  Material() = default;

  /// Nondispersive medium with a fixed index (vacuum, idealized samples).
  static Material constant_index(std::string name, double n);

  const std::string& name() const { return name_; }
  bool uniaxial() const { return uniaxial_; }
  double validity_min_nm() const { return validity_min_nm_; }
  double validity_max_nm() const { return validity_max_nm_; }
  const std::string& source() const { return source_; }

  /// Phase index n(lambda). Throws std::out_of_range outside the validity
  /// window and std::invalid_argument for an axis the symmetry lacks.
  double refractive_index(double wavelength_nm, Axis axis) const;

  /// Group index n_g = n - lambda dn/dlambda.
  double group_index(double wavelength_nm, Axis axis) const;

  /// beta2 = d^2k/domega^2 in fs^2/mm, by analytic differentiation of the
  /// Sellmeier form (jets, not finite differences).
  double gvd_coefficient(double wavelength_nm, Axis axis) const;

  /// Successive omega-derivatives of k(omega) = omega n(omega)/c at the
  /// center wavelength. max_order 2 zeroes beta3.
  BetaExpansion beta_expansion(double center_wavelength_nm, Axis axis,
                               int max_order = 3) const;

  /// n^2 as a jet in whatever variable lambda_um carries derivatives of.
  Jet3 n2_jet(const Jet3& lambda_um, Axis axis) const;

  /// k(omega) in rad/mm as a jet in omega (rad/fs). Validity-checked.
  Jet3 k_jet(double omega, Axis axis) const;

  void check_wavelength(double wavelength_nm) const;

 private:
  friend class MaterialDatabase;
  const std::vector<SellmeierTerm>& terms_for(Axis axis) const;

  std::string name_;
  std::string source_;
  bool uniaxial_ = false;
  double validity_min_nm_ = 0.0;
  double validity_max_nm_ = 0.0;
  std::vector<SellmeierTerm> terms_o_;  // also the isotropic terms
  std::vector<SellmeierTerm> terms_e_;
};

/// Named collection of materials parsed from the plain-text database format
/// (one record per material: name, symmetry, validity, source, axis terms).
class MaterialDatabase {
 public:
  static MaterialDatabase parse(std::istream& in);
  static MaterialDatabase parse_string(const std::string& text);
  static MaterialDatabase load_file(const std::string& path);

  /// Database compiled into the library (bbo, znse, fused_silica, quartz,
  /// vacuum).
  static const MaterialDatabase& builtin();

  const Material& get(const std::string& name) const;
  bool contains(const std::string& name) const;
  std::vector<std::string> names() const;

 private:
  std::map<std::string, Material> materials_;
};

}  // namespace qoct
