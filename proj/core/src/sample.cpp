#include "qoct/sample.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "qoct/units.hpp"

namespace qoct {

const char* to_string(Polarization p) { return p == Polarization::H ? "H" : "V"; }

Layer Layer::from_material(const Material& m, double thickness_um, double axis_angle_rad,
                           bool use_exact_phase) {
  if (thickness_um < 0) throw std::invalid_argument("layer thickness must be >= 0");
  if (axis_angle_rad < 0 || axis_angle_rad >= kPi)
    throw std::invalid_argument("layer axis angle must lie in [0, pi)");
  Layer l;
  l.thickness_um = thickness_um;
  l.material = m;
  l.axis_angle_rad = axis_angle_rad;
  l.use_exact_phase = use_exact_phase;
  return l;
}

Layer Layer::from_expansion(const BetaExpansion& b, double thickness_um) {
  if (thickness_um < 0) throw std::invalid_argument("layer thickness must be >= 0");
  Layer l;
  l.thickness_um = thickness_um;
  l.expansion = b;
  return l;
}

namespace {
constexpr double kExpansionRefWavelengthNm = 800.0;  // degenerate operating point
}

double Layer::k_ordinary(double omega) const {
  if (expansion) return expansion->phase(omega - expansion->omega0);
  const Axis ax = material.uniaxial() ? Axis::ordinary : Axis::iso;
  if (use_exact_phase) return material.k_jet(omega, ax).f;
  const BetaExpansion b = material.beta_expansion(kExpansionRefWavelengthNm, ax);
  return b.phase(omega - b.omega0);
}

double Layer::k_extraordinary(double omega) const {
  if (expansion) return expansion->phase(omega - expansion->omega0);
  if (!material.uniaxial()) return k_ordinary(omega);
  if (use_exact_phase) return material.k_jet(omega, Axis::extraordinary).f;
  const BetaExpansion b = material.beta_expansion(kExpansionRefWavelengthNm, Axis::extraordinary);
  return b.phase(omega - b.omega0);
}

double Layer::retardation(double omega) const {
  return (k_extraordinary(omega) - k_ordinary(omega)) * thickness_um * 1e-3;
}

void SampleStack::validate() const {
  if (interfaces.size() != layers.size() + 1)
    throw std::invalid_argument(name + ": stack must alternate interface/layer and "
                                       "begin and end with an interface");
  for (const auto& f : interfaces)
    if (std::abs(f.r) > 1.0 + 1e-12)
      throw std::invalid_argument(name + ": interface |r| exceeds 1");
}

cplx SampleStack::surface_amplitude(size_t j) const {
  cplx a = interfaces[j].r;
  if (include_transmission_losses) {
    for (size_t m = 0; m < j; ++m) {
      const cplx r = interfaces[m].r;
      a *= (1.0 - r * r);  // down and up through interface m
    }
  }
  return a;
}

std::pair<cplx, cplx> fresnel_coefficients(double n1, double n2) {
  if (n1 <= 0 || n2 <= 0) throw std::invalid_argument("fresnel: indices must be positive");
  return {cplx((n1 - n2) / (n1 + n2)), cplx(2.0 * n1 / (n1 + n2))};
}

JonesMatrix layer_jones(const Layer& layer, double omega, int passes) {
  const double L_mm = layer.thickness_um * 1e-3;
  if (L_mm == 0.0) return JonesMatrix::identity();
  const double po = layer.k_ordinary(omega) * L_mm * passes;
  if (!layer.birefringent()) return JonesMatrix::scalar(std::polar(1.0, po));
  const double pe = layer.k_extraordinary(omega) * L_mm * passes;
  const JonesMatrix d = JonesMatrix::diag(std::polar(1.0, po), std::polar(1.0, pe));
  return JonesMatrix::rotation(-layer.axis_angle_rad) * d *
         JonesMatrix::rotation(layer.axis_angle_rad);
}

TransferFunction stack_response(const SampleStack& stack, const std::vector<double>& grid) {
  stack.validate();
  const JonesMatrix q = JonesMatrix::quarter_wave_45();
  TransferFunction tf;
  tf.omega = grid;
  tf.jones.reserve(grid.size());
  for (const double w : grid) {
    JonesMatrix sum{};  // zero
    JonesMatrix above = JonesMatrix::identity();
    for (size_t j = 0; j < stack.interfaces.size(); ++j) {
      if (j > 0) above = above * layer_jones(stack.layers[j - 1], w, 2);
      const cplx a = stack.surface_amplitude(j);
      if (a != cplx(0.0)) sum = sum + a * above;
    }
    tf.jones.push_back(q * sum * q);
  }
  return tf;
}

std::vector<cplx> project_channel(const TransferFunction& tf, Polarization analyzer) {
  std::vector<cplx> h;
  h.reserve(tf.jones.size());
  const JonesVector in{cplx(0.0), cplx(1.0)};  // V input
  for (const auto& j : tf.jones) {
    const JonesVector out = j * in;
    h.push_back(analyzer == Polarization::H ? out.h : out.v);
  }
  return h;
}

// ---------------------------------------------------------------------------
// presets

double quartz_thickness_for_retardation(double delta_rad, double wavelength_nm) {
  const auto& q = MaterialDatabase::builtin().get("quartz");
  const double dn = q.refractive_index(wavelength_nm, Axis::extraordinary) -
                    q.refractive_index(wavelength_nm, Axis::ordinary);
  return delta_rad * wavelength_nm * 1e-3 / (2.0 * kPi * dn);
}

std::vector<std::string> sample_preset_names() {
  return {"mirror", "buried_mirror_znse", "silica_flat", "quartz_mirror", "bs_quartz_mirror"};
}

SampleStack preset_sample(const std::string& name, const SamplePresetParams& p) {
  const auto& db = MaterialDatabase::builtin();
  SampleStack s;
  s.name = name;
  s.include_transmission_losses = p.include_transmission_losses;

  if (name == "mirror") {
    s.interfaces.push_back({cplx(-1.0), "mirror"});
    return s;
  }
  if (name == "buried_mirror_znse") {
    // ZnSe front face treated as index matched; the scan window sits at the
    // buried mirror anyway.
    s.interfaces.push_back({cplx(0.0), "znse front (ignored)"});
    s.layers.push_back(Layer::from_material(db.get("znse"), p.znse_thickness_mm * 1000.0));
    s.interfaces.push_back({cplx(-1.0), "mirror"});
    return s;
  }
  if (name == "silica_flat") {
    const Material flat = Material::constant_index("silica_n145", p.flat_index);
    const auto [r01, t01] = fresnel_coefficients(1.0, p.flat_index);
    const auto [r10, t10] = fresnel_coefficients(p.flat_index, 1.0);
    s.interfaces.push_back({r01, "front"});
    s.layers.push_back(Layer::from_material(flat, p.flat_thickness_um));
    s.interfaces.push_back({r10, "back"});
    return s;
  }
  if (name == "quartz_mirror" || name == "bs_quartz_mirror") {
    const double lq = p.quartz_thickness_um > 0 ? p.quartz_thickness_um
                                                : quartz_thickness_for_retardation(kPi / 2);
    const auto& quartz = db.get("quartz");
    const double nq = quartz.refractive_index(800.0, Axis::ordinary);
    const auto [rq, tq] = fresnel_coefficients(1.0, nq);
    if (name == "bs_quartz_mirror") {
      s.interfaces.push_back({cplx(-std::sqrt(0.5)), "beam splitter"});
      s.layers.push_back(Layer::from_material(db.get("vacuum"), p.bs_gap_um));
    }
    s.interfaces.push_back({rq, "quartz front"});
    s.layers.push_back(Layer::from_material(quartz, lq, p.quartz_axis_deg * kPi / 180.0));
    s.interfaces.push_back({cplx(-1.0), "mirror"});
    return s;
  }
  throw std::invalid_argument("unknown sample preset '" + name + "'");
}

// ---------------------------------------------------------------------------
// description files

SampleStack parse_sample_description(std::istream& in) {
  const auto& db = MaterialDatabase::builtin();
  SampleStack s;
  s.name = "file";
  std::string line;
  int lineno = 0;
  bool expect_interface = true;
  auto fail = [&](const std::string& m) {
    throw std::runtime_error("sample description line " + std::to_string(lineno) + ": " + m);
  };
  while (std::getline(in, line)) {
    ++lineno;
    const auto h = line.find('#');
    if (h != std::string::npos) line.erase(h);
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;
    if (key == "losses") {
      std::string v;
      ls >> v;
      if (v == "on") s.include_transmission_losses = true;
      else if (v == "off") s.include_transmission_losses = false;
      else fail("losses must be on or off");
    } else if (key == "interface") {
      if (!expect_interface) fail("two consecutive interfaces (missing layer)");
      double r2 = 0, phase_deg = 0;
      if (!(ls >> r2 >> phase_deg)) fail("interface needs |r|^2 and phase_deg");
      if (r2 < 0 || r2 > 1) fail("interface |r|^2 must lie in [0, 1]");
      std::string label;
      std::getline(ls, label);
      Interface f;
      f.r = std::polar(std::sqrt(r2), phase_deg * kPi / 180.0);
      f.label = label.empty() ? "interface" : label.substr(label.find_first_not_of(" \t"));
      s.interfaces.push_back(f);
      expect_interface = false;
    } else if (key == "layer") {
      if (expect_interface) fail("layer before the first interface");
      std::string mat;
      double th = 0, axis_deg = 0;
      if (!(ls >> mat >> th)) fail("layer needs material and thickness_um");
      ls >> axis_deg;
      Material m;
      if (mat.rfind("n=", 0) == 0) m = Material::constant_index(mat, std::stod(mat.substr(2)));
      else m = db.get(mat);
      s.layers.push_back(Layer::from_material(m, th, axis_deg * kPi / 180.0));
      expect_interface = true;
    } else {
      fail("unknown directive '" + key + "'");
    }
  }
  s.validate();
  return s;
}

SampleStack load_sample_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open sample description: " + path);
  return parse_sample_description(f);
}

}  // namespace qoct
