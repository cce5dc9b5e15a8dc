#include "qoct/material.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "qoct/units.hpp"

namespace qoct {

extern const char* kBuiltinMaterialsText;  // generated from core/data/materials.txt

const char* to_string(Axis a) {
  switch (a) {
    case Axis::iso: return "iso";
    case Axis::ordinary: return "o";
    case Axis::extraordinary: return "e";
  }
  return "?";
}

Axis axis_from_string(const std::string& s) {
  if (s == "iso") return Axis::iso;
  if (s == "o" || s == "ordinary") return Axis::ordinary;
  if (s == "e" || s == "extraordinary") return Axis::extraordinary;
  throw std::invalid_argument("unknown axis '" + s + "'");
}

double BetaExpansion::phase(double detuning) const {
  double p = beta0 + beta1 * detuning + 0.5 * beta2 * detuning * detuning;
  if (max_order >= 3) p += beta3 * detuning * detuning * detuning / 6.0;
  return p;
}

Material Material::constant_index(std::string name, double n) {
  Material m;
  m.name_ = std::move(name);
  m.source_ = "fixed index";
  m.uniaxial_ = false;
  m.validity_min_nm_ = 1.0;
  m.validity_max_nm_ = 1e9;
  m.terms_o_.push_back({SellmeierTerm::Kind::constant, n * n, 0.0});
  return m;
}

void Material::check_wavelength(double wavelength_nm) const {
  if (!(wavelength_nm >= validity_min_nm_ && wavelength_nm <= validity_max_nm_)) {
    std::ostringstream os;
    os << name_ << ": wavelength " << wavelength_nm << " nm outside validity ["
       << validity_min_nm_ << ", " << validity_max_nm_ << "] nm";
    throw std::out_of_range(os.str());
  }
}

const std::vector<SellmeierTerm>& Material::terms_for(Axis axis) const {
  if (uniaxial_) {
    if (axis == Axis::iso)
      throw std::invalid_argument(name_ + " is uniaxial; request axis o or e");
    return axis == Axis::ordinary ? terms_o_ : terms_e_;
  }
  if (axis != Axis::iso)
    throw std::invalid_argument(name_ + " is isotropic; axis " +
                                std::string(to_string(axis)) + " undefined");
  return terms_o_;
}

Jet3 Material::n2_jet(const Jet3& lambda_um, Axis axis) const {
  const auto& terms = terms_for(axis);
  const Jet3 x = lambda_um * lambda_um;
  Jet3 n2 = Jet3::constant(0.0);
  for (const auto& t : terms) {
    switch (t.kind) {
      case SellmeierTerm::Kind::constant:
        n2 = n2 + t.b;
        break;
      case SellmeierTerm::Kind::resonance:
        n2 = n2 + t.b * x / (x - t.c);
        break;
      case SellmeierTerm::Kind::pole:
        n2 = n2 + t.b / (x - t.c);
        break;
      case SellmeierTerm::Kind::lambda2:
        n2 = n2 + t.b * x;
        break;
    }
  }
  return n2;
}

double Material::refractive_index(double wavelength_nm, Axis axis) const {
  check_wavelength(wavelength_nm);
  const Jet3 lam = Jet3::constant(wavelength_nm * 1e-3);
  return std::sqrt(n2_jet(lam, axis).f);
}

Jet3 Material::k_jet(double omega, Axis axis) const {
  check_wavelength(wavelength_nm_from_omega(omega));
  const Jet3 w = Jet3::variable(omega);
  const Jet3 lambda_um = 2.0 * kPi * kSpeedOfLightUmPerFs / w;
  const Jet3 n = sqrt(n2_jet(lambda_um, axis));
  return w * n / kSpeedOfLightMmPerFs;  // rad/mm
}

double Material::group_index(double wavelength_nm, Axis axis) const {
  const Jet3 k = k_jet(omega_from_wavelength_nm(wavelength_nm), axis);
  return k.d1 * kSpeedOfLightMmPerFs;
}

double Material::gvd_coefficient(double wavelength_nm, Axis axis) const {
  return k_jet(omega_from_wavelength_nm(wavelength_nm), axis).d2;
}

BetaExpansion Material::beta_expansion(double center_wavelength_nm, Axis axis,
                                       int max_order) const {
  if (max_order != 2 && max_order != 3)
    throw std::invalid_argument("beta_expansion: max_order must be 2 or 3");
  const double w0 = omega_from_wavelength_nm(center_wavelength_nm);
  const Jet3 k = k_jet(w0, axis);
  BetaExpansion b;
  b.omega0 = w0;
  b.beta0 = k.f;
  b.beta1 = k.d1;
  b.beta2 = k.d2;
  b.beta3 = max_order >= 3 ? k.d3 : 0.0;
  b.max_order = max_order;
  return b;
}

// ---------------------------------------------------------------------------
// database parsing

namespace {

SellmeierTerm::Kind term_kind_from(const std::string& s) {
  if (s == "constant") return SellmeierTerm::Kind::constant;
  if (s == "resonance") return SellmeierTerm::Kind::resonance;
  if (s == "pole") return SellmeierTerm::Kind::pole;
  if (s == "lambda2") return SellmeierTerm::Kind::lambda2;
  throw std::runtime_error("material db: unknown term kind '" + s + "'");
}

}  // namespace

MaterialDatabase MaterialDatabase::parse(std::istream& in) {
  MaterialDatabase db;
  Material cur;
  std::vector<SellmeierTerm>* terms = nullptr;
  bool open = false;
  std::string line;
  int lineno = 0;

  auto fail = [&](const std::string& msg) {
    throw std::runtime_error("material db line " + std::to_string(lineno) + ": " + msg);
  };

  while (std::getline(in, line)) {
    ++lineno;
    const auto h = line.find('#');
    if (h != std::string::npos) line.erase(h);
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;

    if (key == "material") {
      if (open) fail("previous record not closed with 'end'");
      cur = Material();
      if (!(ls >> cur.name_)) fail("material needs a name");
      terms = nullptr;
      open = true;
    } else if (!open) {
      fail("directive '" + key + "' outside a material record");
    } else if (key == "symmetry") {
      std::string s;
      ls >> s;
      if (s == "isotropic") cur.uniaxial_ = false;
      else if (s == "uniaxial") cur.uniaxial_ = true;
      else fail("symmetry must be isotropic or uniaxial");
    } else if (key == "validity_nm") {
      if (!(ls >> cur.validity_min_nm_ >> cur.validity_max_nm_)) fail("validity_nm needs two numbers");
    } else if (key == "source") {
      std::string rest;
      std::getline(ls, rest);
      const auto p = rest.find_first_not_of(" \t");
      cur.source_ = p == std::string::npos ? "" : rest.substr(p);
    } else if (key == "axis") {
      std::string a;
      ls >> a;
      if (a == "iso" || a == "o") terms = &cur.terms_o_;
      else if (a == "e") terms = &cur.terms_e_;
      else fail("axis must be iso, o or e");
    } else if (key == "term") {
      if (!terms) fail("term before any axis directive");
      std::string kind;
      SellmeierTerm t;
      if (!(ls >> kind >> t.b)) fail("term needs a kind and coefficient");
      t.kind = term_kind_from(kind);
      if (t.kind == SellmeierTerm::Kind::resonance || t.kind == SellmeierTerm::Kind::pole) {
        if (!(ls >> t.c)) fail("resonance/pole terms need two coefficients");
      }
      terms->push_back(t);
    } else if (key == "end") {
      if (cur.name_.empty()) fail("record without a name");
      if (cur.validity_max_nm_ <= cur.validity_min_nm_) fail("bad validity range");
      if (cur.terms_o_.empty()) fail(cur.name_ + ": no dispersion terms");
      if (cur.uniaxial_ && cur.terms_e_.empty()) fail(cur.name_ + ": uniaxial record lacks e axis");
      db.materials_[cur.name_] = cur;
      open = false;
    } else {
      fail("unknown directive '" + key + "'");
    }
  }
  if (open) fail("unterminated material record");
  return db;
}

MaterialDatabase MaterialDatabase::parse_string(const std::string& text) {
  std::istringstream is(text);
  return parse(is);
}

MaterialDatabase MaterialDatabase::load_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open material database: " + path);
  return parse(f);
}

const MaterialDatabase& MaterialDatabase::builtin() {
  static const MaterialDatabase db = parse_string(kBuiltinMaterialsText);
  return db;
}

const Material& MaterialDatabase::get(const std::string& name) const {
  const auto it = materials_.find(name);
  if (it == materials_.end())
    throw std::invalid_argument("unknown material '" + name + "'");
  return it->second;
}

bool MaterialDatabase::contains(const std::string& name) const {
  return materials_.count(name) != 0;
}

std::vector<std::string> MaterialDatabase::names() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : materials_) out.push_back(k);
  return out;
}

}  // namespace qoct
