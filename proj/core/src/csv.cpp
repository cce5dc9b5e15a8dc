#include "qoct/csv.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace qoct {

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

void write_interferogram_csv(std::ostream& os, const Interferogram& ig) {
  os << "# qoct interferogram v1\n";
  for (const auto& [k, v] : ig.meta) os << "# " << k << "=" << v << "\n";
  const bool with_counts = !ig.counts.empty();
  os << (with_counts ? "delay_um,rate_normalized,counts\n" : "delay_um,rate_normalized\n");
  for (size_t i = 0; i < ig.delay_um.size(); ++i) {
    os << format_double(ig.delay_um[i]) << "," << format_double(ig.rate[i]);
    if (with_counts) os << "," << ig.counts[i];
    os << "\n";
  }
}

void write_interferogram_csv(const std::string& path, const Interferogram& ig) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  write_interferogram_csv(f, ig);
}

Interferogram read_interferogram_csv(std::istream& is) {
  Interferogram ig;
  std::string line;
  bool header_seen = false;
  bool with_counts = false;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq != std::string::npos) {
        std::string key = line.substr(1, eq - 1);
        const auto b = key.find_first_not_of(" \t");
        const auto e = key.find_last_not_of(" \t");
        if (b != std::string::npos) ig.meta[key.substr(b, e - b + 1)] = line.substr(eq + 1);
      }
      continue;
    }
    if (!header_seen) {
      with_counts = line.find("counts") != std::string::npos;
      header_seen = true;
      continue;
    }
    std::istringstream ls(line);
    std::string tok;
    std::getline(ls, tok, ',');
    ig.delay_um.push_back(std::stod(tok));
    std::getline(ls, tok, ',');
    ig.rate.push_back(std::stod(tok));
    if (with_counts && std::getline(ls, tok, ',')) ig.counts.push_back(std::stoll(tok));
  }
  if (ig.delay_um.empty()) throw std::runtime_error("interferogram CSV holds no samples");
  auto opt = [&](const char* k, double dflt) {
    const auto it = ig.meta.find(k);
    return it == ig.meta.end() ? dflt : std::stod(it->second);
  };
  ig.rate_scale_cps = opt("rate_scale_cps", 200.0);
  ig.integration_time_s = opt("integration_time_s", 1.0);
  ig.baseline = opt("lambda0", 1.0);
  const auto pol = ig.meta.find("reference_polarization");
  if (pol != ig.meta.end() && pol->second == "V") ig.reference_polarization = Polarization::V;
  const auto seed = ig.meta.find("rng_seed");
  if (seed != ig.meta.end()) ig.rng_seed = std::stoull(seed->second);
  return ig;
}

Interferogram load_interferogram_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  return read_interferogram_csv(f);
}

void write_oct_csv(std::ostream& os, const OctScan& scan) {
  os << "# qoct oct scan v1\n";
  for (const auto& [k, v] : scan.fringes.meta) os << "# " << k << "=" << v << "\n";
  os << "delay_um,rate_normalized,envelope\n";
  for (size_t i = 0; i < scan.fringes.delay_um.size(); ++i)
    os << format_double(scan.fringes.delay_um[i]) << ","
       << format_double(scan.fringes.rate[i]) << "," << format_double(scan.envelope[i])
       << "\n";
}

void write_dispersion_table(std::ostream& os, const Material& material, Axis axis,
                            double lo_nm, double hi_nm, int points) {
  if (points < 2 || hi_nm <= lo_nm) throw std::invalid_argument("bad dispersion table range");
  os << "# material=" << material.name() << " axis=" << to_string(axis) << "\n";
  os << "# source=" << material.source() << "\n";
  os << "wavelength_nm,n,gvd_fs2_per_mm\n";
  for (int i = 0; i < points; ++i) {
    const double lam = lo_nm + (hi_nm - lo_nm) * i / (points - 1);
    os << format_double(lam) << "," << format_double(material.refractive_index(lam, axis))
       << "," << format_double(material.gvd_coefficient(lam, axis)) << "\n";
  }
}

void write_feature_csv(std::ostream& os, const std::vector<DipFit>& fits,
                       const std::vector<int>& labels) {
  os << "center_um,fwhm_um,visibility,amplitude,polarity,model,class\n";
  for (size_t i = 0; i < fits.size(); ++i) {
    const auto& f = fits[i];
    os << format_double(f.center_um) << "," << format_double(f.fwhm_um) << ","
       << format_double(f.visibility) << "," << format_double(f.amplitude) << ","
       << (f.polarity < 0 ? "dip" : "peak") << "," << f.model << ","
       << (i < labels.size() ? std::to_string(labels[i]) : "") << "\n";
  }
}

void write_joint_density_csv(std::ostream& os, const JointSpectrum& js, int stride) {
  os << "omega_s,omega_i,density\n";
  for (int s = 0; s < js.n; s += stride)
    for (int i = 0; i < js.n; i += stride)
      os << format_double(js.omega(s)) << "," << format_double(js.omega(i)) << ","
         << format_double(std::norm(js.at(s, i))) << "\n";
}

}  // namespace qoct
