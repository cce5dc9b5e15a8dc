#pragma once
#include <iosfwd>
#include <string>
#include <vector>

#include "qoct/analysis.hpp"
#include "qoct/interferometer.hpp"

namespace qoct {

/// Interferogram CSV: provenance metadata as `# key=value` comment lines,
/// then a header row and `delay_um,rate_normalized[,counts]` data rows.
/// Formatting is deterministic (17 significant digits).
void write_interferogram_csv(std::ostream& os, const Interferogram& ig);
void write_interferogram_csv(const std::string& path, const Interferogram& ig);
Interferogram read_interferogram_csv(std::istream& is);
Interferogram load_interferogram_csv(const std::string& path);

/// OCT scan CSV adds an `envelope` column.
void write_oct_csv(std::ostream& os, const OctScan& scan);

/// Dispersion table: wavelength_nm, n, gvd_fs2_per_mm.
void write_dispersion_table(std::ostream& os, const Material& material, Axis axis,
                            double lo_nm, double hi_nm, int points);

/// Fitted feature table: center_um, fwhm_um, visibility, polarity, class.
void write_feature_csv(std::ostream& os, const std::vector<DipFit>& fits,
                       const std::vector<int>& labels = {});

/// Joint spectral density table: omega_s, omega_i, density.
void write_joint_density_csv(std::ostream& os, const JointSpectrum& js, int stride = 1);

std::string format_double(double v);

}  // namespace qoct
