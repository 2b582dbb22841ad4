#pragma once

#include <string>
#include <vector>

#include "fsplate/config.hpp"
#include "fsplate/simulation.hpp"

// Machine-readable artifacts: CSV with shortest round-trip numbers plus JSON
// manifests sufficient to reproduce a run.
namespace fsplate::io {

std::string format_double(double v);  // shortest round-trip

void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);
uint64_t fnv1a(const std::string& data);

std::string matrix_csv(const Eigen::MatrixXd& m);
Eigen::MatrixXd parse_matrix_csv(const std::string& text);

// Profiles: (node_index, s, value) rows and a Fourier coefficient list.
std::string profile_csv(const geom::PlateProfile& p);
std::string profile_coeffs_csv(const geom::PlateProfile& p);
geom::PlateProfile parse_profile_csv(const geom::TorusGrid& grid, const std::string& text);

std::string spectrum_csv(const spectral::Spectrum& sp);
std::string spectrum_json(const spectral::Spectrum& sp, int count);
std::string hautus_csv(const spectral::HautusReport& rep);
std::string hautus_json(const spectral::HautusReport& rep);
std::string trajectory_csv(const sim::Trajectory& tr);
std::string feedback_law_json(const control::FeedbackLaw& law);
control::FeedbackLaw parse_feedback_law_json(const std::string& text);

std::string run_manifest_json(const cfg::RunConfig& cfg, const std::string& command,
                              const std::vector<std::pair<std::string, std::string>>& outputs);

// DiscreteSystem round trip: a directory of CSV matrices + manifest.json.
void export_system(const disc::DiscreteSystem& sys, const std::string& dir);
struct SystemHeader {
  int n_modes = 0, n_vertical = 0, dim_reduced = 0;
  disc::Params params;
  uint64_t checksum = 0;
};
SystemHeader import_system_header(const std::string& dir);
Eigen::MatrixXd import_system_matrix(const std::string& dir, const std::string& name);

}  // namespace fsplate::io
