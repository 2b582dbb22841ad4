#include "fsplate/io.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fsplate/fourier.hpp"

namespace fsplate::io {

std::string format_double(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_text(const std::string& path, const std::string& text) {
  std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("io: cannot write " + path);
  out << text;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("io: cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

uint64_t fnv1a(const std::string& data) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string matrix_csv(const Eigen::MatrixXd& m) {
  std::ostringstream os;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) os << ',';
      os << format_double(m(i, j));
    }
    os << '\n';
  }
  return os.str();
}

Eigen::MatrixXd parse_matrix_csv(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) return {};
  Eigen::MatrixXd m(rows.size(), rows[0].size());
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  return m;
}

std::string profile_csv(const geom::PlateProfile& p) {
  std::ostringstream os;
  os << "node,s,value\n";
  Eigen::VectorXd s = p.grid.nodes1();
  for (int i = 0; i < p.grid.node_count(); ++i) {
    double si = p.grid.dim == 2 ? s[i % p.grid.n_modes] : s[i / p.grid.n_modes];
    os << i << ',' << format_double(si) << ',' << format_double(p.values[i]) << '\n';
  }
  return os.str();
}

std::string profile_coeffs_csv(const geom::PlateProfile& p) {
  if (p.grid.dim != 2)
    throw std::invalid_argument("profile_coeffs_csv: coefficient export is dim==2 only");
  std::ostringstream os;
  os << "mode,real,imag\n";
  Eigen::VectorXd c = fourier::analysis(p.grid.n_modes) * p.values;
  const int n = p.grid.n_modes;
  os << 0 << ',' << format_double(c[0]) << ',' << format_double(0.0) << '\n';
  for (int k = 1; k < n / 2; ++k) {
    // a cos + b sin = Re[(a - i b) e^{iks}]
    os << k << ',' << format_double(0.5 * c[2 * k - 1]) << ','
       << format_double(-0.5 * c[2 * k]) << '\n';
  }
  os << n / 2 << ',' << format_double(c[n - 1]) << ',' << format_double(0.0) << '\n';
  return os.str();
}

geom::PlateProfile parse_profile_csv(const geom::TorusGrid& grid, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);  // header
  Eigen::VectorXd v = Eigen::VectorXd::Zero(grid.node_count());
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    std::getline(ls, cell, ',');
    int idx = std::stoi(cell);
    std::getline(ls, cell, ',');
    std::getline(ls, cell, ',');
    v[idx] = std::stod(cell);
  }
  geom::PlateProfile p;
  p.grid = grid;
  p.values = v;
  p.mean_zero = std::abs(v.mean()) <= 1e-12 * std::max(1e-300, v.cwiseAbs().maxCoeff());
  return p;
}

std::string spectrum_csv(const spectral::Spectrum& sp) {
  std::ostringstream os;
  os << "re,im,residual\n";
  for (const auto& p : sp.pairs)
    os << format_double(p.lambda.real()) << ',' << format_double(p.lambda.imag()) << ','
       << format_double(p.residual) << '\n';
  return os.str();
}

std::string spectrum_json(const spectral::Spectrum& sp, int count) {
  nlohmann::json j;
  j["certified"] = sp.certified;
  j["shift"] = sp.shift;
  j["max_residual"] = sp.max_residual;
  nlohmann::json arr = nlohmann::json::array();
  int n = count < 0 ? static_cast<int>(sp.pairs.size())
                    : std::min<int>(count, static_cast<int>(sp.pairs.size()));
  for (int k = 0; k < n; ++k)
    arr.push_back({{"re", sp.pairs[k].lambda.real()}, {"im", sp.pairs[k].lambda.imag()}});
  j["eigenvalues"] = arr;
  return j.dump(2) + "\n";
}

std::string hautus_csv(const spectral::HautusReport& rep) {
  std::ostringstream os;
  os << "re,im,bstar_norm,pass\n";
  for (const auto& r : rep.rows)
    os << format_double(r.lambda.real()) << ',' << format_double(r.lambda.imag()) << ','
       << format_double(r.bstar_norm) << ',' << (r.pass ? 1 : 0) << '\n';
  return os.str();
}

std::string hautus_json(const spectral::HautusReport& rep) {
  nlohmann::json j;
  j["sigma"] = rep.sigma;
  j["tol_rel"] = rep.tol_rel;
  j["pass"] = rep.pass;
  j["min_margin"] = rep.min_margin;
  j["certified"] = rep.certified;
  j["n_modes_tested"] = rep.rows.size();
  return j.dump(2) + "\n";
}

std::string trajectory_csv(const sim::Trajectory& tr) {
  std::ostringstream os;
  os << "t,norm_H,norm_fluid,norm_xi1,norm_xi2,norm_v,energy_residual\n";
  for (size_t k = 0; k < tr.t.size(); ++k)
    os << format_double(tr.t[k]) << ',' << format_double(tr.norm_H[k]) << ','
       << format_double(tr.norm_fluid[k]) << ',' << format_double(tr.norm_xi1[k]) << ','
       << format_double(tr.norm_xi2[k]) << ',' << format_double(tr.norm_v[k]) << ','
       << format_double(tr.energy_residual[k]) << '\n';
  return os.str();
}

namespace {

nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& rows) {
  if (rows.empty()) return {};
  Eigen::MatrixXd m(rows.size(), rows[0].size());
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j].get<double>();
  return m;
}

}  // namespace

std::string feedback_law_json(const control::FeedbackLaw& law) {
  nlohmann::json j;
  j["N_gamma"] = law.N_gamma;
  j["gamma"] = law.gamma;
  j["t0"] = law.t0;
  j["margin"] = law.margin;
  j["A_u"] = matrix_json(law.A_u);
  j["B_u"] = matrix_json(law.B_u);
  j["B_tilde"] = matrix_json(law.B_tilde);
  j["F"] = matrix_json(law.F);
  j["right_basis"] = matrix_json(law.right_basis);
  j["left_basis"] = matrix_json(law.left_basis);
  j["dir_gram"] = matrix_json(law.dir_gram);
  nlohmann::json dirs = nlohmann::json::array();
  for (const auto& d : law.directions) dirs.push_back(matrix_json(d));
  j["directions"] = dirs;
  nlohmann::json ol = nlohmann::json::array(), cl = nlohmann::json::array();
  for (const auto& l : law.open_loop) ol.push_back({l.real(), l.imag()});
  for (const auto& l : law.closed_loop) cl.push_back({l.real(), l.imag()});
  j["open_loop"] = ol;
  j["closed_loop"] = cl;
  return j.dump(2) + "\n";
}

control::FeedbackLaw parse_feedback_law_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  control::FeedbackLaw law;
  law.N_gamma = j["N_gamma"].get<int>();
  law.gamma = j["gamma"].get<double>();
  law.t0 = j["t0"].get<double>();
  law.margin = j["margin"].get<double>();
  law.A_u = matrix_from_json(j["A_u"]);
  law.B_u = matrix_from_json(j["B_u"]);
  law.B_tilde = matrix_from_json(j["B_tilde"]);
  law.F = matrix_from_json(j["F"]);
  law.right_basis = matrix_from_json(j["right_basis"]);
  law.left_basis = matrix_from_json(j["left_basis"]);
  law.dir_gram = matrix_from_json(j["dir_gram"]);
  for (const auto& d : j["directions"]) law.directions.push_back(matrix_from_json(d));
  for (const auto& l : j["open_loop"])
    law.open_loop.emplace_back(l[0].get<double>(), l[1].get<double>());
  for (const auto& l : j["closed_loop"])
    law.closed_loop.emplace_back(l[0].get<double>(), l[1].get<double>());
  if (law.N_gamma > 0) {
    Eigen::MatrixXd E = control::artstein_reduce(law.A_u,
        Eigen::MatrixXd::Identity(law.N_gamma, law.N_gamma), law.t0);
    law.exp_mAt0 = E;
  }
  return law;
}

std::string run_manifest_json(const cfg::RunConfig& cfg, const std::string& command,
                              const std::vector<std::pair<std::string, std::string>>& outputs) {
  nlohmann::json j;
  j["command"] = command;
  j["config"] = cfg.as_map();
  j["config_hash"] = fnv1a(cfg.canonical());
  j["seed"] = cfg.seed;
  j["version"] = "fsplate 1.0.0";
  nlohmann::json outs = nlohmann::json::object();
  for (const auto& [name, content] : outputs) outs[name] = fnv1a(content);
  j["output_checksums"] = outs;
  return j.dump(2) + "\n";
}

void export_system(const disc::DiscreteSystem& sys, const std::string& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::pair<std::string, std::string>> files = {
      {"A_red.csv", matrix_csv(sys.A_red)},
      {"A_adj_red.csv", matrix_csv(sys.A_adj_red)},
      {"M_full.csv", matrix_csv(sys.M_full)},
      {"V.csv", matrix_csv(sys.basis.V)},
      {"C.csv", matrix_csv(sys.basis.C)},
      {"B_red.csv", matrix_csv(sys.B_red.size() ? sys.B_red : Eigen::MatrixXd(0, 0))},
  };
  uint64_t h = 1469598103934665603ull;
  for (const auto& [name, content] : files) {
    write_text(dir + "/" + name, content);
    h ^= fnv1a(content);
  }
  nlohmann::json j;
  j["n_modes"] = sys.grid.ns();
  j["n_vertical"] = sys.grid.nz();
  j["dim_reduced"] = sys.dim();
  j["params"] = {{"nu", sys.params.nu},       {"alpha", sys.params.alpha},
                 {"delta", sys.params.delta}, {"beta1", sys.params.beta1},
                 {"beta2", sys.params.beta2}, {"lambda0", sys.params.lambda0}};
  j["basis"] = {{"rank", sys.basis.rank},
                {"constraint_residual", sys.basis.max_constraint_residual},
                {"description", "fourier x chebyshev, divergence-free, trace-coupled"}};
  j["checksum"] = h;
  write_text(dir + "/manifest.json", j.dump(2) + "\n");
}

SystemHeader import_system_header(const std::string& dir) {
  nlohmann::json j = nlohmann::json::parse(read_text(dir + "/manifest.json"));
  SystemHeader h;
  h.n_modes = j["n_modes"].get<int>();
  h.n_vertical = j["n_vertical"].get<int>();
  h.dim_reduced = j["dim_reduced"].get<int>();
  h.params.nu = j["params"]["nu"].get<double>();
  h.params.alpha = j["params"]["alpha"].get<double>();
  h.params.delta = j["params"]["delta"].get<double>();
  h.params.beta1 = j["params"]["beta1"].get<double>();
  h.params.beta2 = j["params"]["beta2"].get<double>();
  h.params.lambda0 = j["params"]["lambda0"].get<double>();
  h.checksum = j["checksum"].get<uint64_t>();
  return h;
}

Eigen::MatrixXd import_system_matrix(const std::string& dir, const std::string& name) {
  return parse_matrix_csv(read_text(dir + "/" + name + ".csv"));
}

}  // namespace fsplate::io
