#include <CLI11.hpp>

#include <iostream>

#include "fsplate/verify.hpp"

namespace {

using namespace fsplate;

constexpr int kExitOk = 0;
constexpr int kExitAssembly = 2;
constexpr int kExitConfig = 3;
constexpr int kExitCriterion = 4;
constexpr int kExitIntegration = 5;

struct Common {
  std::string config_path;
  std::string out_dir;
  long seed = -1;
  std::vector<std::string> overrides;
};

cfg::RunConfig make_config(const Common& c) {
  cfg::RunConfig cfg;
  if (!c.config_path.empty()) cfg = cfg::load_config_file(c.config_path);
  for (const auto& ov : c.overrides) cfg::apply_override(cfg, ov);
  if (!c.out_dir.empty()) cfg.out_dir = c.out_dir;
  if (c.seed >= 0) cfg.seed = static_cast<unsigned long>(c.seed);
  cfg::validate(cfg);
  return cfg;
}

void write_outputs(const cfg::RunConfig& cfg, const std::string& command,
                   const std::vector<std::pair<std::string, std::string>>& outputs) {
  for (const auto& [name, content] : outputs)
    io::write_text(cfg.out_dir + "/" + name, content);
  io::write_text(cfg.out_dir + "/run_manifest.json",
                 io::run_manifest_json(cfg, command, outputs));
}

int cmd_spectrum(const cfg::RunConfig& cfg, bool plate_only) {
  spectral::Spectrum sp;
  if (plate_only) {
    geom::ChannelGrid grid(geom::TorusGrid(2, cfg.L1, cfg.n_modes), cfg.n_vertical);
    Eigen::MatrixXd A = disc::plate_only_matrix(grid, cfg.alpha, cfg.delta);
    sp = spectral::compute_spectrum(A);
  } else {
    disc::DiscreteSystem sys = verify::default_system(cfg);
    sp = spectral::compute_spectrum(sys.A_red, &sys.A_adj_red);
  }
  write_outputs(cfg, "spectrum",
                {{"spectrum.csv", io::spectrum_csv(sp)},
                 {"spectrum.json", io::spectrum_json(sp, cfg.count)}});
  std::cout << "spectrum: " << sp.pairs.size() << " eigenvalues, rightmost Re = "
            << io::format_double(sp.pairs.front().lambda.real()) << "\n";
  return kExitOk;
}

int cmd_hautus(const cfg::RunConfig& cfg) {
  disc::DiscreteSystem sys = verify::default_system(cfg);
  spectral::HautusReport rep = spectral::hautus_test(sys, cfg.gamma, cfg.tol_rel);
  write_outputs(cfg, "hautus",
                {{"hautus.csv", io::hautus_csv(rep)},
                 {"hautus.json", io::hautus_json(rep)}});
  std::cout << (rep.pass ? "hautus: pass" : "hautus: FAIL") << ", min margin "
            << io::format_double(rep.min_margin) << " over " << rep.rows.size()
            << " modes\n";
  return rep.pass ? kExitOk : kExitCriterion;
}

int cmd_synthesize(const cfg::RunConfig& cfg) {
  disc::DiscreteSystem sys = verify::default_system(cfg);
  double gamma = verify::pick_gamma(sys, cfg.gamma);
  control::FeedbackLaw law;
  try {
    law = control::synthesize(sys, gamma, cfg.t0, cfg.margin_factor, cfg.tol_rel);
  } catch (const std::runtime_error& e) {
    std::cerr << "synthesize: criterion failed: " << e.what() << "\n";
    return kExitCriterion;
  }
  write_outputs(cfg, "synthesize", {{"feedback_law.json", io::feedback_law_json(law)}});
  std::cout << "synthesize: N_gamma = " << law.N_gamma << ", gamma = "
            << io::format_double(gamma) << ", closed-loop max Re = "
            << io::format_double(law.closed_loop.empty()
                                     ? -(gamma + law.margin)
                                     : std::max_element(law.closed_loop.begin(),
                                                        law.closed_loop.end(),
                                                        [](auto a, auto b) {
                                                          return a.real() < b.real();
                                                        })
                                           ->real())
            << "\n";
  return kExitOk;
}

int cmd_simulate(const cfg::RunConfig& cfg, bool closed_loop) {
  disc::DiscreteSystem sys = verify::default_system(cfg);
  control::FeedbackLaw law;
  if (closed_loop) {
    double gamma = verify::pick_gamma(sys, cfg.gamma);
    law = control::synthesize(sys, gamma, cfg.t0, cfg.margin_factor, cfg.tol_rel);
  }
  Eigen::VectorXd z0 = verify::random_state(sys, cfg.seed + 1000);
  sim::IntegrateOptions opts;
  opts.T = cfg.T;
  opts.dt = cfg.dt;
  opts.interp_order = cfg.interp == "cubic" ? 3 : 1;
  opts.store_states = false;
  sim::Trajectory tr =
      sim::integrate_linear(sys, closed_loop ? &law : nullptr, z0, opts);
  if (tr.aborted) {
    std::cerr << "simulate: aborted: " << tr.abort_reason << "\n";
    return kExitIntegration;
  }
  sim::DecayFit fit = sim::decay_fit(tr.t, tr.norm_H, cfg.t0 + 2.0 / cfg.gamma);
  write_outputs(cfg, "simulate", {{"trajectory.csv", io::trajectory_csv(tr)}});
  std::cout << "simulate: T = " << io::format_double(tr.final_time())
            << ", fitted decay rate = " << io::format_double(fit.rate) << " +- "
            << io::format_double(fit.band) << "\n";
  return kExitOk;
}

int cmd_verify(const cfg::RunConfig& cfg) {
  verify::Battery b = verify::run_all(cfg);
  std::string text = verify::battery_text(b);
  write_outputs(cfg, "verify", {{"verify_report.csv", verify::battery_csv(b)},
                                {"verify_report.txt", text}});
  std::cout << text;
  return b.all_pass() ? kExitOk : kExitCriterion;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coupled channel-flow / elastic-lid simulation and delayed boundary "
               "feedback synthesis toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  Common common;
  app.add_option("--config", common.config_path, "configuration file (key=value or .json)");
  app.add_option("--out", common.out_dir, "output directory");
  app.add_option("--seed", common.seed, "random seed");
  app.add_option("--override", common.overrides, "key=value override (repeatable)");

  auto* sub_spectrum = app.add_subcommand("spectrum", "assemble and eigensolve");
  bool plate_only = false;
  sub_spectrum->add_flag("--plate-only", plate_only,
                         "decoupled beam block (per-mode quadratic oracle)");
  auto* sub_hautus = app.add_subcommand("hautus", "run the stabilizability test");
  auto* sub_synth = app.add_subcommand("synthesize", "build the delayed feedback law");
  auto* sub_sim = app.add_subcommand("simulate", "integrate the linear dynamics");
  bool closed = false;
  sub_sim->add_flag("--closed-loop", closed, "synthesize a law and close the loop");
  auto* sub_verify = app.add_subcommand("verify", "run the full invariant battery");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitConfig;
  }

  fsplate::cfg::RunConfig cfg;
  try {
    cfg = make_config(common);
  } catch (const fsplate::cfg::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return kExitConfig;
  }

  try {
    if (sub_spectrum->parsed()) return cmd_spectrum(cfg, plate_only);
    if (sub_hautus->parsed()) return cmd_hautus(cfg);
    if (sub_synth->parsed()) return cmd_synthesize(cfg);
    if (sub_sim->parsed()) return cmd_simulate(cfg, closed);
    if (sub_verify->parsed()) return cmd_verify(cfg);
  } catch (const fsplate::cfg::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitAssembly;
  } catch (const std::runtime_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    std::string w = e.what();
    if (w.find("criterion failed") != std::string::npos) return kExitCriterion;
    if (w.find("Picard") != std::string::npos || w.find("dt") != std::string::npos)
      return kExitIntegration;
    return kExitAssembly;
  }
  return kExitConfig;
}
