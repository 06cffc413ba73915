#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "frem/fixtures.hpp"
#include "frem/inference.hpp"
#include "frem/io.hpp"
#include "frem/oracle.hpp"

namespace {

using frem::Params;
using frem::SRNModel;
using frem::State;
using json = nlohmann::json;

std::vector<double> parse_doubles(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(std::stod(item));
  return out;
}

State parse_state(const std::string& text) {
  State out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(std::stoll(item));
  return out;
}

std::vector<Params> parse_seed_list(const std::string& text) {
  std::vector<Params> out;
  std::stringstream ss(text);
  std::string group;
  while (std::getline(ss, group, ';'))
    if (!group.empty()) out.push_back(parse_doubles(group));
  return out;
}

struct ModelOpts {
  std::string model_path;
  std::string fixture;

  void attach(CLI::App* cmd) {
    auto* m = cmd->add_option("--model", model_path, "model JSON file");
    auto* f = cmd->add_option("--fixture", fixture,
                              "built-in model: decay, wear, birth-death, sir, "
                              "gene-network, pure-death");
    m->excludes(f);
  }
  frem::fixtures::Fixture resolve() const {
    if (!fixture.empty()) return frem::fixtures::by_name(fixture);
    if (model_path.empty())
      throw std::runtime_error("no model given (use --model or --fixture)");
    frem::fixtures::Fixture fx;
    fx.model = frem::io::load_model(model_path);
    fx.theta_g = fx.model.theta_true;
    return fx;
  }
};

struct DataOpts {
  std::string obs_path;
  double time_unit = 1.0;
  double state_unit = 1.0;

  void attach(CLI::App* cmd) {
    cmd->add_option("--obs", obs_path, "observations table (CSV)")->required();
    cmd->add_option("--time-unit", time_unit,
                    "divide times by this unit on load (wear-style rescaling)");
    cmd->add_option("--state-unit", state_unit,
                    "divide counts by this unit on load and round");
  }
  std::vector<frem::ObservedPath> load(std::size_t n_species) const {
    auto paths = frem::io::load_observations(obs_path, n_species);
    if (time_unit != 1.0 || state_unit != 1.0)
      frem::io::rescale_observations(paths, time_unit, state_unit);
    return paths;
  }
};

struct ConfigOpts {
  frem::RunConfig cfg;
  std::string phase1_mode = "per-interval";
  std::uint64_t master_seed = 1;
  std::string seeds_text;

  void attach(CLI::App* cmd) {
    cmd->add_option("--m0", cfg.bridge.M0, "initial paths per direction");
    cmd->add_option("--cv0", cfg.bridge.cv0, "coefficient-of-variation target");
    cmd->add_option("--gamma", cfg.bridge.gamma,
                    "Kronecker sufficiency threshold");
    cmd->add_option("--cl", cfg.bridge.C_L, "pair budget multiplier C_L");
    cmd->add_option("--c-reg", cfg.bridge.c_reg,
                    "covariance diagonal regularization");
    cmd->add_option("--zeta-growth", cfg.bridge.zeta_growth,
                    "support shrink factor per expansion");
    cmd->add_option("--max-rounds", cfg.bridge.max_rounds,
                    "sampling rounds before an interval fails");
    cmd->add_option("--bootstrap-min-l", cfg.bridge.bootstrap_min_L,
                    "below this pair count the cv is bootstrapped");
    cmd->add_option("--bootstrap-reps", cfg.bridge.bootstrap_reps,
                    "bootstrap replicates");
    cmd->add_option("--rhat-threshold", cfg.rhat_threshold, "R-hat threshold");
    cmd->add_option("--ma-order", cfg.ma_order, "moving-average order");
    cmd->add_option("--ma-tol", cfg.ma_tolerance, "moving-average tolerance");
    cmd->add_option("--max-iters", cfg.max_iterations, "EM iteration cap");
    cmd->add_option("--phase1-mode", phase1_mode,
                    "'global' or 'per-interval'");
    cmd->add_option("--t-star", cfg.t_star_fraction,
                    "meeting-point placement within each interval")
        ->check(CLI::Range(1e-9, 1.0 - 1e-9));
    cmd->add_option("--ode-dt", cfg.ode_dt,
                    "mean-field ODE step (0: leg length / 200)");
    cmd->add_option("--nm-evals", cfg.nm_max_evals_per_dim,
                    "simplex evaluations per dimension");
    cmd->add_option("--nm-tol", cfg.nm_tolerance, "simplex tolerance");
    cmd->add_option("--master-seed", master_seed, "master seed");
    cmd->add_option("--seeds", seeds_text,
                    "phase I seeds, e.g. '1,5;6,5;1,9;6,9' (default: fixture "
                    "seeds)");
  }
  frem::RunConfig resolve() {
    cfg.phase1_mode = phase1_mode == "global" ? frem::Phase1Mode::global
                                              : frem::Phase1Mode::per_interval;
    cfg.bridge.t_star_fraction = cfg.t_star_fraction;
    return cfg;
  }
  std::vector<Params> resolve_seeds(const frem::fixtures::Fixture& fx) const {
    if (!seeds_text.empty()) return parse_seed_list(seeds_text);
    if (!fx.seeds.empty()) return fx.seeds;
    throw std::runtime_error("no seeds given (use --seeds)");
  }
};

int cmd_simulate(const ModelOpts& mo, const std::string& theta_text,
                 const std::string& x0_text, double t_end, double dt,
                 const std::string& epochs_text, int n_paths,
                 std::uint64_t seed, const std::string& out,
                 const std::string& emit_model) {
  const auto fx = mo.resolve();
  const Params theta =
      theta_text.empty() ? fx.theta_g : parse_doubles(theta_text);
  if (theta.empty())
    throw std::runtime_error("model carries no theta_true; pass --theta");
  const State x0 = x0_text.empty() ? fx.x0 : parse_state(x0_text);
  std::vector<double> epochs;
  if (!epochs_text.empty())
    epochs = parse_doubles(epochs_text);
  else {
    const double T = t_end > 0 ? t_end : fx.t_end;
    const double d = dt > 0 ? dt : fx.dt_obs;
    epochs = frem::io::uniform_epochs(T, d);
  }
  const auto paths =
      frem::io::simulate_observations(fx.model, theta, x0, epochs, n_paths, seed);
  frem::io::save_observations(paths, fx.model.species, out);
  if (!emit_model.empty()) frem::io::save_model(fx.model, emit_model);
  std::cout << "wrote " << paths.size() << " paths x " << epochs.size()
            << " epochs to " << out << "\n";
  return 0;
}

int cmd_phase1(const ModelOpts& mo, const DataOpts& dob, ConfigOpts& co,
               const std::string& grid_text, const std::string& out) {
  const auto fx = mo.resolve();
  const auto cfg = co.resolve();
  const auto paths = dob.load(fx.model.species.size());
  const auto data = frem::extract_intervals(paths);

  std::vector<Params> seeds;
  if (!grid_text.empty()) {
    // per-coordinate "lo:hi:n" specs, comma separated; full mesh
    std::vector<double> los, his;
    std::vector<int> ns;
    std::stringstream ss(grid_text);
    std::string spec;
    while (std::getline(ss, spec, ',')) {
      double lo, hi;
      int n;
      if (std::sscanf(spec.c_str(), "%lf:%lf:%d", &lo, &hi, &n) != 3 || n < 1)
        throw std::runtime_error("bad grid spec '" + spec + "'");
      los.push_back(lo);
      his.push_back(hi);
      ns.push_back(n);
    }
    std::vector<int> idx(ns.size(), 0);
    while (true) {
      Params p(ns.size());
      for (std::size_t i = 0; i < ns.size(); ++i)
        p[i] = ns[i] == 1 ? los[i]
                          : los[i] + (his[i] - los[i]) * idx[i] / (ns[i] - 1);
      seeds.push_back(p);
      std::size_t i = 0;
      while (i < ns.size() && idx[i] == ns[i] - 1) idx[i++] = 0;
      if (i == ns.size()) break;
      ++idx[i];
    }
  } else {
    seeds = co.resolve_seeds(fx);
  }

  std::ostringstream table;
  table << "seed,theta,objective,converged\n";
  const auto opts = cfg.phase1_options();
  for (const auto& seed : seeds) {
    const auto r = cfg.phase1_mode == frem::Phase1Mode::global
                       ? frem::phase1_global(fx.model, data, seed, opts)
                       : frem::phase1_per_interval(fx.model, data, seed, opts);
    auto join = [](const Params& p) {
      std::ostringstream s;
      for (std::size_t j = 0; j < p.size(); ++j)
        s << (j ? " " : "") << p[j];
      return s.str();
    };
    table << '"' << join(seed) << "\",\"" << join(r.theta) << "\","
          << r.objective << ',' << (r.converged ? 1 : 0) << '\n';
  }
  if (out.empty())
    std::cout << table.str();
  else {
    frem::io::write_file(out, table.str());
    std::cout << "wrote " << seeds.size() << " rows to " << out << "\n";
  }
  return 0;
}

int cmd_infer(const ModelOpts& mo, const DataOpts& dob, ConfigOpts& co,
              const std::string& out_dir) {
  const auto fx = mo.resolve();
  const auto cfg = co.resolve();
  const auto paths = dob.load(fx.model.species.size());
  const auto data = frem::extract_intervals(paths);
  const auto seeds = co.resolve_seeds(fx);

  const auto run = frem::frem_run(fx.model, data, seeds, cfg, co.master_seed);

  std::filesystem::create_directories(out_dir);
  const auto doc =
      frem::io::results_document(fx.model, cfg, seeds, co.master_seed, run);
  frem::io::write_file(out_dir + "/result.json", doc);
  frem::io::write_file(out_dir + "/trace.csv",
                       frem::io::trace_table(run, fx.model.channels.size()));

  if (run.failed) {
    json err;
    err["error"] = "inference failed";
    err["detail"] = run.failure;
    err["result"] = out_dir + "/result.json";
    std::cerr << err.dump() << "\n";
    return 2;
  }
  std::cout << "p* = " << run.iterations
            << (run.converged ? "" : " (iteration cap reached)") << "\n";
  std::cout << "estimate =";
  for (double c : run.estimate) std::cout << ' ' << c;
  std::cout << "\nwrote " << out_dir << "/result.json and " << out_dir
            << "/trace.csv\n";
  return 0;
}

int cmd_ensemble(const ModelOpts& mo, const DataOpts& dob, ConfigOpts& co,
                 int n_runs, const std::string& out_dir) {
  const auto fx = mo.resolve();
  const auto cfg = co.resolve();
  const auto paths = dob.load(fx.model.species.size());
  const auto data = frem::extract_intervals(paths);
  const auto seeds = co.resolve_seeds(fx);

  const auto summary =
      frem::ensemble_run(fx.model, data, seeds, cfg, n_runs, co.master_seed);
  std::filesystem::create_directories(out_dir);
  frem::io::write_file(out_dir + "/ensemble.json",
                       frem::io::ensemble_document(fx.model, cfg, seeds,
                                                   co.master_seed, n_runs,
                                                   summary));
  std::cout << "runs: " << n_runs << ", failures: " << summary.failures << "\n";
  for (std::size_t j = 0; j < summary.mean.size(); ++j)
    std::cout << "c" << (j + 1) << ": average " << summary.mean[j] << "  CI95 ["
              << summary.ci_lo[j] << ", " << summary.ci_hi[j] << "]  min "
              << summary.min[j] << "  max " << summary.max[j] << "\n";
  std::cout << "wrote " << out_dir << "/ensemble.json\n";
  return summary.failures == n_runs ? 2 : 0;
}

int cmd_oracle(const ModelOpts& mo, const std::string& theta_text,
               const std::string& box_text, const std::string& from_text,
               const std::string& to_text, double s, double t, bool bridge,
               int n_quad) {
  const auto fx = mo.resolve();
  const Params theta =
      theta_text.empty() ? fx.theta_g : parse_doubles(theta_text);
  if (theta.empty())
    throw std::runtime_error("model carries no theta_true; pass --theta");

  frem::StateBox box;
  {
    std::stringstream ss(box_text);
    std::string spec;
    while (std::getline(ss, spec, ',')) {
      long long lo, hi;
      if (std::sscanf(spec.c_str(), "%lld:%lld", &lo, &hi) != 2 || hi < lo)
        throw std::runtime_error("bad box spec '" + spec + "' (want lo:hi)");
      box.lo.push_back(lo);
      box.hi.push_back(hi);
    }
  }
  if (box.lo.size() != fx.model.species.size())
    throw std::runtime_error("box must give one lo:hi range per species");
  const State x = parse_state(from_text);
  const State y = parse_state(to_text);

  json doc;
  if (bridge) {
    const auto r =
        frem::bridge_expectations(fx.model, theta, box, x, s, y, t, n_quad);
    doc["p"] = r.p;
    doc["ER"] = r.ER;
    doc["EF"] = r.EF;
    doc["sink_mass"] = r.sink_mass;
    doc["truncation_warning"] = r.truncation_warning;
  } else {
    const auto r = frem::transition_prob(fx.model, theta, box, x, s, y, t);
    doc["p"] = r.probability;
    doc["sink_mass"] = r.sink_mass;
    doc["truncation_warning"] = r.truncation_warning;
  }
  std::cout << doc.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "forward-reverse bridge estimation and reaction-rate inference for "
      "stochastic reaction networks"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate",
                                 "sample SSA paths and record them at epochs");
  ModelOpts sim_model;
  sim_model.attach(sim);
  std::string sim_theta, sim_x0, sim_epochs, sim_out = "observations.csv";
  std::string sim_emit_model;
  double sim_t_end = 0.0, sim_dt = 0.0;
  int sim_paths = 1;
  std::uint64_t sim_seed = 1;
  sim->add_option("--theta", sim_theta, "rate coefficients (default: theta_true)");
  sim->add_option("--x0", sim_x0, "initial state (default: fixture)");
  sim->add_option("--t-end", sim_t_end, "final time");
  sim->add_option("--dt", sim_dt, "uniform observation spacing");
  sim->add_option("--epochs", sim_epochs, "explicit epoch list (overrides --dt)");
  sim->add_option("--paths", sim_paths, "number of observed paths");
  sim->add_option("--seed", sim_seed, "simulation seed");
  sim->add_option("-o,--out", sim_out, "output CSV");
  sim->add_option("--emit-model", sim_emit_model,
                  "also write the model JSON here");

  // phase1
  auto* p1 = app.add_subcommand("phase1",
                                "deterministic ODE-matching seeds only");
  ModelOpts p1_model;
  DataOpts p1_data;
  ConfigOpts p1_cfg;
  std::string p1_grid, p1_out;
  p1_model.attach(p1);
  p1_data.attach(p1);
  p1_cfg.attach(p1);
  p1->add_option("--grid", p1_grid,
                 "seed mesh per coordinate, 'lo:hi:n,lo:hi:n' (overrides "
                 "--seeds)");
  p1->add_option("-o,--out", p1_out, "write the table here instead of stdout");

  // infer
  auto* inf = app.add_subcommand("infer", "full two-phase inference run");
  ModelOpts inf_model;
  DataOpts inf_data;
  ConfigOpts inf_cfg;
  std::string inf_out = ".";
  inf_model.attach(inf);
  inf_data.attach(inf);
  inf_cfg.attach(inf);
  inf->add_option("--out", inf_out, "output directory");

  // ensemble
  auto* ens = app.add_subcommand("ensemble", "independent repeated runs");
  ModelOpts ens_model;
  DataOpts ens_data;
  ConfigOpts ens_cfg;
  std::string ens_out = ".";
  int ens_runs = 30;
  ens_model.attach(ens);
  ens_data.attach(ens);
  ens_cfg.attach(ens);
  ens->add_option("--runs", ens_runs, "number of independent runs");
  ens->add_option("--out", ens_out, "output directory");

  // oracle
  auto* ora = app.add_subcommand(
      "oracle", "truncated master-equation transition/bridge queries");
  ModelOpts ora_model;
  ora_model.attach(ora);
  std::string ora_theta, ora_box, ora_from, ora_to;
  double ora_s = 0.0, ora_t = 1.0;
  bool ora_bridge = false;
  int ora_quad = 64;
  ora->add_option("--theta", ora_theta, "rate coefficients");
  ora->add_option("--box", ora_box, "truncation box, 'lo:hi' per species")
      ->required();
  ora->add_option("--from", ora_from, "state at s")->required();
  ora->add_option("--to", ora_to, "state at t")->required();
  ora->add_option("--s", ora_s, "interval start");
  ora->add_option("--t", ora_t, "interval end");
  ora->add_flag("--bridge", ora_bridge,
                "bridge-conditional E[R_j], E[F_j] instead of p alone");
  ora->add_option("--quad", ora_quad, "Gauss-Legendre nodes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (sim->parsed())
      return cmd_simulate(sim_model, sim_theta, sim_x0, sim_t_end, sim_dt,
                          sim_epochs, sim_paths, sim_seed, sim_out,
                          sim_emit_model);
    if (p1->parsed()) return cmd_phase1(p1_model, p1_data, p1_cfg, p1_grid, p1_out);
    if (inf->parsed()) return cmd_infer(inf_model, inf_data, inf_cfg, inf_out);
    if (ens->parsed())
      return cmd_ensemble(ens_model, ens_data, ens_cfg, ens_runs, ens_out);
    if (ora->parsed())
      return cmd_oracle(ora_model, ora_theta, ora_box, ora_from, ora_to, ora_s,
                        ora_t, ora_bridge, ora_quad);
  } catch (const std::exception& e) {
    json err;
    err["error"] = e.what();
    std::cerr << err.dump() << "\n";
    return 1;
  }
  return 0;
}
