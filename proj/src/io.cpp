#include "frem/io.hpp"

#include <nlohmann/json.hpp>

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "frem/simulation.hpp"

namespace frem {
namespace io {

using nlohmann::json;

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

[[noreturn]] void fail(const std::string& origin, const std::string& what) {
  throw ParseError(origin.empty() ? what : origin + ": " + what);
}

}  // namespace

std::string serialize_model(const SRNModel& model) {
  json doc;
  doc["name"] = model.name;
  doc["species"] = model.species;
  json channels = json::array();
  for (const auto& ch : model.channels) {
    json c;
    c["label"] = ch.label;
    c["stoich"] = ch.stoich;
    json factors = json::array();
    for (const auto& f : ch.factors) {
      json jf;
      jf["species"] = f.species;
      jf["order"] = f.order;
      if (f.guard_min) jf["guard_min"] = *f.guard_min;
      factors.push_back(jf);
    }
    c["factors"] = factors;
    channels.push_back(c);
  }
  doc["channels"] = channels;
  if (!model.theta_true.empty()) doc["theta_true"] = model.theta_true;
  return doc.dump(2) + "\n";
}

SRNModel parse_model(const std::string& text, const std::string& origin) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(origin, std::string("invalid JSON: ") + e.what());
  }
  SRNModel m;
  try {
    m.name = doc.value("name", std::string{});
    m.species = doc.at("species").get<std::vector<std::string>>();
    for (std::size_t j = 0; j < doc.at("channels").size(); ++j) {
      const json& c = doc.at("channels")[j];
      ReactionChannel ch;
      ch.label = c.value("label", std::string{});
      ch.stoich = c.at("stoich").get<std::vector<int>>();
      if (c.contains("factors")) {
        for (std::size_t fi = 0; fi < c.at("factors").size(); ++fi) {
          const json& jf = c.at("factors")[fi];
          PropensityFactor f;
          f.species = jf.at("species").get<int>();
          f.order = jf.value("order", 1);
          if (jf.contains("guard_min")) {
            const auto g = jf.at("guard_min").get<std::int64_t>();
            if (g < 0)
              fail(origin, "channel " + std::to_string(j) + " factor " +
                               std::to_string(fi) + ": guard_min is negative");
            f.guard_min = g;
          }
          ch.factors.push_back(f);
        }
      }
      m.channels.push_back(std::move(ch));
    }
    if (doc.contains("theta_true"))
      m.theta_true = doc.at("theta_true").get<std::vector<double>>();
  } catch (const json::exception& e) {
    fail(origin, std::string("bad model document: ") + e.what());
  }
  const auto violations = validate_model(m);
  if (!violations.empty()) fail(origin, "invalid model: " + violations.front());
  return m;
}

SRNModel load_model(const std::string& path) {
  return parse_model(read_file(path), path);
}

void save_model(const SRNModel& model, const std::string& path) {
  write_file(path, serialize_model(model));
}

std::string serialize_observations(const std::vector<ObservedPath>& paths,
                                   const std::vector<std::string>& species) {
  std::ostringstream out;
  out << "path_id,time";
  for (const auto& s : species) out << ',' << s;
  out << '\n';
  for (const auto& p : paths)
    for (const auto& obs : p.points) {
      out << p.id << ',' << fmt_double(obs.time);
      for (auto v : obs.state) out << ',' << v;
      out << '\n';
    }
  return out.str();
}

std::vector<ObservedPath> parse_observations(const std::string& text,
                                             std::size_t n_species,
                                             const std::string& origin) {
  std::vector<ObservedPath> paths;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  auto where = [&](const std::string& what) {
    fail(origin, "line " + std::to_string(lineno) + ": " + what);
  };
  if (!std::getline(in, line)) fail(origin, "empty observations file");
  lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t pos = 0;
    while (true) {
      const auto comma = line.find(',', pos);
      fields.push_back(line.substr(pos, comma - pos));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    if (fields.size() != 2 + n_species)
      where("expected " + std::to_string(2 + n_species) + " fields, found " +
            std::to_string(fields.size()));
    Observation obs;
    try {
      std::size_t used = 0;
      obs.time = std::stod(fields[1], &used);
      if (used != fields[1].size()) throw std::invalid_argument(fields[1]);
    } catch (const std::exception&) {
      where("field 2: invalid time '" + fields[1] + "'");
    }
    obs.state.resize(n_species);
    for (std::size_t i = 0; i < n_species; ++i) {
      try {
        std::size_t used = 0;
        obs.state[i] = std::stoll(fields[2 + i], &used);
        if (used != fields[2 + i].size())
          throw std::invalid_argument(fields[2 + i]);
      } catch (const std::exception&) {
        where("field " + std::to_string(3 + i) + ": invalid count '" +
              fields[2 + i] + "'");
      }
      if (obs.state[i] < 0)
        where("field " + std::to_string(3 + i) + ": negative count");
    }
    if (paths.empty() || paths.back().id != fields[0]) {
      paths.push_back({fields[0], {}});
    }
    auto& p = paths.back();
    if (!p.points.empty() && !(p.points.back().time < obs.time))
      where("times not strictly increasing within path '" + p.id + "'");
    p.points.push_back(std::move(obs));
  }
  return paths;
}

std::vector<ObservedPath> load_observations(const std::string& path,
                                            std::size_t n_species) {
  return parse_observations(read_file(path), n_species, path);
}

void save_observations(const std::vector<ObservedPath>& paths,
                       const std::vector<std::string>& species,
                       const std::string& path) {
  write_file(path, serialize_observations(paths, species));
}

void rescale_observations(std::vector<ObservedPath>& paths, double time_unit,
                          double state_unit) {
  for (auto& p : paths)
    for (auto& obs : p.points) {
      if (time_unit != 1.0) obs.time /= time_unit;
      if (state_unit != 1.0)
        for (auto& v : obs.state)
          v = static_cast<std::int64_t>(
              std::llround(static_cast<double>(v) / state_unit));
    }
}

namespace {
constexpr std::uint64_t kStreamSimulate = 0x51a7;
}

std::vector<ObservedPath> simulate_observations(
    const SRNModel& model, const Params& theta, const State& x0,
    const std::vector<double>& epochs, int n_paths, std::uint64_t seed) {
  if (epochs.size() < 2)
    throw std::invalid_argument("simulate: need at least two epochs");
  for (std::size_t i = 0; i + 1 < epochs.size(); ++i)
    if (!(epochs[i] < epochs[i + 1]))
      throw std::invalid_argument("simulate: epochs must be increasing");
  std::vector<ObservedPath> out;
  const RngNode root{seed, detail::mix64(kStreamSimulate)};
  for (int m = 0; m < n_paths; ++m) {
    ObservedPath p;
    p.id = std::to_string(m);
    RngStream rs = root.child(static_cast<std::uint64_t>(m)).stream();
    auto [path, stats] = ssa_forward(model, theta, x0, epochs.front(),
                                     epochs.back(), rs);
    p.points.reserve(epochs.size());
    std::size_t seg = 0;
    for (double e : epochs) {
      while (seg < path.jump_times.size() && path.jump_times[seg] <= e) ++seg;
      p.points.push_back({e, path.states[seg]});
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<double> uniform_epochs(double t_end, double dt) {
  if (!(dt > 0.0) || !(t_end > 0.0))
    throw std::invalid_argument("uniform epochs: need positive t_end and dt");
  std::vector<double> e;
  const auto n = static_cast<std::size_t>(std::llround(t_end / dt));
  if (!(n >= 1) || std::abs(n * dt - t_end) > 1e-9 * std::max(1.0, t_end))
    throw std::invalid_argument("uniform epochs: dt must divide t_end");
  e.reserve(n + 1);
  for (std::size_t i = 0; i <= n; ++i)
    e.push_back(t_end * static_cast<double>(i) / static_cast<double>(n));
  return e;
}

namespace {

json params_json(const Params& p) { return json(p); }

json config_json(const RunConfig& c) {
  json j;
  j["M0"] = c.bridge.M0;
  j["cv0"] = c.bridge.cv0;
  j["gamma"] = c.bridge.gamma;
  j["C_L"] = c.bridge.C_L;
  j["c_reg"] = c.bridge.c_reg;
  j["zeta_growth"] = c.bridge.zeta_growth;
  j["max_rounds"] = c.bridge.max_rounds;
  j["bootstrap_min_L"] = c.bridge.bootstrap_min_L;
  j["bootstrap_reps"] = c.bridge.bootstrap_reps;
  j["rhat_threshold"] = c.rhat_threshold;
  j["ma_order"] = c.ma_order;
  j["ma_tolerance"] = c.ma_tolerance;
  j["ma_normalization"] = "relative-to-cluster-mean";
  j["max_iterations"] = c.max_iterations;
  j["phase1_mode"] =
      c.phase1_mode == Phase1Mode::global ? "global" : "per-interval";
  j["t_star_fraction"] = c.t_star_fraction;
  j["ode_dt"] = c.ode_dt;
  j["nm_max_evals_per_dim"] = c.nm_max_evals_per_dim;
  j["nm_tolerance"] = c.nm_tolerance;
  return j;
}

json nan_safe(double v) {
  if (std::isnan(v)) return json();
  if (std::isinf(v)) return json(v > 0 ? "inf" : "-inf");
  return json(v);
}

}  // namespace

std::string results_document(const SRNModel& model, const RunConfig& config,
                             const std::vector<Params>& seeds,
                             std::uint64_t master_seed, const FremResult& run) {
  json doc;
  doc["model"] = model.name;
  doc["species"] = model.species;
  doc["config"] = config_json(config);
  doc["config"]["seeds"] = seeds;
  doc["config"]["master_seed"] = master_seed;
  doc["failed"] = run.failed;
  if (run.failed) doc["failure"] = run.failure;
  doc["converged"] = run.converged;
  doc["iterations"] = run.iterations;
  doc["rhat_warning"] = run.rhat_warning;
  doc["surviving_chains"] = run.surviving_chains;
  doc["interval_failures"] = run.total_interval_failures;
  doc["estimate"] = params_json(run.estimate);

  json chains = json::array();
  for (std::size_t i = 0; i < run.chains.size(); ++i) {
    json c;
    c["phase1_seed"] = seeds[i];
    c["phase2_seed"] = run.phase1[i].theta;
    c["phase1_objective"] = run.phase1[i].objective;
    c["phase1_converged"] = run.phase1[i].converged;
    c["flagged"] = run.chains[i].flagged;
    if (run.chains[i].flagged) c["flag_reason"] = run.chains[i].flag_reason;
    c["final"] = run.chains[i].trace.back();
    c["trace"] = run.chains[i].trace;
    chains.push_back(c);
  }
  doc["chains"] = chains;

  json diags = json::array();
  for (const auto& d : run.diagnostics) {
    json e;
    json r = json::array(), m = json::array();
    for (double v : d.rhat) r.push_back(nan_safe(v));
    for (double v : d.ma) m.push_back(nan_safe(v));
    e["rhat"] = r;
    e["ma"] = m;
    e["interval_failures"] = d.interval_failures;
    diags.push_back(e);
  }
  doc["diagnostics"] = diags;
  return doc.dump(2) + "\n";
}

std::string trace_table(const FremResult& run, std::size_t J) {
  std::ostringstream out;
  out << "chain,iteration";
  for (std::size_t j = 0; j < J; ++j) out << ",c" << (j + 1);
  out << '\n';
  for (std::size_t i = 0; i < run.chains.size(); ++i)
    for (std::size_t p = 0; p < run.chains[i].trace.size(); ++p) {
      out << i << ',' << p;
      for (double v : run.chains[i].trace[p]) out << ',' << fmt_double(v);
      out << '\n';
    }
  return out.str();
}

std::string ensemble_document(const SRNModel& model, const RunConfig& config,
                              const std::vector<Params>& seeds,
                              std::uint64_t master_seed, int n_runs,
                              const EnsembleSummary& summary) {
  json doc;
  doc["model"] = model.name;
  doc["config"] = config_json(config);
  doc["config"]["seeds"] = seeds;
  doc["config"]["master_seed"] = master_seed;
  doc["n_runs"] = n_runs;
  doc["failures"] = summary.failures;
  json per = json::array();
  for (std::size_t j = 0; j < summary.mean.size(); ++j) {
    json row;
    row["coefficient"] = "c" + std::to_string(j + 1);
    row["average"] = nan_safe(summary.mean[j]);
    row["ci95"] = json::array({nan_safe(summary.ci_lo[j]), nan_safe(summary.ci_hi[j])});
    row["min"] = nan_safe(summary.min[j]);
    row["max"] = nan_safe(summary.max[j]);
    per.push_back(row);
  }
  doc["coefficients"] = per;
  json runs = json::array();
  for (std::size_t r = 0; r < summary.run_estimates.size(); ++r) {
    json e;
    e["estimate"] = summary.run_estimates[r];
    e["iterations"] = summary.run_iterations[r];
    runs.push_back(e);
  }
  doc["runs"] = runs;
  return doc.dump(2) + "\n";
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace io
}  // namespace frem
