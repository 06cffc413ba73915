#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "frem/inference.hpp"
#include "frem/model.hpp"

namespace frem {
namespace io {

//! Thrown on malformed inputs; message carries file/line/field context.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string serialize_model(const SRNModel& model);
SRNModel parse_model(const std::string& text, const std::string& origin = "");
SRNModel load_model(const std::string& path);
void save_model(const SRNModel& model, const std::string& path);

//! Observations are a delimited table: path_id,time,<one column per
//! species>. Times must be strictly increasing within a path.
std::string serialize_observations(const std::vector<ObservedPath>& paths,
                                   const std::vector<std::string>& species);
std::vector<ObservedPath> parse_observations(const std::string& text,
                                             std::size_t n_species,
                                             const std::string& origin = "");
std::vector<ObservedPath> load_observations(const std::string& path,
                                            std::size_t n_species);
void save_observations(const std::vector<ObservedPath>& paths,
                       const std::vector<std::string>& species,
                       const std::string& path);

//! Unit rescaling for externally recorded tables (e.g. real-valued wear
//! levels): counts = round(value / state_unit), times divided by
//! time_unit.
void rescale_observations(std::vector<ObservedPath>& paths, double time_unit,
                          double state_unit);

//! SSA paths observed at an epoch grid. Epochs must be increasing; the
//! first epoch is the initial condition.
std::vector<ObservedPath> simulate_observations(const SRNModel& model,
                                                const Params& theta,
                                                const State& x0,
                                                const std::vector<double>& epochs,
                                                int n_paths,
                                                std::uint64_t seed);

std::vector<double> uniform_epochs(double t_end, double dt);

//! JSON document describing a full inference run: config, seeds, master
//! seed, per-chain traces, diagnostics, estimate. Byte-stable under a
//! fixed master seed.
std::string results_document(const SRNModel& model, const RunConfig& config,
                             const std::vector<Params>& seeds,
                             std::uint64_t master_seed, const FremResult& run);

//! Flat per-iteration trace table (chain, iteration, c_1..c_J).
std::string trace_table(const FremResult& run, std::size_t J);

std::string ensemble_document(const SRNModel& model, const RunConfig& config,
                              const std::vector<Params>& seeds,
                              std::uint64_t master_seed, int n_runs,
                              const EnsembleSummary& summary);

void write_file(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

}  // namespace io
}  // namespace frem
