#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "frem/bridge.hpp"
#include "frem/model.hpp"
#include "frem/rng.hpp"

namespace frem {

struct Observation {
  double time = 0.0;
  State state;
};

struct ObservedPath {
  std::string id;
  std::vector<Observation> points;
};

struct IntervalSource {
  std::string path_id;
  std::size_t epoch = 0;  // index of the left endpoint within the path
};

//! Pooled observation intervals [s_k, t_k] with both endpoint states.
//! Repeated identical intervals are kept; each interval contributes its
//! own term to the EM sums.
struct DataSet {
  std::vector<Interval> intervals;
  std::vector<IntervalSource> provenance;
};

//! One interval per consecutive observation pair, pooled across paths.
//! Throws std::invalid_argument on non-increasing times.
DataSet extract_intervals(const std::vector<ObservedPath>& paths);

//! Complete-data log-likelihood sum_j [ log(c_j) R_j - c_j F_j ] with the
//! 0 log 0 convention; -inf when some c_j = 0 with R_j > 0.
double complete_loglik(const Params& theta, std::span<const double> sum_R,
                       std::span<const double> sum_F);

//! The exact M-step: c_j = sum_k avg_R_jk / sum_k avg_F_jk, with 0/0 -> 0.
//! Throws std::runtime_error when some channel has firings but zero
//! occupation (degenerate data).
Params em_update(const std::vector<std::vector<double>>& avg_R,
                 const std::vector<std::vector<double>>& avg_F);

enum class Phase1Mode { global, per_interval };

struct Phase1Options {
  Phase1Mode mode = Phase1Mode::per_interval;
  double t_star_fraction = 0.5;
  double ode_dt = 0.0;          // <= 0: (leg length) / 200
  int max_evals_per_dim = 500;  // Nelder-Mead budget is this times J
  double tolerance = 1e-8;
  double zero_floor = 1e-12;    // floor before the log reparameterization
};

struct Phase1Result {
  Params theta;
  double objective = 0.0;
  bool converged = false;
};

//! Weighted ODE-matching objective at theta: sum_k w_k |Zf(t*_k) - Zb(t*_k)|^2
//! with w_k = 1/(t_k - s_k).
double phase1_objective(const SRNModel& model, const DataSet& data,
                        const Params& theta, const Phase1Options& options);

//! argmin over theta >= 0 of the weighted objective, via Nelder-Mead on
//! log-parameters.
Phase1Result phase1_global(const SRNModel& model, const DataSet& data,
                           const Params& seed, const Phase1Options& options);

//! Remark-style variant: one unweighted fit per interval from the common
//! seed, then the w_k-weighted average of the per-interval optima.
Phase1Result phase1_per_interval(const SRNModel& model, const DataSet& data,
                                 const Params& seed,
                                 const Phase1Options& options);

//! Gelman-Rubin potential scale reduction over the first p samples of N
//! chains. NaN when the within-chain variance vanishes.
double rhat(const std::vector<std::vector<double>>& chains, int p);

//! Mean squared step of the order-L moving averages at position p
//! (1-indexed); requires p >= L + 1.
double moving_avg_stat(const std::vector<std::vector<double>>& chains, int p,
                       int L);

struct RunConfig {
  BridgeConfig bridge;
  double rhat_threshold = 1.4;
  int ma_order = 3;
  double ma_tolerance = 0.05;
  int max_iterations = 300;
  Phase1Mode phase1_mode = Phase1Mode::per_interval;
  double t_star_fraction = 0.5;  // shared with bridge.t_star_fraction
  double ode_dt = 0.0;
  int nm_max_evals_per_dim = 500;
  double nm_tolerance = 1e-8;

  Phase1Options phase1_options() const {
    return {phase1_mode, t_star_fraction, ode_dt, nm_max_evals_per_dim,
            nm_tolerance, 1e-12};
  }
};

//! Pluggable per-interval expectation backend; the default is
//! adaptive_estimate. Tests substitute deterministic stubs.
using IntervalEstimator = std::function<IntervalEstimate(
    const SRNModel&, const Params&, const Interval&, const BridgeConfig&,
    RngNode)>;

struct ChainTrace {
  std::vector<Params> trace;  // trace[0] is the phase-II seed
  bool flagged = false;
  std::string flag_reason;
};

struct IterationDiag {
  std::vector<double> rhat;  // per coordinate; NaN where undefined
  std::vector<double> ma;    // per coordinate, normalized; NaN before MA order
  int interval_failures = 0;
};

struct FremResult {
  std::vector<ChainTrace> chains;
  std::vector<Phase1Result> phase1;
  Params estimate;  // cluster average over surviving chains
  std::vector<IterationDiag> diagnostics;  // one per EM iteration
  int iterations = 0;                      // p*
  bool converged = false;
  bool rhat_warning = false;
  bool failed = false;
  std::string failure;
  std::size_t surviving_chains = 0;
  std::size_t total_interval_failures = 0;
};

//! The two-phase run: Phase I per seed, then the multi-chain Monte Carlo
//! EM with per-coordinate R-hat and moving-average stopping.
FremResult frem_run(const SRNModel& model, const DataSet& data,
                    const std::vector<Params>& seeds, const RunConfig& config,
                    std::uint64_t master_seed,
                    const IntervalEstimator& estimator = {});

struct EnsembleSummary {
  std::size_t n_runs = 0;
  int failures = 0;
  std::vector<double> mean, ci_lo, ci_hi, min, max;  // per coordinate
  std::vector<Params> run_estimates;
  std::vector<int> run_iterations;
};

//! Independent frem_run repetitions under derived master seeds, reduced
//! to per-coordinate mean, 95% normal-theory CI of the mean, min and max.
EnsembleSummary ensemble_run(const SRNModel& model, const DataSet& data,
                             const std::vector<Params>& seeds,
                             const RunConfig& config, int n_runs,
                             std::uint64_t master_seed);

}  // namespace frem
