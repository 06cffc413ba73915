#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "frem/model.hpp"
#include "frem/rng.hpp"

namespace frem {

//! Piecewise-constant trajectory on [t0, t1]. states[i] holds on
//! [jump_times[i-1], jump_times[i]); channels[i] is the channel fired at
//! jump_times[i]. For reverse paths the clock is the reverse clock and
//! the stoichiometry is the reverse model's.
struct JumpPath {
  double t0 = 0.0;
  double t1 = 0.0;
  std::vector<double> jump_times;
  std::vector<State> states;  // jump_times.size() + 1 entries
  std::vector<int> channels;
};

//! Per-channel sufficient statistics of one path leg: firing counts R_j,
//! occupation integrals F_j = sum_i g_j(state_i) * dt_i, and the log of
//! the exponential weight (zero for forward legs).
struct PathStats {
  std::vector<std::int64_t> R;
  std::vector<double> F;
  double log_psi = 0.0;
};

//! Gillespie SSA on [t0, t1] from x0. If the total propensity vanishes
//! the path stays constant to t1.
std::pair<JumpPath, PathStats> ssa_forward(const SRNModel& model,
                                           const Params& theta,
                                           const State& x0, double t0,
                                           double t1, UniformSource& rng);

//! Simulates the reverse process from y over [t_star, t1] (reverse
//! clock). R_j counts reverse-channel-j firings; F_j integrates the
//! forward g_j along the visited states; log_psi accumulates the
//! correction c(.) exactly over the piecewise-constant path.
std::pair<JumpPath, PathStats> ssa_reverse(const SRNModel& model,
                                           const Params& theta,
                                           const State& y, double t_star,
                                           double t1, UniformSource& rng);

//! Same, with the reverse model precomputed by the caller.
std::pair<JumpPath, PathStats> ssa_reverse(const SRNModel& forward,
                                           const SRNModel& reverse,
                                           const Params& theta,
                                           const State& y, double t_star,
                                           double t1, UniformSource& rng);

//! Recomputes PathStats from a stored path (forward convention).
PathStats path_stats_from(const SRNModel& model, const JumpPath& path);

struct OdeTrajectory {
  std::vector<double> times;
  std::vector<std::vector<double>> states;
};

//! Classical fixed-step RK4 for dZ/dt = sum_j nu_j c_j g_j(Z) with the
//! real-valued relaxation of the monomials. Components are clamped at 0
//! after each step. dt <= 0 selects (t1 - t0) / 200.
OdeTrajectory ode_mean_field(const SRNModel& model, const Params& theta,
                             const std::vector<double>& z0, double t0,
                             double t1, double dt);

//! Mean-field flow of the reverse model; the Phase I backward surrogate.
OdeTrajectory ode_reverse_mean_field(const SRNModel& model,
                                     const Params& theta,
                                     const std::vector<double>& z0, double t0,
                                     double t1, double dt);

//! Endpoint-only integration (no trajectory storage).
std::vector<double> ode_endpoint(const SRNModel& model, const Params& theta,
                                 std::vector<double> z, double duration,
                                 double dt);

}  // namespace frem
