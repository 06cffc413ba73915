#pragma once

#include <cstdint>
#include <vector>

#include "frem/model.hpp"

namespace frem {

//! Finite window of the lattice used by the master-equation solver.
//! Transitions leaving the box are redirected to an absorbing sink whose
//! mass quantifies the truncation error.
struct StateBox {
  std::vector<std::int64_t> lo;
  std::vector<std::int64_t> hi;  // inclusive

  std::size_t size() const;
  std::size_t index_of(const State& x) const;  // throws if outside
  bool contains(const State& x) const;
  State state_at(std::size_t idx) const;
};

//! Sparse generator over the truncated space plus sink (last row/column).
//! Row sums are zero; the sink row is absorbing.
struct GeneratorMatrix {
  struct Entry {
    std::uint32_t col;
    double rate;
  };
  std::size_t n_states = 0;  // excludes the sink
  std::vector<std::vector<Entry>> rows;  // off-diagonal entries, per row
  std::vector<double> exit_rate;         // a_0 within + leak to sink
  double uniformization_rate = 0.0;      // max exit rate

  static GeneratorMatrix build(const SRNModel& model, const Params& theta,
                               const StateBox& box);
};

struct TransitionResult {
  double probability = 0.0;
  double sink_mass = 0.0;
  bool truncation_warning = false;  // sink mass above 1e-6
};

//! p(s, x, t, y) = [e^{Q (t-s)}]_{x y} by uniformization, to absolute
//! tolerance 1e-10.
TransitionResult transition_prob(const SRNModel& model, const Params& theta,
                                 const StateBox& box, const State& x, double s,
                                 const State& y, double t);

//! Full distribution row p(s, x, t, .) over the box (plus sink mass).
std::pair<std::vector<double>, double> transition_row(
    const SRNModel& model, const Params& theta, const StateBox& box,
    const State& x, double duration);

struct BridgeExpectations {
  std::vector<double> ER;  // E[R_j | bridge]
  std::vector<double> EF;  // E[F_j | bridge]
  double p = 0.0;          // p(s, x, t, y)
  double sink_mass = 0.0;
  bool truncation_warning = false;
};

//! Exact bridge-conditional expectations of the per-channel statistics
//! via Gauss-Legendre quadrature in time over master-equation solves.
BridgeExpectations bridge_expectations(const SRNModel& model,
                                       const Params& theta,
                                       const StateBox& box, const State& x,
                                       double s, const State& y, double t,
                                       int n_quad = 64);

}  // namespace frem
