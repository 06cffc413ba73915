#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace frem {

//! Molecule counts per species; lives on the non-negative integer lattice.
using State = std::vector<std::int64_t>;

//! Reaction-rate coefficients c_1..c_J, one per channel.
using Params = std::vector<double>;

//! One multiplicative term of a guarded monomial propensity:
//! x_i (x_i - 1) ... (x_i - order + 1), gated by an optional threshold
//! indicator 1{x_i >= guard_min}.
struct PropensityFactor {
  int species = 0;
  int order = 1;
  std::optional<std::int64_t> guard_min;

  bool operator==(const PropensityFactor&) const = default;
};

//! A reaction channel (nu_j, g_j). The propensity is a_j(x) = c_j g_j(x)
//! where g_j is the product of the factors, zeroed whenever x + nu_j
//! leaves the lattice. `eval_shift` is used by reversed models: the
//! monomial and its guards are evaluated at x - eval_shift, and g_j is 0
//! if that point is off-lattice. Forward models have an empty shift.
struct ReactionChannel {
  std::vector<int> stoich;
  std::vector<PropensityFactor> factors;
  std::string label;
  std::vector<int> eval_shift;

  bool operator==(const ReactionChannel&) const = default;
};

struct SRNModel {
  std::string name;
  std::vector<std::string> species;
  std::vector<ReactionChannel> channels;
  std::vector<double> theta_true;  // optional generating parameters

  int species_count() const { return static_cast<int>(species.size()); }
  int channel_count() const { return static_cast<int>(channels.size()); }

  bool operator==(const SRNModel&) const = default;
};

//! g_j(x): the theta-free part of the propensity, including threshold
//! guards, the evaluation shift and the lattice boundary guard.
double eval_g(const SRNModel& model, std::size_t j, const State& x);

//! a_j(x) = c_j g_j(x).
double eval_propensity(const SRNModel& model, const Params& theta,
                       const State& x, std::size_t j);

//! a_0(x) = sum_j a_j(x).
double total_propensity(const SRNModel& model, const Params& theta,
                        const State& x);

//! Real-valued relaxation of g_j used by the reaction-rate ODEs: falling
//! factorials evaluated as real products, threshold guards as sharp
//! indicators, no lattice boundary guard.
double eval_g_real(const SRNModel& model, std::size_t j,
                   std::span<const double> z);

//! The reverse model: channel j becomes (-nu_j, a_j(. - nu_j)), with the
//! convention that off-lattice arguments contribute zero. Applying this
//! twice restores the forward propensities.
SRNModel reverse_model(const SRNModel& model);

//! c(y) = sum_j [ a_j(y - nu_j) - a_j(y) ]; the integrand of the
//! exponential weight carried by reverse paths.
double correction(const SRNModel& model, const Params& theta, const State& y);

//! Structural checks; returns one message per violation found.
std::vector<std::string> validate_model(const SRNModel& model);

bool state_in_lattice(const State& x);

}  // namespace frem
