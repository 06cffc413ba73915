#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "frem/model.hpp"
#include "frem/rng.hpp"
#include "frem/simulation.hpp"

namespace frem {

enum class KernelKind { kronecker, epanechnikov };

//! Whitening-and-scaling map H = zeta * alpha * (Sigma + c_reg diag(Sigma))^{-1/2}
//! applied to endpoint clouds before the Epanechnikov join. alpha is
//! chosen so the transformed cloud carries about one point per unit box.
struct TransformH {
  std::vector<double> inv_sqrt;  // d x d, row-major, symmetric
  int dim = 0;
  double alpha = 1.0;
  double zeta = 1.0;

  double matrix(int r, int c) const {
    return zeta * alpha * inv_sqrt[static_cast<std::size_t>(r) * dim + c];
  }
  void apply(std::span<const double> x, std::span<double> out) const;
};

//! Endpoint of one simulated leg at t*, with the leg's statistics.
//! Backward records carry a finite log_psi; forward records have 0.
struct EndpointRecord {
  State endpoint;
  std::vector<double> transformed;  // filled when a transform is active
  PathStats stats;
};

struct JoinPair {
  std::uint32_t f = 0;
  std::uint32_t b = 0;
  double weight = 0.0;  // kappa * exp(log_psi - log_weight_scale)
};

//! All pairs with positive kernel weight, their combined per-channel
//! statistics (row-major L x J), and the weight sum. Weights share the
//! common factor exp(log_weight_scale) that was divided out for
//! stability; it cancels in ratio estimates.
struct JoinResult {
  std::vector<JoinPair> pairs;
  std::vector<double> combined_R;
  std::vector<double> combined_F;
  double denominator = 0.0;
  double log_weight_scale = 0.0;
  std::size_t L() const { return pairs.size(); }
};

//! Kernel weight at eta = yf - yb.
double kernel_eval(KernelKind kind, std::span<const double> yf,
                   std::span<const double> yb);

//! Transform from the pooled cloud covariance; nullopt when the
//! regularized covariance is numerically singular (Kronecker fallback).
std::optional<TransformH> compute_transform(
    const std::vector<EndpointRecord>& forward,
    const std::vector<EndpointRecord>& backward, std::size_t M, double c_reg);

//! Sub-box hash join: forward endpoints are bucketed into unit boxes and
//!each backward endpoint probes its 3^d neighbors. Exactly the pairs of the
//! naive double loop, in O(M log M) on average. For the Epanechnikov
//! kernel the `transformed` coordinates must be filled.
JoinResult box_join(const std::vector<EndpointRecord>& forward,
                    const std::vector<EndpointRecord>& backward,
                    KernelKind kind);

struct WeightedAverages {
  std::vector<double> avg_R;
  std::vector<double> avg_F;
  double denominator = 0.0;
};

//! kappa-weighted averages of the combined statistics; requires L >= 1.
WeightedAverages weighted_averages(const JoinResult& join, std::size_t J);

//! One observation interval with its endpoint data.
struct Interval {
  double s = 0.0;
  double t = 0.0;
  State xs;
  State xt;
};

struct BridgeConfig {
  int M0 = 100;               // paths per direction in the first round
  double cv0 = 0.1;           // coefficient-of-variation target
  double gamma = 0.05;        // Kronecker sufficiency threshold
  int C_L = 2;                // pair budget: L <= C_L * M
  double c_reg = 1.0;         // diagonal covariance regularization
  double zeta_growth = 1.5;   // support shrink factor per expansion
  int max_rounds = 8;
  double t_star_fraction = 0.5;
  int bootstrap_min_L = 30;
  int bootstrap_reps = 200;
};

struct IntervalEstimate {
  bool ok = false;  // false: no bridges after max_rounds
  std::vector<double> avg_R;
  std::vector<double> avg_F;
  std::vector<double> cv_R;  // NaN where the sample mean is zero
  std::vector<double> cv_F;
  std::vector<double> se_R;  // delta-method error of the weighted ratio,
  std::vector<double> se_F;  // projected onto per-path contributions
  double denominator = 0.0;
  double log_weight_scale = 0.0;
  std::size_t M_used = 0;  // per direction
  std::size_t L = 0;
  int rounds = 0;
  KernelKind kernel = KernelKind::kronecker;
  double zeta = 1.0;
};

//! The adaptive forward-reverse estimation loop for one interval:
//! doubling path batches, Kronecker first, transformed Epanechnikov when
//! exact matches are scarce, zeta expansion when pairs are too plentiful,
//! and the per-channel cv stopping rule.
IntervalEstimate adaptive_estimate(const SRNModel& model, const Params& theta,
                                   const Interval& interval,
                                   const BridgeConfig& config, RngNode rng);

//! cv of the sample mean: n^{-1/2} * sqrt(<v^2> - <v>^2) / |<v>|.
//! NaN when the mean vanishes.
double cv_of_mean(std::span<const double> values);

}  // namespace frem
