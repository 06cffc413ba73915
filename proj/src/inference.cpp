#include "frem/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "frem/nelder_mead.hpp"
#include "frem/simulation.hpp"

namespace frem {

DataSet extract_intervals(const std::vector<ObservedPath>& paths) {
  DataSet data;
  for (const auto& path : paths) {
    if (path.points.size() < 2)
      throw std::invalid_argument("path " + path.id +
                                  " needs at least two observations");
    for (std::size_t n = 0; n + 1 < path.points.size(); ++n) {
      const auto& a = path.points[n];
      const auto& b = path.points[n + 1];
      if (!(a.time < b.time))
        throw std::invalid_argument("path " + path.id +
                                    ": non-increasing times at epoch " +
                                    std::to_string(n + 1));
      data.intervals.push_back({a.time, b.time, a.state, b.state});
      data.provenance.push_back({path.id, n});
    }
  }
  return data;
}

double complete_loglik(const Params& theta, std::span<const double> sum_R,
                       std::span<const double> sum_F) {
  double ll = 0.0;
  for (std::size_t j = 0; j < theta.size(); ++j) {
    const double c = theta[j];
    if (sum_R[j] > 0.0) {
      if (c == 0.0) return -std::numeric_limits<double>::infinity();
      ll += std::log(c) * sum_R[j];
    }
    ll -= c * sum_F[j];
  }
  return ll;
}

Params em_update(const std::vector<std::vector<double>>& avg_R,
                 const std::vector<std::vector<double>>& avg_F) {
  if (avg_R.empty() || avg_R.size() != avg_F.size())
    throw std::invalid_argument("em_update: empty or mismatched expectations");
  const std::size_t J = avg_R.front().size();
  std::vector<double> sum_R(J, 0.0), sum_F(J, 0.0);
  for (std::size_t k = 0; k < avg_R.size(); ++k)
    for (std::size_t j = 0; j < J; ++j) {
      sum_R[j] += avg_R[k][j];
      sum_F[j] += avg_F[k][j];
    }
  Params theta(J, 0.0);
  for (std::size_t j = 0; j < J; ++j) {
    if (sum_F[j] > 0.0)
      theta[j] = sum_R[j] / sum_F[j];
    else if (sum_R[j] > 0.0)
      throw std::runtime_error(
          "em_update: channel " + std::to_string(j) +
          " has firings but zero occupation (degenerate data)");
  }
  return theta;
}

namespace {

double interval_distance2(const SRNModel& model, const SRNModel& rev,
                          const Params& theta, const Interval& iv,
                          const Phase1Options& opt) {
  const double t_star = iv.s + opt.t_star_fraction * (iv.t - iv.s);
  std::vector<double> zf(iv.xs.begin(), iv.xs.end());
  std::vector<double> zb(iv.xt.begin(), iv.xt.end());
  zf = ode_endpoint(model, theta, std::move(zf), t_star - iv.s, opt.ode_dt);
  zb = ode_endpoint(rev, theta, std::move(zb), iv.t - t_star, opt.ode_dt);
  double d2 = 0.0;
  for (std::size_t i = 0; i < zf.size(); ++i) {
    const double diff = zf[i] - zb[i];
    d2 += diff * diff;
  }
  return d2;
}

std::vector<double> to_log(const Params& theta, double floor) {
  std::vector<double> u(theta.size());
  for (std::size_t j = 0; j < theta.size(); ++j)
    u[j] = std::log(std::max(theta[j], floor));
  return u;
}

Params from_log(const std::vector<double>& u) {
  Params theta(u.size());
  for (std::size_t j = 0; j < u.size(); ++j) theta[j] = std::exp(u[j]);
  return theta;
}

}  // namespace

double phase1_objective(const SRNModel& model, const DataSet& data,
                        const Params& theta, const Phase1Options& opt) {
  const SRNModel rev = reverse_model(model);
  double obj = 0.0;
  for (const auto& iv : data.intervals)
    obj += interval_distance2(model, rev, theta, iv, opt) / (iv.t - iv.s);
  return obj;
}

Phase1Result phase1_global(const SRNModel& model, const DataSet& data,
                           const Params& seed, const Phase1Options& opt) {
  const SRNModel rev = reverse_model(model);
  const auto J = model.channels.size();
  NelderMeadOptions nm;
  nm.max_evals = opt.max_evals_per_dim * static_cast<int>(J);
  nm.tolerance = opt.tolerance;
  auto objective = [&](const std::vector<double>& u) {
    const Params theta = from_log(u);
    double obj = 0.0;
    for (const auto& iv : data.intervals)
      obj += interval_distance2(model, rev, theta, iv, opt) / (iv.t - iv.s);
    return obj;
  };
  const auto r = nelder_mead(objective, to_log(seed, opt.zero_floor), nm);
  return {from_log(r.x), r.value, r.converged};
}

Phase1Result phase1_per_interval(const SRNModel& model, const DataSet& data,
                                 const Params& seed,
                                 const Phase1Options& opt) {
  const SRNModel rev = reverse_model(model);
  const auto J = model.channels.size();
  NelderMeadOptions nm;
  nm.max_evals = opt.max_evals_per_dim * static_cast<int>(J);
  nm.tolerance = opt.tolerance;

  Params combined(J, 0.0);
  double weight_sum = 0.0;
  bool all_converged = true;
  for (const auto& iv : data.intervals) {
    auto objective = [&](const std::vector<double>& u) {
      return std::sqrt(interval_distance2(model, rev, from_log(u), iv, opt));
    };
    const auto r = nelder_mead(objective, to_log(seed, opt.zero_floor), nm);
    all_converged = all_converged && r.converged;
    const Params lambda = from_log(r.x);
    const double w = 1.0 / (iv.t - iv.s);
    for (std::size_t j = 0; j < J; ++j) combined[j] += w * lambda[j];
    weight_sum += w;
  }
  for (double& c : combined) c /= weight_sum;
  Phase1Result res;
  res.theta = std::move(combined);
  res.converged = all_converged;
  res.objective = phase1_objective(model, data, res.theta, opt);
  return res;
}

double rhat(const std::vector<std::vector<double>>& chains, int p) {
  const std::size_t N = chains.size();
  if (N < 2) throw std::invalid_argument("rhat: needs at least two chains");
  if (p < 2) throw std::invalid_argument("rhat: needs at least two samples");
  for (const auto& c : chains)
    if (c.size() < static_cast<std::size_t>(p))
      throw std::invalid_argument("rhat: chain shorter than p");

  std::vector<double> mean(N, 0.0);
  for (std::size_t i = 0; i < N; ++i) {
    for (int k = 0; k < p; ++k) mean[i] += chains[i][static_cast<std::size_t>(k)];
    mean[i] /= p;
  }
  double grand = 0.0;
  for (double m : mean) grand += m;
  grand /= static_cast<double>(N);

  double B = 0.0;
  for (double m : mean) B += (m - grand) * (m - grand);
  B /= static_cast<double>(N - 1);

  double W = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    double s2 = 0.0;
    for (int k = 0; k < p; ++k) {
      const double d = chains[i][static_cast<std::size_t>(k)] - mean[i];
      s2 += d * d;
    }
    W += s2 / (p - 1);
  }
  W /= static_cast<double>(N);

  if (W <= 0.0) return std::numeric_limits<double>::quiet_NaN();
  const double V = (static_cast<double>(p - 1) / p) * W + B;
  return std::sqrt(V / W);
}

double moving_avg_stat(const std::vector<std::vector<double>>& chains, int p,
                       int L) {
  if (p < L + 1) throw std::invalid_argument("moving_avg_stat: p < L + 1");
  const std::size_t N = chains.size();
  double acc = 0.0;
  for (const auto& chain : chains) {
    if (chain.size() < static_cast<std::size_t>(p))
      throw std::invalid_argument("moving_avg_stat: chain shorter than p");
    double ma_p = 0.0, ma_prev = 0.0;
    for (int l = 0; l < L; ++l) {
      ma_p += chain[static_cast<std::size_t>(p - 1 - l)];
      ma_prev += chain[static_cast<std::size_t>(p - 2 - l)];
    }
    const double step = (ma_p - ma_prev) / L;
    acc += step * step;
  }
  return acc / static_cast<double>(N);
}

namespace {
constexpr std::uint64_t kStreamFrem = 0xf83e;

struct ActiveChain {
  std::size_t index;
  std::vector<Params> trace;
};
}  // namespace

FremResult frem_run(const SRNModel& model, const DataSet& data,
                    const std::vector<Params>& seeds, const RunConfig& config,
                    std::uint64_t master_seed,
                    const IntervalEstimator& estimator) {
  if (seeds.size() < 2)
    throw std::invalid_argument("frem_run: needs at least two seeds");
  if (data.intervals.empty())
    throw std::invalid_argument("frem_run: empty data set");
  const std::size_t N = seeds.size();
  const std::size_t J = model.channels.size();
  const std::size_t K = data.intervals.size();

  IntervalEstimator estimate = estimator;
  if (!estimate)
    estimate = [](const SRNModel& m, const Params& th, const Interval& iv,
                  const BridgeConfig& bc, RngNode rng) {
      return adaptive_estimate(m, th, iv, bc, rng);
    };

  BridgeConfig bridge = config.bridge;
  bridge.t_star_fraction = config.t_star_fraction;

  FremResult res;
  res.chains.resize(N);
  res.phase1.resize(N);

  const Phase1Options p1 = config.phase1_options();
  for (std::size_t i = 0; i < N; ++i) {
    res.phase1[i] = config.phase1_mode == Phase1Mode::global
                        ? phase1_global(model, data, seeds[i], p1)
                        : phase1_per_interval(model, data, seeds[i], p1);
    res.chains[i].trace.push_back(res.phase1[i].theta);
  }

  const RngNode root{master_seed, detail::mix64(kStreamFrem)};
  std::vector<bool> active(N, true);
  std::vector<double> rhat_max_trace;

  for (int p = 1; p <= config.max_iterations; ++p) {
    IterationDiag diag;
    for (std::size_t i = 0; i < N; ++i) {
      if (!active[i]) continue;
      auto& chain = res.chains[i];
      const Params& theta = chain.trace.back();
      std::vector<std::vector<double>> avg_R, avg_F;
      avg_R.reserve(K);
      avg_F.reserve(K);
      int failures = 0;
      for (std::size_t k = 0; k < K; ++k) {
        const RngNode node = root.child(
            {i, static_cast<std::uint64_t>(p), k});
        IntervalEstimate est =
            estimate(model, theta, data.intervals[k], bridge, node);
        if (est.ok) {
          avg_R.push_back(std::move(est.avg_R));
          avg_F.push_back(std::move(est.avg_F));
        } else {
          ++failures;  // dropped from both sums this iteration
        }
      }
      diag.interval_failures += failures;
      res.total_interval_failures += static_cast<std::size_t>(failures);
      if (avg_R.empty()) {
        chain.flagged = true;
        chain.flag_reason = "no bridges in any interval at iteration " +
                            std::to_string(p);
        active[i] = false;
        continue;
      }
      try {
        chain.trace.push_back(em_update(avg_R, avg_F));
      } catch (const std::exception& e) {
        chain.flagged = true;
        chain.flag_reason = e.what();
        active[i] = false;
      }
    }

    const std::size_t n_active =
        static_cast<std::size_t>(std::count(active.begin(), active.end(), true));
    if (n_active < 2) {
      res.failed = true;
      res.failure = "fewer than two chains survive";
      res.iterations = p;
      res.diagnostics.push_back(std::move(diag));
      break;
    }

    // diagnostics over active chains; sequences include the phase-II seed
    std::vector<std::vector<double>> coord(n_active);
    diag.rhat.assign(J, std::numeric_limits<double>::quiet_NaN());
    diag.ma.assign(J, std::numeric_limits<double>::quiet_NaN());
    const int samples = p + 1;
    bool rhat_ok = true, ma_ok = samples >= config.ma_order + 1;
    double rhat_max = 0.0;
    for (std::size_t j = 0; j < J; ++j) {
      std::size_t a = 0;
      double cluster = 0.0;
      for (std::size_t i = 0; i < N; ++i) {
        if (!active[i]) continue;
        coord[a].resize(static_cast<std::size_t>(samples));
        for (int k = 0; k < samples; ++k)
          coord[a][static_cast<std::size_t>(k)] =
              res.chains[i].trace[static_cast<std::size_t>(k)][j];
        cluster += coord[a].back();
        ++a;
      }
      cluster /= static_cast<double>(n_active);

      const double r = rhat(coord, samples);
      diag.rhat[j] = r;
      if (!std::isnan(r)) {
        rhat_ok = rhat_ok && r < config.rhat_threshold;
        rhat_max = std::max(rhat_max, r);
      }
      if (samples >= config.ma_order + 1) {
        const double raw = moving_avg_stat(coord, samples, config.ma_order);
        const double scale2 = cluster * cluster;
        const double ma = scale2 > 0.0
                              ? raw / scale2
                              : (raw == 0.0
                                     ? 0.0
                                     : std::numeric_limits<double>::infinity());
        diag.ma[j] = ma;
        ma_ok = ma_ok && ma < config.ma_tolerance;
      }
    }
    rhat_max_trace.push_back(rhat_max);
    if (rhat_max_trace.size() >= 10) {
      const std::size_t last = rhat_max_trace.size() - 1;
      if (rhat_max_trace[last] >= rhat_max_trace[last - 5])
        res.rhat_warning = true;
    }

    res.diagnostics.push_back(std::move(diag));
    res.iterations = p;
    if (rhat_ok && ma_ok) {
      res.converged = true;
      break;
    }
  }

  // cluster average over surviving chains
  res.estimate.assign(J, 0.0);
  std::size_t survivors = 0;
  for (std::size_t i = 0; i < N; ++i) {
    if (res.chains[i].flagged) continue;
    ++survivors;
    for (std::size_t j = 0; j < J; ++j)
      res.estimate[j] += res.chains[i].trace.back()[j];
  }
  if (survivors > 0)
    for (double& c : res.estimate) c /= static_cast<double>(survivors);
  res.surviving_chains = survivors;
  return res;
}

namespace {
constexpr std::uint64_t kStreamEnsemble = 0xe25b;
}

EnsembleSummary ensemble_run(const SRNModel& model, const DataSet& data,
                             const std::vector<Params>& seeds,
                             const RunConfig& config, int n_runs,
                             std::uint64_t master_seed) {
  if (n_runs < 1) throw std::invalid_argument("ensemble_run: n_runs < 1");
  const std::size_t J = model.channels.size();
  EnsembleSummary sum;
  sum.n_runs = static_cast<std::size_t>(n_runs);
  for (int r = 0; r < n_runs; ++r) {
    const std::uint64_t run_seed = detail::combine(
        detail::mix64(master_seed ^ kStreamEnsemble), static_cast<std::uint64_t>(r));
    FremResult run = frem_run(model, data, seeds, config, run_seed);
    if (run.failed) {
      ++sum.failures;
      continue;
    }
    sum.run_estimates.push_back(run.estimate);
    sum.run_iterations.push_back(run.iterations);
  }
  const std::size_t n = sum.run_estimates.size();
  sum.mean.assign(J, 0.0);
  sum.ci_lo.assign(J, 0.0);
  sum.ci_hi.assign(J, 0.0);
  sum.min.assign(J, std::numeric_limits<double>::quiet_NaN());
  sum.max.assign(J, std::numeric_limits<double>::quiet_NaN());
  if (n == 0) return sum;
  for (std::size_t j = 0; j < J; ++j) {
    double m = 0.0, lo = sum.run_estimates[0][j], hi = lo;
    for (const auto& est : sum.run_estimates) {
      m += est[j];
      lo = std::min(lo, est[j]);
      hi = std::max(hi, est[j]);
    }
    m /= static_cast<double>(n);
    double var = 0.0;
    for (const auto& est : sum.run_estimates) var += (est[j] - m) * (est[j] - m);
    var = n > 1 ? var / static_cast<double>(n - 1) : 0.0;
    const double half = 1.959963984540054 * std::sqrt(var / static_cast<double>(n));
    sum.mean[j] = m;
    sum.ci_lo[j] = m - half;
    sum.ci_hi[j] = m + half;
    sum.min[j] = lo;
    sum.max[j] = hi;
  }
  return sum;
}

}  // namespace frem
