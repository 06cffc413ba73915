#include "frem/bridge.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <limits>
#include <stdexcept>
#include <unordered_map>

namespace frem {

void TransformH::apply(std::span<const double> x, std::span<double> out) const {
  for (int r = 0; r < dim; ++r) {
    double acc = 0.0;
    for (int c = 0; c < dim; ++c) acc += matrix(r, c) * x[static_cast<std::size_t>(c)];
    out[static_cast<std::size_t>(r)] = acc;
  }
}

double kernel_eval(KernelKind kind, std::span<const double> yf,
                   std::span<const double> yb) {
  const std::size_t d = yf.size();
  if (yb.size() != d) throw std::invalid_argument("kernel_eval: dimension mismatch");
  if (kind == KernelKind::kronecker) {
    for (std::size_t i = 0; i < d; ++i)
      if (yf[i] != yb[i]) return 0.0;
    return 1.0;
  }
  double w = 1.0;
  for (std::size_t i = 0; i < d; ++i) {
    const double eta = yf[i] - yb[i];
    if (!(std::abs(eta) <= 1.0)) return 0.0;
    w *= 0.75 * (1.0 - eta * eta);
  }
  return w;
}

std::optional<TransformH> compute_transform(
    const std::vector<EndpointRecord>& forward,
    const std::vector<EndpointRecord>& backward, std::size_t M, double c_reg) {
  const std::size_t n = forward.size() + backward.size();
  if (n == 0) throw std::invalid_argument("compute_transform: empty cloud");
  const int d = static_cast<int>((forward.empty() ? backward : forward)
                                     .front().endpoint.size());

  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  auto add_mean = [&](const EndpointRecord& r) {
    for (int i = 0; i < d; ++i) mean[i] += static_cast<double>(r.endpoint[static_cast<std::size_t>(i)]);
  };
  for (const auto& r : forward) add_mean(r);
  for (const auto& r : backward) add_mean(r);
  mean /= static_cast<double>(n);

  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
  Eigen::VectorXd delta(d);
  auto add_cov = [&](const EndpointRecord& r) {
    for (int i = 0; i < d; ++i)
      delta[i] = static_cast<double>(r.endpoint[static_cast<std::size_t>(i)]) - mean[i];
    cov.noalias() += delta * delta.transpose();
  };
  for (const auto& r : forward) add_cov(r);
  for (const auto& r : backward) add_cov(r);
  cov /= static_cast<double>(n > 1 ? n - 1 : 1);

  for (int i = 0; i < d; ++i) cov(i, i) += c_reg * cov(i, i);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) return std::nullopt;
  const Eigen::VectorXd& ev = eig.eigenvalues();
  const double ev_max = ev.maxCoeff();
  if (!(ev_max > 0.0) || ev.minCoeff() <= 1e-12 * ev_max) return std::nullopt;

  Eigen::MatrixXd inv_sqrt =
      eig.eigenvectors() * ev.cwiseSqrt().cwiseInverse().asDiagonal() *
      eig.eigenvectors().transpose();

  // alpha from M = (3 alpha)^d V_d with V_d the unit-sphere volume
  const double vd = std::pow(M_PI, 0.5 * d) / std::tgamma(0.5 * d + 1.0);
  const double alpha =
      std::pow(static_cast<double>(M) / vd, 1.0 / d) / 3.0;

  TransformH h;
  h.dim = d;
  h.alpha = alpha;
  h.zeta = 1.0;
  h.inv_sqrt.assign(static_cast<std::size_t>(d) * d, 0.0);
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c)
      h.inv_sqrt[static_cast<std::size_t>(r) * d + c] = inv_sqrt(r, c);
  return h;
}

namespace {

constexpr int kMaxJoinDim = 16;

struct BoxKey {
  std::array<std::int32_t, kMaxJoinDim> c{};
  bool operator==(const BoxKey&) const = default;
};

struct BoxKeyHash {
  std::size_t operator()(const BoxKey& k) const {
    std::uint64_t h = 0x2545f4914f6cdd1dull;
    for (int v : k.c) h = detail::combine(h, static_cast<std::uint64_t>(static_cast<std::uint32_t>(v)));
    return static_cast<std::size_t>(h);
  }
};

std::int32_t box_coord(double x) {
  const double c = std::ceil(x);
  if (!(c >= -2147483000.0 && c <= 2147483000.0))
    throw std::domain_error("box_join: coordinate out of indexable range");
  return static_cast<std::int32_t>(c);
}

// flat d-per-record coordinate table for one cloud
std::vector<double> cloud_coords(const std::vector<EndpointRecord>& cloud,
                                 KernelKind kind, std::size_t d) {
  std::vector<double> out(cloud.size() * d);
  for (std::size_t m = 0; m < cloud.size(); ++m) {
    const auto& r = cloud[m];
    if (kind == KernelKind::epanechnikov) {
      if (r.transformed.size() != d)
        throw std::invalid_argument("box_join: transformed coordinates missing");
      std::copy(r.transformed.begin(), r.transformed.end(),
                out.begin() + static_cast<std::ptrdiff_t>(m * d));
    } else {
      for (std::size_t i = 0; i < d; ++i)
        out[m * d + i] = static_cast<double>(r.endpoint[i]);
    }
  }
  return out;
}

}  // namespace

JoinResult box_join(const std::vector<EndpointRecord>& forward,
                    const std::vector<EndpointRecord>& backward,
                    KernelKind kind) {
  JoinResult out;
  if (forward.empty() || backward.empty()) return out;
  const std::size_t d = forward.front().endpoint.size();
  if (d > kMaxJoinDim) throw std::invalid_argument("box_join: dimension too large");
  const std::size_t J = forward.front().stats.R.size();

  // stability scale shared by all weights; independent of the pairing
  double scale = -std::numeric_limits<double>::infinity();
  for (const auto& r : backward) scale = std::max(scale, r.stats.log_psi);
  if (!std::isfinite(scale)) scale = 0.0;
  out.log_weight_scale = scale;

  const std::vector<double> fc_all = cloud_coords(forward, kind, d);
  const std::vector<double> bc_all = cloud_coords(backward, kind, d);

  std::unordered_map<BoxKey, std::vector<std::uint32_t>, BoxKeyHash> boxes;
  boxes.reserve(forward.size() * 2);
  for (std::uint32_t m = 0; m < forward.size(); ++m) {
    BoxKey key;
    for (std::size_t i = 0; i < d; ++i) key.c[i] = box_coord(fc_all[m * d + i]);
    boxes[key].push_back(m);
  }

  // odometer over the 3^d neighbor offsets; the Kronecker kernel can only
  // match inside the backward point's own box
  const int lo = kind == KernelKind::kronecker ? 0 : -1;
  const int hi = kind == KernelKind::kronecker ? 0 : 1;
  std::vector<int> offset(d, lo);
  for (std::uint32_t mb = 0; mb < backward.size(); ++mb) {
    const std::span<const double> bc{bc_all.data() + mb * d, d};
    BoxKey base;
    for (std::size_t i = 0; i < d; ++i) base.c[i] = box_coord(bc[i]);
    const double psi = std::exp(backward[mb].stats.log_psi - scale);

    std::fill(offset.begin(), offset.end(), lo);
    while (true) {
      BoxKey key = base;
      for (std::size_t i = 0; i < d; ++i) key.c[i] += offset[i];
      if (auto it = boxes.find(key); it != boxes.end()) {
        for (std::uint32_t mf : it->second) {
          const std::span<const double> fc{fc_all.data() + mf * d, d};
          const double kappa = kernel_eval(kind, fc, bc);
          if (kappa > 0.0) {
            out.pairs.push_back({mf, mb, kappa * psi});
            out.denominator += kappa * psi;
            const auto& rf = forward[mf].stats;
            const auto& rb = backward[mb].stats;
            for (std::size_t j = 0; j < J; ++j) {
              out.combined_R.push_back(static_cast<double>(rf.R[j] + rb.R[j]));
              out.combined_F.push_back(rf.F[j] + rb.F[j]);
            }
          }
        }
      }
      std::size_t i = 0;
      while (i < d && offset[i] == hi) offset[i++] = lo;
      if (i == d) break;
      ++offset[i];
    }
  }
  return out;
}

WeightedAverages weighted_averages(const JoinResult& join, std::size_t J) {
  if (join.L() == 0)
    throw std::runtime_error("weighted_averages: no bridges (L = 0)");
  WeightedAverages avg;
  avg.avg_R.assign(J, 0.0);
  avg.avg_F.assign(J, 0.0);
  avg.denominator = join.denominator;
  for (std::size_t l = 0; l < join.L(); ++l) {
    const double w = join.pairs[l].weight;
    for (std::size_t j = 0; j < J; ++j) {
      avg.avg_R[j] += w * join.combined_R[l * J + j];
      avg.avg_F[j] += w * join.combined_F[l * J + j];
    }
  }
  for (std::size_t j = 0; j < J; ++j) {
    avg.avg_R[j] /= join.denominator;
    avg.avg_F[j] /= join.denominator;
  }
  return avg;
}

double cv_of_mean(std::span<const double> values) {
  const double n = static_cast<double>(values.size());
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  double sum = 0.0, sum2 = 0.0;
  for (double v : values) {
    sum += v;
    sum2 += v * v;
  }
  const double mean = sum / n;
  if (mean == 0.0) return std::numeric_limits<double>::quiet_NaN();
  const double var = std::max(0.0, sum2 / n - mean * mean);
  return std::sqrt(var / n) / std::abs(mean);
}

namespace {

// bootstrap cv of the weighted mean: uniform pair resampling, weighted
// mean per replicate
double bootstrap_cv(const JoinResult& join, std::size_t J, std::size_t j,
                    const std::vector<double>& column, int reps,
                    RngStream& rng) {
  const std::size_t L = join.L();
  double rep_sum = 0.0, rep_sum2 = 0.0;
  for (int r = 0; r < reps; ++r) {
    double num = 0.0, den = 0.0;
    for (std::size_t l = 0; l < L; ++l) {
      const auto pick = static_cast<std::size_t>(rng.uniform01() * static_cast<double>(L));
      const std::size_t idx = pick < L ? pick : L - 1;
      const double w = join.pairs[idx].weight;
      num += w * column[idx * J + j];
      den += w;
    }
    const double m = den > 0.0 ? num / den : 0.0;
    rep_sum += m;
    rep_sum2 += m * m;
  }
  const double n = static_cast<double>(reps);
  const double mean = rep_sum / n;
  if (mean == 0.0) return std::numeric_limits<double>::quiet_NaN();
  const double var = std::max(0.0, rep_sum2 / n - mean * mean);
  return std::sqrt(var) / std::abs(mean);
}

void fill_cvs(const JoinResult& join, std::size_t J, const BridgeConfig& cfg,
              RngNode boot_rng, std::vector<double>& cv_R,
              std::vector<double>& cv_F) {
  const std::size_t L = join.L();
  cv_R.assign(J, std::numeric_limits<double>::quiet_NaN());
  cv_F.assign(J, std::numeric_limits<double>::quiet_NaN());
  std::vector<double> col(L);
  for (std::size_t j = 0; j < J; ++j) {
    for (int which = 0; which < 2; ++which) {
      const auto& flat = which == 0 ? join.combined_R : join.combined_F;
      auto& cv = which == 0 ? cv_R : cv_F;
      if (L >= static_cast<std::size_t>(cfg.bootstrap_min_L)) {
        for (std::size_t l = 0; l < L; ++l) col[l] = flat[l * J + j];
        cv[j] = cv_of_mean(col);
      } else {
        RngStream rs = boot_rng.child({j, static_cast<std::uint64_t>(which)}).stream();
        cv[j] = bootstrap_cv(join, J, j, flat, cfg.bootstrap_reps, rs);
      }
    }
  }
}

bool cvs_below(const std::vector<double>& cv_R, const std::vector<double>& cv_F,
               double cv0) {
  for (double v : cv_R)
    if (!std::isnan(v) && !(v < cv0)) return false;
  for (double v : cv_F)
    if (!std::isnan(v) && !(v < cv0)) return false;
  return true;
}

// Standard error of the weighted ratio estimator. Joined pairs share
// paths, so the per-pair cv understates the sampling error; project the
// centered weighted sums onto forward and backward paths instead.
void fill_ses(const JoinResult& join, std::size_t J, std::size_t M_f,
              std::size_t M_b, const std::vector<double>& avg_R,
              const std::vector<double>& avg_F, std::vector<double>& se_R,
              std::vector<double>& se_F) {
  se_R.assign(J, 0.0);
  se_F.assign(J, 0.0);
  const double D = join.denominator;
  if (D <= 0.0) return;
  std::vector<double> Sf(M_f), Sb(M_b);
  for (std::size_t j = 0; j < J; ++j) {
    for (int which = 0; which < 2; ++which) {
      const auto& flat = which == 0 ? join.combined_R : join.combined_F;
      const double mu = which == 0 ? avg_R[j] : avg_F[j];
      std::fill(Sf.begin(), Sf.end(), 0.0);
      std::fill(Sb.begin(), Sb.end(), 0.0);
      for (std::size_t l = 0; l < join.L(); ++l) {
        const double c = join.pairs[l].weight * (flat[l * J + j] - mu);
        Sf[join.pairs[l].f] += c;
        Sb[join.pairs[l].b] += c;
      }
      double var = 0.0;
      for (double s : Sf) var += s * s;
      for (double s : Sb) var += s * s;
      (which == 0 ? se_R : se_F)[j] = std::sqrt(var) / D;
    }
  }
}

}  // namespace

IntervalEstimate adaptive_estimate(const SRNModel& model, const Params& theta,
                                   const Interval& interval,
                                   const BridgeConfig& config, RngNode rng) {
  if (!(interval.s < interval.t))
    throw std::invalid_argument("adaptive_estimate: s >= t");
  const std::size_t J = model.channels.size();
  const SRNModel rev = reverse_model(model);
  const double t_star =
      interval.s + config.t_star_fraction * (interval.t - interval.s);

  std::vector<EndpointRecord> fwd, bwd;
  IntervalEstimate est;

  std::size_t batch = static_cast<std::size_t>(config.M0);
  for (int round = 0; round < config.max_rounds; ++round) {
    for (std::size_t m = 0; m < batch; ++m) {
      const std::uint64_t path_id = fwd.size();
      {
        RngStream rs = rng.child({0, path_id}).stream();
        auto [path, stats] =
            ssa_forward(model, theta, interval.xs, interval.s, t_star, rs);
        fwd.push_back({path.states.back(), {}, std::move(stats)});
      }
      {
        RngStream rs = rng.child({1, path_id}).stream();
        auto [path, stats] =
            ssa_reverse(model, rev, theta, interval.xt, t_star, interval.t, rs);
        bwd.push_back({path.states.back(), {}, std::move(stats)});
      }
    }
    const std::size_t M_tilde = fwd.size();
    batch *= 2;
    est.rounds = round + 1;
    est.M_used = M_tilde;

    JoinResult join = box_join(fwd, bwd, KernelKind::kronecker);
    est.kernel = KernelKind::kronecker;
    est.zeta = 1.0;

    const auto need =
        static_cast<std::size_t>(std::ceil(config.gamma * static_cast<double>(M_tilde)));
    if (join.L() < need) {
      if (auto h = compute_transform(fwd, bwd, M_tilde, config.c_reg)) {
        const std::size_t d = interval.xs.size();
        std::vector<double> raw(d);
        for (int expansions = 0; expansions < 64; ++expansions) {
          for (auto* cloud : {&fwd, &bwd}) {
            for (auto& r : *cloud) {
              r.transformed.resize(d);
              for (std::size_t i = 0; i < d; ++i)
                raw[i] = static_cast<double>(r.endpoint[i]);
              h->apply(raw, r.transformed);
            }
          }
          JoinResult ejoin = box_join(fwd, bwd, KernelKind::epanechnikov);
          const bool accept =
              ejoin.L() <= static_cast<std::size_t>(config.C_L) * M_tilde;
          if (accept || expansions == 63) {
            join = std::move(ejoin);
            est.kernel = KernelKind::epanechnikov;
            est.zeta = h->zeta;
            break;
          }
          h->zeta *= config.zeta_growth;
        }
      }
      // singular covariance: stay with the Kronecker join
    }

    est.L = join.L();
    if (join.L() > 0) {
      WeightedAverages avg = weighted_averages(join, J);
      est.avg_R = std::move(avg.avg_R);
      est.avg_F = std::move(avg.avg_F);
      est.denominator = join.denominator;
      est.log_weight_scale = join.log_weight_scale;
      fill_cvs(join, J, config, rng.child({2, static_cast<std::uint64_t>(round)}),
               est.cv_R, est.cv_F);
      if (cvs_below(est.cv_R, est.cv_F, config.cv0)) {
        fill_ses(join, J, fwd.size(), bwd.size(), est.avg_R, est.avg_F,
                 est.se_R, est.se_F);
        est.ok = true;
        return est;
      }
    }
  }
  est.ok = false;
  return est;
}

}  // namespace frem
