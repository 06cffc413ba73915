#include "frem/simulation.hpp"

#include <cmath>
#include <stdexcept>

namespace frem {

namespace {

// One SSA sweep. `stats_model` supplies the g_j used for the F integrals
// (the forward model even when `dyn` is a reverse model); `corr_model` is
// non-null for reverse sweeps and triggers log_psi accumulation.
std::pair<JumpPath, PathStats> ssa_run(const SRNModel& dyn,
                                       const SRNModel& stats_model,
                                       const SRNModel* corr_model,
                                       const Params& theta, const State& x0,
                                       double t0, double t1,
                                       UniformSource& rng) {
  const std::size_t J = dyn.channels.size();
  if (theta.size() != J) throw std::invalid_argument("theta size != channel count");
  if (!(t0 <= t1)) throw std::invalid_argument("ssa: t0 > t1");
  if (!state_in_lattice(x0)) throw std::invalid_argument("ssa: state off lattice");

  JumpPath path;
  path.t0 = t0;
  path.t1 = t1;
  path.states.push_back(x0);

  PathStats stats;
  stats.R.assign(J, 0);
  stats.F.assign(J, 0.0);

  std::vector<double> a(J);
  State x = x0;
  double t = t0;

  auto settle = [&](double until) {
    const double dt = until - t;
    for (std::size_t j = 0; j < J; ++j)
      stats.F[j] += eval_g(stats_model, j, x) * dt;
    if (corr_model) stats.log_psi += correction(*corr_model, theta, x) * dt;
  };

  while (true) {
    double a0 = 0.0;
    for (std::size_t j = 0; j < J; ++j) {
      a[j] = eval_propensity(dyn, theta, x, j);
      a0 += a[j];
    }
    if (a0 <= 0.0) {
      settle(t1);
      break;
    }
    const double u1 = rng.uniform01();
    const double u2 = rng.uniform01();
    const double threshold = u1 * a0;
    std::size_t j = 0;
    double cum = a[0];
    while (cum <= threshold && j + 1 < J) cum += a[++j];
    const double tau = -std::log(u2) / a0;
    if (t + tau >= t1) {
      settle(t1);
      break;
    }
    settle(t + tau);
    t += tau;
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += dyn.channels[j].stoich[i];
    ++stats.R[j];
    path.jump_times.push_back(t);
    path.channels.push_back(static_cast<int>(j));
    path.states.push_back(x);
  }
  return {std::move(path), std::move(stats)};
}

}  // namespace

std::pair<JumpPath, PathStats> ssa_forward(const SRNModel& model,
                                           const Params& theta,
                                           const State& x0, double t0,
                                           double t1, UniformSource& rng) {
  return ssa_run(model, model, nullptr, theta, x0, t0, t1, rng);
}

std::pair<JumpPath, PathStats> ssa_reverse(const SRNModel& forward,
                                           const SRNModel& reverse,
                                           const Params& theta, const State& y,
                                           double t_star, double t1,
                                           UniformSource& rng) {
  return ssa_run(reverse, forward, &forward, theta, y, t_star, t1, rng);
}

std::pair<JumpPath, PathStats> ssa_reverse(const SRNModel& model,
                                           const Params& theta,
                                           const State& y, double t_star,
                                           double t1, UniformSource& rng) {
  const SRNModel rev = reverse_model(model);
  return ssa_reverse(model, rev, theta, y, t_star, t1, rng);
}

PathStats path_stats_from(const SRNModel& model, const JumpPath& path) {
  const std::size_t J = model.channels.size();
  PathStats stats;
  stats.R.assign(J, 0);
  stats.F.assign(J, 0.0);
  Params unit(J, 1.0);
  for (std::size_t i = 0; i < path.states.size(); ++i) {
    const double left = i == 0 ? path.t0 : path.jump_times[i - 1];
    const double right =
        i == path.jump_times.size() ? path.t1 : path.jump_times[i];
    for (std::size_t j = 0; j < J; ++j)
      stats.F[j] += eval_g(model, j, path.states[i]) * (right - left);
  }
  for (int ch : path.channels) ++stats.R[static_cast<std::size_t>(ch)];
  return stats;
}

namespace {

void rk4_step(const SRNModel& model, const Params& theta,
              std::vector<double>& z, double dt, std::vector<double>& k1,
              std::vector<double>& k2, std::vector<double>& k3,
              std::vector<double>& k4, std::vector<double>& tmp) {
  const std::size_t d = z.size();
  const std::size_t J = model.channels.size();
  auto deriv = [&](const std::vector<double>& s, std::vector<double>& out) {
    out.assign(d, 0.0);
    for (std::size_t j = 0; j < J; ++j) {
      const double aj = theta[j] * eval_g_real(model, j, s);
      if (aj == 0.0) continue;
      const auto& nu = model.channels[j].stoich;
      for (std::size_t i = 0; i < d; ++i) out[i] += aj * nu[i];
    }
  };
  deriv(z, k1);
  tmp.resize(d);
  for (std::size_t i = 0; i < d; ++i) tmp[i] = z[i] + 0.5 * dt * k1[i];
  deriv(tmp, k2);
  for (std::size_t i = 0; i < d; ++i) tmp[i] = z[i] + 0.5 * dt * k2[i];
  deriv(tmp, k3);
  for (std::size_t i = 0; i < d; ++i) tmp[i] = z[i] + dt * k3[i];
  deriv(tmp, k4);
  for (std::size_t i = 0; i < d; ++i) {
    z[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    if (z[i] < 0.0) z[i] = 0.0;
  }
}

}  // namespace

std::vector<double> ode_endpoint(const SRNModel& model, const Params& theta,
                                 std::vector<double> z, double duration,
                                 double dt) {
  if (duration <= 0.0) return z;
  if (dt <= 0.0) dt = duration / 200.0;
  const auto n = static_cast<std::size_t>(std::ceil(duration / dt - 1e-9));
  const double h = duration / static_cast<double>(n);
  std::vector<double> k1, k2, k3, k4, tmp;
  for (std::size_t i = 0; i < n; ++i) rk4_step(model, theta, z, h, k1, k2, k3, k4, tmp);
  return z;
}

OdeTrajectory ode_mean_field(const SRNModel& model, const Params& theta,
                             const std::vector<double>& z0, double t0,
                             double t1, double dt) {
  if (!(t1 >= t0)) throw std::invalid_argument("ode: t1 < t0");
  OdeTrajectory traj;
  traj.times.push_back(t0);
  traj.states.push_back(z0);
  const double duration = t1 - t0;
  if (duration == 0.0) return traj;
  if (dt <= 0.0) dt = duration / 200.0;
  const auto n = static_cast<std::size_t>(std::ceil(duration / dt - 1e-9));
  const double h = duration / static_cast<double>(n);
  std::vector<double> z = z0, k1, k2, k3, k4, tmp;
  for (std::size_t i = 0; i < n; ++i) {
    rk4_step(model, theta, z, h, k1, k2, k3, k4, tmp);
    traj.times.push_back(t0 + h * static_cast<double>(i + 1));
    traj.states.push_back(z);
  }
  return traj;
}

OdeTrajectory ode_reverse_mean_field(const SRNModel& model,
                                     const Params& theta,
                                     const std::vector<double>& z0, double t0,
                                     double t1, double dt) {
  return ode_mean_field(reverse_model(model), theta, z0, t0, t1, dt);
}

}  // namespace frem
