#include "frem/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "frem/quadrature.hpp"

namespace frem {

namespace {
constexpr double kUnifTol = 1e-10;
constexpr double kSinkWarn = 1e-6;
constexpr double kMaxSegmentMass = 50.0;  // split t so lambda*dt stays modest
}  // namespace

std::size_t StateBox::size() const {
  std::size_t n = 1;
  for (std::size_t i = 0; i < lo.size(); ++i)
    n *= static_cast<std::size_t>(hi[i] - lo[i] + 1);
  return n;
}

bool StateBox::contains(const State& x) const {
  for (std::size_t i = 0; i < lo.size(); ++i)
    if (x[i] < lo[i] || x[i] > hi[i]) return false;
  return true;
}

std::size_t StateBox::index_of(const State& x) const {
  if (!contains(x)) throw std::out_of_range("StateBox: state outside box");
  std::size_t idx = 0;
  for (std::size_t i = 0; i < lo.size(); ++i) {
    const auto extent = static_cast<std::size_t>(hi[i] - lo[i] + 1);
    idx = idx * extent + static_cast<std::size_t>(x[i] - lo[i]);
  }
  return idx;
}

State StateBox::state_at(std::size_t idx) const {
  State x(lo.size());
  for (std::size_t i = lo.size(); i-- > 0;) {
    const auto extent = static_cast<std::size_t>(hi[i] - lo[i] + 1);
    x[i] = lo[i] + static_cast<std::int64_t>(idx % extent);
    idx /= extent;
  }
  return x;
}

GeneratorMatrix GeneratorMatrix::build(const SRNModel& model,
                                       const Params& theta,
                                       const StateBox& box) {
  GeneratorMatrix gen;
  gen.n_states = box.size();
  gen.rows.resize(gen.n_states);
  gen.exit_rate.assign(gen.n_states, 0.0);
  const std::size_t J = model.channels.size();
  State target(box.lo.size());
  for (std::size_t idx = 0; idx < gen.n_states; ++idx) {
    const State x = box.state_at(idx);
    for (std::size_t j = 0; j < J; ++j) {
      const double rate = eval_propensity(model, theta, x, j);
      if (rate <= 0.0) continue;
      const auto& nu = model.channels[j].stoich;
      for (std::size_t i = 0; i < x.size(); ++i) target[i] = x[i] + nu[i];
      gen.exit_rate[idx] += rate;
      if (box.contains(target)) {
        const auto col = static_cast<std::uint32_t>(box.index_of(target));
        auto& row = gen.rows[idx];
        auto it = std::find_if(row.begin(), row.end(),
                               [col](const Entry& e) { return e.col == col; });
        if (it == row.end())
          row.push_back({col, rate});
        else
          it->rate += rate;
      }
      // off-box transitions leak to the absorbing sink
    }
    gen.uniformization_rate = std::max(gen.uniformization_rate, gen.exit_rate[idx]);
  }
  return gen;
}

namespace {

// v <- v * (I + Q/lambda) for the row action, or (I + Q^T/lambda) * v for
// the column action. v has an extra trailing slot for the sink.
void apply_kernel(const GeneratorMatrix& gen, bool transpose,
                  const std::vector<double>& v, std::vector<double>& out) {
  const std::size_t n = gen.n_states;
  const double lambda = gen.uniformization_rate;
  out.assign(n + 1, 0.0);
  out[n] = v[n];  // sink is absorbing
  for (std::size_t i = 0; i < n; ++i) {
    const double stay = 1.0 - gen.exit_rate[i] / lambda;
    out[i] += stay * v[i];
    double in_box = 0.0;
    for (const auto& e : gen.rows[i]) {
      const double p = e.rate / lambda;
      in_box += e.rate;
      if (!transpose)
        out[e.col] += p * v[i];
      else
        out[i] += p * v[e.col];
    }
    const double leak = (gen.exit_rate[i] - in_box) / lambda;
    if (leak > 0.0 && !transpose) out[n] += leak * v[i];
    // transpose action: nothing flows back out of the sink
  }
}

// v <- v e^{Q tau} (row) or e^{Q^T tau} v (column) by uniformization
void unif_propagate(const GeneratorMatrix& gen, bool transpose,
                    std::vector<double>& v, double tau, double tol) {
  if (tau <= 0.0) return;
  const double lambda = gen.uniformization_rate;
  if (lambda <= 0.0) return;  // generator is zero: identity semigroup

  const int segments =
      std::max(1, static_cast<int>(std::ceil(lambda * tau / kMaxSegmentMass)));
  const double seg_tau = tau / segments;
  const double seg_tol = tol / segments;
  const double mass = lambda * seg_tau;

  std::vector<double> acc(v.size()), power = v, next(v.size());
  for (int s = 0; s < segments; ++s) {
    power = v;
    double weight = std::exp(-mass);
    double covered = weight;
    for (std::size_t i = 0; i < v.size(); ++i) acc[i] = weight * power[i];
    for (int n = 1; covered < 1.0 - seg_tol; ++n) {
      apply_kernel(gen, transpose, power, next);
      power.swap(next);
      weight *= mass / n;
      covered += weight;
      for (std::size_t i = 0; i < v.size(); ++i) acc[i] += weight * power[i];
      if (n > 1000000) throw std::runtime_error("uniformization failed to converge");
    }
    v = acc;
  }
}

}  // namespace

std::pair<std::vector<double>, double> transition_row(
    const SRNModel& model, const Params& theta, const StateBox& box,
    const State& x, double duration) {
  const GeneratorMatrix gen = GeneratorMatrix::build(model, theta, box);
  std::vector<double> v(gen.n_states + 1, 0.0);
  v[box.index_of(x)] = 1.0;
  unif_propagate(gen, false, v, duration, kUnifTol);
  const double sink = v.back();
  v.pop_back();
  return {std::move(v), sink};
}

TransitionResult transition_prob(const SRNModel& model, const Params& theta,
                                 const StateBox& box, const State& x, double s,
                                 const State& y, double t) {
  if (!(s <= t)) throw std::invalid_argument("transition_prob: s > t");
  auto [row, sink] = transition_row(model, theta, box, x, t - s);
  TransitionResult res;
  res.probability = row[box.index_of(y)];
  res.sink_mass = sink;
  res.truncation_warning = sink > kSinkWarn;
  return res;
}

BridgeExpectations bridge_expectations(const SRNModel& model,
                                       const Params& theta,
                                       const StateBox& box, const State& x,
                                       double s, const State& y, double t,
                                       int n_quad) {
  if (!(s < t)) throw std::invalid_argument("bridge_expectations: s >= t");
  const GeneratorMatrix gen = GeneratorMatrix::build(model, theta, box);
  const std::size_t n = gen.n_states;
  const std::size_t J = model.channels.size();

  std::vector<double> full(n + 1, 0.0);
  full[box.index_of(x)] = 1.0;
  unif_propagate(gen, false, full, t - s, kUnifTol);
  const double p = full[box.index_of(y)];
  const double sink = full.back();
  if (p < 1e-300)
    throw std::runtime_error("bridge_expectations: transition probability vanishes");

  BridgeExpectations res;
  res.p = p;
  res.sink_mass = sink;
  res.truncation_warning = sink > kSinkWarn;
  res.ER.assign(J, 0.0);
  res.EF.assign(J, 0.0);

  auto [nodes, weights] = gauss_legendre(n_quad, s, t);
  State shifted(box.lo.size());
  for (int q = 0; q < n_quad; ++q) {
    const double u = nodes[static_cast<std::size_t>(q)];
    const double wq = weights[static_cast<std::size_t>(q)];

    std::vector<double> alpha(n + 1, 0.0);
    alpha[box.index_of(x)] = 1.0;
    unif_propagate(gen, false, alpha, u - s, kUnifTol);

    std::vector<double> beta(n + 1, 0.0);
    beta[box.index_of(y)] = 1.0;
    unif_propagate(gen, true, beta, t - u, kUnifTol);

    for (std::size_t idx = 0; idx < n; ++idx) {
      const double az = alpha[idx];
      if (az <= 0.0) continue;
      const State z = box.state_at(idx);
      for (std::size_t j = 0; j < J; ++j) {
        const double g = eval_g(model, j, z);
        if (g == 0.0) continue;
        res.EF[j] += wq * az * g * beta[idx];
        const double aj = theta[j] * g;
        if (aj > 0.0) {
          const auto& nu = model.channels[j].stoich;
          bool inside = true;
          for (std::size_t i = 0; i < z.size(); ++i) {
            shifted[i] = z[i] + nu[i];
            inside = inside && shifted[i] >= box.lo[i] && shifted[i] <= box.hi[i];
          }
          if (inside) res.ER[j] += wq * az * aj * beta[box.index_of(shifted)];
        }
      }
    }
  }
  for (std::size_t j = 0; j < J; ++j) {
    res.ER[j] /= p;
    res.EF[j] /= p;
  }
  return res;
}

}  // namespace frem
