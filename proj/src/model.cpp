#include "frem/model.hpp"

#include <cmath>
#include <stdexcept>

namespace frem {

bool state_in_lattice(const State& x) {
  for (auto v : x)
    if (v < 0) return false;
  return true;
}

namespace {

// falling factorial n (n-1) ... (n-order+1) on integers
double falling_factorial(std::int64_t n, int order) {
  double v = 1.0;
  for (int k = 0; k < order; ++k) v *= static_cast<double>(n - k);
  return v;
}

}  // namespace

double eval_g(const SRNModel& model, std::size_t j, const State& x) {
  const ReactionChannel& ch = model.channels[j];
  const std::size_t d = x.size();

  // boundary guard: x + nu_j must stay on the lattice
  for (std::size_t i = 0; i < d; ++i)
    if (x[i] + ch.stoich[i] < 0) return 0.0;

  double g = 1.0;
  if (ch.eval_shift.empty()) {
    for (const auto& f : ch.factors) {
      const std::int64_t xi = x[f.species];
      if (f.guard_min && xi < *f.guard_min) return 0.0;
      if (f.order > 0) {
        if (xi < f.order) return 0.0;  // falling factorial hits zero/negative
        g *= falling_factorial(xi, f.order);
      }
    }
    return g;
  }

  // shifted evaluation, used by reversed channels
  for (std::size_t i = 0; i < d; ++i)
    if (x[i] - ch.eval_shift[i] < 0) return 0.0;
  for (const auto& f : ch.factors) {
    const std::int64_t xi = x[f.species] - ch.eval_shift[f.species];
    if (f.guard_min && xi < *f.guard_min) return 0.0;
    if (f.order > 0) {
      if (xi < f.order) return 0.0;
      g *= falling_factorial(xi, f.order);
    }
  }
  return g;
}

double eval_propensity(const SRNModel& model, const Params& theta,
                       const State& x, std::size_t j) {
  const double c = theta[j];
  if (c == 0.0) return 0.0;
  return c * eval_g(model, j, x);
}

double total_propensity(const SRNModel& model, const Params& theta,
                        const State& x) {
  double a0 = 0.0;
  for (std::size_t j = 0; j < model.channels.size(); ++j)
    a0 += eval_propensity(model, theta, x, j);
  return a0;
}

double eval_g_real(const SRNModel& model, std::size_t j,
                   std::span<const double> z) {
  const ReactionChannel& ch = model.channels[j];
  double g = 1.0;
  for (const auto& f : ch.factors) {
    double zi = z[f.species];
    if (!ch.eval_shift.empty()) zi -= static_cast<double>(ch.eval_shift[f.species]);
    if (f.guard_min && zi < static_cast<double>(*f.guard_min)) return 0.0;
    for (int k = 0; k < f.order; ++k) g *= (zi - k);
  }
  return g;
}

SRNModel reverse_model(const SRNModel& model) {
  SRNModel rev = model;
  rev.name = model.name.empty() ? std::string("reverse")
                                : model.name + "-reverse";
  for (std::size_t j = 0; j < model.channels.size(); ++j) {
    const ReactionChannel& fwd = model.channels[j];
    ReactionChannel& ch = rev.channels[j];
    const std::size_t d = fwd.stoich.size();
    ch.eval_shift.assign(d, 0);
    for (std::size_t i = 0; i < d; ++i) {
      const int prior = fwd.eval_shift.empty() ? 0 : fwd.eval_shift[i];
      ch.eval_shift[i] = prior + fwd.stoich[i];
      ch.stoich[i] = -fwd.stoich[i];
    }
    bool zero_shift = true;
    for (int s : ch.eval_shift) zero_shift = zero_shift && s == 0;
    if (zero_shift) ch.eval_shift.clear();
  }
  return rev;
}

double correction(const SRNModel& model, const Params& theta, const State& y) {
  // c(y) = a~_0(y) - a_0(y); a~_j(y) = a_j(y - nu_j) with off-lattice
  // arguments contributing 0
  double c = 0.0;
  const std::size_t d = y.size();
  State shifted(d);
  for (std::size_t j = 0; j < model.channels.size(); ++j) {
    const auto& nu = model.channels[j].stoich;
    bool ok = true;
    for (std::size_t i = 0; i < d; ++i) {
      shifted[i] = y[i] - nu[i];
      ok = ok && shifted[i] >= 0;
    }
    if (ok) c += eval_propensity(model, theta, shifted, j);
    c -= eval_propensity(model, theta, y, j);
  }
  return c;
}

std::vector<std::string> validate_model(const SRNModel& model) {
  std::vector<std::string> bad;
  const int d = model.species_count();
  if (d < 1) bad.push_back("model must declare at least one species");
  if (model.channels.empty()) bad.push_back("model must declare at least one channel");
  for (std::size_t j = 0; j < model.channels.size(); ++j) {
    const auto& ch = model.channels[j];
    const std::string where = "channel " + std::to_string(j) +
                              (ch.label.empty() ? "" : " (" + ch.label + ")");
    if (static_cast<int>(ch.stoich.size()) != d)
      bad.push_back(where + ": stoich dimension mismatch");
    if (!ch.eval_shift.empty() && static_cast<int>(ch.eval_shift.size()) != d)
      bad.push_back(where + ": eval_shift dimension mismatch");
    for (const auto& f : ch.factors) {
      if (f.species < 0 || f.species >= d)
        bad.push_back(where + ": factor references unknown species index " +
                      std::to_string(f.species));
      if (f.order < 0)
        bad.push_back(where + ": factor order must be non-negative");
      if (f.guard_min && *f.guard_min < 0)
        bad.push_back(where + ": guard_min must be non-negative");
    }
  }
  if (!model.theta_true.empty()) {
    if (model.theta_true.size() != model.channels.size())
      bad.push_back("theta_true length does not match channel count");
    for (double c : model.theta_true)
      if (!(c >= 0.0)) bad.push_back("theta_true components must be non-negative");
  }
  return bad;
}

}  // namespace frem
