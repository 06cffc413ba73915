#include "frem/fixtures.hpp"

#include <stdexcept>

namespace frem {
namespace fixtures {

Fixture decay() {
  Fixture f;
  f.model.name = "decay";
  f.model.species = {"X"};
  f.model.channels = {
      {{-1}, {{0, 1, {}}}, "loss1", {}},
      {{-4}, {{0, 1, std::int64_t{4}}}, "loss4", {}},
  };
  f.model.theta_true = {3.78, 7.20};
  f.theta_g = {3.78, 7.20};
  f.x0 = {100};
  f.t_end = 1.0;
  f.dt_obs = 1.0 / 16.0;
  f.seeds = {{1.0, 5.0}, {6.0, 5.0}, {1.0, 9.0}, {6.0, 9.0}};
  return f;
}

Fixture wear() {
  Fixture f;
  f.model.name = "wear";
  f.model.species = {"X"};
  f.model.channels = {
      {{-1}, {{0, 1, {}}}, "wear1", {}},
      {{-4}, {{0, 1, {}}}, "wear4", {}},
  };
  // rescaled units: state in caliper steps, time in units of T
  f.theta_g = {8.94, 5.73};
  f.x0 = {100};
  f.t_end = 1.0;
  f.dt_obs = 1.0 / 16.0;
  f.seeds = {{1.0, 1.0}, {10.0, 1.0}, {1.0, 10.0}, {10.0, 10.0}};
  return f;
}

Fixture birth_death() {
  Fixture f;
  f.model.name = "birth-death";
  f.model.species = {"X"};
  f.model.channels = {
      {{1}, {}, "birth", {}},
      {{-1}, {{0, 1, {}}}, "death", {}},
  };
  f.model.theta_true = {1.0, 0.06};
  f.theta_g = {1.0, 0.06};
  f.x0 = {17};
  f.t_end = 200.0;
  f.dt_obs = 5.0;
  f.seeds = {{0.5, 0.04}, {0.5, 0.08}, {1.5, 0.04}, {1.5, 0.08}};
  return f;
}

Fixture sir() {
  Fixture f;
  f.model.name = "sir";
  f.model.species = {"S", "I", "R"};
  f.model.channels = {
      {{-1, 1, 0}, {{0, 1, {}}, {1, 1, {}}}, "infection", {}},
      {{0, -1, 1}, {{1, 1, {}}}, "removal", {}},
  };
  f.model.theta_true = {1.66, 0.44};
  f.theta_g = {1.66, 0.44};
  f.x0 = {300, 5, 0};
  f.t_end = 10.0;
  f.dt_obs = 1.0;
  f.seeds = {{0.40, 0.05}, {0.40, 1.00}, {3.00, 0.05}, {3.00, 1.00}};
  return f;
}

Fixture gene_network() {
  Fixture f;
  f.model.name = "gene-network";
  // species: DNA, DNA.P2, mRNA, P, P2
  f.model.species = {"DNA", "DNA.P2", "mRNA", "P", "P2"};
  f.model.channels = {
      {{-1, 1, 0, 0, -1}, {{1, 1, {}}}, "bind", {}},
      {{1, -1, 0, 0, 1}, {{0, 1, {}}, {4, 1, {}}}, "unbind", {}},
      {{0, 0, 1, 0, 0}, {{0, 1, {}}}, "transcribe", {}},
      {{0, 0, -1, 0, 0}, {{2, 1, {}}}, "mrna-decay", {}},
      {{0, 0, 0, -2, 1}, {{3, 2, {}}}, "dimerize", {}},
      {{0, 0, 0, 2, -1}, {{4, 1, {}}}, "undimerize", {}},
      {{0, 0, 0, 1, 0}, {{2, 1, {}}}, "translate", {}},
      {{0, 0, 0, -1, 0}, {{3, 1, {}}}, "p-decay", {}},
  };
  f.model.theta_true = {0.1, 0.7, 0.35, 0.3, 0.1, 0.9, 0.2, 0.1};
  f.theta_g = f.model.theta_true;
  f.x0 = {7, 3, 10, 10, 10};
  f.t_end = 50.0;
  f.dt_obs = 0.5;
  f.seeds = {Params(8, 0.1), Params(8, 0.5)};
  return f;
}

Fixture pure_death() {
  Fixture f;
  f.model.name = "pure-death";
  f.model.species = {"X"};
  f.model.channels = {{{-1}, {{0, 1, {}}}, "death", {}}};
  f.model.theta_true = {1.0};
  f.theta_g = {1.0};
  f.x0 = {1};
  f.t_end = 1.0;
  f.dt_obs = 0.5;
  f.seeds = {{0.5}, {2.0}};
  return f;
}

const std::vector<std::string>& names() {
  static const std::vector<std::string> all = {
      "decay", "wear", "birth-death", "sir", "gene-network", "pure-death"};
  return all;
}

Fixture by_name(const std::string& name) {
  if (name == "decay") return decay();
  if (name == "wear") return wear();
  if (name == "birth-death") return birth_death();
  if (name == "sir") return sir();
  if (name == "gene-network") return gene_network();
  if (name == "pure-death") return pure_death();
  throw std::invalid_argument("unknown fixture '" + name + "'");
}

}  // namespace fixtures
}  // namespace frem
