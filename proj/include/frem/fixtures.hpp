#pragma once

#include <string>
#include <vector>

#include "frem/model.hpp"

namespace frem {
namespace fixtures {

//! A model together with the observation protocol and Phase I seeds used
//! in the reference experiments.
struct Fixture {
  SRNModel model;
  Params theta_g;              // generating parameters
  State x0;
  double t_end = 0.0;
  double dt_obs = 0.0;
  std::vector<Params> seeds;   // over-dispersed Phase I starting points
};

//! One species, channels (-1, c1 x) and (-4, c2 x 1{x >= 4}).
Fixture decay();

//! Rescaled thickness-loss model: (-1, c1 x) and (-4, c2 x).
Fixture wear();

//! Channels (+1, c1) and (-1, c2 x).
Fixture birth_death();

//! S + I -> 2I at c1 S I, I -> R at c2 I; three species.
Fixture sir();

//! Five species, eight channels; dimerization uses P (P - 1).
Fixture gene_network();

//! Single channel (-1, c x); handy for analytic checks.
Fixture pure_death();

const std::vector<std::string>& names();
Fixture by_name(const std::string& name);

}  // namespace fixtures
}  // namespace frem
