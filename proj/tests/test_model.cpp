#include <doctest.h>

#include <cmath>

#include "frem/fixtures.hpp"
#include "frem/model.hpp"
#include "frem/rng.hpp"

using namespace frem;

TEST_SUITE_BEGIN("model");

TEST_CASE("guarded propensities on the fixtures") {
  const auto decay = fixtures::decay();
  const Params theta{3.78, 7.20};

  SUBCASE("threshold guard zeroes the channel") {
    CHECK(eval_propensity(decay.model, theta, {3}, 1) == 0.0);
    CHECK(eval_propensity(decay.model, theta, {4}, 1) == doctest::Approx(7.20 * 4));
  }
  SUBCASE("constant birth channel") {
    const auto bd = fixtures::birth_death();
    CHECK(eval_propensity(bd.model, {1.0, 0.06}, {0}, 0) == 1.0);
    CHECK(eval_propensity(bd.model, {1.0, 0.06}, {123}, 0) == 1.0);
  }
  SUBCASE("second-order dimerization factor") {
    const auto gene = fixtures::gene_network();
    Params theta8(8, 0.0);
    theta8[4] = 0.1;
    const State x{7, 3, 10, 10, 10};
    CHECK(eval_propensity(gene.model, theta8, x, 4) == doctest::Approx(0.1 * 10 * 9));
  }
  SUBCASE("boundary guard beats the monomial") {
    // nu = -4 from x = 2 leaves the lattice even though g would be positive
    const auto wear = fixtures::wear();
    CHECK(eval_propensity(wear.model, {1.0, 1.0}, {2}, 1) == 0.0);
    CHECK(eval_propensity(wear.model, {1.0, 1.0}, {5}, 1) == 5.0);
  }
}

TEST_CASE("total propensity") {
  const auto decay = fixtures::decay();
  CHECK(total_propensity(decay.model, {3.78, 7.20}, {100}) ==
        doctest::Approx(1098.0).epsilon(1e-14));
  CHECK(total_propensity(decay.model, {3.78, 7.20}, {0}) == 0.0);
  const auto bd = fixtures::birth_death();
  CHECK(total_propensity(bd.model, {1.0, 0.06}, {0}) == 1.0);
}

TEST_CASE("reverse model substitution") {
  const auto bd = fixtures::birth_death();
  const Params theta{1.0, 0.06};
  const auto rev = reverse_model(bd.model);

  CHECK(rev.channels[0].stoich == std::vector<int>{-1});
  CHECK(rev.channels[1].stoich == std::vector<int>{1});
  // a~_1(y) = c_1 1{y >= 1}
  CHECK(eval_propensity(rev, theta, {0}, 0) == 0.0);
  CHECK(eval_propensity(rev, theta, {3}, 0) == 1.0);
  // a~_2(y) = c_2 (y + 1)
  CHECK(eval_propensity(rev, theta, {0}, 1) == doctest::Approx(0.06));
  CHECK(eval_propensity(rev, theta, {9}, 1) == doctest::Approx(0.06 * 10));

  SUBCASE("decay channel") {
    const auto rd = reverse_model(fixtures::pure_death().model);
    CHECK(rd.channels[0].stoich == std::vector<int>{1});
    CHECK(eval_propensity(rd, {2.0}, {4}, 0) == doctest::Approx(2.0 * 5));
  }
  SUBCASE("bilinear SIR channel") {
    const auto sir = fixtures::sir();
    const auto rs = reverse_model(sir.model);
    CHECK(rs.channels[0].stoich == std::vector<int>{1, -1, 0});
    // a~(y) = c (y_S + 1)(y_I - 1), zero when the shifted state is off-lattice
    CHECK(eval_propensity(rs, {2.0, 1.0}, {2, 3, 0}, 0) == doctest::Approx(2.0 * 3 * 2));
    CHECK(eval_propensity(rs, {2.0, 1.0}, {2, 0, 0}, 0) == 0.0);
  }
}

TEST_CASE("double reversal restores forward propensities") {
  RngStream rng(42, 0);
  for (const auto& name : {"decay", "birth-death", "sir", "gene-network"}) {
    const auto fx = fixtures::by_name(name);
    const auto twice = reverse_model(reverse_model(fx.model));
    Params theta(fx.model.channels.size());
    for (auto& c : theta) c = rng.uniform01() * 3.0;
    for (int trial = 0; trial < 200; ++trial) {
      State x(fx.model.species.size());
      for (auto& v : x) v = static_cast<std::int64_t>(rng.uniform01() * 20);
      for (std::size_t j = 0; j < theta.size(); ++j) {
        CAPTURE(name);
        CHECK(eval_propensity(twice, theta, x, j) ==
              eval_propensity(fx.model, theta, x, j));
        CHECK(twice.channels[j].stoich == fx.model.channels[j].stoich);
      }
    }
  }
}

TEST_CASE("correction function") {
  const auto bd = fixtures::birth_death();
  const Params theta{1.0, 0.06};
  CHECK(correction(bd.model, theta, {5}) == doctest::Approx(0.06).epsilon(1e-14));
  CHECK(correction(bd.model, theta, {1}) == doctest::Approx(0.06).epsilon(1e-14));
  CHECK(correction(bd.model, theta, {0}) ==
        doctest::Approx(0.06 - 1.0).epsilon(1e-14));

  SUBCASE("constant propensities cancel") {
    SRNModel m;
    m.species = {"A"};
    m.channels = {{{1}, {}, "in", {}}, {{2}, {}, "in2", {}}};
    // away from the boundary both shifted and unshifted evaluations agree
    CHECK(correction(m, {2.0, 3.0}, {10}) == 0.0);
  }

  SUBCASE("identity with reverse total propensity") {
    RngStream rng(7, 1);
    for (const auto& name : {"decay", "birth-death", "sir", "gene-network"}) {
      const auto fx = fixtures::by_name(name);
      const auto rev = reverse_model(fx.model);
      Params theta2(fx.model.channels.size());
      for (auto& c : theta2) c = rng.uniform01() * 2.0;
      for (int trial = 0; trial < 100; ++trial) {
        State y(fx.model.species.size());
        for (auto& v : y) v = static_cast<std::int64_t>(rng.uniform01() * 15);
        const double lhs = correction(fx.model, theta2, y);
        const double rhs = total_propensity(rev, theta2, y) -
                           total_propensity(fx.model, theta2, y);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("propensities never go negative and respect the lattice") {
  RngStream rng(11, 2);
  const auto gene = fixtures::gene_network();
  Params theta(8, 0.5);
  for (int trial = 0; trial < 500; ++trial) {
    State x(5);
    for (auto& v : x) v = static_cast<std::int64_t>(rng.uniform01() * 6);
    for (std::size_t j = 0; j < 8; ++j) {
      const double a = eval_propensity(gene.model, theta, x, j);
      CHECK(a >= 0.0);
      bool exits = false;
      for (std::size_t i = 0; i < 5; ++i)
        exits = exits || x[i] + gene.model.channels[j].stoich[i] < 0;
      if (exits) CHECK(a == 0.0);
    }
  }
}

TEST_CASE("fixture library matches the reference model definitions") {
  using SV = std::vector<int>;
  const auto decay = fixtures::decay().model;
  REQUIRE(decay.channels.size() == 2);
  CHECK(decay.channels[0].stoich == SV{-1});
  CHECK(decay.channels[1].stoich == SV{-4});
  CHECK(decay.channels[1].factors[0].guard_min == std::int64_t{4});
  CHECK(fixtures::decay().theta_g == Params{3.78, 7.20});

  const auto wear = fixtures::wear().model;
  CHECK(wear.channels[0].stoich == SV{-1});
  CHECK(wear.channels[1].stoich == SV{-4});
  CHECK(!wear.channels[1].factors[0].guard_min.has_value());

  const auto bd = fixtures::birth_death().model;
  CHECK(bd.channels[0].stoich == SV{1});
  CHECK(bd.channels[0].factors.empty());
  CHECK(bd.channels[1].stoich == SV{-1});
  CHECK(fixtures::birth_death().x0 == State{17});

  const auto sir = fixtures::sir().model;
  CHECK(sir.channels[0].stoich == SV{-1, 1, 0});
  CHECK(sir.channels[1].stoich == SV{0, -1, 1});
  CHECK(sir.channels[0].factors.size() == 2);  // bilinear S I
  CHECK(fixtures::sir().x0 == State{300, 5, 0});

  const auto gene = fixtures::gene_network().model;
  REQUIRE(gene.channels.size() == 8);
  const SV expected[8] = {{-1, 1, 0, 0, -1}, {1, -1, 0, 0, 1},
                          {0, 0, 1, 0, 0},   {0, 0, -1, 0, 0},
                          {0, 0, 0, -2, 1},  {0, 0, 0, 2, -1},
                          {0, 0, 0, 1, 0},   {0, 0, 0, -1, 0}};
  for (int j = 0; j < 8; ++j) CHECK(gene.channels[j].stoich == expected[j]);
  CHECK(gene.channels[4].factors[0].order == 2);  // P (P - 1)
  CHECK(gene.theta_true ==
        Params{0.1, 0.7, 0.35, 0.3, 0.1, 0.9, 0.2, 0.1});
  CHECK(fixtures::gene_network().x0 == State{7, 3, 10, 10, 10});
}

TEST_CASE("validate_model") {
  CHECK(validate_model(fixtures::decay().model).empty());
  CHECK(validate_model(fixtures::gene_network().model).empty());

  SRNModel bad = fixtures::decay().model;
  bad.channels[0].stoich = {-1, 0};
  const auto v = validate_model(bad);
  REQUIRE(!v.empty());
  CHECK(v.front().find("stoich dimension mismatch") != std::string::npos);

  SRNModel empty;
  empty.species = {"A"};
  CHECK(!validate_model(empty).empty());

  SRNModel badf = fixtures::decay().model;
  badf.channels[0].factors[0].species = 7;
  CHECK(!validate_model(badf).empty());
}

TEST_SUITE_END();
