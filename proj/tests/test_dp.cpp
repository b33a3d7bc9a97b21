#include <catch2/catch_amalgamated.hpp>

#include "sclab/dp.hpp"
#include "sclab/mdp.hpp"
#include "sclab/random_mdp.hpp"

#include "oracles/enumeration.hpp"

using namespace sclab;

namespace {

constexpr std::uint64_t kEnumSeeds[] = {3, 5, 8, 11, 17, 23, 29, 41, 57, 91};

}  // namespace

TEST_CASE("bandit values reproduce the two-arm example") {
  auto [mdp, behavior] = make_bandit({0.495, 0.505}, {0.5, 0.5});
  const auto values = value_bundle(mdp, behavior);
  REQUIRE_THAT(values.rho, Catch::Matchers::WithinAbs(0.5, 1e-15));
  REQUIRE_THAT(values.q[0][0], Catch::Matchers::WithinAbs(0.495, 1e-15));
  REQUIRE_THAT(values.q[0][1], Catch::Matchers::WithinAbs(0.505, 1e-15));

  const auto conditioned = success_conditioned_policy(mdp, behavior, values);
  REQUIRE_THAT(conditioned.row(0)[0], Catch::Matchers::WithinAbs(0.495, 1e-15));
  REQUIRE_THAT(conditioned.row(0)[1], Catch::Matchers::WithinAbs(0.505, 1e-15));

  const auto influence = action_influence(mdp, behavior, values);
  REQUIRE_THAT(influence.influence[0], Catch::Matchers::WithinAbs(1e-4, 1e-15));

  const auto improved = value_bundle(mdp, conditioned);
  REQUIRE_THAT(improved.rho, Catch::Matchers::WithinAbs(0.50005, 1e-15));
}

TEST_CASE("deterministic chain has unit values everywhere") {
  // Three states marching into the success terminal.
  Mdp mdp(5,
          {{{0.0, 1.0, 0.0, 0.0, 0.0}},
           {{0.0, 0.0, 1.0, 0.0, 0.0}},
           {{0.0, 0.0, 0.0, 1.0, 0.0}},
           {},
           {}},
          {1.0, 0.0, 0.0, 0.0, 0.0}, {3}, {4});
  Policy behavior{{{1.0}, {1.0}, {1.0}, {}, {}}};
  const auto values = value_bundle(mdp, behavior);
  for (std::int32_t s : mdp.non_terminal_states())
    REQUIRE(values.v[static_cast<std::size_t>(s)] == 1.0);
  REQUIRE(values.rho == 1.0);

  const auto occ = occupancy_pair(mdp, behavior, values);
  for (std::int32_t s : mdp.non_terminal_states()) {
    REQUIRE_THAT(occ.d[static_cast<std::size_t>(s)], Catch::Matchers::WithinAbs(1.0, 1e-14));
    REQUIRE_THAT(occ.d_plus[static_cast<std::size_t>(s)], Catch::Matchers::WithinAbs(1.0, 1e-14));
  }
}

TEST_CASE("bandit occupancies are a single visit") {
  auto [mdp, behavior] = make_bandit({0.2, 0.8, 0.5}, {0.1, 0.6, 0.3});
  const auto values = value_bundle(mdp, behavior);
  REQUIRE_THAT(values.rho, Catch::Matchers::WithinAbs(0.65, 1e-15));
  const auto occ = occupancy_pair(mdp, behavior, values);
  REQUIRE_THAT(occ.d[0], Catch::Matchers::WithinAbs(1.0, 1e-14));
  REQUIRE_THAT(occ.d_plus[0], Catch::Matchers::WithinAbs(1.0, 1e-14));
}

TEST_CASE("value bundle invariants hold on random DAGs") {
  for (std::uint64_t seed : kEnumSeeds) {
    auto [mdp, behavior] = make_random_dag(seed);
    const auto values = value_bundle(mdp, behavior);
    const auto occ = occupancy_pair(mdp, behavior, values);
    for (std::int32_t s : mdp.non_terminal_states()) {
      const auto idx = static_cast<std::size_t>(s);
      // Mean advantage under the behavior draw is zero.
      double mean_adv = 0.0;
      for (std::size_t a = 0; a < behavior.row(s).size(); ++a)
        mean_adv += behavior.row(s)[a] * values.a[idx][a];
      REQUIRE_THAT(mean_adv, Catch::Matchers::WithinAbs(0.0, 1e-10));
      // Occupancies are nonnegative and tie together through the values.
      REQUIRE(occ.d[idx] >= -1e-12);
      REQUIRE_THAT(values.rho * occ.d_plus[idx],
                   Catch::Matchers::WithinAbs(values.v[idx] * occ.d[idx], 1e-10));
    }
    double rho = 0.0;
    for (std::int32_t s = 0; s < mdp.n_states(); ++s)
      rho += mdp.initial_dist()[static_cast<std::size_t>(s)] *
             values.v[static_cast<std::size_t>(s)];
    REQUIRE_THAT(values.rho, Catch::Matchers::WithinAbs(rho, 1e-14));
  }
}

TEST_CASE("exact DP matches exhaustive enumeration") {
  const RandomMdpConfig cfg = RandomMdpConfig::enumerable();
  for (std::uint64_t seed : kEnumSeeds) {
    auto [mdp, behavior] = make_random_dag(seed, cfg);
    REQUIRE(mdp.n_states() <= 12);

    const auto oracle = testing::enumerate_trajectories(mdp, behavior, 8);
    REQUIRE(oracle.unterminated_mass == 0.0);

    const auto values = value_bundle(mdp, behavior);
    const auto occ = occupancy_pair(mdp, behavior, values);
    const auto conditioned = success_conditioned_policy(mdp, behavior, values);

    REQUIRE_THAT(values.rho, Catch::Matchers::WithinAbs(oracle.rho, 1e-12));
    for (std::int32_t s : mdp.non_terminal_states()) {
      const auto idx = static_cast<std::size_t>(s);
      REQUIRE_THAT(values.v[idx],
                   Catch::Matchers::WithinAbs(testing::enumerate_success_from(mdp, behavior, s),
                                              1e-12));
      for (std::int32_t a = 0; a < mdp.n_actions(s); ++a)
        REQUIRE_THAT(values.q[idx][static_cast<std::size_t>(a)],
                     Catch::Matchers::WithinAbs(
                         testing::enumerate_success_from(mdp, behavior, s, a), 1e-12));
      REQUIRE_THAT(occ.d[idx], Catch::Matchers::WithinAbs(oracle.d[idx], 1e-12));
      REQUIRE_THAT(occ.d_plus[idx], Catch::Matchers::WithinAbs(oracle.d_plus[idx], 1e-12));
      for (std::size_t a = 0; a < conditioned.row(s).size(); ++a)
        REQUIRE_THAT(conditioned.row(s)[a],
                     Catch::Matchers::WithinAbs(oracle.pi_plus[idx][a], 1e-12));
    }
  }
}

TEST_CASE("conditioning is Bayes-consistent and shrinks support") {
  for (std::uint64_t seed : kEnumSeeds) {
    auto [mdp, behavior] = make_random_dag(seed);
    const auto values = value_bundle(mdp, behavior);
    const auto conditioned = success_conditioned_policy(mdp, behavior, values);
    for (std::int32_t s : mdp.non_terminal_states()) {
      const auto idx = static_cast<std::size_t>(s);
      for (std::size_t a = 0; a < behavior.row(s).size(); ++a) {
        REQUIRE_THAT(conditioned.row(s)[a] * values.v[idx],
                     Catch::Matchers::WithinAbs(behavior.row(s)[a] * values.q[idx][a], 1e-12));
        if (behavior.row(s)[a] == 0.0) REQUIRE(conditioned.row(s)[a] == 0.0);
      }
    }
  }
}

TEST_CASE("deterministic behavior is a fixed point of conditioning") {
  // Two arms but all behavior mass on the first.
  auto [mdp, behavior] = make_bandit({0.3, 0.9}, {1.0, 0.0});
  const auto values = value_bundle(mdp, behavior);
  const auto conditioned = success_conditioned_policy(mdp, behavior, values);
  REQUIRE(conditioned.row(0) == behavior.row(0));
  const auto influence = action_influence(mdp, behavior, values);
  REQUIRE(influence.influence[0] == 0.0);
}

TEST_CASE("three-arm influence agrees with direct arithmetic") {
  auto [mdp, behavior] = make_bandit({0.2, 0.8, 0.5}, {0.1, 0.6, 0.3});
  const auto values = value_bundle(mdp, behavior);
  const auto influence = action_influence(mdp, behavior, values);
  // Hand computation: mean = 0.65, var = 0.1*0.04 + 0.6*0.64 + 0.3*0.25 - 0.65^2.
  const double mean = 0.1 * 0.2 + 0.6 * 0.8 + 0.3 * 0.5;
  const double second = 0.1 * 0.04 + 0.6 * 0.64 + 0.3 * 0.25;
  const double expected = (second - mean * mean) / (mean * mean);
  REQUIRE_THAT(influence.influence[0], Catch::Matchers::WithinAbs(expected, 1e-14));

  // Alternate form evaluated independently.
  double alt = 0.0;
  for (std::size_t a = 0; a < 3; ++a) {
    const double r = values.a[0][a] / values.v[0];
    alt += behavior.row(0)[a] * r * r;
  }
  REQUIRE_THAT(influence.influence[0], Catch::Matchers::WithinAbs(alt, 1e-14));
}

TEST_CASE("occupancy requires positive success probability") {
  Mdp mdp(2, {{{0.0, 1.0}}, {}}, {1.0, 0.0}, {}, {1});
  Policy behavior{{{1.0}, {}}};
  const auto values = value_bundle(mdp, behavior);
  REQUIRE(values.rho == 0.0);
  REQUIRE_THROWS_AS(occupancy_pair(mdp, behavior, values), DivisionByZero);
  REQUIRE_THROWS_AS(success_conditioned_policy(mdp, behavior, values), SuccessUnreachable);
}
