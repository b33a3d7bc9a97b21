#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "sclab/divergence.hpp"
#include "sclab/dp.hpp"
#include "sclab/mdp.hpp"
#include "sclab/rng.hpp"

using namespace sclab;

namespace {

std::vector<double> random_distribution(CounterRng& rng, std::size_t k, bool allow_zeros) {
  std::vector<double> p(k);
  double total = 0.0;
  for (auto& x : p) {
    x = rng.next_exponential();
    if (allow_zeros && rng.next_uniform() < 0.2) x = 0.0;
    total += x;
  }
  if (total == 0.0) p[0] = total = 1.0;
  for (auto& x : p) x /= total;
  return p;
}

}  // namespace

TEST_CASE("divergences vanish at equality") {
  CounterRng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = random_distribution(rng, static_cast<std::size_t>(rng.next_int(2, 6)), false);
    REQUIRE_THAT(chi_squared(p, p), Catch::Matchers::WithinAbs(0.0, 1e-15));
    REQUIRE_THAT(forward_kl(p, p), Catch::Matchers::WithinAbs(0.0, 1e-15));
    REQUIRE_THAT(reverse_kl(p, p), Catch::Matchers::WithinAbs(0.0, 1e-15));
  }
}

TEST_CASE("point mass against a fair coin") {
  const std::vector<double> p{1.0, 0.0}, q{0.5, 0.5};
  REQUIRE_THAT(chi_squared(p, q), Catch::Matchers::WithinAbs(1.0, 1e-15));
  REQUIRE_THAT(forward_kl(p, q), Catch::Matchers::WithinAbs(std::log(2.0), 1e-15));
  REQUIRE(reverse_kl(p, q) == kInfinity);
}

TEST_CASE("support violations return the infinity sentinel") {
  const std::vector<double> p{0.5, 0.5}, q{1.0, 0.0};
  REQUIRE(chi_squared(p, q) == kInfinity);
  REQUIRE(forward_kl(p, q) == kInfinity);
  REQUIRE_THAT(reverse_kl(p, q), Catch::Matchers::WithinAbs(std::log(2.0), 1e-15));
}

TEST_CASE("chi-squared equals the likelihood-ratio variance") {
  CounterRng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const auto k = static_cast<std::size_t>(rng.next_int(2, 8));
    const auto q = random_distribution(rng, k, false);
    const auto p = random_distribution(rng, k, true);

    // Independent route: Var under q of the ratio p/q.
    double mean = 0.0;
    for (std::size_t i = 0; i < k; ++i) mean += q[i] * (p[i] / q[i]);
    double var = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      const double dev = p[i] / q[i] - mean;
      var += q[i] * dev * dev;
    }
    REQUIRE_THAT(chi_squared(p, q), Catch::Matchers::WithinAbs(var, 1e-12));
  }
}

TEST_CASE("conditioned bandit movement equals its influence") {
  auto [mdp, behavior] = make_bandit({0.495, 0.505}, {0.5, 0.5});
  const auto values = value_bundle(mdp, behavior);
  const auto conditioned = success_conditioned_policy(mdp, behavior, values);
  REQUIRE_THAT(chi_squared(conditioned.row(0), behavior.row(0)),
               Catch::Matchers::WithinAbs(1e-4, 1e-15));
}

TEST_CASE("dimension mismatch is rejected") {
  const std::vector<double> p{1.0}, q{0.5, 0.5};
  REQUIRE_THROWS_AS(chi_squared(p, q), DimensionMismatch);
}
