#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "sclab/divergence.hpp"
#include "sclab/dp.hpp"
#include "sclab/rng.hpp"

namespace sclab {

/// A trust-region instance: maximize the first-order improvement subject to
/// sum_s w(s) D(pi(.|s) ; pi0(.|s)) <= radius.
struct TrustRegionInstance {
  std::vector<double> weights;
  Divergence kind = Divergence::Chi2;
  double radius = 0.0;
};

struct OptimalityReport {
  double objective_pi_plus = 0.0;
  double constraint_pi_plus = 0.0;
  double radius = 0.0;
  double oracle_best = 0.0;
  /// oracle_best - objective_pi_plus; nonpositive up to float noise when the
  /// conditioned policy is optimal.
  double gap = 0.0;
  /// Whether the constraint is active at the conditioned policy.
  bool binding = false;
  std::int32_t n_samples = 0;
  std::uint64_t seed = 0;
  double tol = 0.0;
};

/// First-order improvement L(candidate) = sum_s d(s) sum_a candidate(a|s) A(s,a),
/// with d and A taken under the behavior policy.
inline double linear_improvement(const Mdp& mdp, const Policy& behavior, const Policy& candidate,
                                 const ValueBundle& values, const OccupancyPair& occ) {
  (void)behavior;
  detail::check_policy_shape(mdp, candidate, "candidate policy");
  double total = 0.0;
  for (std::int32_t s : mdp.non_terminal_states()) {
    const auto& row = candidate.row(s);
    const auto& adv = values.a[static_cast<std::size_t>(s)];
    double mean_adv = 0.0;
    for (std::size_t a = 0; a < row.size(); ++a) mean_adv += row[a] * adv[a];
    total += occ.d[static_cast<std::size_t>(s)] * mean_adv;
  }
  return total;
}

/**
 * Remainder of the first-order expansion:
 * Rem = rho(candidate) - rho(behavior) - L(candidate). Also evaluated in
 * occupancy-difference form sum_s (d_cand(s) - d(s)) A(s, candidate); the two
 * routes must agree to 1e-10.
 */
inline double taylor_remainder(const Mdp& mdp, const Policy& behavior, const Policy& candidate,
                               const ValueBundle& values) {
  detail::check_policy_shape(mdp, candidate, "candidate policy");
  const OccupancyPair occ_behavior = occupancy_pair(mdp, behavior, values);
  const ValueBundle cand_values = value_bundle(mdp, candidate);
  const OccupancyPair occ_candidate = occupancy_pair(mdp, candidate, cand_values);
  const double linear = linear_improvement(mdp, behavior, candidate, values, occ_behavior);
  const double remainder = cand_values.rho - values.rho - linear;

  double by_shift = 0.0;
  for (std::int32_t s : mdp.non_terminal_states()) {
    const auto& row = candidate.row(s);
    const auto& adv = values.a[static_cast<std::size_t>(s)];
    double mean_adv = 0.0;
    for (std::size_t a = 0; a < row.size(); ++a) mean_adv += row[a] * adv[a];
    by_shift += (occ_candidate.d[static_cast<std::size_t>(s)] -
                 occ_behavior.d[static_cast<std::size_t>(s)]) *
                mean_adv;
  }
  check_consistent(std::abs(remainder - by_shift) <= kIdentityTol,
                   "remainder forms disagree: " + fmt17(remainder) + " vs " + fmt17(by_shift));
  return remainder;
}

/// Radius of the induced trust region: sum_s d_plus(s) * influence(s).
inline double trust_region_radius(const OccupancyPair& occ, const InfluenceProfile& influence) {
  double total = 0.0;
  for (std::size_t s = 0; s < occ.d_plus.size(); ++s)
    total += occ.d_plus[s] * influence.influence[s];
  return total;
}

/// The d_plus-weighted chi^2 instance the conditioned policy solves.
inline TrustRegionInstance induced_instance(const OccupancyPair& occ,
                                            const InfluenceProfile& influence) {
  return TrustRegionInstance{occ.d_plus, Divergence::Chi2, trust_region_radius(occ, influence)};
}

/**
 * Randomized falsifier for optimality of the conditioned policy on its
 * induced trust region. Draws per-state policies from normalized exponential
 * weights, pulls each draw toward the behavior policy along the likelihood
 * ratio until the weighted chi^2 constraint is met (along this path the
 * constraint scales exactly as lambda^2), and records the best feasible
 * objective. Deterministic given the seed.
 */
inline OptimalityReport verify_optimality(const Mdp& mdp, const Policy& behavior,
                                          std::int32_t n_oracle_samples, std::uint64_t seed,
                                          double tol = 1e-9) {
  if (n_oracle_samples < 1000) throw InvalidParameter("need at least 1000 oracle samples");
  const ValueBundle values = value_bundle(mdp, behavior);
  const OccupancyPair occ = occupancy_pair(mdp, behavior, values);
  const InfluenceProfile influence = action_influence(mdp, behavior, values);
  const Policy conditioned = success_conditioned_policy(mdp, behavior, values);

  OptimalityReport report;
  report.radius = trust_region_radius(occ, influence);
  report.objective_pi_plus = linear_improvement(mdp, behavior, conditioned, values, occ);
  double constraint = 0.0;
  for (std::int32_t s : mdp.non_terminal_states())
    constraint += occ.d_plus[static_cast<std::size_t>(s)] *
                  chi_squared(conditioned.row(s), behavior.row(s));
  report.constraint_pi_plus = constraint;
  report.n_samples = n_oracle_samples;
  report.seed = seed;
  report.tol = tol;

  const auto& nt = mdp.non_terminal_states();
  double best = 0.0;  // lambda = 0 recovers the behavior policy, objective 0
  std::vector<double> row;
  for (std::int32_t i = 0; i < n_oracle_samples; ++i) {
    CounterRng rng(seed, static_cast<std::uint64_t>(i) + 1);
    double cons = 0.0;
    double objective = 0.0;
    for (std::int32_t s : nt) {
      const auto k = static_cast<std::size_t>(mdp.n_actions(s));
      row.assign(k, 0.0);
      double total = 0.0;
      for (auto& x : row) {
        x = rng.next_exponential();
        total += x;
      }
      for (auto& x : row) x /= total;
      cons += occ.d_plus[static_cast<std::size_t>(s)] * chi_squared(row, behavior.row(s));
      const auto& adv = values.a[static_cast<std::size_t>(s)];
      double mean_adv = 0.0;
      for (std::size_t a = 0; a < k; ++a) mean_adv += row[a] * adv[a];
      objective += occ.d[static_cast<std::size_t>(s)] * mean_adv;
    }
    double lambda = 1.0;
    if (!(cons <= report.radius))
      lambda = cons == kInfinity ? 0.0 : std::sqrt(report.radius / cons);
    best = std::max(best, lambda * objective);
  }
  report.oracle_best = best;
  report.gap = best - report.objective_pi_plus;
  report.binding = std::abs(report.constraint_pi_plus - report.radius) <= tol;
  return report;
}

/**
 * Largest probability assignable to a rare action under a divergence budget.
 *
 * The instance has one rare action with behavior mass delta and k common
 * actions sharing the rest uniformly. Candidates keep the remaining mass
 * uniform; for the KL this equals the two-point grouping of the common
 * actions. Solved by bisection on [delta, 1] to 1e-12.
 */
inline double rare_action_tolerance(double delta, std::int32_t k, double epsilon, Divergence kind) {
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidParameter("delta must lie in (0,1)");
  if (k < 2) throw InvalidParameter("k must be at least 2");
  if (!(epsilon > 0.0)) throw InvalidParameter("epsilon must be positive");
  if (kind == Divergence::ReverseKl)
    throw InvalidParameter("rare-action tolerance is defined for chi2 and forward KL");

  const auto budget_used = [&](double p) {
    if (kind == Divergence::Chi2) {
      const double dev = p - delta;
      return dev * dev / (delta * (1.0 - delta));
    }
    double total = p * std::log(p / delta);
    if (p < 1.0) total += (1.0 - p) * std::log((1.0 - p) / (1.0 - delta));
    return total;
  };

  if (budget_used(1.0) <= epsilon) return 1.0;  // the simplex cap binds first
  double lo = delta, hi = 1.0;
  for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
    const double mid = 0.5 * (lo + hi);
    (budget_used(mid) <= epsilon ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace sclab
