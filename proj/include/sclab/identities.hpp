#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "sclab/trust_region.hpp"

namespace sclab {

/**
 * Residual record for one verification suite. pass holds iff max_residual is
 * within tolerance and, where a one-sided aggregate applies, that too.
 */
struct IdentityReport {
  std::string check;
  double tolerance = kIdentityTol;
  double max_residual = 0.0;
  std::vector<double> state_residuals;  // per state, empty for aggregate-only checks
  double aggregate_residual = 0.0;      // one-sided slack violations, 0 when clean
  double aggregate_tolerance = kStrictTol;
  bool pass = false;

  void finish() {
    pass = max_residual <= tolerance && aggregate_residual <= aggregate_tolerance;
  }
};

/**
 * Per-state equality of relative advantage, chi^2 policy movement, and
 * action-influence under the success-conditioned policy. The optional
 * override replaces the conditioned policy (fault-injection hook for the
 * CLI's failure path).
 */
inline IdentityReport triple_identity(const Mdp& mdp, const Policy& behavior,
                                      const Policy* conditioned_override = nullptr) {
  const ValueBundle values = value_bundle(mdp, behavior);
  const InfluenceProfile influence = action_influence(mdp, behavior, values);
  const Policy conditioned = conditioned_override
                                 ? *conditioned_override
                                 : success_conditioned_policy(mdp, behavior, values);
  IdentityReport report;
  report.check = "triple_identity";
  report.state_residuals.assign(static_cast<std::size_t>(mdp.n_states()), 0.0);
  for (std::int32_t s : mdp.non_terminal_states()) {
    const auto& row = conditioned.row(s);
    const auto& adv = values.a[static_cast<std::size_t>(s)];
    double mean_adv = 0.0;
    for (std::size_t a = 0; a < row.size(); ++a) mean_adv += row[a] * adv[a];
    const double relative_advantage = mean_adv / values.v[static_cast<std::size_t>(s)];
    const double movement = chi_squared(row, behavior.row(s));
    const double infl = influence.influence[static_cast<std::size_t>(s)];
    const double resid =
        std::max(std::abs(relative_advantage - movement), std::abs(movement - infl));
    report.state_residuals[static_cast<std::size_t>(s)] = resid;
    report.max_residual = std::max(report.max_residual, resid);
  }
  report.finish();
  return report;
}

/// Aggregate form: L(pi_plus)/rho vs the d_plus-weighted chi^2 movement vs
/// the d_plus-weighted influence.
inline IdentityReport weighted_identity(const Mdp& mdp, const Policy& behavior,
                                        const Policy* conditioned_override = nullptr) {
  const ValueBundle values = value_bundle(mdp, behavior);
  const OccupancyPair occ = occupancy_pair(mdp, behavior, values);
  const InfluenceProfile influence = action_influence(mdp, behavior, values);
  const Policy conditioned = conditioned_override
                                 ? *conditioned_override
                                 : success_conditioned_policy(mdp, behavior, values);
  const double normalized_gain =
      linear_improvement(mdp, behavior, conditioned, values, occ) / values.rho;
  double movement = 0.0;
  for (std::int32_t s : mdp.non_terminal_states())
    movement +=
        occ.d_plus[static_cast<std::size_t>(s)] * chi_squared(conditioned.row(s), behavior.row(s));
  const double radius = trust_region_radius(occ, influence);

  IdentityReport report;
  report.check = "weighted_identity";
  report.max_residual =
      std::max(std::abs(normalized_gain - movement), std::abs(movement - radius));
  report.finish();
  return report;
}

/// Monotone improvement: rho may not drop, and each state's relative value
/// gain must cover its action-influence.
inline IdentityReport improvement_check(const Mdp& mdp, const Policy& behavior,
                                        const Policy* conditioned_override = nullptr) {
  const ValueBundle values = value_bundle(mdp, behavior);
  const InfluenceProfile influence = action_influence(mdp, behavior, values);
  const Policy conditioned = conditioned_override
                                 ? *conditioned_override
                                 : success_conditioned_policy(mdp, behavior, values);
  const ValueBundle improved = value_bundle(mdp, conditioned);

  IdentityReport report;
  report.check = "improvement_check";
  report.state_residuals.assign(static_cast<std::size_t>(mdp.n_states()), 0.0);
  report.aggregate_residual = std::max(0.0, values.rho - improved.rho);
  for (std::int32_t s : mdp.non_terminal_states()) {
    const auto idx = static_cast<std::size_t>(s);
    const double relative_gain = (improved.v[idx] - values.v[idx]) / values.v[idx];
    const double resid = std::max(0.0, influence.influence[idx] - relative_gain);
    report.state_residuals[idx] = resid;
    report.max_residual = std::max(report.max_residual, resid);
  }
  report.finish();
  return report;
}

/// Exact improvement: rho(pi_plus) - rho(pi0) equals the pi_plus-occupancy
/// weighted sum of v(s) * influence(s).
inline IdentityReport exact_improvement(const Mdp& mdp, const Policy& behavior,
                                        const Policy* conditioned_override = nullptr) {
  const ValueBundle values = value_bundle(mdp, behavior);
  const InfluenceProfile influence = action_influence(mdp, behavior, values);
  const Policy conditioned = conditioned_override
                                 ? *conditioned_override
                                 : success_conditioned_policy(mdp, behavior, values);
  const ValueBundle improved = value_bundle(mdp, conditioned);
  const OccupancyPair occ_improved = occupancy_pair(mdp, conditioned, improved);

  double weighted = 0.0;
  for (std::int32_t s : mdp.non_terminal_states()) {
    const auto idx = static_cast<std::size_t>(s);
    weighted += occ_improved.d[idx] * values.v[idx] * influence.influence[idx];
  }

  IdentityReport report;
  report.check = "exact_improvement";
  report.max_residual = std::abs((improved.rho - values.rho) - weighted);
  report.finish();
  return report;
}

}  // namespace sclab
