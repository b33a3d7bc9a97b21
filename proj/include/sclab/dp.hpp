#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "sclab/detail/linear.hpp"
#include "sclab/mdp.hpp"

namespace sclab {

/**
 * Exact value-theoretic objects for one (MDP, policy) pair. All entries are
 * success probabilities: v[s] = P(success | S_t = s), q[s][a] the same with
 * the first action fixed, a[s][a] = q - v, and rho the success probability
 * from the initial distribution. Terminal states carry v = 1 (success) or
 * v = 0 (failure) and empty q/a rows.
 */
struct ValueBundle {
  std::vector<double> v;
  std::vector<std::vector<double>> q;
  std::vector<std::vector<double>> a;
  double rho = 0.0;
};

/// Expected per-episode visit counts, unconditioned (d) and conditioned on
/// eventual success (d_plus). Zero at terminal states.
struct OccupancyPair {
  std::vector<double> d;
  std::vector<double> d_plus;
};

/// Action-influence per state: the squared coefficient of variation of
/// q[s][.] under the behavior policy's action draw. Zero at terminal states
/// and wherever the policy is deterministic.
struct InfluenceProfile {
  std::vector<double> influence;
};

namespace detail {

/// Dense matrix of the policy-induced chain restricted to non-terminal
/// states: block[i][j] = P(next = nt[j] | current = nt[i]) under the policy.
inline Eigen::MatrixXd non_terminal_block(const Mdp& mdp, const Policy& policy) {
  const auto& nt = mdp.non_terminal_states();
  const auto m = static_cast<Eigen::Index>(nt.size());
  Eigen::MatrixXd block = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const std::int32_t s = nt[static_cast<std::size_t>(i)];
    const auto& pi = policy.row(s);
    for (std::int32_t a = 0; a < mdp.n_actions(s); ++a) {
      const double w = pi[static_cast<std::size_t>(a)];
      if (w == 0.0) continue;
      const auto& row = mdp.transition_row(s, a);
      for (Eigen::Index j = 0; j < m; ++j)
        block(i, j) += w * row[static_cast<std::size_t>(nt[static_cast<std::size_t>(j)])];
    }
  }
  return block;
}

inline double success_mass(const Mdp& mdp, const std::vector<double>& row) {
  double p = 0.0;
  for (std::int32_t t : mdp.terminal_success()) p += row[static_cast<std::size_t>(t)];
  return p;
}

}  // namespace detail

/// Success probability per state under the policy (the V of value_bundle,
/// exposed separately because validation only needs this piece).
inline std::vector<double> state_success_probabilities(const Mdp& mdp, const Policy& policy) {
  const auto& nt = mdp.non_terminal_states();
  const auto m = static_cast<Eigen::Index>(nt.size());
  Eigen::MatrixXd sys = Eigen::MatrixXd::Identity(m, m) - detail::non_terminal_block(mdp, policy);
  Eigen::VectorXd b(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const std::int32_t s = nt[static_cast<std::size_t>(i)];
    const auto& pi = policy.row(s);
    double acc = 0.0;
    for (std::int32_t a = 0; a < mdp.n_actions(s); ++a)
      acc += pi[static_cast<std::size_t>(a)] * detail::success_mass(mdp, mdp.transition_row(s, a));
    b(i) = acc;
  }
  Eigen::VectorXd x = detail::solve_checked(sys, b);
  std::vector<double> v(static_cast<std::size_t>(mdp.n_states()), 0.0);
  for (std::int32_t s = 0; s < mdp.n_states(); ++s)
    if (mdp.is_success(s)) v[static_cast<std::size_t>(s)] = 1.0;
  for (Eigen::Index i = 0; i < m; ++i)
    v[static_cast<std::size_t>(nt[static_cast<std::size_t>(i)])] = x(i);
  return v;
}

/**
 * Checks stochasticity of all probability rows, almost-sure termination of
 * the policy-induced chain, and success reachability from every non-terminal
 * state. Throws NonStochasticRow for malformed rows; termination and
 * reachability verdicts are returned in the report. Deterministic.
 */
inline ValidationReport validate_mdp(const Mdp& mdp, const Policy& behavior) {
  ValidationReport report;
  detail::check_policy_shape(mdp, behavior, "behavior policy");
  detail::check_prob_row(mdp.initial_dist(), "initial distribution");
  for (std::int32_t s = 0; s < mdp.n_states(); ++s) {
    if (mdp.is_terminal(s)) {
      if (mdp.initial_dist()[static_cast<std::size_t>(s)] != 0.0)
        throw NonStochasticRow("initial distribution puts mass on terminal state " +
                               std::to_string(s));
      continue;
    }
    detail::check_prob_row(behavior.row(s), "policy row at state " + std::to_string(s));
    for (std::int32_t a = 0; a < mdp.n_actions(s); ++a)
      detail::check_prob_row(mdp.transition_row(s, a),
                             "transition row (" + std::to_string(s) + "," + std::to_string(a) + ")");
  }
  report.rows_stochastic = true;

  // Termination: iterate the substochastic non-terminal block until the
  // surviving mass decays below 1e-12 or the cap is hit.
  const auto& nt = mdp.non_terminal_states();
  const std::size_t m = nt.size();
  std::vector<double> mass(m, 1.0), next(m, 0.0);
  const std::int32_t cap = 10 * mdp.n_states() + 1000;
  for (std::int32_t it = 0; it < cap; ++it) {
    double peak = 0.0;
    for (double x : mass) peak = std::max(peak, x);
    if (peak < 1e-12) {
      report.terminates = true;
      report.decay_iterations = it;
      break;
    }
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      const std::int32_t s = nt[i];
      const auto& pi = behavior.row(s);
      double acc = 0.0;
      for (std::int32_t a = 0; a < mdp.n_actions(s); ++a) {
        if (pi[static_cast<std::size_t>(a)] == 0.0) continue;
        const auto& row = mdp.transition_row(s, a);
        double stay = 0.0;
        for (std::size_t j = 0; j < m; ++j) stay += row[static_cast<std::size_t>(nt[j])] * mass[j];
        acc += pi[static_cast<std::size_t>(a)] * stay;
      }
      next[i] = acc;
    }
    mass.swap(next);
  }
  if (!report.terminates) return report;

  std::vector<double> v = state_success_probabilities(mdp, behavior);
  report.success_reachable = true;
  for (std::int32_t s : nt) {
    if (v[static_cast<std::size_t>(s)] <= 0.0) {
      report.success_reachable = false;
      report.unreachable_states.push_back(s);
    }
  }
  return report;
}

/// Validates and throws (NonTerminatingChain or SuccessUnreachable) on failure.
inline void require_valid(const Mdp& mdp, const Policy& behavior) {
  ValidationReport r = validate_mdp(mdp, behavior);
  if (!r.terminates) throw NonTerminatingChain("episodes do not terminate almost surely");
  if (!r.success_reachable) {
    std::string msg = "success unreachable from states:";
    for (auto s : r.unreachable_states) msg += " " + std::to_string(s);
    throw SuccessUnreachable(msg, r.unreachable_states);
  }
}

/// Exact V, Q, A and rho by solving the policy-evaluation linear system.
inline ValueBundle value_bundle(const Mdp& mdp, const Policy& policy) {
  detail::check_policy_shape(mdp, policy, "policy");
  ValueBundle out;
  out.v = state_success_probabilities(mdp, policy);
  out.q.resize(static_cast<std::size_t>(mdp.n_states()));
  out.a.resize(static_cast<std::size_t>(mdp.n_states()));
  for (std::int32_t s : mdp.non_terminal_states()) {
    auto& qs = out.q[static_cast<std::size_t>(s)];
    auto& as = out.a[static_cast<std::size_t>(s)];
    qs.resize(static_cast<std::size_t>(mdp.n_actions(s)));
    as.resize(static_cast<std::size_t>(mdp.n_actions(s)));
    for (std::int32_t a = 0; a < mdp.n_actions(s); ++a) {
      const auto& row = mdp.transition_row(s, a);
      double q = 0.0;
      for (std::int32_t sp = 0; sp < mdp.n_states(); ++sp)
        q += row[static_cast<std::size_t>(sp)] * out.v[static_cast<std::size_t>(sp)];
      qs[static_cast<std::size_t>(a)] = q;
      as[static_cast<std::size_t>(a)] = q - out.v[static_cast<std::size_t>(s)];
    }
  }
  double rho = 0.0;
  for (std::int32_t s = 0; s < mdp.n_states(); ++s)
    rho += mdp.initial_dist()[static_cast<std::size_t>(s)] * out.v[static_cast<std::size_t>(s)];
  out.rho = rho;
  return out;
}

/**
 * Expected visit counts d (solving d = mu + P_pi^T d over non-terminal
 * states) and the success-conditioned counts d_plus(s) = v(s) d(s) / rho.
 */
inline OccupancyPair occupancy_pair(const Mdp& mdp, const Policy& policy,
                                    const ValueBundle& values) {
  if (values.rho <= 0.0) throw DivisionByZero("success probability is zero");
  const auto& nt = mdp.non_terminal_states();
  const auto m = static_cast<Eigen::Index>(nt.size());
  Eigen::MatrixXd sys =
      Eigen::MatrixXd::Identity(m, m) - detail::non_terminal_block(mdp, policy).transpose();
  Eigen::VectorXd mu(m);
  for (Eigen::Index i = 0; i < m; ++i)
    mu(i) = mdp.initial_dist()[static_cast<std::size_t>(nt[static_cast<std::size_t>(i)])];
  Eigen::VectorXd x = detail::solve_checked(sys, mu);
  OccupancyPair out;
  out.d.assign(static_cast<std::size_t>(mdp.n_states()), 0.0);
  out.d_plus.assign(static_cast<std::size_t>(mdp.n_states()), 0.0);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto s = static_cast<std::size_t>(nt[static_cast<std::size_t>(i)]);
    out.d[s] = x(i);
    out.d_plus[s] = values.v[s] * x(i) / values.rho;
  }
  return out;
}

/**
 * Bayes posterior of the action given eventual success:
 * pi_plus(a|s) = pi0(a|s) q(s,a) / v(s). Rows are checked to be normalized
 * within 1e-12 but never renormalized; a failure here means the value solve
 * is broken, not the input.
 */
inline Policy success_conditioned_policy(const Mdp& mdp, const Policy& behavior,
                                         const ValueBundle& values) {
  std::vector<std::int32_t> dead;
  for (std::int32_t s : mdp.non_terminal_states())
    if (!(values.v[static_cast<std::size_t>(s)] > 0.0)) dead.push_back(s);
  if (!dead.empty()) {
    std::string msg = "success probability is zero at states:";
    for (auto s : dead) msg += " " + std::to_string(s);
    throw SuccessUnreachable(msg, dead);
  }
  Policy out;
  out.rows.resize(static_cast<std::size_t>(mdp.n_states()));
  for (std::int32_t s : mdp.non_terminal_states()) {
    const auto& pi = behavior.row(s);
    const auto& qs = values.q[static_cast<std::size_t>(s)];
    const double v = values.v[static_cast<std::size_t>(s)];
    auto& row = out.rows[static_cast<std::size_t>(s)];
    row.resize(pi.size());
    double sum = 0.0;
    for (std::size_t a = 0; a < pi.size(); ++a) {
      row[a] = pi[a] * qs[a] / v;
      sum += row[a];
    }
    check_consistent(std::abs(sum - 1.0) <= kStrictTol,
                     "success-conditioned row at state " + std::to_string(s) + " sums to " +
                         fmt17(sum));
  }
  return out;
}

/**
 * Action-influence per state. Computed from the definition (variance of
 * q[s][.] over its mean, squared), then cross-checked against the advantage
 * form sum_a pi0(a|s) (a(s,a)/v(s))^2. States with a deterministic behavior
 * row return exactly 0.0 without touching the variance path.
 */
inline InfluenceProfile action_influence(const Mdp& mdp, const Policy& behavior,
                                         const ValueBundle& values) {
  InfluenceProfile out;
  out.influence.assign(static_cast<std::size_t>(mdp.n_states()), 0.0);
  for (std::int32_t s : mdp.non_terminal_states()) {
    const double v = values.v[static_cast<std::size_t>(s)];
    if (!(v > 0.0))
      throw SuccessUnreachable("success probability is zero at state " + std::to_string(s), {s});
    const auto& pi = behavior.row(s);
    int support = 0;
    for (double w : pi)
      if (w > 0.0) ++support;
    if (support <= 1) continue;  // deterministic draw, influence is exactly 0

    const auto& qs = values.q[static_cast<std::size_t>(s)];
    double mean = 0.0;
    for (std::size_t a = 0; a < pi.size(); ++a) mean += pi[a] * qs[a];
    double var = 0.0;
    for (std::size_t a = 0; a < pi.size(); ++a) {
      const double dev = qs[a] - mean;
      var += pi[a] * dev * dev;
    }
    const double by_definition = var / (mean * mean);

    const auto& as = values.a[static_cast<std::size_t>(s)];
    double by_advantage = 0.0;
    for (std::size_t a = 0; a < pi.size(); ++a) {
      const double r = as[a] / v;
      by_advantage += pi[a] * r * r;
    }
    check_consistent(std::abs(by_definition - by_advantage) <=
                         1e-12 * std::max(1.0, std::abs(by_definition)),
                     "action-influence forms disagree at state " + std::to_string(s));
    out.influence[static_cast<std::size_t>(s)] = by_definition;
  }
  return out;
}

}  // namespace sclab
