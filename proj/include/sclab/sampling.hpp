#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "sclab/divergence.hpp"
#include "sclab/dp.hpp"
#include "sclab/rng.hpp"

namespace sclab {

/// One sampled episode: states has exactly one more entry than actions, the
/// last state is terminal. outcome is the binary success label; ret is the
/// optional dense return in [0,1] used by the proxy-reward tooling.
struct Episode {
  std::vector<std::int32_t> states;
  std::vector<std::int32_t> actions;
  int outcome = 0;
  std::optional<double> ret;
  std::uint64_t substream = 0;
};

struct TrajectorySet {
  std::vector<Episode> episodes;
  std::uint64_t seed = 0;
  std::string policy_id = "pi0";
};

/// Loss report for the offline-to-deployment bound. shift_ratio follows the
/// proof direction sup_s d_cand(s)/d_plus(s); the transposed ratio from the
/// prose definition is kept alongside since the two disagree in general.
struct LossReport {
  double loss_candidate = 0.0;
  double loss_conditioned = 0.0;
  double excess = 0.0;
  double shift_ratio = 0.0;
  double shift_ratio_transposed = 0.0;
  double bound = 0.0;
  double deployment_gap = 0.0;
  bool bound_holds = false;
};

inline int default_max_steps(const Mdp& mdp) { return 10 * mdp.n_states() + 100; }

/**
 * Samples n episodes under the policy. Episode i consumes only substream i
 * of the seed, so the set is reproducible draw-for-draw regardless of
 * execution order. Episodes that survive max_steps raise HorizonGuardTripped
 * (validation is expected to rule this out).
 */
inline TrajectorySet sample_trajectories(const Mdp& mdp, const Policy& policy, std::int64_t n,
                                         std::uint64_t seed, int max_steps = -1,
                                         const std::string& policy_id = "pi0") {
  detail::check_policy_shape(mdp, policy, "policy");
  if (max_steps < 0) max_steps = default_max_steps(mdp);
  TrajectorySet out;
  out.seed = seed;
  out.policy_id = policy_id;
  out.episodes.resize(static_cast<std::size_t>(n));
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
    CounterRng rng(seed, static_cast<std::uint64_t>(i));
    Episode ep;
    ep.substream = static_cast<std::uint64_t>(i);
    std::int32_t s = static_cast<std::int32_t>(rng.next_index(mdp.initial_dist()));
    ep.states.push_back(s);
    int steps = 0;
    while (!mdp.is_terminal(s)) {
      if (++steps > max_steps)
        throw HorizonGuardTripped("episode exceeded " + std::to_string(max_steps) + " steps");
      const auto a = static_cast<std::int32_t>(rng.next_index(policy.row(s)));
      ep.actions.push_back(a);
      s = static_cast<std::int32_t>(rng.next_index(mdp.transition_row(s, a)));
      ep.states.push_back(s);
    }
    ep.outcome = mdp.is_success(s) ? 1 : 0;
    out.episodes[i] = std::move(ep);
  });
  return out;
}

/// Episodes with outcome 1, in order, with the set metadata preserved.
inline TrajectorySet filter_successes(const TrajectorySet& trajs) {
  TrajectorySet out;
  out.seed = trajs.seed;
  out.policy_id = trajs.policy_id;
  for (const auto& ep : trajs.episodes)
    if (ep.outcome == 1) out.episodes.push_back(ep);
  return out;
}

/// Frequency-estimated policy plus the states that had no visits and fell
/// back to the behavior row.
struct EmpiricalPolicy {
  Policy policy;
  std::vector<std::int32_t> fallback_states;
};

/**
 * Next-action frequencies over all (state, action) pairs of the given
 * episodes, with additive smoothing. States never visited copy the behavior
 * row and are flagged.
 */
inline EmpiricalPolicy empirical_policy(const Mdp& mdp, const Policy& behavior,
                                        const TrajectorySet& successes, double smoothing = 0.0) {
  if (successes.episodes.empty()) throw EmptyInput("no episodes to fit");
  if (smoothing < 0.0) throw InvalidParameter("smoothing must be nonnegative");
  std::vector<std::vector<double>> counts(static_cast<std::size_t>(mdp.n_states()));
  for (std::int32_t s : mdp.non_terminal_states())
    counts[static_cast<std::size_t>(s)].assign(static_cast<std::size_t>(mdp.n_actions(s)),
                                               smoothing);
  for (const auto& ep : successes.episodes)
    for (std::size_t t = 0; t < ep.actions.size(); ++t)
      counts[static_cast<std::size_t>(ep.states[t])][static_cast<std::size_t>(ep.actions[t])] += 1.0;

  EmpiricalPolicy out;
  out.policy.rows.resize(static_cast<std::size_t>(mdp.n_states()));
  for (std::int32_t s : mdp.non_terminal_states()) {
    const auto idx = static_cast<std::size_t>(s);
    double total = 0.0;
    for (double c : counts[idx]) total += c;
    if (total == 0.0) {
      out.policy.rows[idx] = behavior.row(s);
      out.fallback_states.push_back(s);
      continue;
    }
    auto& row = out.policy.rows[idx];
    row.resize(counts[idx].size());
    for (std::size_t a = 0; a < row.size(); ++a) row[a] = counts[idx][a] / total;
  }
  return out;
}

/**
 * Exact expected next-action-prediction loss of the candidate on
 * success-conditioned behavior trajectories:
 * sum_s d_plus(s) sum_a pi_plus(a|s) (-log candidate(a|s)).
 * Returns +infinity if the candidate drops support the conditioned policy
 * still uses.
 */
inline double cross_entropy_loss(const Mdp& mdp, const Policy& behavior, const Policy& candidate,
                                 const ValueBundle& values, const OccupancyPair& occ) {
  detail::check_policy_shape(mdp, candidate, "candidate policy");
  const Policy conditioned = success_conditioned_policy(mdp, behavior, values);
  double total = 0.0;
  for (std::int32_t s : mdp.non_terminal_states()) {
    const auto idx = static_cast<std::size_t>(s);
    const auto& target = conditioned.row(s);
    const auto& cand = candidate.row(s);
    for (std::size_t a = 0; a < target.size(); ++a) {
      if (target[a] == 0.0) continue;
      if (cand[a] == 0.0) return kInfinity;
      total += occ.d_plus[idx] * target[a] * (-std::log(cand[a]));
    }
  }
  return total;
}

/**
 * Distribution-shift factor sup_s d_cand(s) / d_plus(s) over states the
 * candidate visits, with d_plus the success-conditioned behavior occupancy.
 * Exactly 1 for deterministic transition kernels started from a fixed state.
 */
inline double shift_ratio(const Mdp& mdp, const Policy& behavior, const ValueBundle& values,
                          const OccupancyPair& occ, const OccupancyPair& occ_candidate) {
  (void)behavior;
  (void)values;
  double sup = 0.0;
  bool any = false;
  for (std::int32_t s : mdp.non_terminal_states()) {
    const auto idx = static_cast<std::size_t>(s);
    const double num = occ_candidate.d[idx];
    const double den = occ.d_plus[idx];
    if (num <= 1e-15 && den <= 1e-15) continue;
    if (den <= 1e-15)
      throw SupportMismatch("candidate visits state " + std::to_string(s) +
                            " that successful behavior trajectories never reach");
    sup = std::max(sup, num / den);
    any = true;
  }
  if (!any) throw SupportMismatch("occupancies share no support");
  return sup;
}

/**
 * Full offline-bound report for a candidate policy: exact losses, both shift
 * ratios, the bound sqrt(shift * excess / 2), and the exact deployment gap
 * |rho(candidate) - rho(pi_plus)|. The excess is cross-checked against its
 * KL form before reporting.
 */
inline LossReport offline_bound_check(const Mdp& mdp, const Policy& behavior,
                                      const Policy& candidate) {
  const ValueBundle values = value_bundle(mdp, behavior);
  const OccupancyPair occ = occupancy_pair(mdp, behavior, values);
  const Policy conditioned = success_conditioned_policy(mdp, behavior, values);

  LossReport report;
  report.loss_candidate = cross_entropy_loss(mdp, behavior, candidate, values, occ);
  report.loss_conditioned = cross_entropy_loss(mdp, behavior, conditioned, values, occ);
  report.excess = report.loss_candidate - report.loss_conditioned;
  if (std::isfinite(report.excess)) {
    double by_kl = 0.0;
    for (std::int32_t s : mdp.non_terminal_states())
      by_kl += occ.d_plus[static_cast<std::size_t>(s)] *
               forward_kl(conditioned.row(s), candidate.row(s));
    check_consistent(std::abs(report.excess - by_kl) <= kIdentityTol,
                     "excess loss disagrees with its KL form");
  }

  const ValueBundle cond_values = value_bundle(mdp, conditioned);
  const OccupancyPair occ_conditioned = occupancy_pair(mdp, conditioned, cond_values);
  report.shift_ratio = shift_ratio(mdp, behavior, values, occ, occ_conditioned);
  double transposed = 0.0;
  for (std::int32_t s : mdp.non_terminal_states()) {
    const auto idx = static_cast<std::size_t>(s);
    if (occ.d_plus[idx] <= 1e-15) continue;
    if (occ_conditioned.d[idx] <= 1e-15) continue;
    transposed = std::max(transposed, occ.d_plus[idx] / occ_conditioned.d[idx]);
  }
  report.shift_ratio_transposed = transposed;

  const ValueBundle cand_values = value_bundle(mdp, candidate);
  report.deployment_gap = std::abs(cand_values.rho - cond_values.rho);
  report.bound = std::isfinite(report.excess)
                     ? std::sqrt(report.shift_ratio * report.excess / 2.0)
                     : kInfinity;
  report.bound_holds = report.deployment_gap <= report.bound + kStrictTol;
  return report;
}

// --- line-delimited trajectory serialization -------------------------------

/// Format: '#' header lines (the format tag, optional caller metadata, the
/// seed line), then one episode per line as
/// "substream outcome return s a s a ... s" with "-" for a missing return.
inline void save_trajectories(std::ostream& os, const TrajectorySet& trajs,
                              const std::vector<std::string>& meta_lines = {}) {
  os << "# sclab-trajectories v1\n";
  for (const auto& line : meta_lines) os << "# " << line << '\n';
  os << "# seed=" << trajs.seed << " policy=" << trajs.policy_id
     << " n=" << trajs.episodes.size() << "\n";
  for (const auto& ep : trajs.episodes) {
    os << ep.substream << ' ' << ep.outcome << ' ';
    if (ep.ret)
      os << fmt17(*ep.ret);
    else
      os << '-';
    for (std::size_t t = 0; t < ep.actions.size(); ++t)
      os << ' ' << ep.states[t] << ' ' << ep.actions[t];
    os << ' ' << ep.states.back() << '\n';
  }
}

inline TrajectorySet load_trajectories(std::istream& is) {
  TrajectorySet out;
  std::string line;
  if (!std::getline(is, line) || line.rfind("# sclab-trajectories", 0) != 0)
    throw InvalidParameter("not a trajectory file");
  while (is.peek() == '#' && std::getline(is, line)) {
    std::istringstream meta(line);
    std::string hash, field;
    meta >> hash;
    while (meta >> field) {
      const auto eq = field.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = field.substr(0, eq), val = field.substr(eq + 1);
      if (key == "seed") out.seed = std::stoull(val);
      if (key == "policy") out.policy_id = val;
    }
  }
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    Episode ep;
    std::string ret_field;
    ls >> ep.substream >> ep.outcome >> ret_field;
    if (ret_field != "-") ep.ret = std::stod(ret_field);
    std::vector<std::int32_t> seq;
    std::int32_t v;
    while (ls >> v) seq.push_back(v);
    if (seq.empty() || seq.size() % 2 == 0)
      throw InvalidParameter("malformed episode line: " + line);
    for (std::size_t i = 0; i + 1 < seq.size(); i += 2) {
      ep.states.push_back(seq[i]);
      ep.actions.push_back(seq[i + 1]);
    }
    ep.states.push_back(seq.back());
    out.episodes.push_back(std::move(ep));
  }
  return out;
}

}  // namespace sclab
