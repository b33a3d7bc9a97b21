#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sclab/common.hpp"

namespace sclab {

/// Per-state action distribution over that state's action list. Rows are
/// empty at terminal states.
struct Policy {
  std::vector<std::vector<double>> rows;

  const std::vector<double>& row(std::int32_t s) const { return rows[static_cast<std::size_t>(s)]; }
};

/**
 * Tabular episodic MDP with a binary terminal outcome.
 *
 * States are dense integers 0..n_states-1. Terminal states are partitioned
 * into success and failure sets and carry no actions. Each non-terminal
 * state has its own ordered action list; transition rows are dense
 * probability vectors over all states. The initial distribution is
 * supported on non-terminal states. Immutable after construction.
 */
class Mdp {
 public:
  Mdp(std::int32_t n_states,
      std::vector<std::vector<std::vector<double>>> transitions,
      std::vector<double> initial_dist,
      std::vector<std::int32_t> terminal_success,
      std::vector<std::int32_t> terminal_failure)
      : n_states_(n_states),
        trans_(std::move(transitions)),
        initial_(std::move(initial_dist)),
        success_(std::move(terminal_success)),
        failure_(std::move(terminal_failure)) {
    if (n_states_ <= 0) throw InvalidParameter("n_states must be positive");
    if (static_cast<std::int32_t>(trans_.size()) != n_states_)
      throw DimensionMismatch("transitions must have one entry per state");
    if (static_cast<std::int32_t>(initial_.size()) != n_states_)
      throw DimensionMismatch("initial_dist must have one entry per state");
    std::sort(success_.begin(), success_.end());
    std::sort(failure_.begin(), failure_.end());
    kind_.assign(static_cast<std::size_t>(n_states_), Kind::NonTerminal);
    for (auto s : success_) {
      if (s < 0 || s >= n_states_) throw InvalidParameter("terminal_success index out of range");
      kind_[static_cast<std::size_t>(s)] = Kind::Success;
    }
    for (auto s : failure_) {
      if (s < 0 || s >= n_states_) throw InvalidParameter("terminal_failure index out of range");
      if (kind_[static_cast<std::size_t>(s)] == Kind::Success)
        throw InvalidParameter("state " + std::to_string(s) + " is in both terminal sets");
      kind_[static_cast<std::size_t>(s)] = Kind::Failure;
    }
    pos_.assign(static_cast<std::size_t>(n_states_), -1);
    for (std::int32_t s = 0; s < n_states_; ++s) {
      const auto& acts = trans_[static_cast<std::size_t>(s)];
      if (is_terminal(s)) {
        if (!acts.empty())
          throw InvalidParameter("terminal state " + std::to_string(s) + " must have no actions");
        continue;
      }
      if (acts.empty())
        throw DimensionMismatch("non-terminal state " + std::to_string(s) + " has no actions");
      for (const auto& row : acts) {
        if (static_cast<std::int32_t>(row.size()) != n_states_)
          throw DimensionMismatch("transition row of state " + std::to_string(s) +
                                  " has wrong length");
      }
      pos_[static_cast<std::size_t>(s)] = static_cast<std::int32_t>(non_terminal_.size());
      non_terminal_.push_back(s);
    }
    if (non_terminal_.empty()) throw InvalidParameter("MDP has no non-terminal state");
  }

  std::int32_t n_states() const { return n_states_; }
  std::int32_t n_actions(std::int32_t s) const {
    return static_cast<std::int32_t>(trans_[static_cast<std::size_t>(s)].size());
  }
  bool is_terminal(std::int32_t s) const { return kind_[static_cast<std::size_t>(s)] != Kind::NonTerminal; }
  bool is_success(std::int32_t s) const { return kind_[static_cast<std::size_t>(s)] == Kind::Success; }
  bool is_failure(std::int32_t s) const { return kind_[static_cast<std::size_t>(s)] == Kind::Failure; }

  const std::vector<double>& transition_row(std::int32_t s, std::int32_t a) const {
    return trans_[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)];
  }
  const std::vector<std::vector<std::vector<double>>>& transitions() const { return trans_; }
  const std::vector<double>& initial_dist() const { return initial_; }
  const std::vector<std::int32_t>& terminal_success() const { return success_; }
  const std::vector<std::int32_t>& terminal_failure() const { return failure_; }

  /// Non-terminal state ids in ascending order.
  const std::vector<std::int32_t>& non_terminal_states() const { return non_terminal_; }
  /// Position of a non-terminal state in non_terminal_states(), -1 for terminals.
  std::int32_t non_terminal_pos(std::int32_t s) const { return pos_[static_cast<std::size_t>(s)]; }

 private:
  enum class Kind : std::uint8_t { NonTerminal, Success, Failure };

  std::int32_t n_states_;
  std::vector<std::vector<std::vector<double>>> trans_;
  std::vector<double> initial_;
  std::vector<std::int32_t> success_;
  std::vector<std::int32_t> failure_;
  std::vector<Kind> kind_;
  std::vector<std::int32_t> non_terminal_;
  std::vector<std::int32_t> pos_;
};

struct ValidationReport {
  bool rows_stochastic = false;
  bool terminates = false;
  /// Power-iteration steps until the surviving mass fell below 1e-12.
  std::int32_t decay_iterations = -1;
  bool success_reachable = false;
  /// Non-terminal states with zero success probability under the behavior policy.
  std::vector<std::int32_t> unreachable_states;

  bool ok() const { return rows_stochastic && terminates && success_reachable; }
};

namespace detail {

inline void check_prob_row(const std::vector<double>& row, const std::string& what) {
  double sum = 0.0;
  for (double x : row) {
    if (!(x >= 0.0) || !std::isfinite(x))
      throw NonStochasticRow(what + " has a negative or non-finite entry");
    sum += x;
  }
  if (std::abs(sum - 1.0) > kRowSumTol)
    throw NonStochasticRow(what + " sums to " + fmt17(sum));
}

inline void check_policy_shape(const Mdp& mdp, const Policy& policy, const std::string& name) {
  if (static_cast<std::int32_t>(policy.rows.size()) != mdp.n_states())
    throw DimensionMismatch(name + " must have one row per state");
  for (std::int32_t s = 0; s < mdp.n_states(); ++s) {
    const auto& row = policy.rows[static_cast<std::size_t>(s)];
    if (mdp.is_terminal(s)) {
      if (!row.empty()) throw DimensionMismatch(name + " has a row at terminal state " + std::to_string(s));
    } else if (static_cast<std::int32_t>(row.size()) != mdp.n_actions(s)) {
      throw DimensionMismatch(name + " row at state " + std::to_string(s) + " has wrong length");
    }
  }
}

}  // namespace detail

/**
 * One-step bandit: a single non-terminal state whose action a moves to the
 * success terminal with probability success_probs[a], else to the failure
 * terminal. The behavior policy pulls arm a with behavior_weights[a].
 */
inline std::pair<Mdp, Policy> make_bandit(const std::vector<double>& success_probs,
                                          const std::vector<double>& behavior_weights) {
  if (success_probs.size() != behavior_weights.size())
    throw DimensionMismatch("success_probs and behavior_weights differ in length");
  if (success_probs.empty()) throw DimensionMismatch("bandit needs at least one arm");
  const std::int32_t n = 3;  // state 0 plays, 1 = success, 2 = failure
  std::vector<std::vector<std::vector<double>>> trans(3);
  for (double p : success_probs) trans[0].push_back({0.0, p, 1.0 - p});
  Mdp mdp(n, std::move(trans), {1.0, 0.0, 0.0}, {1}, {2});
  Policy behavior{{behavior_weights, {}, {}}};
  return {std::move(mdp), std::move(behavior)};
}

}  // namespace sclab
