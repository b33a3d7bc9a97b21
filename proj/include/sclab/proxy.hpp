#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sclab/dp.hpp"
#include "sclab/rng.hpp"
#include "sclab/sampling.hpp"

namespace sclab {

namespace detail {

/// Continued fraction for the regularized incomplete beta, evaluated with
/// the modified Lentz method.
inline double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 500;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double coef = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + coef * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + coef / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    coef = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + coef * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + coef / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) return h;
  }
  throw SolverFailure("incomplete beta continued fraction did not converge");
}

/// Squared coefficient of variation of q under the weights; exactly 0 for a
/// deterministic weight row.
inline double squared_cv(const std::vector<double>& weights, const std::vector<double>& q) {
  int support = 0;
  for (double w : weights)
    if (w > 0.0) ++support;
  if (support <= 1) return 0.0;
  double mean = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) mean += weights[i] * q[i];
  double var = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double dev = q[i] - mean;
    var += weights[i] * dev * dev;
  }
  return var / (mean * mean);
}

}  // namespace detail

/**
 * Upper tail P(Y > theta) of a Beta(alpha, beta) variable via the Lentz
 * continued fraction, switching to the mirrored expansion above
 * (alpha+1)/(alpha+beta+2) so the non-cancelling branch is always used.
 * Absolute error well inside 1e-10.
 */
inline double beta_tail(double theta, double alpha, double beta_param) {
  if (!(alpha > 0.0) || !(beta_param > 0.0) || !std::isfinite(alpha) || !std::isfinite(beta_param))
    throw InvalidParameter("beta parameters must be positive and finite");
  if (!(theta >= 0.0 && theta <= 1.0)) throw InvalidParameter("theta must lie in [0,1]");
  if (theta == 0.0) return 1.0;
  if (theta == 1.0) return 0.0;
  const double log_front = std::lgamma(alpha + beta_param) - std::lgamma(alpha) -
                           std::lgamma(beta_param) + alpha * std::log(theta) +
                           beta_param * std::log1p(-theta);
  const double front = std::exp(log_front);
  if (theta < (alpha + 1.0) / (alpha + beta_param + 2.0))
    return 1.0 - front * detail::beta_continued_fraction(alpha, beta_param, theta) / alpha;
  return front * detail::beta_continued_fraction(beta_param, alpha, 1.0 - theta) / beta_param;
}

/// Beta draw by bisecting the tail function; monotone, so 80 halvings pin
/// the quantile far below double precision.
inline double sample_beta(CounterRng& rng, double alpha, double beta_param) {
  const double u = rng.next_uniform();
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    (beta_tail(mid, alpha, beta_param) > 1.0 - u ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Beta-distributed arm of a dense-return bandit.
struct BetaArm {
  double alpha = 1.0;
  double beta = 1.0;

  double mean() const { return alpha / (alpha + beta); }
};

/// Reward attached to trajectories: either the plain terminal success bit or
/// a dense return in [0,1] (for bandits, one Beta outcome law per arm).
struct RewardModel {
  enum class Kind { BinaryTerminal, DenseReturn };
  Kind kind = Kind::BinaryTerminal;
  std::vector<BetaArm> arms;  // dense bandits only, indexed by arm
};

/// Draws the dense return of every episode of a one-state bandit from its
/// arm's Beta law. Substream-keyed, so labels are stable under reordering.
inline TrajectorySet attach_beta_returns(const TrajectorySet& trajs, const RewardModel& model,
                                         std::uint64_t seed) {
  if (model.kind != RewardModel::Kind::DenseReturn)
    throw InvalidParameter("reward model carries no dense returns");
  TrajectorySet out = trajs;
  for (auto& ep : out.episodes) {
    if (ep.actions.empty()) throw InvalidParameter("episode has no arm pull");
    const auto arm = static_cast<std::size_t>(ep.actions.front());
    if (arm >= model.arms.size()) throw DimensionMismatch("arm index outside the reward model");
    CounterRng rng(seed, ep.substream);
    ep.ret = sample_beta(rng, model.arms[arm].alpha, model.arms[arm].beta);
  }
  return out;
}

/// Faithful one-shot reduction: R ~ Bernoulli(Y), drawn once per episode
/// from the episode's substream and fixed thereafter.
inline TrajectorySet bernoulli_label(const TrajectorySet& trajs, std::uint64_t seed) {
  TrajectorySet out = trajs;
  for (auto& ep : out.episodes) {
    if (!ep.ret) throw MissingReturn("episode lacks a dense return");
    if (!(*ep.ret >= 0.0 && *ep.ret <= 1.0))
      throw InvalidParameter("dense return outside [0,1]");
    CounterRng rng(seed, ep.substream);
    ep.outcome = rng.next_bernoulli(*ep.ret) ? 1 : 0;
  }
  return out;
}

/// Proxy labeling by strict thresholding: R = 1{Y > theta}.
inline TrajectorySet threshold_reward(const TrajectorySet& trajs, double theta) {
  if (!(theta >= 0.0 && theta <= 1.0)) throw InvalidParameter("theta must lie in [0,1]");
  TrajectorySet out = trajs;
  for (auto& ep : out.episodes) {
    if (!ep.ret) throw MissingReturn("episode lacks a dense return");
    ep.outcome = (*ep.ret > theta) ? 1 : 0;
  }
  return out;
}

/// Value objects of a proxy reward, built from a given per-(state, action)
/// proxy Q table: v = behavior mean of q, a = q - v, influence = squared CV.
struct ProxyValues {
  std::vector<double> v;
  std::vector<std::vector<double>> q;
  std::vector<std::vector<double>> a;
  std::vector<double> influence;
};

inline ProxyValues proxy_values(const Mdp& mdp, const Policy& behavior,
                                const std::vector<std::vector<double>>& proxy_q) {
  if (static_cast<std::int32_t>(proxy_q.size()) != mdp.n_states())
    throw DimensionMismatch("proxy Q must have one row per state");
  ProxyValues out;
  out.v.assign(static_cast<std::size_t>(mdp.n_states()), 0.0);
  out.q.resize(static_cast<std::size_t>(mdp.n_states()));
  out.a.resize(static_cast<std::size_t>(mdp.n_states()));
  out.influence.assign(static_cast<std::size_t>(mdp.n_states()), 0.0);
  for (std::int32_t s : mdp.non_terminal_states()) {
    const auto idx = static_cast<std::size_t>(s);
    const auto& pi = behavior.row(s);
    const auto& q = proxy_q[idx];
    if (q.size() != pi.size())
      throw DimensionMismatch("proxy Q row at state " + std::to_string(s) + " has wrong length");
    for (double x : q)
      if (!(x >= 0.0) || !std::isfinite(x))
        throw InvalidParameter("proxy Q entries must be nonnegative and finite");
    double v = 0.0;
    for (std::size_t a = 0; a < pi.size(); ++a) v += pi[a] * q[a];
    out.v[idx] = v;
    out.q[idx] = q;
    out.a[idx].resize(q.size());
    for (std::size_t a = 0; a < q.size(); ++a) out.a[idx][a] = q[a] - v;
    if (v > 0.0) out.influence[idx] = detail::squared_cv(pi, q);
  }
  return out;
}

/// Bayes update against the proxy success event: pi(a|s) q~(s,a) / v~(s).
inline Policy proxy_conditioned_policy(const Mdp& mdp, const Policy& behavior,
                                       const ProxyValues& proxy) {
  Policy out;
  out.rows.resize(static_cast<std::size_t>(mdp.n_states()));
  for (std::int32_t s : mdp.non_terminal_states()) {
    const auto idx = static_cast<std::size_t>(s);
    if (!(proxy.v[idx] > 0.0))
      throw ProxySuccessUnreachable("proxy success has zero probability at state " +
                                    std::to_string(s));
    const auto& pi = behavior.row(s);
    auto& row = out.rows[idx];
    row.resize(pi.size());
    double sum = 0.0;
    for (std::size_t a = 0; a < pi.size(); ++a) {
      row[a] = pi[a] * proxy.q[idx][a] / proxy.v[idx];
      sum += row[a];
    }
    check_consistent(std::abs(sum - 1.0) <= kStrictTol,
                     "proxy-conditioned row at state " + std::to_string(s) + " sums to " +
                         fmt17(sum));
  }
  return out;
}

struct ProxyStateReport {
  std::int32_t state = 0;
  bool skipped = false;
  std::string skip_reason;
  double advantage_ratio = 0.0;
  double influence_ratio = 0.0;
  double alignment = 0.0;
  double residual = 0.0;
};

struct ProxyReport {
  std::vector<ProxyStateReport> states;
  double max_residual = 0.0;
  double tolerance = kIdentityTol;
  bool pass = false;
};

/**
 * Per-state decomposition of proxy conditioning: the advantage ratio
 * A(s, proxy-conditioned) / A(s, conditioned) against the product of the
 * influence amplification sqrt(infl~/infl) and the behavior-weighted
 * correlation of the two advantage functions. States where either influence
 * vanishes are skipped with a reason.
 */
inline ProxyReport proxy_decomposition(const Mdp& mdp, const Policy& behavior,
                                       const ValueBundle& values, const ProxyValues& proxy) {
  const InfluenceProfile influence = action_influence(mdp, behavior, values);
  const Policy conditioned = success_conditioned_policy(mdp, behavior, values);
  const Policy proxy_conditioned = proxy_conditioned_policy(mdp, behavior, proxy);

  ProxyReport report;
  for (std::int32_t s : mdp.non_terminal_states()) {
    const auto idx = static_cast<std::size_t>(s);
    ProxyStateReport entry;
    entry.state = s;
    const double infl = influence.influence[idx];
    const double proxy_infl = proxy.influence[idx];
    if (!(infl > 0.0) || !(proxy_infl > 0.0)) {
      entry.skipped = true;
      entry.skip_reason = !(infl > 0.0) ? "zero action-influence" : "zero proxy influence";
      report.states.push_back(std::move(entry));
      continue;
    }
    const auto& pi = behavior.row(s);
    const auto& adv = values.a[idx];
    const auto& proxy_adv = proxy.a[idx];
    double num = 0.0, den = 0.0, cov = 0.0, var = 0.0, proxy_var = 0.0;
    for (std::size_t a = 0; a < pi.size(); ++a) {
      num += proxy_conditioned.row(s)[a] * adv[a];
      den += conditioned.row(s)[a] * adv[a];
      cov += pi[a] * adv[a] * proxy_adv[a];
      var += pi[a] * adv[a] * adv[a];
      proxy_var += pi[a] * proxy_adv[a] * proxy_adv[a];
    }
    entry.advantage_ratio = num / den;
    entry.influence_ratio = std::sqrt(proxy_infl / infl);
    entry.alignment = cov / std::sqrt(var * proxy_var);
    entry.residual = std::abs(entry.advantage_ratio - entry.influence_ratio * entry.alignment);
    report.max_residual = std::max(report.max_residual, entry.residual);
    report.states.push_back(std::move(entry));
  }
  report.pass = report.max_residual <= report.tolerance;
  return report;
}

/**
 * The seeded 100-arm dense-return bandit: 99 symmetric Beta(a, a) arms with
 * a drawn uniformly from [a_min, a_max], one Beta(18, 2) arm, uniform
 * behavior unless weights are given.
 */
struct BetaBanditConfig {
  std::int32_t n_moderate = 99;
  double a_min = 0.3, a_max = 0.7;
  BetaArm special{18.0, 2.0};
  std::uint64_t seed = 20240101;
  std::vector<double> behavior_weights;  // empty means uniform

  std::vector<BetaArm> materialize_arms() const {
    CounterRng rng(seed);
    std::vector<BetaArm> arms;
    arms.reserve(static_cast<std::size_t>(n_moderate) + 1);
    for (std::int32_t i = 0; i < n_moderate; ++i) {
      const double a = a_min + (a_max - a_min) * rng.next_uniform();
      arms.push_back(BetaArm{a, a});
    }
    arms.push_back(special);
    return arms;
  }

  std::vector<double> weights() const {
    const auto n = static_cast<std::size_t>(n_moderate) + 1;
    if (behavior_weights.empty()) return std::vector<double>(n, 1.0 / static_cast<double>(n));
    if (behavior_weights.size() != n) throw DimensionMismatch("behavior weights have wrong length");
    return behavior_weights;
  }
};

struct SweepRow {
  double theta = 0.0;
  double alignment = 0.0;
  double influence_ratio = 0.0;
  double proxy_improvement = 0.0;
  double faithful_improvement = 0.0;
};

/**
 * Analytic threshold sweep on the Beta bandit. Per theta the proxy Q is the
 * exact arm tail probability, faithful conditioning uses the arm means, and
 * both improvements are measured on expected return. Rows where the proxy
 * never succeeds (or never varies) carry NaN alignment. Parallel over the
 * grid with a deterministic merge.
 */
inline std::vector<SweepRow> threshold_sweep(const BetaBanditConfig& config,
                                             const std::vector<double>& thetas) {
  if (thetas.empty()) throw InvalidGrid("theta grid is empty");
  for (double t : thetas)
    if (!(t >= 0.0 && t <= 1.0)) throw InvalidGrid("theta " + fmt17(t) + " outside [0,1]");

  const std::vector<BetaArm> arms = config.materialize_arms();
  const std::vector<double> w = config.weights();
  const std::size_t n = arms.size();

  std::vector<double> mean(n);
  double value = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mean[i] = arms[i].mean();
    value += w[i] * mean[i];
  }
  double advantage_var = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dev = mean[i] - value;
    advantage_var += w[i] * dev * dev;
  }
  // Faithful conditioning tilts by the arm means; its improvement is the
  // advantage variance over the base value.
  const double faithful_improvement = advantage_var / value;
  const double influence = advantage_var / (value * value);

  std::vector<SweepRow> rows(thetas.size());
  parallel_for(thetas.size(), [&](std::size_t k) {
    const double theta = thetas[k];
    SweepRow row;
    row.theta = theta;
    row.faithful_improvement = faithful_improvement;
    std::vector<double> tail(n);
    double proxy_value = 0.0, tail_min = 1.0, tail_max = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      tail[i] = beta_tail(theta, arms[i].alpha, arms[i].beta);
      proxy_value += w[i] * tail[i];
      tail_min = std::min(tail_min, tail[i]);
      tail_max = std::max(tail_max, tail[i]);
    }
    if (proxy_value <= 0.0) {
      row.alignment = std::nan("");
      row.influence_ratio = std::nan("");
      row.proxy_improvement = std::nan("");
      rows[k] = row;
      return;
    }
    if (tail_min == tail_max) {
      // Constant proxy: conditioning is exactly a no-op.
      row.alignment = std::nan("");
      row.influence_ratio = 0.0;
      row.proxy_improvement = 0.0;
      rows[k] = row;
      return;
    }
    double proxy_var = 0.0, cov = 0.0, improvement = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double proxy_dev = tail[i] - proxy_value;
      proxy_var += w[i] * proxy_dev * proxy_dev;
      cov += w[i] * proxy_dev * (mean[i] - value);
      improvement += w[i] * tail[i] / proxy_value * mean[i];
    }
    improvement -= value;
    row.proxy_improvement = improvement;
    const double proxy_influence = proxy_var / (proxy_value * proxy_value);
    row.influence_ratio = std::sqrt(proxy_influence / influence);
    row.alignment =
        proxy_var > 0.0 ? cov / std::sqrt(proxy_var * advantage_var) : std::nan("");
    rows[k] = row;
  });
  return rows;
}

/// Default grid for the sweep: percent steps to 0.99 plus a fine tail.
inline std::vector<double> default_theta_grid() {
  std::vector<double> grid;
  for (int i = 0; i <= 99; ++i) grid.push_back(static_cast<double>(i) / 100.0);
  grid.push_back(0.995);
  grid.push_back(0.999);
  return grid;
}

}  // namespace sclab
