#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "sclab/mdp.hpp"
#include "sclab/rng.hpp"

namespace sclab {

/**
 * Layered-DAG generator for randomized trials. Every action row leaks at
 * least min_terminal_leak of its mass to the two terminals, with a bounded
 * success share, so episodes terminate structurally and success stays
 * reachable (and values stay well away from zero) from every state.
 */
struct RandomMdpConfig {
  std::int32_t min_layers = 2, max_layers = 6;
  std::int32_t min_width = 1, max_width = 5;
  std::int32_t min_actions = 2, max_actions = 4;
  double deterministic_state_prob = 0.1;
  double min_terminal_leak = 0.05;
  double min_success_share = 0.3, max_success_share = 0.9;

  static RandomMdpConfig small() {
    RandomMdpConfig c;
    c.max_layers = 3;
    c.max_width = 2;
    c.max_actions = 3;
    return c;
  }
  static RandomMdpConfig enumerable() {
    RandomMdpConfig c;
    c.max_layers = 4;
    c.max_width = 2;
    c.max_actions = 3;
    return c;
  }
};

inline std::pair<Mdp, Policy> make_random_dag(std::uint64_t seed,
                                              const RandomMdpConfig& cfg = RandomMdpConfig{}) {
  CounterRng rng(seed);
  const auto layers = static_cast<std::int32_t>(rng.next_int(cfg.min_layers, cfg.max_layers));
  std::vector<std::int32_t> width(static_cast<std::size_t>(layers));
  std::int32_t n_nonterminal = 0;
  for (auto& w : width) {
    w = static_cast<std::int32_t>(rng.next_int(cfg.min_width, cfg.max_width));
    n_nonterminal += w;
  }
  const std::int32_t n = n_nonterminal + 2;
  const std::int32_t success = n_nonterminal;
  const std::int32_t failure = n_nonterminal + 1;

  std::vector<std::int32_t> layer_start(static_cast<std::size_t>(layers) + 1, 0);
  for (std::int32_t l = 0; l < layers; ++l)
    layer_start[static_cast<std::size_t>(l) + 1] =
        layer_start[static_cast<std::size_t>(l)] + width[static_cast<std::size_t>(l)];

  std::vector<std::vector<std::vector<double>>> trans(static_cast<std::size_t>(n));
  for (std::int32_t l = 0; l < layers; ++l) {
    const bool last = (l + 1 == layers);
    const std::int32_t next_width = last ? 0 : width[static_cast<std::size_t>(l) + 1];
    for (std::int32_t s = layer_start[static_cast<std::size_t>(l)];
         s < layer_start[static_cast<std::size_t>(l) + 1]; ++s) {
      const auto n_actions = static_cast<std::int32_t>(rng.next_int(cfg.min_actions, cfg.max_actions));
      for (std::int32_t a = 0; a < n_actions; ++a) {
        std::vector<double> row(static_cast<std::size_t>(n), 0.0);
        double leak = last ? 1.0 : cfg.min_terminal_leak +
                                       (1.0 - cfg.min_terminal_leak) * rng.next_uniform();
        const double share =
            cfg.min_success_share + (cfg.max_success_share - cfg.min_success_share) * rng.next_uniform();
        row[static_cast<std::size_t>(success)] = leak * share;
        row[static_cast<std::size_t>(failure)] = leak * (1.0 - share);
        if (!last) {
          std::vector<double> w(static_cast<std::size_t>(next_width));
          double total = 0.0;
          for (auto& x : w) {
            x = rng.next_exponential();
            total += x;
          }
          const std::int32_t base = layer_start[static_cast<std::size_t>(l) + 1];
          for (std::int32_t j = 0; j < next_width; ++j)
            row[static_cast<std::size_t>(base + j)] =
                (1.0 - leak) * w[static_cast<std::size_t>(j)] / total;
        }
        trans[static_cast<std::size_t>(s)].push_back(std::move(row));
      }
    }
  }

  std::vector<double> initial(static_cast<std::size_t>(n), 0.0);
  {
    std::vector<double> w(static_cast<std::size_t>(width[0]));
    double total = 0.0;
    for (auto& x : w) {
      x = rng.next_exponential();
      total += x;
    }
    for (std::int32_t j = 0; j < width[0]; ++j)
      initial[static_cast<std::size_t>(j)] = w[static_cast<std::size_t>(j)] / total;
  }

  Policy behavior;
  behavior.rows.resize(static_cast<std::size_t>(n));
  for (std::int32_t s = 0; s < n_nonterminal; ++s) {
    const auto k = trans[static_cast<std::size_t>(s)].size();
    auto& row = behavior.rows[static_cast<std::size_t>(s)];
    row.assign(k, 0.0);
    if (rng.next_uniform() < cfg.deterministic_state_prob) {
      row[static_cast<std::size_t>(rng.next_int(0, static_cast<std::int64_t>(k) - 1))] = 1.0;
    } else {
      double total = 0.0;
      for (auto& x : row) {
        x = rng.next_exponential();
        total += x;
      }
      for (auto& x : row) x /= total;
    }
  }

  return {Mdp(n, std::move(trans), std::move(initial), {success}, {failure}),
          std::move(behavior)};
}

/**
 * Deterministic-transition tree (token-append style): one fixed root, each
 * internal action appends to a distinct child, each leaf action lands on a
 * terminal with at least one success edge per leaf. The behavior policy has
 * full support, so every value is positive.
 */
inline std::pair<Mdp, Policy> make_random_deterministic_tree(std::uint64_t seed) {
  CounterRng rng(seed);
  const auto depth = static_cast<std::int32_t>(rng.next_int(1, 3));      // internal layers
  const auto branch = static_cast<std::int32_t>(rng.next_int(2, 3));     // actions per state

  std::vector<std::int32_t> layer_count(static_cast<std::size_t>(depth) + 1);
  layer_count[0] = 1;
  std::int32_t n_nonterminal = 1;
  for (std::int32_t l = 1; l <= depth; ++l) {
    layer_count[static_cast<std::size_t>(l)] = layer_count[static_cast<std::size_t>(l) - 1] * branch;
    if (l < depth) n_nonterminal += layer_count[static_cast<std::size_t>(l)];
  }
  // Leaves are the states in layer depth-1 when depth >= 1; recount plainly.
  n_nonterminal = 0;
  for (std::int32_t l = 0; l < depth; ++l) n_nonterminal += layer_count[static_cast<std::size_t>(l)];

  const std::int32_t n = n_nonterminal + 2;
  const std::int32_t success = n_nonterminal;
  const std::int32_t failure = n_nonterminal + 1;

  std::vector<std::int32_t> layer_start(static_cast<std::size_t>(depth) + 1, 0);
  for (std::int32_t l = 0; l < depth; ++l)
    layer_start[static_cast<std::size_t>(l) + 1] =
        layer_start[static_cast<std::size_t>(l)] + layer_count[static_cast<std::size_t>(l)];

  std::vector<std::vector<std::vector<double>>> trans(static_cast<std::size_t>(n));
  for (std::int32_t l = 0; l < depth; ++l) {
    const bool leaf = (l + 1 == depth);
    for (std::int32_t i = 0; i < layer_count[static_cast<std::size_t>(l)]; ++i) {
      const std::int32_t s = layer_start[static_cast<std::size_t>(l)] + i;
      std::vector<bool> to_success(static_cast<std::size_t>(branch));
      if (leaf) {
        bool any = false;
        for (auto&& b : to_success) {
          b = rng.next_bernoulli(0.5);
          any = any || b;
        }
        if (!any)
          to_success[static_cast<std::size_t>(rng.next_int(0, branch - 1))] = true;
      }
      for (std::int32_t a = 0; a < branch; ++a) {
        std::vector<double> row(static_cast<std::size_t>(n), 0.0);
        if (leaf) {
          row[static_cast<std::size_t>(to_success[static_cast<std::size_t>(a)] ? success : failure)] = 1.0;
        } else {
          const std::int32_t child = layer_start[static_cast<std::size_t>(l) + 1] + i * branch + a;
          row[static_cast<std::size_t>(child)] = 1.0;
        }
        trans[static_cast<std::size_t>(s)].push_back(std::move(row));
      }
    }
  }

  std::vector<double> initial(static_cast<std::size_t>(n), 0.0);
  initial[0] = 1.0;

  Policy behavior;
  behavior.rows.resize(static_cast<std::size_t>(n));
  for (std::int32_t s = 0; s < n_nonterminal; ++s) {
    auto& row = behavior.rows[static_cast<std::size_t>(s)];
    row.assign(static_cast<std::size_t>(branch), 0.0);
    double total = 0.0;
    for (auto& x : row) {
      x = rng.next_exponential();
      total += x;
    }
    for (auto& x : row) x /= total;
  }

  return {Mdp(n, std::move(trans), std::move(initial), {success}, {failure}),
          std::move(behavior)};
}

}  // namespace sclab
