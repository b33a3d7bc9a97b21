#pragma once

#include <cmath>
#include <span>

#include "sclab/common.hpp"

namespace sclab {

enum class Divergence { Chi2, ForwardKl, ReverseKl };

namespace detail {
inline void check_same_length(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw DimensionMismatch("distributions differ in length");
}
}  // namespace detail

/**
 * chi^2(p || q) = sum_x (p(x)/q(x) - 1)^2 q(x).
 *
 * Returns +infinity when p puts mass outside the support of q; infinities
 * are plain values here, never exceptions, so constraint code can compare
 * against budgets directly.
 */
inline double chi_squared(std::span<const double> p, std::span<const double> q) {
  detail::check_same_length(p, q);
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (q[i] == 0.0) {
      if (p[i] > 0.0) return kInfinity;
      continue;
    }
    const double ratio = p[i] / q[i] - 1.0;
    total += ratio * ratio * q[i];
  }
  return total;
}

/// KL(p || q) with 0 log 0 = 0; +infinity when p is not dominated by q.
inline double forward_kl(std::span<const double> p, std::span<const double> q) {
  detail::check_same_length(p, q);
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (q[i] == 0.0) return kInfinity;
    total += p[i] * std::log(p[i] / q[i]);
  }
  return total;
}

/// KL(q || p); +infinity when q is not dominated by p.
inline double reverse_kl(std::span<const double> p, std::span<const double> q) {
  return forward_kl(q, p);
}

inline double divergence(Divergence kind, std::span<const double> p, std::span<const double> q) {
  switch (kind) {
    case Divergence::Chi2:
      return chi_squared(p, q);
    case Divergence::ForwardKl:
      return forward_kl(p, q);
    case Divergence::ReverseKl:
      return reverse_kl(p, q);
  }
  throw InvalidParameter("unknown divergence kind");
}

}  // namespace sclab
