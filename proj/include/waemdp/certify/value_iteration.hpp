#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "waemdp/certify/property.hpp"
#include "waemdp/env/tabular_mdp.hpp"

namespace waemdp::certify {

using PolicyRows = std::vector<std::vector<double>>;

struct ViOptions {
  double tol = 1e-10;
  long max_iterations = 1000000;
  /// Observes every iterate, starting with V_0.
  std::function<void(long, const Eigen::VectorXd&)> on_iterate;
};

struct ViResult {
  Eigen::VectorXd values;
  long iterations = 0;
  double last_delta = 0.0;
};

namespace detail {

inline std::vector<char> satisfying(const env::TabularMdp& m, const FormulaPtr& f) {
  std::vector<char> out(static_cast<std::size_t>(m.n_states), 0);
  for (int s = 0; s < m.n_states; ++s) out[static_cast<std::size_t>(s)] = f->eval(m.labels[static_cast<std::size_t>(s)]);
  return out;
}

}  // namespace detail

/// Value of `prop` in `mdp` under a memoryless policy, or the maximal value when
/// `policy` is empty.
///
/// Return: V = R + gamma P V. Reachability C U T: V = 1 on T, 0 outside C and T,
/// gamma E V(s') otherwise, iterated upward from V_0 = 1_T. F (A & X B) is the
/// same fixed point with the hit happening on the step out of an A-state into a
/// B-state.
inline ViResult value_iteration_full(const env::TabularMdp& mdp, const std::optional<PolicyRows>& policy, Property prop,
                                     double gamma, const ViOptions& opt = {}) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw DomainError("discount must lie in [0, 1]");
  if (prop.kind == Property::Kind::Return && gamma >= 1.0) throw DomainError("discounted return needs gamma < 1");
  if (!(opt.tol > 0.0)) throw DomainError("tolerance must be positive");
  if (policy) mdp.check_policy(*policy);
  prop.resolve(mdp.ap);
  const int n = mdp.n_states;
  const int k = mdp.n_actions;

  std::vector<char> in_c, in_t, in_b;
  if (prop.kind == Property::Kind::ConstrainedReach || prop.kind == Property::Kind::EventuallyReach) {
    in_c = detail::satisfying(mdp, prop.constraint);
    in_t = detail::satisfying(mdp, prop.target);
  } else if (prop.kind == Property::Kind::NextReach) {
    in_t = detail::satisfying(mdp, prop.target);
    in_b = detail::satisfying(mdp, prop.next);
  }

  // Q-backup of state s and action a against V.
  auto backup = [&](int s, int a, const Eigen::VectorXd& v) {
    const auto& row = mdp.P[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)];
    double e = 0.0;
    switch (prop.kind) {
      case Property::Kind::Return:
        for (int t = 0; t < n; ++t) e += row[static_cast<std::size_t>(t)] * v(t);
        return mdp.R[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)] + gamma * e;
      case Property::Kind::ConstrainedReach:
      case Property::Kind::EventuallyReach:
        if (in_t[static_cast<std::size_t>(s)]) return 1.0;
        if (!in_c[static_cast<std::size_t>(s)]) return 0.0;
        for (int t = 0; t < n; ++t) e += row[static_cast<std::size_t>(t)] * v(t);
        return gamma * e;
      case Property::Kind::NextReach: {
        const bool armed = in_t[static_cast<std::size_t>(s)] != 0;
        for (int t = 0; t < n; ++t) e += row[static_cast<std::size_t>(t)] * ((armed && in_b[static_cast<std::size_t>(t)]) ? 1.0 : v(t));
        return gamma * e;
      }
    }
    return 0.0;
  };

  Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
  if (prop.kind == Property::Kind::ConstrainedReach || prop.kind == Property::Kind::EventuallyReach)
    for (int s = 0; s < n; ++s) v(s) = in_t[static_cast<std::size_t>(s)] ? 1.0 : 0.0;
  if (opt.on_iterate) opt.on_iterate(0, v);

  // Stop once the contraction guarantees sup-norm error <= tol.
  const double stop = gamma < 1.0 && gamma > 0.0 ? opt.tol * (1.0 - gamma) / gamma : opt.tol;
  Eigen::VectorXd next(n);
  for (long it = 1; it <= opt.max_iterations; ++it) {
    for (int s = 0; s < n; ++s) {
      if (policy) {
        double acc = 0.0;
        for (int a = 0; a < k; ++a) {
          const double w = (*policy)[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)];
          if (w != 0.0) acc += w * backup(s, a, v);
        }
        next(s) = acc;
      } else {
        double best = -std::numeric_limits<double>::infinity();
        for (int a = 0; a < k; ++a) best = std::max(best, backup(s, a, v));
        next(s) = best;
      }
    }
    const double delta = (next - v).cwiseAbs().maxCoeff();
    v.swap(next);
    if (opt.on_iterate) opt.on_iterate(it, v);
    if (delta <= stop) return {v, it, delta};
  }
  throw NotConverged("value iteration did not converge within " + std::to_string(opt.max_iterations) + " iterations");
}

inline Eigen::VectorXd value_iteration(const env::TabularMdp& mdp, const std::optional<PolicyRows>& policy,
                                       const Property& prop, double gamma, const ViOptions& opt = {}) {
  return value_iteration_full(mdp, policy, prop, gamma, opt).values;
}

}  // namespace waemdp::certify
