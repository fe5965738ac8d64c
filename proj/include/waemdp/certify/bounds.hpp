#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "waemdp/certify/lipschitz.hpp"
#include "waemdp/certify/pac.hpp"

namespace waemdp::certify {

struct BisimBoundReport {
  double expected_bisimulation = 0.0;  // bound on E_xi d(s, phi(s)) with PAC slack
  double value_return = 0.0;           // |V - V_latent| for discounted return
  double value_reachability = 0.0;     // |V - V_latent| for reachability properties
  double pair_multiplier_return = 0.0;        // times (1/xi(s1) + 1/xi(s2))
  double pair_multiplier_reachability = 0.0;  // times (1/xi(s1) + 1/xi(s2))

  /// Pairwise bound for two ground states with the same embedding.
  [[nodiscard]] double representation_return(double xi1, double xi2) const {
    if (!(xi1 > 0.0 && xi2 > 0.0)) throw DomainError("stationary probabilities must be positive");
    return pair_multiplier_return * (1.0 / xi1 + 1.0 / xi2);
  }
  [[nodiscard]] double representation_reachability(double xi1, double xi2) const {
    if (!(xi1 > 0.0 && xi2 > 0.0)) throw DomainError("stationary probabilities must be positive");
    return pair_multiplier_reachability * (1.0 / xi1 + 1.0 / xi2);
  }

  [[nodiscard]] nlohmann::json to_json() const {
    return {{"expected_bisimulation", expected_bisimulation},
            {"value_return", value_return},
            {"value_reachability", value_reachability},
            {"representation_return", std::to_string(pair_multiplier_return) + " * (1/xi(s1) + 1/xi(s2))"},
            {"representation_reachability", std::to_string(pair_multiplier_reachability) + " * (1/xi(s1) + 1/xi(s2))"}};
  }
};

/// Bounds implied by estimated local losses, each holding with probability
/// at least 1 - delta when the estimate used enough samples.
inline BisimBoundReport bisim_bound(const LocalLossEstimate& est, const LipschitzConstants& c, double gamma, double epsilon) {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw DomainError("gamma must lie in [0, 1)");
  if (!(epsilon >= 0.0)) throw DomainError("epsilon must be nonnegative");
  if (c.k_reward_branch && gamma * c.k_transition >= 1.0)
    throw DomainError("K_V uses K_R/(1 - gamma K_P) but gamma K_P >= 1");
  const double lr = est.loss_reward, lp = est.loss_transition;
  BisimBoundReport b;
  b.expected_bisimulation = (lr + epsilon + gamma * (lp + epsilon)) / (1.0 - gamma);
  b.value_return = (lr + gamma * c.k_value * lp) / (1.0 - gamma) + epsilon;
  b.value_reachability = gamma * lp / (1.0 - gamma) + gamma * epsilon / (1.0 + gamma * c.k_value);
  b.pair_multiplier_return = (lr + gamma * c.k_value * lp) / (1.0 - gamma);
  b.pair_multiplier_reachability = gamma * lp / (1.0 - gamma);
  return b;
}

}  // namespace waemdp::certify
