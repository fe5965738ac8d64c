#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "waemdp/env/tabular_mdp.hpp"

namespace waemdp::certify {

struct LipschitzConstants {
  double k_reward = 0.0;      // K_R
  double k_transition = 0.0;  // K_P
  double r_max = 0.0;
  double k_value = 0.0;       // K_V
  bool k_reward_branch = false;
  // Same with 2 R_max / (1 - gamma): the span of latent values, which is what a
  // discrete-metric (TV) transition gap multiplies.
  double k_value_sound = 0.0;

  [[nodiscard]] nlohmann::json to_json() const {
    return {{"K_R", k_reward}, {"K_P", k_transition}, {"R_max", r_max}, {"K_V", k_value}, {"K_V_sound", k_value_sound},
            {"K_V_branch", k_reward_branch ? "K_R/(1-gamma K_P)" : "R_max/(1-gamma)"}};
  }
};

/// Lipschitz constants of the latent MDP under a policy, w.r.t. the discrete
/// metric: K_R = max |R(z1) - R(z2)|, K_P = max TV(P(.|z1), P(.|z2)), and
/// K_V = min(R_max / (1 - gamma), K_R / (1 - gamma K_P)).
inline LipschitzConstants lipschitz_constants(const env::TabularMdp& latent, const std::vector<std::vector<double>>& policy,
                                              double gamma) {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw DomainError("gamma must lie in [0, 1)");
  latent.check_policy(policy);
  const Eigen::MatrixXd T = latent.induced_chain(policy);
  const Eigen::VectorXd r = latent.induced_reward(policy);
  LipschitzConstants c;
  c.r_max = r.cwiseAbs().maxCoeff();
  c.k_reward = r.maxCoeff() - r.minCoeff();
  const Eigen::Index n = T.rows();
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      c.k_transition = std::max(c.k_transition, 0.5 * (T.row(i) - T.row(j)).cwiseAbs().sum());
  c.k_transition = std::min(c.k_transition, 1.0);
  c.k_value = c.r_max / (1.0 - gamma);
  c.k_value_sound = 2.0 * c.r_max / (1.0 - gamma);
  if (gamma * c.k_transition < 1.0) {
    const double alt = c.k_reward / (1.0 - gamma * c.k_transition);
    if (alt < c.k_value) {
      c.k_value = alt;
      c.k_reward_branch = true;
    }
    c.k_value_sound = std::min(c.k_value_sound, alt);
  }
  return c;
}

}  // namespace waemdp::certify
