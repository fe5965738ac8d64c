#pragma once

// Exact local losses and value gaps for a tabular ground MDP abstracted by a
// tabular latent MDP through a state map phi.

#include <functional>
#include <vector>

#include "waemdp/certify/pac.hpp"
#include "waemdp/certify/value_iteration.hpp"
#include "waemdp/env/tabular_mdp.hpp"

namespace waemdp::certify {

struct TabularPair {
  env::TabularMdp ground;
  env::TabularMdp latent;
  std::vector<int> phi;  // ground state -> latent state
  PolicyRows latent_policy;

  void validate() const {
    ground.validate(1e-9);
    latent.validate(1e-9);
    if (ground.n_actions != latent.n_actions) throw DimensionMismatch("ground and latent action counts differ");
    if (static_cast<int>(phi.size()) != ground.n_states) throw DimensionMismatch("phi needs one entry per ground state");
    for (int z : phi)
      if (z < 0 || z >= latent.n_states) throw DimensionMismatch("phi maps outside the latent state space");
    latent.check_policy(latent_policy);
  }

  /// Ground policy executing the latent policy through phi.
  [[nodiscard]] PolicyRows ground_policy() const {
    PolicyRows out;
    for (int z : phi) out.push_back(latent_policy[static_cast<std::size_t>(z)]);
    return out;
  }
};

struct ExactLosses {
  double loss_reward = 0.0;
  double loss_transition = 0.0;
  Eigen::VectorXd stationary;
};

/// True local losses under the stationary distribution of the ground chain
/// induced by the latent policy.
inline ExactLosses exact_local_losses(const TabularPair& p) {
  p.validate();
  const PolicyRows pi = p.ground_policy();
  ExactLosses out;
  out.stationary = env::stationary_distribution(p.ground.induced_chain(pi));
  for (int s = 0; s < p.ground.n_states; ++s) {
    const int z = p.phi[static_cast<std::size_t>(s)];
    for (int a = 0; a < p.ground.n_actions; ++a) {
      const double w = out.stationary(s) * pi[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)];
      if (w == 0.0) continue;
      out.loss_reward += w * std::abs(p.ground.R[s][a] - p.latent.R[z][a]);
      double hit = 0.0;
      for (int t = 0; t < p.ground.n_states; ++t)
        hit += p.ground.P[s][a][t] * p.latent.P[z][a][p.phi[static_cast<std::size_t>(t)]];
      out.loss_transition += w * (1.0 - hit);
    }
  }
  return out;
}

/// E_{s ~ xi} |V(s) - V_latent(phi(s))| with both values computed exactly.
inline double expected_value_gap(const TabularPair& p, const Property& prop, double gamma, const Eigen::VectorXd& xi) {
  const Eigen::VectorXd v = value_iteration(p.ground, p.ground_policy(), prop, gamma);
  const Eigen::VectorXd vbar = value_iteration(p.latent, p.latent_policy, prop, gamma);
  double gap = 0.0;
  for (int s = 0; s < p.ground.n_states; ++s) gap += xi(s) * std::abs(v(s) - vbar(p.phi[static_cast<std::size_t>(s)]));
  return gap;
}

/// LatentAbstraction over one-hot encoded tabular ground states.
class TabularAbstraction final : public LatentAbstraction {
 public:
  explicit TabularAbstraction(const TabularPair& p) : p_(p) {}

  [[nodiscard]] std::uint64_t embed_state(const env::State& s) const override {
    // Reset-augmented states carry a trailing flag coordinate.
    Eigen::Index i = 0;
    s.head(p_.ground.n_states).maxCoeff(&i);
    return static_cast<std::uint64_t>(p_.phi.at(static_cast<std::size_t>(i)));
  }
  [[nodiscard]] int embed_action(std::uint64_t, const env::Action& a) const override { return std::get<int>(a); }
  [[nodiscard]] double latent_reward(std::uint64_t z, int a) const override { return p_.latent.R.at(z).at(static_cast<std::size_t>(a)); }
  [[nodiscard]] double latent_probability(std::uint64_t zn, std::uint64_t z, int a) const override {
    return p_.latent.P.at(z).at(static_cast<std::size_t>(a)).at(zn);
  }

 private:
  const TabularPair& p_;
};

}  // namespace waemdp::certify
