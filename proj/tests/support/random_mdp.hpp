#pragma once

// Random tabular fixtures shared by the unit tests and the acceptance binary.

#include <random>
#include <vector>

#include "waemdp/certify/tabular.hpp"
#include "waemdp/env/policy.hpp"

namespace fixtures {

using waemdp::env::TabularMdp;

inline std::vector<double> random_row(int n, std::mt19937_64& rng, double sparsity = 0.0) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> row(static_cast<std::size_t>(n));
  double total = 0.0;
  for (auto& p : row) {
    p = u(rng) < sparsity ? 0.0 : u(rng) + 1e-3;
    total += p;
  }
  if (total == 0.0) {
    row[static_cast<std::size_t>(std::uniform_int_distribution<int>(0, n - 1)(rng))] = 1.0;
    return row;
  }
  for (auto& p : row) p /= total;
  return row;
}

inline TabularMdp random_mdp(int n, int k, std::mt19937_64& rng, double sparsity = 0.0) {
  std::uniform_real_distribution<double> reward(-0.5, 0.5);
  std::bernoulli_distribution coin(0.3);
  TabularMdp m;
  m.n_states = n;
  m.n_actions = k;
  m.ap = {"goal", "unsafe"};
  for (int s = 0; s < n; ++s) {
    m.P.emplace_back();
    m.R.emplace_back();
    for (int a = 0; a < k; ++a) {
      m.P.back().push_back(random_row(n, rng, sparsity));
      m.R.back().push_back(reward(rng));
    }
    m.labels.push_back({coin(rng) ? 1 : 0, coin(rng) ? 1 : 0});
  }
  return m;
}

/// Ground MDP with positive kernels, a surjective phi, and a latent MDP that is
/// the phi-pushforward of random representatives mixed with noise of weight `noise`.
inline waemdp::certify::TabularPair random_pair(int n_ground, int n_latent, int k, std::mt19937_64& rng, double noise) {
  waemdp::certify::TabularPair p;
  p.ground = random_mdp(n_ground, k, rng);
  std::uniform_int_distribution<int> pick(0, n_latent - 1);
  for (int s = 0; s < n_ground; ++s) p.phi.push_back(s < n_latent ? s : pick(rng));
  std::shuffle(p.phi.begin(), p.phi.end(), rng);
  // phi preserves labels: every ground state takes the labels of its latent state.
  std::vector<waemdp::env::Labels> latent_labels(static_cast<std::size_t>(n_latent));
  for (int s = n_ground - 1; s >= 0; --s) latent_labels[static_cast<std::size_t>(p.phi[static_cast<std::size_t>(s)])] = p.ground.labels[static_cast<std::size_t>(s)];
  for (int s = 0; s < n_ground; ++s) p.ground.labels[static_cast<std::size_t>(s)] = latent_labels[static_cast<std::size_t>(p.phi[static_cast<std::size_t>(s)])];
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  TabularMdp& l = p.latent;
  l.n_states = n_latent;
  l.n_actions = k;
  l.ap = p.ground.ap;
  for (int z = 0; z < n_latent; ++z) {
    int rep = 0;
    while (p.phi[static_cast<std::size_t>(rep)] != z) ++rep;
    l.P.emplace_back();
    l.R.emplace_back();
    const auto mix = random_row(n_latent, rng);
    for (int a = 0; a < k; ++a) {
      std::vector<double> row(static_cast<std::size_t>(n_latent), 0.0);
      for (int t = 0; t < n_ground; ++t)
        row[static_cast<std::size_t>(p.phi[static_cast<std::size_t>(t)])] += (1.0 - noise) * p.ground.P[rep][a][t];
      for (int t = 0; t < n_latent; ++t) row[static_cast<std::size_t>(t)] += noise * mix[static_cast<std::size_t>(t)];
      l.P.back().push_back(row);
      l.R.back().push_back(std::clamp(p.ground.R[rep][a] + noise * 0.5 * u(rng), -0.5, 0.5));
    }
    l.labels.push_back(p.ground.labels[static_cast<std::size_t>(rep)]);
  }
  for (int z = 0; z < n_latent; ++z) p.latent_policy.push_back(random_row(k, rng));
  return p;
}

/// Ground-state policy acting through phi on one-hot states (reset-augmented or not).
inline waemdp::env::PolicyPtr latent_policy_on_ground(const waemdp::certify::TabularPair& p) {
  const auto pi = p.ground_policy();
  const int n = p.ground.n_states;
  return std::make_shared<waemdp::env::DiscretePolicy>(waemdp::env::PolicyKind::Latent, [pi, n](const waemdp::env::State& s) {
    Eigen::Index i = 0;
    s.head(n).maxCoeff(&i);
    return pi[static_cast<std::size_t>(i)];
  });
}

}  // namespace fixtures
