#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "waemdp/env/ground_mdp.hpp"

namespace waemdp::env {

enum class PolicyKind { Scripted, Tabular, Latent };

inline std::string to_string(PolicyKind k) {
  switch (k) {
    case PolicyKind::Scripted: return "scripted";
    case PolicyKind::Tabular: return "tabular";
    case PolicyKind::Latent: return "latent";
  }
  return "scripted";
}

inline PolicyKind policy_kind_from_string(const std::string& s) {
  if (s == "scripted") return PolicyKind::Scripted;
  if (s == "tabular") return PolicyKind::Tabular;
  if (s == "latent") return PolicyKind::Latent;
  throw ConfigError("unknown policy kind '" + s + "'");
}

/// Memoryless policy pi: S -> Delta(A).
class Policy {
 public:
  virtual ~Policy() = default;
  [[nodiscard]] virtual PolicyKind kind() const = 0;
  virtual Action sample(const State& s, Rng& rng) const = 0;
  /// Action distribution for discrete action spaces; empty for continuous ones.
  [[nodiscard]] virtual std::vector<double> probabilities(const State&) const { return {}; }
};

using PolicyPtr = std::shared_ptr<const Policy>;

/// Discrete policy given by a function returning action probabilities.
class DiscretePolicy final : public Policy {
 public:
  using Fn = std::function<std::vector<double>(const State&)>;
  DiscretePolicy(PolicyKind kind, Fn fn) : kind_(kind), fn_(std::move(fn)) {}

  [[nodiscard]] PolicyKind kind() const override { return kind_; }
  [[nodiscard]] std::vector<double> probabilities(const State& s) const override {
    std::vector<double> p = fn_(s);
    double total = 0.0;
    for (double v : p) {
      if (!(v >= 0.0)) throw DomainError("policy returned a negative probability");
      total += v;
    }
    if (std::abs(total - 1.0) > 1e-9) throw DomainError("policy probabilities sum to " + std::to_string(total));
    return p;
  }
  Action sample(const State& s, Rng& rng) const override {
    const auto p = probabilities(s);
    return static_cast<int>(categorical(rng, p));
  }

 private:
  PolicyKind kind_;
  Fn fn_;
};

/// Policy given by a sampling function (continuous actions).
class SamplingPolicy final : public Policy {
 public:
  using Fn = std::function<Action(const State&, Rng&)>;
  SamplingPolicy(PolicyKind kind, Fn fn) : kind_(kind), fn_(std::move(fn)) {}
  [[nodiscard]] PolicyKind kind() const override { return kind_; }
  Action sample(const State& s, Rng& rng) const override { return fn_(s, rng); }

 private:
  PolicyKind kind_;
  Fn fn_;
};

inline PolicyPtr uniform_policy(const ActionSpace& space, PolicyKind kind = PolicyKind::Scripted) {
  if (space.discrete) {
    const int n = space.n;
    return std::make_shared<DiscretePolicy>(kind, [n](const State&) { return std::vector<double>(static_cast<std::size_t>(n), 1.0 / n); });
  }
  return std::make_shared<SamplingPolicy>(kind, [space](const State&, Rng& rng) {
    std::vector<double> a(space.lower.size());
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = space.lower[i] + (space.upper[i] - space.lower[i]) * uniform01(rng);
    return Action(a);
  });
}

}  // namespace waemdp::env
