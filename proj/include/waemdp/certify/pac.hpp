#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "waemdp/env/ground_mdp.hpp"
#include "waemdp/env/policy.hpp"

namespace waemdp::certify {

struct PacConfig {
  double epsilon = 0.01;
  double delta = 0.045;
  double gamma = 0.99;

  void validate() const {
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw DomainError("epsilon must lie in (0, 1)");
    if (!(delta > 0.0 && delta < 1.0)) throw DomainError("delta must lie in (0, 1)");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw DomainError("gamma must lie in [0, 1)");
  }
};

/// Hoeffding sample count ceil(ln(4/delta) / (2 eps^2)) for eps-accurate local losses.
inline long required_samples(double epsilon, double delta) {
  PacConfig{epsilon, delta, 0.0}.validate();
  return static_cast<long>(std::ceil(std::log(4.0 / delta) / (2.0 * epsilon * epsilon)));
}

/// Sample count for eps-accurate value-difference bounds.
inline long required_samples_value(double epsilon, double delta, double gamma, double k_v) {
  PacConfig{epsilon, delta, gamma}.validate();
  if (!(k_v >= 0.0)) throw DomainError("K_V must be nonnegative");
  const double inflate = (1.0 + gamma * k_v) / (1.0 - gamma);
  return static_cast<long>(std::ceil(std::log(4.0 / delta) * inflate * inflate / (2.0 * epsilon * epsilon)));
}

/// Deterministic (zero-temperature) view of a latent space model. Latent states
/// are bit-pattern indices.
class LatentAbstraction {
 public:
  virtual ~LatentAbstraction() = default;
  [[nodiscard]] virtual std::uint64_t embed_state(const env::State& s) const = 0;
  [[nodiscard]] virtual int embed_action(std::uint64_t z, const env::Action& a) const = 0;
  [[nodiscard]] virtual double latent_reward(std::uint64_t z, int abar) const = 0;
  [[nodiscard]] virtual double latent_probability(std::uint64_t z_next, std::uint64_t z, int abar) const = 0;
};

struct LocalLossEstimate {
  double loss_reward = 0.0;
  double loss_transition = 0.0;
  long samples = 0;
  long required = 0;
  double epsilon = 0.0;
  double delta = 0.0;

  [[nodiscard]] nlohmann::json to_json() const {
    return {{"L_R", loss_reward}, {"L_P", loss_transition}, {"T_used", samples}, {"T_required", required},
            {"epsilon", epsilon}, {"delta", delta}};
  }
};

struct EstimateOptions {
  bool strict = true;
  /// Kind of the policy that generated the trace; guarantees hold only for latent policies.
  env::PolicyKind trace_policy = env::PolicyKind::Latent;
};

/// Empirical local losses
///   L_R = mean |r_t - R(phi(s_t), a_t)|,  L_P = mean [1 - P(phi(s_t+1) | phi(s_t), a_t)].
/// `latent_actions` holds the latent action taken at each step; when empty the
/// ground action is embedded instead.
inline LocalLossEstimate estimate_local_losses(const LatentAbstraction& model, const std::vector<env::TransitionSample>& trace,
                                               const std::vector<int>& latent_actions, const PacConfig& pac,
                                               const EstimateOptions& opt = {}) {
  pac.validate();
  LocalLossEstimate est;
  est.epsilon = pac.epsilon;
  est.delta = pac.delta;
  est.required = required_samples(pac.epsilon, pac.delta);
  est.samples = static_cast<long>(trace.size());
  if (opt.strict && opt.trace_policy != env::PolicyKind::Latent)
    throw PolicyMismatch("local-loss guarantees hold only for traces of the latent policy, got a " +
                         env::to_string(opt.trace_policy) + " policy trace (disable strict mode to estimate anyway)");
  if (trace.empty()) throw InsufficientSamples("empty trace");
  if (opt.strict && est.samples < est.required)
    throw InsufficientSamples("trace has " + std::to_string(est.samples) + " transitions; eps=" + std::to_string(pac.epsilon) +
                              ", delta=" + std::to_string(pac.delta) + " need " + std::to_string(est.required));
  if (!latent_actions.empty() && latent_actions.size() != trace.size())
    throw DimensionMismatch("one latent action per transition required");
  double lr = 0.0, lp = 0.0;
  for (std::size_t t = 0; t < trace.size(); ++t) {
    const auto& x = trace[t];
    const std::uint64_t z = model.embed_state(x.s);
    const int abar = latent_actions.empty() ? model.embed_action(z, x.a) : latent_actions[t];
    lr += std::abs(x.r - model.latent_reward(z, abar));
    lp += 1.0 - model.latent_probability(model.embed_state(x.s_next), z, abar);
  }
  est.loss_reward = lr / static_cast<double>(trace.size());
  est.loss_transition = lp / static_cast<double>(trace.size());
  return est;
}

}  // namespace waemdp::certify
