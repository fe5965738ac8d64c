#pragma once

// End-to-end certification of a latent model against its environment: local
// losses from a latent-policy trace, the explicit latent MDP, its Lipschitz
// constants, the implied bounds, property values, and value differences.

#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "waemdp/certify/bounds.hpp"
#include "waemdp/certify/lipschitz.hpp"
#include "waemdp/certify/pac.hpp"
#include "waemdp/certify/property.hpp"
#include "waemdp/certify/value_difference.hpp"
#include "waemdp/certify/value_iteration.hpp"
#include "waemdp/env/sampler.hpp"
#include "waemdp/latent/explicit.hpp"

namespace waemdp::latent {

struct CertifyOptions {
  certify::PacConfig pac;
  bool strict = true;
  long samples = 0;  // 0: the PAC requirement for (epsilon, delta)
  long burn_in = 1000;
  ExtractOptions extract;
  std::vector<std::string> properties;  // empty: return, plus time-to-failure when "unsafe" exists
  int value_episodes = 100;
  std::uint64_t seed = 0;
};

struct PropertyResult {
  std::string property;
  double value = 0.0;  // at the latent initial state
  std::optional<certify::ValueDifferenceReport> difference;
};

struct CertificationReport {
  certify::LocalLossEstimate losses;
  certify::LipschitzConstants constants;
  certify::BisimBoundReport bounds;
  double gamma = 0.0;
  long latent_states = 0;
  double extraction_residual = 0.0;
  std::vector<PropertyResult> properties;
  std::vector<std::string> warnings;

  [[nodiscard]] nlohmann::json to_json() const {
    nlohmann::json props = nlohmann::json::array();
    for (const auto& p : properties) {
      nlohmann::json e{{"property", p.property}, {"value", p.value}};
      if (p.difference) e["value_difference"] = p.difference->to_json();
      props.push_back(e);
    }
    return {{"epsilon", losses.epsilon},
            {"delta", losses.delta},
            {"gamma", gamma},
            {"T_used", losses.samples},
            {"T_required", losses.required},
            {"L_R", losses.loss_reward},
            {"L_P", losses.loss_transition},
            {"constants", constants.to_json()},
            {"bounds", bounds.to_json()},
            {"latent_states", latent_states},
            {"extraction_residual", extraction_residual},
            {"properties", props},
            {"warnings", warnings}};
  }

  [[nodiscard]] std::string summary() const {
    std::ostringstream o;
    o << "local losses  L_R = " << losses.loss_reward << "  L_P = " << losses.loss_transition << "  (T = " << losses.samples
      << ", eps = " << losses.epsilon << ", delta = " << losses.delta << ")\n";
    o << "latent MDP    " << latent_states << " states, residual mass " << extraction_residual << "\n";
    o << "constants     K_R = " << constants.k_reward << "  K_P = " << constants.k_transition << "  K_V = " << constants.k_value << "\n";
    o << "bounds        bisimulation " << bounds.expected_bisimulation << "  return " << bounds.value_return << "  reachability "
      << bounds.value_reachability << "\n";
    for (const auto& p : properties) {
      o << "property      " << p.property << " = " << p.value;
      if (p.difference) o << "  (ground MC " << p.difference->ground_mean << " +/- " << p.difference->ground_ci95 << ")";
      o << "\n";
    }
    for (const auto& w : warnings) o << "warning       " << w << "\n";
    return o.str();
  }
};

inline std::vector<std::string> default_properties(const std::vector<std::string>& aps) {
  std::vector<std::string> props{"return"};
  for (const auto& a : aps)
    if (a == "unsafe") props.push_back("!" + std::string(env::kResetProp) + " U unsafe");
  return props;
}

/// Certifies `model` against `ground`. Without a `trace`, one is drawn from the
/// stationary distribution of the latent flow; a supplied trace must come from
/// a latent policy unless strict mode is off.
inline CertificationReport certify_model(const std::shared_ptr<const LatentSpaceModel>& model,
                                         const std::shared_ptr<const env::EpsilonResetMdp>& ground, const CertifyOptions& opt,
                                         const std::vector<env::TransitionSample>* trace = nullptr,
                                         env::PolicyKind trace_policy = env::PolicyKind::Latent) {
  opt.pac.validate();
  CertificationReport rep;
  rep.gamma = opt.pac.gamma;
  const long required = certify::required_samples(opt.pac.epsilon, opt.pac.delta);
  const long n = opt.samples > 0 ? opt.samples : required;
  std::vector<env::TransitionSample> drawn;
  if (trace == nullptr) {
    env::StationarySampler sampler(ground, std::make_shared<LatentFlowPolicy>(model, ground), derive_seed(opt.seed, 11), opt.burn_in);
    drawn = sampler.sample(n);
    trace = &drawn;
    trace_policy = env::PolicyKind::Latent;
  }
  const ModelAbstraction abstraction(*model, *ground);
  rep.losses = certify::estimate_local_losses(abstraction, *trace, {}, opt.pac, {opt.strict, trace_policy});
  if (rep.losses.samples < required) rep.warnings.push_back("trace shorter than the PAC requirement; bounds do not hold at the stated confidence");

  const ExplicitLatentMdp x = extract_explicit(*model, opt.extract);
  rep.latent_states = x.mdp.n_states;
  for (double r : x.residual) rep.extraction_residual = std::max(rep.extraction_residual, r);
  rep.warnings.insert(rep.warnings.end(), x.warnings.begin(), x.warnings.end());
  rep.constants = certify::lipschitz_constants(x.mdp, x.policy, opt.pac.gamma);
  rep.bounds = certify::bisim_bound(rep.losses, rep.constants, opt.pac.gamma, opt.pac.epsilon);

  Rng rng(derive_seed(opt.seed, 12));
  const auto texts = opt.properties.empty() ? default_properties(model->atomic_props()) : opt.properties;
  for (const auto& text : texts) {
    const certify::Property prop = certify::parse_property(text, model->atomic_props());
    PropertyResult pr;
    pr.property = text;
    pr.value = certify::value_iteration(x.mdp, x.policy, prop, opt.pac.gamma)(x.mdp.s_init);
    if (opt.value_episodes > 0)
      pr.difference = value_difference(*model, *ground, x, prop, opt.pac.gamma, opt.value_episodes, rng);
    rep.properties.push_back(std::move(pr));
  }
  return rep;
}

}  // namespace waemdp::latent
