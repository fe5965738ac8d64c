#pragma once

// Explicit latent MDPs: extraction of the reachable tabular latent MDP, a
// tabular latent model, latent-flow execution in the ground environment, and
// the certification adapter.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "waemdp/certify/pac.hpp"
#include "waemdp/certify/value_difference.hpp"
#include "waemdp/certify/value_iteration.hpp"
#include "waemdp/env/tabular_mdp.hpp"
#include "waemdp/env/wrappers.hpp"
#include "waemdp/latent/interface.hpp"

namespace waemdp::latent {

struct ExtractOptions {
  std::size_t budget = std::size_t{1} << 16;  // maximum number of reachable latent states
  double prune = 1e-12;                       // successors below this mass are dropped
  int successor_samples = 4096;               // per (z, a) when n_bits > 16
  std::uint64_t seed = 0;
};

struct ExplicitLatentMdp {
  env::TabularMdp mdp;
  std::vector<std::uint64_t> codes;  // tabular index -> latent code
  certify::PolicyRows policy;        // latent policy rows
  std::vector<double> residual;      // largest dropped mass over the actions of each state
  std::vector<std::string> warnings;

  [[nodiscard]] int index_of(std::uint64_t code) const {
    const auto it = std::find(codes.begin(), codes.end(), code);
    if (it == codes.end()) return -1;
    return static_cast<int>(it - codes.begin());
  }

  [[nodiscard]] nlohmann::json to_json() const {
    nlohmann::json j = mdp.to_json();
    j["codes"] = codes;
    j["policy"] = policy;
    j["residual"] = residual;
    j["warnings"] = warnings;
    return j;
  }
};

/// Breadth-first extraction of the latent MDP reachable from the initial
/// latent state under every latent action. Successor rows are exact for
/// n_bits <= 16 and restricted to sampled successors otherwise.
inline ExplicitLatentMdp extract_explicit(const LatentSpaceModel& model, const ExtractOptions& opt = {}) {
  const int n = model.n_bits(), k = model.n_actions();
  const bool exact = n <= 16;
  ExplicitLatentMdp out;
  out.mdp.n_actions = k;
  out.mdp.ap = model.atomic_props();
  std::unordered_map<std::uint64_t, int> index;
  std::deque<std::uint64_t> frontier;
  auto visit = [&](std::uint64_t z) {
    auto [it, fresh] = index.emplace(z, static_cast<int>(out.codes.size()));
    if (fresh) {
      if (out.codes.size() >= opt.budget)
        throw BudgetExceeded("more than " + std::to_string(opt.budget) + " reachable latent states");
      out.codes.push_back(z);
      frontier.push_back(z);
    }
    return it->second;
  };
  Rng rng(opt.seed);
  visit(model.initial_state());
  // Sparse rows keyed by code; densified once the state set is known.
  std::vector<std::vector<std::map<std::uint64_t, double>>> rows;
  while (!frontier.empty()) {
    const std::uint64_t z = frontier.front();
    frontier.pop_front();
    std::vector<std::map<std::uint64_t, double>> zr(static_cast<std::size_t>(k));
    std::vector<double> rew(static_cast<std::size_t>(k));
    double residual = 0.0;
    for (int a = 0; a < k; ++a) {
      auto& row = zr[static_cast<std::size_t>(a)];
      double kept = 0.0;
      if (exact) {
        const Eigen::VectorXd p = model.transition_probs(z, a);
        for (Eigen::Index c = 0; c < p.size(); ++c)
          if (p(c) >= opt.prune) {
            row[static_cast<std::uint64_t>(c)] = p(c);
            kept += p(c);
          }
      } else {
        for (int i = 0; i < opt.successor_samples; ++i) row.emplace(model.sample_successor(z, a, rng), 0.0);
        for (auto& [zn, p] : row) {
          p = model.transition_prob(zn, z, a);
          kept += p;
        }
      }
      residual = std::max(residual, std::max(0.0, 1.0 - kept));
      rew[static_cast<std::size_t>(a)] = model.reward(z, a);
    }
    for (const auto& row : zr)
      for (const auto& [zn, p] : row) visit(zn);
    rows.push_back(std::move(zr));
    out.mdp.R.push_back(std::move(rew));
    out.mdp.labels.push_back(model.labels_of(z));
    const Eigen::VectorXd pi = model.policy_probs(z);
    out.policy.emplace_back(pi.data(), pi.data() + pi.size());
    out.residual.push_back(residual);
  }
  const int m = static_cast<int>(out.codes.size());
  out.mdp.n_states = m;
  out.mdp.s_init = 0;
  for (const auto& zr : rows) {
    out.mdp.P.emplace_back();
    for (const auto& row : zr) {
      std::vector<double> dense(static_cast<std::size_t>(m), 0.0);
      for (const auto& [zn, p] : row) dense[static_cast<std::size_t>(index.at(zn))] = p;
      out.mdp.P.back().push_back(std::move(dense));
    }
  }
  if (!exact)
    out.warnings.push_back("n_bits > 16: successor rows enumerate sampled successors only; see residual");
  return out;
}

/// A latent model given directly by tables over all 2^n codes.
class TabularLatentModel final : public LatentSpaceModel {
 public:
  using Embedding = std::function<std::uint64_t(const env::State&, const env::Labels&)>;

  TabularLatentModel(int n_bits, std::vector<std::string> ap, env::TabularMdp mdp, certify::PolicyRows policy, Embedding embed)
      : n_(n_bits), ap_(std::move(ap)), mdp_(std::move(mdp)), policy_(std::move(policy)), embed_(std::move(embed)) {
    if (n_ < static_cast<int>(ap_.size()) || n_ > 16) throw ConfigError("tabular latent model needs |AP| <= n_bits <= 16");
    if (mdp_.n_states != (1 << n_)) throw DimensionMismatch("tabular latent model needs 2^n_bits states");
    mdp_.validate(1e-9);
    mdp_.check_policy(policy_);
  }

  [[nodiscard]] int n_bits() const override { return n_; }
  [[nodiscard]] int n_actions() const override { return mdp_.n_actions; }
  [[nodiscard]] std::vector<std::string> atomic_props() const override { return ap_; }
  [[nodiscard]] std::uint64_t embed(const env::State& s, const env::Labels& l) const override { return embed_(s, l); }
  [[nodiscard]] int encode_action(std::uint64_t, const env::Action& a) const override { return std::get<int>(a); }
  [[nodiscard]] env::Action decode_action(std::uint64_t, int abar) const override { return abar; }
  [[nodiscard]] Eigen::VectorXd policy_probs(std::uint64_t z) const override {
    const auto& r = policy_.at(z);
    return Eigen::Map<const Eigen::VectorXd>(r.data(), static_cast<Eigen::Index>(r.size()));
  }
  [[nodiscard]] double reward(std::uint64_t z, int a) const override { return mdp_.R.at(z).at(static_cast<std::size_t>(a)); }
  [[nodiscard]] double transition_prob(std::uint64_t zn, std::uint64_t z, int a) const override {
    return mdp_.P.at(z).at(static_cast<std::size_t>(a)).at(zn);
  }
  [[nodiscard]] Eigen::VectorXd transition_probs(std::uint64_t z, int a) const override {
    const auto& r = mdp_.P.at(z).at(static_cast<std::size_t>(a));
    return Eigen::Map<const Eigen::VectorXd>(r.data(), static_cast<Eigen::Index>(r.size()));
  }
  [[nodiscard]] std::uint64_t sample_successor(std::uint64_t z, int a, Rng& rng) const override {
    return static_cast<std::uint64_t>(categorical(rng, mdp_.P.at(z).at(static_cast<std::size_t>(a))));
  }
  [[nodiscard]] std::uint64_t initial_state() const override { return static_cast<std::uint64_t>(mdp_.s_init); }

 private:
  int n_;
  std::vector<std::string> ap_;
  env::TabularMdp mdp_;
  certify::PolicyRows policy_;
  Embedding embed_;
};

/// Latent-flow trace: ground transitions with the latent states and actions used.
struct LatentFlowRun {
  std::vector<double> returns;  // undiscounted, one per episode
  std::vector<env::TransitionSample> trace;
  std::vector<std::uint64_t> latent_states;
  std::vector<int> latent_actions;
};

namespace detail {
inline env::TransitionSample latent_flow_step(const LatentSpaceModel& model, const env::GroundMdp& ground, const env::State& s, Rng& rng,
                                              std::uint64_t& z, int& abar) {
  z = model.embed(s, ground.labels(s));
  const Eigen::VectorXd pi = model.policy_probs(z);
  abar = static_cast<int>(categorical(rng, std::vector<double>(pi.data(), pi.data() + pi.size())));
  return ground.step(s, model.decode_action(z, abar), rng);
}
inline void check_signature(const LatentSpaceModel& model, const env::GroundMdp& ground) {
  if (ground.atomic_props() != model.atomic_props())
    throw DimensionMismatch("model and environment disagree on the atomic propositions");
}
}  // namespace detail

/// Executes the latent policy in the ground environment: z = phi(s),
/// abar ~ pi(.|z), a = psi(z, abar). An episode ends after acting in a
/// terminal state, on entering the reset state of a reset wrapper, or after
/// `max_steps`.
inline LatentFlowRun latent_flow_execute(const LatentSpaceModel& model, const env::GroundMdp& ground, int n_episodes, Rng& rng,
                                         long max_steps = 1000) {
  detail::check_signature(model, ground);
  const auto* reset = dynamic_cast<const env::EpsilonResetMdp*>(&ground);
  LatentFlowRun run;
  for (int ep = 0; ep < n_episodes; ++ep) {
    env::State s = ground.initial_state();
    double ret = 0.0;
    for (long t = 0; t < max_steps; ++t) {
      std::uint64_t z = 0;
      int abar = 0;
      env::TransitionSample x = detail::latent_flow_step(model, ground, s, rng, z, abar);
      x.ep = ep;
      x.t = t;
      ret += x.r;
      const bool done = ground.is_terminal(s) || (reset != nullptr && reset->is_reset(x.s_next));
      s = x.s_next;
      run.trace.push_back(std::move(x));
      run.latent_states.push_back(z);
      run.latent_actions.push_back(abar);
      if (done) break;
    }
    run.returns.push_back(ret);
  }
  return run;
}

/// Latent-flow trajectory of fixed length from the initial state, continuing
/// through terminal and reset states.
inline std::vector<env::TransitionSample> latent_flow_trajectory(const LatentSpaceModel& model, const env::GroundMdp& ground,
                                                                 long steps, Rng& rng) {
  detail::check_signature(model, ground);
  std::vector<env::TransitionSample> xs;
  env::State s = ground.initial_state();
  for (long t = 0; t < steps; ++t) {
    std::uint64_t z = 0;
    int abar = 0;
    xs.push_back(detail::latent_flow_step(model, ground, s, rng, z, abar));
    xs.back().t = t;
    s = xs.back().s_next;
  }
  return xs;
}

/// |V(s_I) - Vbar(z_I)|: Monte-Carlo discounted value of the latent flow in
/// the ground environment against value iteration on the extracted latent MDP.
inline certify::ValueDifferenceReport value_difference(const LatentSpaceModel& model, const env::GroundMdp& ground,
                                                       const ExplicitLatentMdp& explicit_mdp, const certify::Property& prop,
                                                       double gamma, int episodes, Rng& rng, double tail = 1e-4) {
  if (episodes < 1) throw InsufficientSamples("value difference needs at least one episode");
  const Eigen::VectorXd v = certify::value_iteration(explicit_mdp.mdp, explicit_mdp.policy, prop, gamma);
  const long horizon = certify::horizon_for(gamma, tail, prop.is_reachability() ? 1.0 : env::kRewardBound);
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(episodes));
  for (int ep = 0; ep < episodes; ++ep)
    values.push_back(certify::trajectory_value(latent_flow_trajectory(model, ground, horizon, rng), prop, gamma));
  return certify::value_difference_report(values, v(explicit_mdp.mdp.s_init));
}

/// Ground-state policy that acts through the latent model.
class LatentFlowPolicy final : public env::Policy {
 public:
  LatentFlowPolicy(std::shared_ptr<const LatentSpaceModel> model, env::GroundMdpPtr ground)
      : model_(std::move(model)), ground_(std::move(ground)) {}

  [[nodiscard]] env::PolicyKind kind() const override { return env::PolicyKind::Latent; }
  env::Action sample(const env::State& s, Rng& rng) const override {
    const std::uint64_t z = model_->embed(s, ground_->labels(s));
    const Eigen::VectorXd pi = model_->policy_probs(z);
    return model_->decode_action(z, static_cast<int>(categorical(rng, std::vector<double>(pi.data(), pi.data() + pi.size()))));
  }

 private:
  std::shared_ptr<const LatentSpaceModel> model_;
  env::GroundMdpPtr ground_;
};

/// Certification view of a latent model; labels come from the environment.
/// Successor distributions are cached per (z, abar) for n_bits <= 16.
class ModelAbstraction final : public certify::LatentAbstraction {
 public:
  ModelAbstraction(const LatentSpaceModel& model, const env::GroundMdp& ground) : model_(model), ground_(ground) {}

  [[nodiscard]] std::uint64_t embed_state(const env::State& s) const override { return model_.embed(s, ground_.labels(s)); }
  [[nodiscard]] int embed_action(std::uint64_t z, const env::Action& a) const override { return model_.encode_action(z, a); }
  [[nodiscard]] double latent_reward(std::uint64_t z, int abar) const override { return model_.reward(z, abar); }
  [[nodiscard]] double latent_probability(std::uint64_t zn, std::uint64_t z, int abar) const override {
    if (model_.n_bits() > 16) return model_.transition_prob(zn, z, abar);
    const std::uint64_t key = (z << 8U) | static_cast<std::uint64_t>(abar);
    auto it = cache_.find(key);
    if (it == cache_.end()) it = cache_.emplace(key, model_.transition_probs(z, abar)).first;
    return it->second(static_cast<Eigen::Index>(zn));
  }

 private:
  const LatentSpaceModel& model_;
  const env::GroundMdp& ground_;
  mutable std::unordered_map<std::uint64_t, Eigen::VectorXd> cache_;
};

}  // namespace waemdp::latent
