#pragma once

// Latent space model: state/action encoders and decoders, latent reward,
// latent transition flow, latent policy, and the steady-state prior.

#include <algorithm>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "waemdp/autodiff/checkpoint.hpp"
#include "waemdp/autodiff/mlp.hpp"
#include "waemdp/dist/maf.hpp"
#include "waemdp/dist/relaxed.hpp"
#include "waemdp/env/ground_mdp.hpp"
#include "waemdp/latent/interface.hpp"

namespace waemdp::latent {

using ad::Matrix;
using ad::Var;
using RowVector = Eigen::RowVectorXd;
using Vector = Eigen::VectorXd;

struct Temperatures {
  double encoder = 0.5;         // smooth Heaviside of the state encoder
  double transition = 0.5;      // relaxed Bernoulli of the latent transition
  double prior = 0.5;           // relaxed Bernoulli of the steady-state prior
  double policy = 0.0;          // Gumbel-softmax of the latent policy; 0 picks min(1/2, 1/(k-1))
  double action_encoder = 0.0;  // same rule

  [[nodiscard]] nlohmann::json to_json() const {
    return {{"encoder", encoder}, {"transition", transition}, {"prior", prior}, {"policy", policy}, {"action_encoder", action_encoder}};
  }
  static Temperatures from_json(const nlohmann::json& j) {
    Temperatures t;
    t.encoder = j.value("encoder", t.encoder);
    t.transition = j.value("transition", t.transition);
    t.prior = j.value("prior", t.prior);
    t.policy = j.value("policy", t.policy);
    t.action_encoder = j.value("action_encoder", t.action_encoder);
    return t;
  }
};

inline nlohmann::json action_space_to_json(const env::ActionSpace& a) {
  if (a.discrete) return {{"discrete", a.n}};
  return {{"lower", a.lower}, {"upper", a.upper}};
}
inline env::ActionSpace action_space_from_json(const nlohmann::json& j) {
  if (j.contains("discrete")) return env::ActionSpace::Discrete(j.at("discrete").get<int>());
  return env::ActionSpace::Box(j.at("lower").get<std::vector<double>>(), j.at("upper").get<std::vector<double>>());
}

struct LatentConfig {
  int n_bits = 6;
  std::vector<std::string> atomic_props;  // leading label bits, in order
  int state_dim = 0;
  env::ActionSpace actions = env::ActionSpace::Discrete(1);
  int latent_actions = 0;  // 0: latent actions are the (discrete) ground actions
  std::vector<int> hidden{64, 64};
  std::vector<int> made_hidden{64, 64};
  std::string activation = "leaky_relu";
  Temperatures temps;

  [[nodiscard]] int ap_bits() const { return static_cast<int>(atomic_props.size()); }
  [[nodiscard]] int free_bits() const { return n_bits - ap_bits(); }
  [[nodiscard]] bool identity_actions() const { return latent_actions == 0; }
  [[nodiscard]] int n_latent_actions() const { return identity_actions() ? actions.n : latent_actions; }
  /// Width of encoded ground actions (one-hot or raw).
  [[nodiscard]] int action_dim() const { return actions.discrete ? actions.n : static_cast<int>(actions.lower.size()); }

  /// Replaces automatic (zero) Gumbel-softmax temperatures by min(1/2, 1/(k-1)).
  void resolve_temperatures() {
    const int k = n_latent_actions();
    const double automatic = k > 2 ? std::min(0.5, 1.0 / (k - 1)) : 0.5;
    if (temps.policy == 0.0) temps.policy = automatic;
    if (temps.action_encoder == 0.0) temps.action_encoder = automatic;
  }

  void validate() const {
    if (n_bits < 1 || n_bits > 30) throw ConfigError("n_bits must lie in [1, 30]");
    if (ap_bits() > n_bits) throw ConfigError("n_bits (" + std::to_string(n_bits) + ") must cover the " + std::to_string(ap_bits()) + " label bits");
    if (state_dim < 1) throw ConfigError("state_dim must be positive");
    if (identity_actions() && !actions.discrete) throw ConfigError("continuous actions need --latent-actions > 0");
    if (latent_actions < 0) throw ConfigError("latent_actions must be nonnegative");
    if (n_latent_actions() < 1) throw ConfigError("need at least one latent action");
    for (double t : {temps.encoder, temps.transition, temps.prior, temps.policy, temps.action_encoder}) dist::require_positive_temperature(t);
    if (n_latent_actions() > 1) dist::GumbelSoftmax::check_temperature(static_cast<std::size_t>(n_latent_actions()), temps.policy);
    if (!identity_actions() && n_latent_actions() > 1) dist::GumbelSoftmax::check_temperature(static_cast<std::size_t>(n_latent_actions()), temps.action_encoder);
    (void)ad::activation_from_name(activation);
  }

  [[nodiscard]] nlohmann::json to_json() const {
    return {{"n_bits", n_bits}, {"atomic_props", atomic_props}, {"state_dim", state_dim},
            {"actions", action_space_to_json(actions)}, {"latent_actions", latent_actions}, {"hidden", hidden},
            {"made_hidden", made_hidden}, {"activation", activation}, {"temperatures", temps.to_json()}};
  }
  static LatentConfig from_json(const nlohmann::json& j) {
    LatentConfig c;
    try {
      c.n_bits = j.at("n_bits");
      c.atomic_props = j.at("atomic_props").get<std::vector<std::string>>();
      c.state_dim = j.at("state_dim");
      c.actions = action_space_from_json(j.at("actions"));
      c.latent_actions = j.value("latent_actions", 0);
      c.hidden = j.value("hidden", c.hidden);
      c.made_hidden = j.value("made_hidden", c.made_hidden);
      c.activation = j.value("activation", c.activation);
      if (j.contains("temperatures")) c.temps = Temperatures::from_json(j.at("temperatures"));
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("malformed latent model config: ") + e.what());
    }
    c.resolve_temperatures();
    c.validate();
    return c;
  }
};

/// Networks of the latent space model. Latent states are n-bit vectors whose
/// leading bits are the labels; latent actions are indices in [0, |A_latent|).
class LatentModel final : public LatentSpaceModel {
 public:
  LatentModel(LatentConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
    cfg_.resolve_temperatures();
    cfg_.validate();
    Rng rng(seed);
    const auto act = ad::activation_from_name(cfg_.activation);
    const int n = cfg_.n_bits, k = cfg_.n_latent_actions(), ad_ = cfg_.action_dim();
    auto spec = [&](int in, int out, ad::Activation out_act = ad::Activation::Identity) {
      std::vector<int> sizes{in};
      for (int h : cfg_.hidden) sizes.push_back(h);
      sizes.push_back(out);
      return ad::MlpSpec{sizes, act, out_act};
    };
    if (cfg_.free_bits() > 0) encoder_ = ad::Mlp("encoder", spec(cfg_.state_dim, cfg_.free_bits()), rng);
    decoder_ = ad::Mlp("decoder", spec(n, cfg_.state_dim), rng);
    reward_ = ad::Mlp("reward", spec(n + k, 1), rng);
    policy_ = ad::Mlp("policy", spec(n, k), rng);
    transition_ = dist::BernoulliFlow(std::make_shared<dist::MadeConditioner>("transition", n, n + k, cfg_.made_hidden, rng, act));
    if (cfg_.ap_bits() > 0)
      prior_ = dist::BernoulliFlow(std::make_shared<dist::MadeConditioner>("prior", cfg_.ap_bits(), 0, cfg_.made_hidden, rng, act));
    if (!cfg_.identity_actions()) {
      action_encoder_ = ad::Mlp("action_encoder", spec(n + ad_, k), rng);
      action_decoder_ = ad::Mlp("action_decoder", spec(n + k, ad_, ad::Activation::Tanh), rng);
    }
  }

  LatentModel(const LatentModel&) = delete;
  LatentModel& operator=(const LatentModel&) = delete;
  LatentModel(LatentModel&&) = default;
  LatentModel& operator=(LatentModel&&) = default;

  [[nodiscard]] const LatentConfig& config() const { return cfg_; }
  [[nodiscard]] int n_bits() const override { return cfg_.n_bits; }
  [[nodiscard]] int n_actions() const override { return cfg_.n_latent_actions(); }
  [[nodiscard]] std::vector<std::string> atomic_props() const override { return cfg_.atomic_props; }
  dist::BernoulliFlow& transition_flow() { return transition_; }
  [[nodiscard]] const dist::BernoulliFlow& transition_flow() const { return transition_; }

  /// Replaces the latent transition flow (e.g. by a hand-built tabular one).
  void set_transition_flow(dist::BernoulliFlow flow) {
    if (flow.n_bits() != n_bits() || flow.context_dim() != n_bits() + n_actions())
      throw DimensionMismatch("transition flow must have n_bits outputs and n_bits + |A| context");
    transition_ = std::move(flow);
  }

  /// Trainable parameters of encoders, decoders, and the latent MDP.
  std::vector<ad::Parameter*> parameters() {
    std::vector<ad::Parameter*> out;
    if (cfg_.free_bits() > 0) encoder_.collect(out);
    decoder_.collect(out);
    reward_.collect(out);
    policy_.collect(out);
    transition_.conditioner().collect(out);
    if (cfg_.ap_bits() > 0) prior_.conditioner().collect(out);
    if (!cfg_.identity_actions()) {
      action_encoder_.collect(out);
      action_decoder_.collect(out);
    }
    return out;
  }

  // ---- zero-temperature deployment ----

  [[nodiscard]] RowVector embed_bits(const env::State& s, const env::Labels& labels) const {
    check_labels(labels);
    RowVector z(cfg_.n_bits);
    for (int i = 0; i < cfg_.ap_bits(); ++i) z(i) = labels[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
    if (cfg_.free_bits() > 0) {
      check_state(s);
      const Matrix logits = encoder_.eval(Matrix(s.transpose()));
      z.tail(cfg_.free_bits()) = dist::hard_heaviside(logits).row(0);
    }
    return z;
  }
  [[nodiscard]] std::uint64_t embed(const env::State& s, const env::Labels& labels) const override {
    return dist::index_of(embed_bits(s, labels));
  }
  [[nodiscard]] RowVector bits(std::uint64_t z) const { return dist::bits_of(z, cfg_.n_bits); }

  [[nodiscard]] int encode_action(std::uint64_t z, const env::Action& a) const override {
    if (cfg_.identity_actions()) {
      if (!cfg_.actions.contains(a)) throw InvalidAction("action " + env::describe(a) + " is outside the action space");
      return std::get<int>(a);
    }
    Matrix in(1, cfg_.n_bits + cfg_.action_dim());
    in << bits(z), cfg_.actions.encode(a);
    const Matrix logits = action_encoder_.eval(in);
    const std::vector<double> v(logits.data(), logits.data() + logits.size());
    return static_cast<int>(dist::GumbelSoftmax::argmax(v));
  }

  [[nodiscard]] env::Action decode_action(std::uint64_t z, int abar) const override {
    check_action(abar);
    if (cfg_.identity_actions()) return abar;
    Matrix in(1, cfg_.n_bits + n_actions());
    in << bits(z), dist::one_hot(std::vector<int>{abar}, n_actions());
    const Matrix u = action_decoder_.eval(in);
    std::vector<double> a(static_cast<std::size_t>(u.cols()));
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double lo = cfg_.actions.lower[i], hi = cfg_.actions.upper[i];
      a[i] = 0.5 * (lo + hi) + 0.5 * (hi - lo) * u(0, static_cast<Eigen::Index>(i));
    }
    return a;
  }

  [[nodiscard]] Vector policy_probs(std::uint64_t z) const override {
    return dist::softmax_rows(policy_.eval(Matrix(bits(z)))).row(0).transpose();
  }

  [[nodiscard]] double reward(std::uint64_t z, int abar) const override {
    check_action(abar);
    return 0.5 * std::tanh(reward_.eval(context(z, abar))(0, 0));
  }

  /// P(z' | z, abar) for every successor pattern (index order); n_bits <= 16.
  [[nodiscard]] Vector transition_probs(std::uint64_t z, int abar) const override {
    check_action(abar);
    return transition_.probabilities(context(z, abar));
  }
  [[nodiscard]] double transition_prob(std::uint64_t z_next, std::uint64_t z, int abar) const override {
    check_action(abar);
    return std::exp(transition_.log_prob(context(z, abar), Matrix(bits(z_next)))(0));
  }
  [[nodiscard]] std::uint64_t sample_successor(std::uint64_t z, int abar, Rng& rng) const override {
    check_action(abar);
    return dist::index_of(transition_.sample(context(z, abar), 1, rng).row(0));
  }

  [[nodiscard]] env::State decode_state(std::uint64_t z) const { return decoder_.eval(Matrix(bits(z))).row(0).transpose(); }

  [[nodiscard]] std::uint64_t initial_state() const override { return z_init_; }
  void set_initial_state(std::uint64_t z) { z_init_ = z; }

  // ---- differentiable (training) pieces; batches are rows ----

  /// Relaxed state embedding [labels, smooth Heaviside(encoder(s))].
  Var encode(ad::Binder& bind, const Matrix& states, const Matrix& labels) {
    ad::Tape& tape = bind.tape();
    if (labels.cols() != cfg_.ap_bits()) throw DimensionMismatch("label width differs from the model's label bits");
    if (states.cols() != cfg_.state_dim) throw DimensionMismatch("state width differs from the model's state_dim");
    Var l = tape.constant(labels);
    if (cfg_.free_bits() == 0) return l;
    Var code = dist::smooth_heaviside(encoder_.forward(bind, tape.constant(states)), cfg_.temps.encoder);
    return cfg_.ap_bits() == 0 ? code : ad::concat(l, code);
  }

  /// Relaxed latent actions: one-hot ground actions in identity mode, a
  /// Gumbel-softmax of the action encoder otherwise.
  Var encode_actions(ad::Binder& bind, const Var& z, const Matrix& actions, const Matrix& gumbel) {
    if (cfg_.identity_actions()) return bind.tape().constant(actions);
    if (n_actions() == 1) return bind.tape().constant(Matrix::Ones(actions.rows(), 1));
    Var logits = action_encoder_.forward(bind, ad::concat(z, bind.tape().constant(actions)));
    return dist::gumbel_softmax(logits, cfg_.temps.action_encoder, gumbel);
  }

  Var decode_state(ad::Binder& bind, const Var& z) { return decoder_.forward(bind, z); }

  Var reward(ad::Binder& bind, const Var& z, const Var& a) {
    return ad::scale(ad::tanh(reward_.forward(bind, ad::concat(z, a))), 0.5);
  }

  /// Decoded ground actions in encoded form (box coordinates); identity mode returns `a`.
  Var decode_action(ad::Binder& bind, const Var& z, const Var& a) {
    if (cfg_.identity_actions()) return a;
    Var u = action_decoder_.forward(bind, ad::concat(z, a));
    Matrix mid(1, cfg_.action_dim()), half(1, cfg_.action_dim());
    for (int i = 0; i < cfg_.action_dim(); ++i) {
      mid(0, i) = 0.5 * (cfg_.actions.lower[static_cast<std::size_t>(i)] + cfg_.actions.upper[static_cast<std::size_t>(i)]);
      half(0, i) = 0.5 * (cfg_.actions.upper[static_cast<std::size_t>(i)] - cfg_.actions.lower[static_cast<std::size_t>(i)]);
    }
    const Eigen::Index rows = u.rows();
    return ad::add(ad::mul_const(u, half.replicate(rows, 1)), bind.tape().constant(mid.replicate(rows, 1)));
  }

  /// Relaxed successor sample z* ~ P(. | z, a); `noise` holds logistic draws.
  Var transition_sample(ad::Binder& bind, const Var& z, const Var& a, const Matrix& noise) {
    return transition_.sample_relaxed(bind, ad::concat(z, a), cfg_.temps.transition, noise);
  }

  /// Relaxed latent-policy sample; `gumbel` holds Gumbel draws.
  Var policy_sample(ad::Binder& bind, const Var& z, const Matrix& gumbel) {
    if (n_actions() == 1) return bind.tape().constant(Matrix::Ones(gumbel.rows(), 1));
    return dist::gumbel_softmax(policy_.forward(bind, z), cfg_.temps.policy, gumbel);
  }

  /// Relaxed sample of the steady-state prior: label bits from the
  /// autoregressive prior, remaining bits with logits fixed to 0.
  Var prior_sample(ad::Binder& bind, const Matrix& noise) {
    ad::Tape& tape = bind.tape();
    const Eigen::Index rows = noise.rows();
    const int ap = cfg_.ap_bits(), fb = cfg_.free_bits();
    std::vector<Var> parts;
    if (ap > 0) parts.push_back(prior_.sample_relaxed(bind, tape.constant(Matrix(rows, 0)), cfg_.temps.prior, noise.leftCols(ap)));
    if (fb > 0) parts.push_back(dist::relaxed_bernoulli(tape.constant(Matrix::Zero(rows, fb)), cfg_.temps.prior, noise.rightCols(fb)));
    return parts.size() == 1 ? parts[0] : ad::concat(parts[0], parts[1]);
  }

  // ---- persistence ----

  [[nodiscard]] nlohmann::json to_json() {
    return {{"config", cfg_.to_json()}, {"z_init", z_init_}, {"parameters", ad::save_parameters(parameters())}};
  }
  static LatentModel from_json(const nlohmann::json& j) {
    LatentModel m(LatentConfig::from_json(j.at("config")), 0);
    try {
      ad::load_parameters(m.parameters(), j.at("parameters"));
      m.z_init_ = j.at("z_init").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("malformed model file: ") + e.what());
    }
    return m;
  }

 private:
  [[nodiscard]] Matrix context(std::uint64_t z, int abar) const {
    Matrix c(1, cfg_.n_bits + n_actions());
    c << bits(z), dist::one_hot(std::vector<int>{abar}, n_actions());
    return c;
  }
  void check_action(int abar) const {
    if (abar < 0 || abar >= n_actions()) throw InvalidAction("latent action " + std::to_string(abar) + " out of range");
  }
  void check_labels(const env::Labels& l) const {
    if (static_cast<int>(l.size()) != cfg_.ap_bits())
      throw DimensionMismatch("expected " + std::to_string(cfg_.ap_bits()) + " labels, got " + std::to_string(l.size()));
  }
  void check_state(const env::State& s) const {
    if (s.size() != cfg_.state_dim)
      throw DimensionMismatch("expected a state of dimension " + std::to_string(cfg_.state_dim) + ", got " + std::to_string(s.size()));
  }

  LatentConfig cfg_;
  ad::Mlp encoder_, decoder_, reward_, policy_, action_encoder_, action_decoder_;
  dist::BernoulliFlow transition_, prior_;
  std::uint64_t z_init_ = 0;
};

}  // namespace waemdp::latent
