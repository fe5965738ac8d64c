#pragma once

// Min-max training loop: the critics ascend the penalized dual estimates every
// step; encoders, decoders, and the latent MDP descend reconstruction plus the
// scaled regularizers every m steps.

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "waemdp/env/sampler.hpp"
#include "waemdp/env/trace_io.hpp"
#include "waemdp/wae/objective.hpp"

namespace waemdp::wae {

struct TrainingConfig {
  int batch = 128;
  long steps = 1000;
  int m = 5;  // one min-player update per m max-player updates
  double gp_coef = 10.0;
  double beta_ss = 10.0;
  double beta_trans = 10.0;
  ad::AdamConfig min_adam{1e-3, 0.9, 0.999, 1e-8};
  ad::AdamConfig max_adam{1e-3, 0.5, 0.9, 1e-8};
  CriticConfig critic;
  std::size_t replay_capacity = 20000;
  long prefill = 2000;  // transitions drawn before the first step
  long burn_in = 1000;
  std::uint64_t seed = 0;

  void validate() const {
    if (batch < 1) throw ConfigError("batch must be positive");
    if (steps < 0) throw ConfigError("steps must be nonnegative");
    if (m < 1) throw ConfigError("m must be positive");
    if (!(gp_coef > 0.0)) throw ConfigError("gradient penalty coefficient must be positive");
    if (!(beta_ss >= 0.0) || !(beta_trans >= 0.0)) throw ConfigError("regularizer scales must be nonnegative");
    if (prefill < 1) throw ConfigError("prefill must be positive");
    if (replay_capacity == 0) throw ConfigError("replay capacity must be positive");
  }

  /// Smallest beta for which the latent-metric guarantee holds at temperature lambda.
  static double min_beta_for_metric(double lambda) { return 1.0 / lambda; }

  [[nodiscard]] nlohmann::json to_json() const {
    auto adam = [](const ad::AdamConfig& a) { return nlohmann::json{{"lr", a.lr}, {"beta1", a.beta1}, {"beta2", a.beta2}, {"eps", a.eps}}; };
    return {{"batch", batch}, {"steps", steps}, {"m", m}, {"gp_coef", gp_coef}, {"beta_ss", beta_ss}, {"beta_trans", beta_trans},
            {"min_adam", adam(min_adam)}, {"max_adam", adam(max_adam)}, {"critic", critic.to_json()},
            {"replay_capacity", replay_capacity}, {"prefill", prefill}, {"burn_in", burn_in}, {"seed", seed}};
  }
  static TrainingConfig from_json(const nlohmann::json& j) {
    auto adam = [](const nlohmann::json& a) { return ad::AdamConfig{a.at("lr"), a.at("beta1"), a.at("beta2"), a.at("eps")}; };
    TrainingConfig c;
    try {
      c.batch = j.at("batch");
      c.steps = j.at("steps");
      c.m = j.at("m");
      c.gp_coef = j.at("gp_coef");
      c.beta_ss = j.at("beta_ss");
      c.beta_trans = j.at("beta_trans");
      c.min_adam = adam(j.at("min_adam"));
      c.max_adam = adam(j.at("max_adam"));
      c.critic = CriticConfig::from_json(j.at("critic"));
      c.replay_capacity = j.at("replay_capacity");
      c.prefill = j.at("prefill");
      c.burn_in = j.at("burn_in");
      c.seed = j.at("seed");
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("malformed training config: ") + e.what());
    }
    c.validate();
    return c;
  }
};

struct MetricsRow {
  long step = 0;
  double recon = 0.0;
  double w_ss = 0.0;
  double w_trans = 0.0;
  double gp = 0.0;
  double wall_ms = 0.0;
};

inline void write_metrics_header(std::ostream& out) { out << "step,recon,w_ss,w_trans,gp,wall_ms\n"; }
inline void write_metrics_row(std::ostream& out, const MetricsRow& r) {
  out << r.step << ',' << r.recon << ',' << r.w_ss << ',' << r.w_trans << ',' << r.gp << ',' << r.wall_ms << '\n';
}

class Trainer {
 public:
  Trainer(latent::LatentModel model, std::shared_ptr<const env::EpsilonResetMdp> env, env::PolicyPtr policy, TrainingConfig cfg)
      : model_(std::move(model)), cfg_(std::move(cfg)), sampler_(env, std::move(policy), derive_seed(cfg_.seed, 1), cfg_.burn_in),
        replay_(cfg_.replay_capacity), rng_(derive_seed(cfg_.seed, 2)), min_adam_(cfg_.min_adam), max_adam_(cfg_.max_adam) {
    cfg_.validate();
    const auto& mc = model_.config();
    if (env->atomic_props() != mc.atomic_props) throw DimensionMismatch("model atomic propositions differ from the environment's");
    if (env->state_dim() != mc.state_dim) throw DimensionMismatch("model state_dim differs from the environment's");
    Rng critic_rng(derive_seed(cfg_.seed, 3));
    critics_ = Critics(mc, cfg_.critic, critic_rng);
    for (long i = 0; i < cfg_.prefill; ++i) replay_.add(sampler_.next());
    update_initial_state();
  }

  Trainer(const Trainer&) = delete;
  Trainer& operator=(const Trainer&) = delete;

  [[nodiscard]] latent::LatentModel& model() { return model_; }
  [[nodiscard]] const latent::LatentModel& model() const { return model_; }
  [[nodiscard]] Critics& critics() { return critics_; }
  [[nodiscard]] const TrainingConfig& config() const { return cfg_; }
  [[nodiscard]] long step_count() const { return step_; }
  [[nodiscard]] long min_updates() const { return min_updates_; }
  [[nodiscard]] long max_updates() const { return max_updates_; }
  [[nodiscard]] const env::ReplayStore& replay() const { return replay_; }

  /// One max-player update, plus a min-player update when the step is a multiple of m.
  MetricsRow step() {
    const auto t0 = std::chrono::steady_clock::now();
    replay_.add(sampler_.next());
    const auto xs = replay_.sample(static_cast<std::size_t>(cfg_.batch), rng_);
    const Batch b = make_batch(xs, model_.config());
    const Noise noise = Noise::draw(b.size(), model_.n_bits(), model_.n_actions(), rng_);

    ad::Tape tape;
    ad::Binder bind(tape);
    const Embedded e = embed_transition(model_, bind, b, noise);
    Var recon = reconstruction_loss(model_, bind, b, e);
    DualTerm wss = steady_state_regularizer(model_, critics_, bind, e, noise);
    DualTerm wtr = transition_regularizer(critics_, bind, b, e);
    Var gp = ad::add(steady_penalty(critics_, bind, wss, rng_), transition_penalty(critics_, bind, wtr, rng_));
    Var w = ad::add(ad::scale(wss.estimate, cfg_.beta_ss), ad::scale(wtr.estimate, cfg_.beta_trans));
    Var max_obj = ad::sub(w, ad::scale(gp, cfg_.gp_coef / static_cast<double>(b.size())));

    MetricsRow row;
    row.step = step_;
    row.recon = recon.scalar();
    row.w_ss = wss.estimate.scalar();
    row.w_trans = wtr.estimate.scalar();
    row.gp = gp.scalar() / static_cast<double>(b.size());

    const bool min_turn = step_ % cfg_.m == 0;
    const auto critic_params = critics_.parameters();
    const auto critic_grads = tape.gradient_values(max_obj, bind.vars(critic_params));
    std::vector<ad::Parameter*> model_params;
    std::vector<Matrix> model_grads;
    if (min_turn) {
      model_params = model_.parameters();
      model_grads = tape.gradient_values(ad::add(recon, w), bind.vars(model_params));
    }
    if (!finite(row, critic_grads) || !finite(row, model_grads)) {
      if (!divergence_path_.empty()) save_checkpoint(divergence_path_);
      throw DivergenceDetected("non-finite loss or gradient at step " + std::to_string(step_) +
                               (divergence_path_.empty() ? std::string() : "; last good state saved to " + divergence_path_));
    }
    max_adam_.step(critic_params, critic_grads, ad::Direction::Ascend);
    ++max_updates_;
    if (min_turn) {
      min_adam_.step(model_params, model_grads, ad::Direction::Descend);
      ++min_updates_;
      update_initial_state();
    }
    ++step_;
    row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return row;
  }

  /// Runs until `cfg.steps` total steps, reporting each row.
  void run(const std::function<void(const MetricsRow&)>& on_row = {}) {
    while (step_ < cfg_.steps) {
      const MetricsRow r = step();
      if (on_row) on_row(r);
    }
  }

  /// Where the last good state is written when training diverges.
  void set_divergence_checkpoint(std::string path) { divergence_path_ = std::move(path); }

  [[nodiscard]] nlohmann::json checkpoint() {
    nlohmann::json replay = nlohmann::json::array();
    for (const auto& x : replay_.contents()) replay.push_back(env::to_json(x));
    return {{"model", model_.to_json()},
            {"critics", ad::save_parameters(critics_.parameters())},
            {"training", cfg_.to_json()},
            {"step", step_},
            {"min_updates", min_updates_},
            {"max_updates", max_updates_},
            {"min_adam", min_adam_.to_json()},
            {"max_adam", max_adam_.to_json()},
            {"sampler", sampler_.to_json()},
            {"replay", replay},
            {"rng", save_rng(rng_)}};
  }

  void save_checkpoint(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write checkpoint " + path);
    out << checkpoint().dump() << '\n';
  }

  /// Restores a trainer from a checkpoint; `steps` may extend the run.
  static std::unique_ptr<Trainer> resume(const nlohmann::json& j, std::shared_ptr<const env::EpsilonResetMdp> env,
                                         env::PolicyPtr policy, std::optional<long> steps = std::nullopt) {
    TrainingConfig cfg = TrainingConfig::from_json(j.at("training"));
    if (steps) cfg.steps = *steps;
    cfg.prefill = 1;  // replaced by the saved replay below
    auto t = std::unique_ptr<Trainer>(new Trainer(latent::LatentModel::from_json(j.at("model")), std::move(env), std::move(policy), cfg));
    try {
      ad::load_parameters(t->critics_.parameters(), j.at("critics"));
      t->cfg_.prefill = j.at("training").at("prefill");
      t->step_ = j.at("step");
      t->min_updates_ = j.at("min_updates");
      t->max_updates_ = j.at("max_updates");
      t->min_adam_ = ad::Adam::from_json(j.at("min_adam"));
      t->max_adam_ = ad::Adam::from_json(j.at("max_adam"));
      t->sampler_.load_json(j.at("sampler"));
      t->replay_ = env::ReplayStore(t->cfg_.replay_capacity);
      for (const auto& x : j.at("replay")) t->replay_.add(env::sample_from_json(x));
      load_rng(t->rng_, j.at("rng"));
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("malformed checkpoint: ") + e.what());
    }
    return t;
  }

 private:
  static bool finite(const MetricsRow& r, const std::vector<Matrix>& grads) {
    if (!std::isfinite(r.recon) || !std::isfinite(r.w_ss) || !std::isfinite(r.w_trans) || !std::isfinite(r.gp)) return false;
    for (const Matrix& g : grads)
      if (!g.allFinite()) return false;
    return true;
  }

  void update_initial_state() {
    const auto& env = sampler_.mdp();
    const env::State s0 = env.initial_state();
    model_.set_initial_state(model_.embed(s0, env.labels(s0)));
  }

  latent::LatentModel model_;
  TrainingConfig cfg_;
  env::StationarySampler sampler_;
  env::ReplayStore replay_;
  Rng rng_;
  ad::Adam min_adam_;
  ad::Adam max_adam_;
  Critics critics_;
  long step_ = 0;
  long min_updates_ = 0;
  long max_updates_ = 0;
  std::string divergence_path_;
};

}  // namespace waemdp::wae
