#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "waemdp/env/ground_mdp.hpp"

namespace waemdp::env {

/// Affine map of a native reward range [lo, hi] onto [-1/2, 1/2].
class RewardScaler final : public GroundMdp {
 public:
  RewardScaler(GroundMdpPtr inner, double lo, double hi) : inner_(std::move(inner)), lo_(lo), hi_(hi) {
    if (!(hi > lo)) throw ConfigError("reward range must satisfy lo < hi");
  }

  [[nodiscard]] double scale(double r) const { return (r - 0.5 * (lo_ + hi_)) / (hi_ - lo_); }
  [[nodiscard]] double unscale(double r) const { return r * (hi_ - lo_) + 0.5 * (lo_ + hi_); }
  /// Native return of an episode of `length` steps with scaled return `g`.
  [[nodiscard]] double unscale_return(double g, long length) const {
    return g * (hi_ - lo_) + 0.5 * (lo_ + hi_) * static_cast<double>(length);
  }
  [[nodiscard]] double native_lo() const { return lo_; }
  [[nodiscard]] double native_hi() const { return hi_; }
  [[nodiscard]] const GroundMdp& inner() const { return *inner_; }

  [[nodiscard]] std::string name() const override { return inner_->name(); }
  [[nodiscard]] int state_dim() const override { return inner_->state_dim(); }
  [[nodiscard]] ActionSpace action_space() const override { return inner_->action_space(); }
  [[nodiscard]] std::vector<std::string> atomic_props() const override { return inner_->atomic_props(); }
  [[nodiscard]] State initial_state() const override { return inner_->initial_state(); }
  [[nodiscard]] Labels labels(const State& s) const override { return inner_->labels(s); }
  [[nodiscard]] bool is_terminal(const State& s) const override { return inner_->is_terminal(s); }
  [[nodiscard]] bool transition_rewarded() const override { return inner_->transition_rewarded(); }
  [[nodiscard]] std::optional<int> state_index(const State& s) const override { return inner_->state_index(s); }

  StepResult transition(const State& s, const Action& a, Rng& rng) const override {
    StepResult r = inner_->transition(s, a, rng);
    r.reward = scale(r.reward);
    return r;
  }

  [[nodiscard]] std::optional<Distribution> distribution(const State& s, const Action& a) const override {
    auto d = inner_->distribution(s, a);
    if (d) d->reward = scale(d->reward);
    return d;
  }

 private:
  GroundMdpPtr inner_;
  double lo_, hi_;
};

namespace detail {

// Shared plumbing of wrappers that append one flag coordinate and ensure a
// `reset` proposition exists.
class FlaggedWrapper : public GroundMdp {
 public:
  explicit FlaggedWrapper(GroundMdpPtr inner) : inner_(std::move(inner)) {
    aps_ = inner_->atomic_props();
    reset_ap_ = inner_->prop_index(kResetProp);
    added_ap_ = reset_ap_ < 0;
    if (added_ap_) {
      reset_ap_ = static_cast<int>(aps_.size());
      aps_.push_back(kResetProp);
    }
  }

  [[nodiscard]] const GroundMdp& inner() const { return *inner_; }
  [[nodiscard]] GroundMdpPtr inner_ptr() const { return inner_; }
  [[nodiscard]] int state_dim() const override { return inner_->state_dim() + 1; }
  [[nodiscard]] ActionSpace action_space() const override { return inner_->action_space(); }
  [[nodiscard]] std::vector<std::string> atomic_props() const override { return aps_; }
  [[nodiscard]] bool transition_rewarded() const override { return inner_->transition_rewarded(); }

  [[nodiscard]] bool flagged(const State& s) const {
    check_dim(s);
    return s(s.size() - 1) > 0.5;
  }
  [[nodiscard]] State flagged_state() const {
    State s = State::Zero(state_dim());
    s(s.size() - 1) = 1.0;
    return s;
  }
  [[nodiscard]] State lift(const State& inner_state) const {
    State s(state_dim());
    s << inner_state, 0.0;
    return s;
  }
  [[nodiscard]] State lower(const State& s) const { return s.head(s.size() - 1); }

  [[nodiscard]] Labels labels(const State& s) const override {
    if (flagged(s)) {
      Labels l(aps_.size(), 0);
      l[static_cast<std::size_t>(reset_ap_)] = 1;
      return l;
    }
    Labels l = inner_->labels(lower(s));
    if (added_ap_) l.push_back(0);
    return l;
  }

  [[nodiscard]] std::optional<int> state_index(const State& s) const override {
    if (flagged(s)) return -1;
    return inner_->state_index(lower(s));
  }

 protected:
  void check_dim(const State& s) const {
    if (s.size() != state_dim())
      throw DimensionMismatch("state has " + std::to_string(s.size()) + " coordinates, expected " + std::to_string(state_dim()));
  }

  GroundMdpPtr inner_;
  std::vector<std::string> aps_;
  int reset_ap_ = -1;
  bool added_ap_ = false;
};

}  // namespace detail

/// Ergodic augmentation: every episode end enters a reset state, which is left
/// for the initial state with probability 1 - eps at each step.
///
/// States carry one extra coordinate, 1 exactly in the reset state.
class EpsilonResetMdp final : public detail::FlaggedWrapper {
 public:
  EpsilonResetMdp(GroundMdpPtr inner, double eps) : FlaggedWrapper(std::move(inner)), eps_(eps) {
    if (!(eps >= 0.0 && eps < 1.0)) throw ConfigError("reset epsilon must lie in [0, 1)");
  }

  [[nodiscard]] double epsilon() const { return eps_; }
  [[nodiscard]] std::string name() const override { return inner_->name(); }
  [[nodiscard]] State initial_state() const override { return lift(inner_->initial_state()); }
  [[nodiscard]] State reset_state() const { return flagged_state(); }
  [[nodiscard]] bool is_reset(const State& s) const { return flagged(s); }
  [[nodiscard]] bool is_terminal(const State&) const override { return false; }

  StepResult transition(const State& s, const Action& a, Rng& rng) const override {
    if (flagged(s)) return {bernoulli(rng, eps_) ? reset_state() : initial_state(), 0.0};
    const State in = lower(s);
    StepResult r = inner_->transition(in, a, rng);
    r.next = inner_->is_terminal(in) ? reset_state() : lift(r.next);
    return r;
  }

  [[nodiscard]] std::optional<Distribution> distribution(const State& s, const Action& a) const override {
    if (flagged(s)) {
      Distribution d;
      if (eps_ > 0.0) d.outcomes.push_back({reset_state(), eps_});
      d.outcomes.push_back({initial_state(), 1.0 - eps_});
      return d;
    }
    const State in = lower(s);
    auto inner = inner_->distribution(in, a);
    if (!inner) return std::nullopt;
    if (inner_->is_terminal(in)) return Distribution{{{reset_state(), 1.0}}, inner->reward};
    for (auto& o : inner->outcomes) o.next = lift(o.next);
    return inner;
  }

 private:
  double eps_;
};

/// Adds a dummy initial state whose successor is drawn from d_I whatever the action.
class InitialDistributionMdp final : public detail::FlaggedWrapper {
 public:
  using Sampler = std::function<State(Rng&)>;

  /// `support` optionally lists d_I exactly, enabling exact enumeration.
  InitialDistributionMdp(GroundMdpPtr inner, Sampler d_init, std::vector<Outcome> support = {})
      : FlaggedWrapper(std::move(inner)), d_init_(std::move(d_init)), support_(std::move(support)) {}

  [[nodiscard]] std::string name() const override { return inner_->name(); }
  [[nodiscard]] State initial_state() const override { return flagged_state(); }
  [[nodiscard]] bool is_dummy(const State& s) const { return flagged(s); }
  [[nodiscard]] bool is_terminal(const State& s) const override { return !flagged(s) && inner_->is_terminal(lower(s)); }

  StepResult transition(const State& s, const Action& a, Rng& rng) const override {
    if (flagged(s)) return {lift(d_init_(rng)), 0.0};
    StepResult r = inner_->transition(lower(s), a, rng);
    r.next = lift(r.next);
    return r;
  }

  [[nodiscard]] std::optional<Distribution> distribution(const State& s, const Action& a) const override {
    if (flagged(s)) {
      if (support_.empty()) return std::nullopt;
      Distribution d;
      for (const auto& o : support_) d.outcomes.push_back({lift(o.next), o.prob});
      return d;
    }
    auto inner = inner_->distribution(lower(s), a);
    if (inner)
      for (auto& o : inner->outcomes) o.next = lift(o.next);
    return inner;
  }

 private:
  Sampler d_init_;
  std::vector<Outcome> support_;
};

}  // namespace waemdp::env
