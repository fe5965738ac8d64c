#pragma once

#include <memory>
#include <vector>

#include <nlohmann/json.hpp>

#include "waemdp/env/policy.hpp"
#include "waemdp/env/wrappers.hpp"

namespace waemdp::env {

/// Draws consecutive transitions of the reset-augmented chain under a policy,
/// after a burn-in period.
class StationarySampler {
 public:
  StationarySampler(std::shared_ptr<const EpsilonResetMdp> mdp, PolicyPtr policy, std::uint64_t seed,
                    long burn_in = 1000)
      : mdp_(std::move(mdp)), policy_(std::move(policy)), rng_(seed), burn_in_(burn_in) {
    if (burn_in_ < 0) throw ConfigError("burn-in must be nonnegative");
    state_ = mdp_->reset_state();
  }

  [[nodiscard]] const EpsilonResetMdp& mdp() const { return *mdp_; }
  [[nodiscard]] std::shared_ptr<const EpsilonResetMdp> mdp_ptr() const { return mdp_; }
  [[nodiscard]] const Policy& policy() const { return *policy_; }
  void set_policy(PolicyPtr p) { policy_ = std::move(p); }
  [[nodiscard]] long burn_in() const { return burn_in_; }
  [[nodiscard]] const State& current() const { return state_; }

  TransitionSample next() {
    if (!burned_) {
      burned_ = true;
      for (long i = 0; i < burn_in_; ++i) advance();
    }
    return advance();
  }

  std::vector<TransitionSample> sample(long n) {
    if (n < 1) throw ConfigError("sample count must be >= 1");
    std::vector<TransitionSample> out;
    out.reserve(static_cast<std::size_t>(n));
    for (long i = 0; i < n; ++i) out.push_back(next());
    return out;
  }

  [[nodiscard]] nlohmann::json to_json() const {
    nlohmann::json j;
    j["state"] = std::vector<double>(state_.data(), state_.data() + state_.size());
    j["ep"] = ep_;
    j["t"] = t_;
    j["burned"] = burned_;
    j["rng"] = save_rng(rng_);
    return j;
  }

  void load_json(const nlohmann::json& j) {
    const std::vector<double> s = j.at("state");
    state_ = Eigen::Map<const State>(s.data(), static_cast<Eigen::Index>(s.size()));
    ep_ = j.at("ep");
    t_ = j.at("t");
    burned_ = j.at("burned");
    load_rng(rng_, j.at("rng"));
  }

 private:
  TransitionSample advance() {
    const Action a = policy_->sample(state_, rng_);
    TransitionSample x = mdp_->step(state_, a, rng_);
    x.ep = ep_;
    x.t = t_++;
    if (mdp_->is_reset(x.s) && !mdp_->is_reset(x.s_next)) {
      ++ep_;
      t_ = 0;
    }
    state_ = x.s_next;
    return x;
  }

  std::shared_ptr<const EpsilonResetMdp> mdp_;
  PolicyPtr policy_;
  Rng rng_;
  long burn_in_;
  bool burned_ = false;
  State state_;
  long ep_ = 0;
  long t_ = 0;
};

/// Bounded FIFO of transitions with uniform sampling with replacement.
class ReplayStore {
 public:
  explicit ReplayStore(std::size_t capacity) : capacity_(capacity) {
    if (capacity_ == 0) throw ConfigError("replay capacity must be positive");
  }

  [[nodiscard]] std::size_t capacity() const { return capacity_; }
  [[nodiscard]] std::size_t size() const { return items_.size(); }
  [[nodiscard]] bool empty() const { return items_.empty(); }
  [[nodiscard]] const TransitionSample& at(std::size_t i) const { return items_.at(i); }

  void add(TransitionSample x) {
    if (items_.size() < capacity_) {
      items_.push_back(std::move(x));
    } else {
      items_[head_] = std::move(x);
      head_ = (head_ + 1) % capacity_;
    }
  }

  std::vector<TransitionSample> sample(std::size_t n, Rng& rng) const {
    if (items_.empty()) throw EmptyBatch("replay store is empty");
    std::vector<TransitionSample> out;
    out.reserve(n);
    std::uniform_int_distribution<std::size_t> pick(0, items_.size() - 1);
    for (std::size_t i = 0; i < n; ++i) out.push_back(items_[pick(rng)]);
    return out;
  }

  /// Contents in insertion order, oldest first.
  [[nodiscard]] std::vector<TransitionSample> contents() const {
    std::vector<TransitionSample> out;
    out.reserve(items_.size());
    for (std::size_t i = 0; i < items_.size(); ++i) out.push_back(items_[(head_ + i) % items_.size()]);
    return out;
  }

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;
  std::vector<TransitionSample> items_;
};

}  // namespace waemdp::env
