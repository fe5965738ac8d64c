#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "waemdp/errors.hpp"
#include "waemdp/rng.hpp"

namespace waemdp::env {

using State = Eigen::VectorXd;
using Action = std::variant<int, std::vector<double>>;
using Labels = std::vector<int>;

inline constexpr double kRewardBound = 0.5;
inline constexpr const char* kResetProp = "reset";

struct ActionSpace {
  bool discrete = true;
  int n = 0;                   // number of discrete actions
  std::vector<double> lower;   // box bounds
  std::vector<double> upper;

  static ActionSpace Discrete(int k) { return ActionSpace{true, k, {}, {}}; }
  static ActionSpace Box(std::vector<double> lo, std::vector<double> hi) {
    if (lo.size() != hi.size()) throw ConfigError("box bounds differ in length");
    return ActionSpace{false, 0, std::move(lo), std::move(hi)};
  }

  /// Discrete: number of actions; box: dimension.
  [[nodiscard]] int size() const { return discrete ? n : static_cast<int>(lower.size()); }

  [[nodiscard]] bool contains(const Action& a) const {
    if (discrete) {
      const int* i = std::get_if<int>(&a);
      return i != nullptr && *i >= 0 && *i < n;
    }
    const auto* v = std::get_if<std::vector<double>>(&a);
    if (v == nullptr || v->size() != lower.size()) return false;
    for (std::size_t k = 0; k < v->size(); ++k)
      if (!((*v)[k] >= lower[k] && (*v)[k] <= upper[k])) return false;
    return true;
  }

  /// Action as a feature row: one-hot for discrete spaces, the raw vector otherwise.
  [[nodiscard]] Eigen::RowVectorXd encode(const Action& a) const {
    if (discrete) {
      Eigen::RowVectorXd v = Eigen::RowVectorXd::Zero(n);
      v(std::get<int>(a)) = 1.0;
      return v;
    }
    const auto& x = std::get<std::vector<double>>(a);
    return Eigen::Map<const Eigen::RowVectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
  }
};

inline std::string describe(const Action& a) {
  if (const int* i = std::get_if<int>(&a)) return std::to_string(*i);
  std::string s = "[";
  for (double v : std::get<std::vector<double>>(a)) s += (s.size() > 1 ? ", " : "") + std::to_string(v);
  return s + "]";
}

/// One (s, a, r, s', l') tuple; `label` additionally records the labels of s.
struct TransitionSample {
  State s;
  Action a;
  double r = 0.0;
  State s_next;
  Labels label;
  Labels label_next;
  long ep = 0;
  long t = 0;
};

struct StepResult {
  State next;
  double reward = 0.0;
};

/// Exact successor distribution of a finite kernel at one (s, a).
struct Outcome {
  State next;
  double prob = 0.0;
};
struct Distribution {
  std::vector<Outcome> outcomes;
  double reward = 0.0;
};

/// A labeled MDP with a stochastic kernel.
///
/// `transition` must be a pure function of its arguments and the RNG state.
/// A terminal state ends the episode once acted upon; the reset wrapper then
/// routes the successor to the reset state.
class GroundMdp {
 public:
  virtual ~GroundMdp() = default;

  [[nodiscard]] virtual std::string name() const = 0;
  [[nodiscard]] virtual int state_dim() const = 0;
  [[nodiscard]] virtual ActionSpace action_space() const = 0;
  [[nodiscard]] virtual std::vector<std::string> atomic_props() const = 0;
  [[nodiscard]] virtual State initial_state() const = 0;
  [[nodiscard]] virtual Labels labels(const State& s) const = 0;
  [[nodiscard]] virtual bool is_terminal(const State&) const { return false; }
  /// True when rewards depend on the successor as well, R(s, a, s').
  [[nodiscard]] virtual bool transition_rewarded() const { return false; }
  /// Index of a state for finite MDPs.
  [[nodiscard]] virtual std::optional<int> state_index(const State&) const { return std::nullopt; }

  virtual StepResult transition(const State& s, const Action& a, Rng& rng) const = 0;

  /// Exact successor distribution, when the kernel has finite support.
  [[nodiscard]] virtual std::optional<Distribution> distribution(const State&, const Action&) const {
    return std::nullopt;
  }

  /// Validated step producing a sample; rewards outside [-1/2, 1/2] are rejected.
  TransitionSample step(const State& s, const Action& a, Rng& rng) const {
    if (!action_space().contains(a)) throw InvalidAction("action " + describe(a) + " is outside the action space of " + name());
    StepResult res = transition(s, a, rng);
    if (!(std::abs(res.reward) <= kRewardBound))
      throw RewardOutOfRange("reward " + std::to_string(res.reward) + " of " + name() +
                             " lies outside [-1/2, 1/2]; wrap the environment in RewardScaler with its native range");
    TransitionSample out;
    out.s = s;
    out.a = a;
    out.r = res.reward;
    out.label = labels(s);
    out.label_next = labels(res.next);
    out.s_next = std::move(res.next);
    return out;
  }

  [[nodiscard]] int prop_index(const std::string& prop) const {
    const auto aps = atomic_props();
    for (std::size_t i = 0; i < aps.size(); ++i)
      if (aps[i] == prop) return static_cast<int>(i);
    return -1;
  }
};

using GroundMdpPtr = std::shared_ptr<const GroundMdp>;

}  // namespace waemdp::env
