#pragma once

// Built-in desk-scale environments and helpers to run episodes and to
// enumerate finite environments into explicit tables.

#include <cmath>
#include <deque>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "waemdp/env/policy.hpp"
#include "waemdp/env/tabular_mdp.hpp"
#include "waemdp/env/wrappers.hpp"

namespace waemdp::env {

struct GridWorldConfig {
  int width = 5;
  int height = 5;
  std::pair<int, int> start{0, 0};
  std::set<std::pair<int, int>> goal{{4, 4}};
  std::set<std::pair<int, int>> unsafe{{1, 2}, {2, 2}, {3, 2}};
  double slip = 0.1;
  double step_reward = -0.01;
  double goal_reward = 1.0;
  double unsafe_reward = -1.0;
};

/// Labeled gridworld. Actions: 0 up, 1 right, 2 down, 3 left. With probability
/// `slip` the move is replaced by one of the two perpendicular moves. Goal and
/// unsafe cells are terminal; acting in them yields their reward.
///
/// States are (x / (width - 1), y / (height - 1)); native rewards lie in [-1, 1].
class GridWorld final : public GroundMdp {
 public:
  explicit GridWorld(GridWorldConfig cfg = {}) : cfg_(std::move(cfg)) {
    if (cfg_.width < 2 || cfg_.height < 2) throw ConfigError("gridworld needs at least 2x2 cells");
  }

  [[nodiscard]] const GridWorldConfig& config() const { return cfg_; }
  [[nodiscard]] std::string name() const override { return "gridworld"; }
  [[nodiscard]] int state_dim() const override { return 2; }
  [[nodiscard]] ActionSpace action_space() const override { return ActionSpace::Discrete(4); }
  [[nodiscard]] std::vector<std::string> atomic_props() const override { return {"goal", "unsafe"}; }
  [[nodiscard]] State initial_state() const override { return feature(cfg_.start); }

  [[nodiscard]] State feature(std::pair<int, int> c) const {
    State s(2);
    s << static_cast<double>(c.first) / (cfg_.width - 1), static_cast<double>(c.second) / (cfg_.height - 1);
    return s;
  }
  [[nodiscard]] std::pair<int, int> cell(const State& s) const {
    if (s.size() != 2) throw DimensionMismatch("gridworld states have two coordinates");
    const int x = static_cast<int>(std::lround(s(0) * (cfg_.width - 1)));
    const int y = static_cast<int>(std::lround(s(1) * (cfg_.height - 1)));
    if (x < 0 || y < 0 || x >= cfg_.width || y >= cfg_.height) throw DimensionMismatch("state outside the grid");
    return {x, y};
  }
  [[nodiscard]] std::optional<int> state_index(const State& s) const override {
    const auto c = cell(s);
    return c.second * cfg_.width + c.first;
  }

  [[nodiscard]] Labels labels(const State& s) const override {
    const auto c = cell(s);
    return {cfg_.goal.count(c) ? 1 : 0, cfg_.unsafe.count(c) ? 1 : 0};
  }
  [[nodiscard]] bool is_terminal(const State& s) const override {
    const auto c = cell(s);
    return cfg_.goal.count(c) > 0 || cfg_.unsafe.count(c) > 0;
  }

  [[nodiscard]] double reward(std::pair<int, int> c) const {
    if (cfg_.goal.count(c)) return cfg_.goal_reward;
    if (cfg_.unsafe.count(c)) return cfg_.unsafe_reward;
    return cfg_.step_reward;
  }

  [[nodiscard]] std::optional<Distribution> distribution(const State& s, const Action& a) const override {
    const auto c = cell(s);
    const int act = std::get<int>(a);
    Distribution d;
    d.reward = reward(c);
    if (is_terminal(s)) {
      d.outcomes.push_back({s, 1.0});
      return d;
    }
    std::map<std::pair<int, int>, double> mass;
    mass[move(c, act)] += 1.0 - cfg_.slip;
    mass[move(c, (act + 1) % 4)] += cfg_.slip / 2;
    mass[move(c, (act + 3) % 4)] += cfg_.slip / 2;
    for (const auto& [cc, p] : mass)
      if (p > 0.0) d.outcomes.push_back({feature(cc), p});
    return d;
  }

  StepResult transition(const State& s, const Action& a, Rng& rng) const override {
    const auto c = cell(s);
    if (is_terminal(s)) return {s, reward(c)};
    int act = std::get<int>(a);
    const double u = uniform01(rng);
    if (u < cfg_.slip / 2) {
      act = (act + 1) % 4;
    } else if (u < cfg_.slip) {
      act = (act + 3) % 4;
    }
    return {feature(move(c, act)), reward(c)};
  }

  [[nodiscard]] std::pair<int, int> move(std::pair<int, int> c, int act) const {
    static constexpr int dx[] = {0, 1, 0, -1};
    static constexpr int dy[] = {-1, 0, 1, 0};
    const int x = c.first + dx[act];
    const int y = c.second + dy[act];
    if (x < 0 || y < 0 || x >= cfg_.width || y >= cfg_.height) return c;
    return {x, y};
  }

 private:
  GridWorldConfig cfg_;
};

/// Point mass on a line: the cliff lies at x <= 0, the goal at x >= 1.
/// Actions 0 (left) and 1 (right) move by 0.1 with Gaussian noise.
class CliffWalk final : public GroundMdp {
 public:
  [[nodiscard]] std::string name() const override { return "cliff-walk"; }
  [[nodiscard]] int state_dim() const override { return 1; }
  [[nodiscard]] ActionSpace action_space() const override { return ActionSpace::Discrete(2); }
  [[nodiscard]] std::vector<std::string> atomic_props() const override { return {"goal", "unsafe"}; }
  [[nodiscard]] State initial_state() const override { return State::Constant(1, 0.3); }
  [[nodiscard]] Labels labels(const State& s) const override { return {s(0) >= 1.0 ? 1 : 0, s(0) <= 0.0 ? 1 : 0}; }
  [[nodiscard]] bool is_terminal(const State& s) const override { return s(0) >= 1.0 || s(0) <= 0.0; }

  StepResult transition(const State& s, const Action& a, Rng& rng) const override {
    const double r = s(0) >= 1.0 ? 1.0 : (s(0) <= 0.0 ? -1.0 : -0.01);
    if (is_terminal(s)) return {s, r};
    const double dir = std::get<int>(a) == 1 ? 1.0 : -1.0;
    State n(1);
    n << std::clamp(s(0) + 0.1 * dir + 0.02 * standard_normal(rng), -0.1, 1.1);
    return {n, r};
  }
};

/// Point mass in [-1, 1]^2 steered by a heading u in [-1, 1] (angle pi u).
/// The goal is a disc around (0.8, 0.8); an unsafe disc sits at the origin.
class PointMass2D final : public GroundMdp {
 public:
  [[nodiscard]] std::string name() const override { return "point-mass"; }
  [[nodiscard]] int state_dim() const override { return 2; }
  [[nodiscard]] ActionSpace action_space() const override { return ActionSpace::Box({-1.0}, {1.0}); }
  [[nodiscard]] std::vector<std::string> atomic_props() const override { return {"goal", "unsafe"}; }
  [[nodiscard]] State initial_state() const override { return (State(2) << -0.8, -0.8).finished(); }
  [[nodiscard]] static bool in_goal(const State& s) { return std::hypot(s(0) - 0.8, s(1) - 0.8) < 0.25; }
  [[nodiscard]] static bool in_unsafe(const State& s) { return std::hypot(s(0), s(1)) < 0.3; }
  [[nodiscard]] Labels labels(const State& s) const override { return {in_goal(s) ? 1 : 0, in_unsafe(s) ? 1 : 0}; }
  [[nodiscard]] bool is_terminal(const State& s) const override { return in_goal(s) || in_unsafe(s); }

  StepResult transition(const State& s, const Action& a, Rng& rng) const override {
    const double r = in_goal(s) ? 1.0 : (in_unsafe(s) ? -1.0 : -0.01);
    if (is_terminal(s)) return {s, r};
    const double theta = M_PI * std::get<std::vector<double>>(a).at(0);
    State n(2);
    n << s(0) + 0.15 * std::cos(theta) + 0.02 * standard_normal(rng),
        s(1) + 0.15 * std::sin(theta) + 0.02 * standard_normal(rng);
    return {n.cwiseMax(-1.0).cwiseMin(1.0), r};
  }
};

struct EnvironmentBundle {
  std::shared_ptr<const RewardScaler> env;  // rewards in [-1/2, 1/2]
  PolicyPtr scripted;                       // acts on reset-augmented states
};

inline std::vector<std::string> environment_names() { return {"gridworld", "cliff-walk", "point-mass"}; }

/// Built-in environment by name, or a tabular MDP loaded from a JSON file.
inline EnvironmentBundle make_environment(const std::string& name) {
  if (name == "gridworld") {
    auto grid = std::make_shared<GridWorld>();
    auto scaled = std::make_shared<RewardScaler>(grid, -1.0, 1.0);
    // Move right along the top row, then down the right column.
    const int last = grid->config().width - 1;
    auto pi = std::make_shared<DiscretePolicy>(PolicyKind::Scripted, [last](const State& s) {
      const bool right_edge = std::lround(s(0) * last) >= last;
      return right_edge ? std::vector<double>{0, 0, 1, 0} : std::vector<double>{0, 1, 0, 0};
    });
    return {scaled, pi};
  }
  if (name == "cliff-walk") {
    auto scaled = std::make_shared<RewardScaler>(std::make_shared<CliffWalk>(), -1.0, 1.0);
    auto pi = std::make_shared<DiscretePolicy>(PolicyKind::Scripted, [](const State&) { return std::vector<double>{0, 1}; });
    return {scaled, pi};
  }
  if (name == "point-mass") {
    auto scaled = std::make_shared<RewardScaler>(std::make_shared<PointMass2D>(), -1.0, 1.0);
    auto pi = std::make_shared<SamplingPolicy>(PolicyKind::Scripted, [](const State& s, Rng&) {
      return Action(std::vector<double>{s(0) < 0.75 ? 0.0 : 0.5});
    });
    return {scaled, pi};
  }
  if (name.size() > 5 && name.substr(name.size() - 5) == ".json") {
    TabularMdp m = TabularMdp::load(name);
    const int n_actions = m.n_actions;
    auto env = std::make_shared<TabularEnv>(std::move(m), name);
    auto scaled = std::make_shared<RewardScaler>(env, -0.5, 0.5);
    return {scaled, uniform_policy(ActionSpace::Discrete(n_actions))};
  }
  std::string known;
  for (const auto& n : environment_names()) known += (known.empty() ? "" : ", ") + n;
  throw ConfigError("unknown environment '" + name + "' (known: " + known + ", or a tabular MDP .json file)");
}

/// Explicit table of a finite environment, enumerated from its initial state.
struct Tabulation {
  TabularMdp mdp;
  std::vector<State> states;
  std::map<std::vector<long long>, int> index;

  static std::vector<long long> key(const State& s) {
    std::vector<long long> k(static_cast<std::size_t>(s.size()));
    for (Eigen::Index i = 0; i < s.size(); ++i) k[static_cast<std::size_t>(i)] = std::llround(s(i) * 1e9);
    return k;
  }
  [[nodiscard]] int index_of(const State& s) const {
    auto it = index.find(key(s));
    if (it == index.end()) throw DimensionMismatch("state not in tabulation");
    return it->second;
  }
};

inline Tabulation tabulate(const GroundMdp& env, std::size_t max_states = 100000, const std::vector<State>& extra_roots = {}) {
  const ActionSpace space = env.action_space();
  if (!space.discrete) throw ConfigError("tabulation requires discrete actions");
  Tabulation tab;
  std::deque<int> frontier;
  auto intern = [&](const State& s) {
    auto k = Tabulation::key(s);
    auto it = tab.index.find(k);
    if (it != tab.index.end()) return it->second;
    const int id = static_cast<int>(tab.states.size());
    if (tab.states.size() >= max_states) throw BudgetExceeded("tabulation exceeds " + std::to_string(max_states) + " states");
    tab.index.emplace(std::move(k), id);
    tab.states.push_back(s);
    frontier.push_back(id);
    return id;
  };
  intern(env.initial_state());
  for (const State& r : extra_roots) intern(r);
  std::vector<std::vector<std::vector<std::pair<int, double>>>> rows;
  std::vector<std::vector<double>> rewards;
  while (!frontier.empty()) {
    const int id = frontier.front();
    frontier.pop_front();
    const State s = tab.states[static_cast<std::size_t>(id)];
    if (static_cast<int>(rows.size()) <= id) {
      rows.resize(static_cast<std::size_t>(id) + 1);
      rewards.resize(static_cast<std::size_t>(id) + 1);
    }
    for (int a = 0; a < space.n; ++a) {
      auto d = env.distribution(s, Action(a));
      if (!d) throw ConfigError(env.name() + " has no exact successor distribution");
      std::vector<std::pair<int, double>> row;
      for (const auto& o : d->outcomes) row.emplace_back(intern(o.next), o.prob);
      rows[static_cast<std::size_t>(id)].push_back(std::move(row));
      rewards[static_cast<std::size_t>(id)].push_back(d->reward);
    }
  }
  const int n = static_cast<int>(tab.states.size());
  TabularMdp& m = tab.mdp;
  m.n_states = n;
  m.n_actions = space.n;
  m.ap = env.atomic_props();
  m.s_init = 0;
  m.P.assign(static_cast<std::size_t>(n), std::vector<std::vector<double>>(static_cast<std::size_t>(space.n),
                                                                            std::vector<double>(static_cast<std::size_t>(n), 0.0)));
  m.R = rewards;
  for (int s = 0; s < n; ++s) {
    m.labels.push_back(env.labels(tab.states[static_cast<std::size_t>(s)]));
    for (int a = 0; a < space.n; ++a)
      for (const auto& [t, p] : rows[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)])
        m.P[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)][static_cast<std::size_t>(t)] += p;
  }
  m.validate(1e-9);
  return tab;
}

/// Policy rows of a discrete policy over the tabulated states.
inline std::vector<std::vector<double>> policy_table(const Tabulation& tab, const Policy& pi) {
  std::vector<std::vector<double>> rows;
  for (const State& s : tab.states) rows.push_back(pi.probabilities(s));
  return rows;
}

struct Episode {
  std::vector<TransitionSample> steps;
  double ret = 0.0;        // undiscounted, scaled rewards
  bool reached_end = false;
};

/// Runs one episode from the initial state until the reset state is entered or
/// `max_steps` elapse.
inline Episode run_episode(const EpsilonResetMdp& mdp, const Policy& pi, Rng& rng, long ep_id, long max_steps) {
  Episode e;
  State s = mdp.initial_state();
  for (long t = 0; t < max_steps; ++t) {
    TransitionSample x = mdp.step(s, pi.sample(s, rng), rng);
    x.ep = ep_id;
    x.t = t;
    e.ret += x.r;
    s = x.s_next;
    const bool done = mdp.is_reset(s);
    e.steps.push_back(std::move(x));
    if (done) {
      e.reached_end = true;
      break;
    }
  }
  return e;
}

}  // namespace waemdp::env
