#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "waemdp/env/ground_mdp.hpp"

namespace waemdp::env {

/// Finite MDP with explicit transition, reward, and label tables.
struct TabularMdp {
  int n_states = 0;
  int n_actions = 0;
  std::vector<std::vector<std::vector<double>>> P;  // P[s][a][s']
  std::vector<std::vector<double>> R;               // R[s][a]
  std::vector<Labels> labels;                       // labels[s][ap]
  std::vector<std::string> ap;
  int s_init = 0;

  void validate(double tol = 1e-12) const {
    if (n_states < 1 || n_actions < 1) throw ConfigError("tabular MDP needs at least one state and action");
    if (static_cast<int>(P.size()) != n_states || static_cast<int>(R.size()) != n_states ||
        static_cast<int>(labels.size()) != n_states)
      throw DimensionMismatch("tabular MDP tables do not have n_states rows");
    if (s_init < 0 || s_init >= n_states) throw ConfigError("s_init out of range");
    for (int s = 0; s < n_states; ++s) {
      if (static_cast<int>(P[s].size()) != n_actions || static_cast<int>(R[s].size()) != n_actions)
        throw DimensionMismatch("state " + std::to_string(s) + " does not have n_actions entries");
      if (labels[s].size() != ap.size()) throw DimensionMismatch("label vector length differs from |AP|");
      for (int a = 0; a < n_actions; ++a) {
        if (static_cast<int>(P[s][a].size()) != n_states) throw DimensionMismatch("transition row length");
        double total = 0.0;
        for (double p : P[s][a]) {
          if (!(p >= 0.0)) throw DomainError("negative transition probability");
          total += p;
        }
        if (std::abs(total - 1.0) > tol)
          throw DomainError("P[" + std::to_string(s) + "][" + std::to_string(a) + "] sums to " + std::to_string(total));
        if (!(std::abs(R[s][a]) <= kRewardBound))
          throw RewardOutOfRange("R[" + std::to_string(s) + "][" + std::to_string(a) + "] outside [-1/2, 1/2]");
      }
    }
  }

  [[nodiscard]] int prop_index(const std::string& name) const {
    for (std::size_t i = 0; i < ap.size(); ++i)
      if (ap[i] == name) return static_cast<int>(i);
    return -1;
  }

  [[nodiscard]] bool holds(int s, int prop) const { return prop >= 0 && labels[static_cast<std::size_t>(s)][static_cast<std::size_t>(prop)] != 0; }

  /// Transition matrix of the chain induced by a stochastic policy (rows over actions).
  [[nodiscard]] Eigen::MatrixXd induced_chain(const std::vector<std::vector<double>>& policy) const {
    check_policy(policy);
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(n_states, n_states);
    for (int s = 0; s < n_states; ++s)
      for (int a = 0; a < n_actions; ++a) {
        const double w = policy[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)];
        if (w == 0.0) continue;
        for (int t = 0; t < n_states; ++t) T(s, t) += w * P[s][a][t];
      }
    return T;
  }

  [[nodiscard]] Eigen::VectorXd induced_reward(const std::vector<std::vector<double>>& policy) const {
    check_policy(policy);
    Eigen::VectorXd r = Eigen::VectorXd::Zero(n_states);
    for (int s = 0; s < n_states; ++s)
      for (int a = 0; a < n_actions; ++a) r(s) += policy[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)] * R[s][a];
    return r;
  }

  void check_policy(const std::vector<std::vector<double>>& policy) const {
    if (static_cast<int>(policy.size()) != n_states) throw DimensionMismatch("policy needs one row per state");
    for (const auto& row : policy)
      if (static_cast<int>(row.size()) != n_actions) throw DimensionMismatch("policy row length differs from n_actions");
  }

  [[nodiscard]] std::vector<std::vector<double>> uniform_policy() const {
    return std::vector<std::vector<double>>(static_cast<std::size_t>(n_states),
                                            std::vector<double>(static_cast<std::size_t>(n_actions), 1.0 / n_actions));
  }

  [[nodiscard]] nlohmann::json to_json() const {
    nlohmann::json j;
    j["n_states"] = n_states;
    j["n_actions"] = n_actions;
    j["P"] = P;
    j["R"] = R;
    j["labels"] = labels;
    j["ap"] = ap;
    j["s_init"] = s_init;
    return j;
  }

  static TabularMdp from_json(const nlohmann::json& j) {
    TabularMdp m;
    try {
      m.n_states = j.at("n_states");
      m.n_actions = j.at("n_actions");
      m.P = j.at("P").get<std::vector<std::vector<std::vector<double>>>>();
      m.R = j.at("R").get<std::vector<std::vector<double>>>();
      m.labels = j.at("labels").get<std::vector<Labels>>();
      m.ap = j.at("ap").get<std::vector<std::string>>();
      m.s_init = j.at("s_init");
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("malformed tabular MDP: ") + e.what());
    }
    m.validate(1e-9);
    return m;
  }

  static TabularMdp load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(path + ": " + e.what());
    }
    return from_json(j);
  }

  void save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path);
    out << to_json().dump(1) << '\n';
  }
};

namespace detail {

// Tarjan's strongly connected components over the support graph of T.
inline std::vector<int> scc_ids(const Eigen::MatrixXd& T, int& count) {
  const int n = static_cast<int>(T.rows());
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (T(i, j) > 0.0) adj[static_cast<std::size_t>(i)].push_back(j);
  std::vector<int> index(static_cast<std::size_t>(n), -1), low(static_cast<std::size_t>(n), 0),
      comp(static_cast<std::size_t>(n), -1);
  std::vector<char> on_stack(static_cast<std::size_t>(n), 0);
  std::vector<int> stack;
  int next = 0;
  count = 0;
  // Iterative DFS to stay safe on long chains.
  for (int root = 0; root < n; ++root) {
    if (index[static_cast<std::size_t>(root)] >= 0) continue;
    std::vector<std::pair<int, std::size_t>> frames{{root, 0}};
    index[static_cast<std::size_t>(root)] = low[static_cast<std::size_t>(root)] = next++;
    stack.push_back(root);
    on_stack[static_cast<std::size_t>(root)] = 1;
    while (!frames.empty()) {
      auto& [v, k] = frames.back();
      const auto& nb = adj[static_cast<std::size_t>(v)];
      if (k < nb.size()) {
        const int w = nb[k++];
        if (index[static_cast<std::size_t>(w)] < 0) {
          index[static_cast<std::size_t>(w)] = low[static_cast<std::size_t>(w)] = next++;
          stack.push_back(w);
          on_stack[static_cast<std::size_t>(w)] = 1;
          frames.emplace_back(w, 0);
        } else if (on_stack[static_cast<std::size_t>(w)]) {
          low[static_cast<std::size_t>(v)] = std::min(low[static_cast<std::size_t>(v)], index[static_cast<std::size_t>(w)]);
        }
      } else {
        const int vv = v;
        if (low[static_cast<std::size_t>(vv)] == index[static_cast<std::size_t>(vv)]) {
          int w;
          do {
            w = stack.back();
            stack.pop_back();
            on_stack[static_cast<std::size_t>(w)] = 0;
            comp[static_cast<std::size_t>(w)] = count;
          } while (w != vv);
          ++count;
        }
        frames.pop_back();
        if (!frames.empty()) {
          const int parent = frames.back().first;
          low[static_cast<std::size_t>(parent)] = std::min(low[static_cast<std::size_t>(parent)], low[static_cast<std::size_t>(vv)]);
        }
      }
    }
  }
  return comp;
}

}  // namespace detail

/// Closed (bottom) strongly connected classes of a stochastic matrix.
inline std::vector<std::vector<int>> bottom_classes(const Eigen::MatrixXd& T) {
  int count = 0;
  const std::vector<int> comp = detail::scc_ids(T, count);
  std::vector<char> closed(static_cast<std::size_t>(count), 1);
  const int n = static_cast<int>(T.rows());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (T(i, j) > 0.0 && comp[static_cast<std::size_t>(i)] != comp[static_cast<std::size_t>(j)])
        closed[static_cast<std::size_t>(comp[static_cast<std::size_t>(i)])] = 0;
  std::vector<std::vector<int>> out;
  for (int c = 0; c < count; ++c) {
    if (!closed[static_cast<std::size_t>(c)]) continue;
    std::vector<int> members;
    for (int i = 0; i < n; ++i)
      if (comp[static_cast<std::size_t>(i)] == c) members.push_back(i);
    out.push_back(std::move(members));
  }
  return out;
}

/// Unique stationary distribution xi = xi T of a chain with one closed class.
///
/// Periodic chains are accepted (their stationary distribution is still unique);
/// NotErgodic is raised when there is more than one closed class.
inline Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& T, double residual_tol = 1e-10) {
  const int n = static_cast<int>(T.rows());
  if (n == 0 || T.cols() != n) throw DimensionMismatch("transition matrix must be square and non-empty");
  for (int i = 0; i < n; ++i)
    if (std::abs(T.row(i).sum() - 1.0) > 1e-9) throw DomainError("row " + std::to_string(i) + " is not stochastic");
  const auto classes = bottom_classes(T);
  if (classes.size() != 1)
    throw NotErgodic("chain has " + std::to_string(classes.size()) + " closed classes; a unique stationary distribution needs exactly one");
  const std::vector<int>& cls = classes.front();
  const int m = static_cast<int>(cls.size());
  Eigen::MatrixXd A(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) A(j, i) = T(cls[static_cast<std::size_t>(i)], cls[static_cast<std::size_t>(j)]);
  A -= Eigen::MatrixXd::Identity(m, m);  // (T^T - I) x = 0 on the class
  A.row(m - 1).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(m);
  b(m - 1) = 1.0;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
  Eigen::VectorXd x = lu.solve(b);
  for (int it = 0; it < 3; ++it) x += lu.solve(b - A * x);  // iterative refinement
  Eigen::VectorXd xi = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < m; ++i) xi(cls[static_cast<std::size_t>(i)]) = std::max(0.0, x(i));
  xi /= xi.sum();
  const double residual = (xi.transpose() * T - xi.transpose()).cwiseAbs().maxCoeff();
  if (residual > residual_tol) throw NotConverged("stationary residual " + std::to_string(residual));
  return xi;
}

/// GroundMdp view of a TabularMdp; states are feature rows (one-hot by default).
class TabularEnv final : public GroundMdp {
 public:
  explicit TabularEnv(TabularMdp mdp, std::string name = "tabular", Eigen::MatrixXd features = {},
                      std::vector<int> terminal = {})
      : mdp_(std::move(mdp)), name_(std::move(name)), features_(std::move(features)) {
    mdp_.validate(1e-9);
    if (features_.size() == 0) features_ = Eigen::MatrixXd::Identity(mdp_.n_states, mdp_.n_states);
    if (features_.rows() != mdp_.n_states) throw DimensionMismatch("one feature row per state required");
    terminal_.assign(static_cast<std::size_t>(mdp_.n_states), 0);
    for (int s : terminal) terminal_.at(static_cast<std::size_t>(s)) = 1;
  }

  [[nodiscard]] const TabularMdp& mdp() const { return mdp_; }
  [[nodiscard]] std::string name() const override { return name_; }
  [[nodiscard]] int state_dim() const override { return static_cast<int>(features_.cols()); }
  [[nodiscard]] ActionSpace action_space() const override { return ActionSpace::Discrete(mdp_.n_actions); }
  [[nodiscard]] std::vector<std::string> atomic_props() const override { return mdp_.ap; }
  [[nodiscard]] State initial_state() const override { return feature(mdp_.s_init); }
  [[nodiscard]] State feature(int s) const { return features_.row(s).transpose(); }

  [[nodiscard]] std::optional<int> state_index(const State& s) const override {
    for (int i = 0; i < mdp_.n_states; ++i)
      if ((features_.row(i).transpose() - s).cwiseAbs().maxCoeff() < 1e-12) return i;
    return std::nullopt;
  }

  [[nodiscard]] Labels labels(const State& s) const override { return mdp_.labels[static_cast<std::size_t>(index(s))]; }
  [[nodiscard]] bool is_terminal(const State& s) const override { return terminal_[static_cast<std::size_t>(index(s))] != 0; }

  StepResult transition(const State& s, const Action& a, Rng& rng) const override {
    const int i = index(s);
    const int act = std::get<int>(a);
    const auto& row = mdp_.P[static_cast<std::size_t>(i)][static_cast<std::size_t>(act)];
    const auto j = categorical(rng, row);
    return {feature(static_cast<int>(j)), mdp_.R[static_cast<std::size_t>(i)][static_cast<std::size_t>(act)]};
  }

  [[nodiscard]] std::optional<Distribution> distribution(const State& s, const Action& a) const override {
    const int i = index(s);
    const int act = std::get<int>(a);
    Distribution d;
    d.reward = mdp_.R[static_cast<std::size_t>(i)][static_cast<std::size_t>(act)];
    const auto& row = mdp_.P[static_cast<std::size_t>(i)][static_cast<std::size_t>(act)];
    for (int j = 0; j < mdp_.n_states; ++j)
      if (row[static_cast<std::size_t>(j)] > 0.0) d.outcomes.push_back({feature(j), row[static_cast<std::size_t>(j)]});
    return d;
  }

 private:
  int index(const State& s) const {
    auto i = state_index(s);
    if (!i) throw DimensionMismatch("state is not a state of " + name_);
    return *i;
  }

  TabularMdp mdp_;
  std::string name_;
  Eigen::MatrixXd features_;
  std::vector<char> terminal_;
};

}  // namespace waemdp::env
