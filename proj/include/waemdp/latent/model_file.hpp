#pragma once

// On-disk latent models: a trained neural model or an explicit tabular one,
// together with the environment it abstracts.

#include <fstream>
#include <map>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "waemdp/env/environments.hpp"
#include "waemdp/latent/explicit.hpp"
#include "waemdp/latent/model.hpp"

namespace waemdp::latent {

struct ModelFile {
  std::string env;             // environment name or tabular MDP path
  double reset_epsilon = 0.5;  // reset wrapper the model was trained against
  std::shared_ptr<const LatentSpaceModel> model;
  nlohmann::json body;         // serialized model, as stored

  /// The reset-wrapped environment the model abstracts.
  [[nodiscard]] std::shared_ptr<const env::EpsilonResetMdp> environment() const {
    return std::make_shared<env::EpsilonResetMdp>(env::make_environment(env).env, reset_epsilon);
  }

  [[nodiscard]] nlohmann::json to_json() const {
    nlohmann::json j = body;
    j["env"] = env;
    j["reset_epsilon"] = reset_epsilon;
    return j;
  }

  void save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write model file " + path);
    out << to_json().dump() << '\n';
  }

  static ModelFile neural(LatentModel model, std::string env, double reset_epsilon) {
    ModelFile f;
    f.env = std::move(env);
    f.reset_epsilon = reset_epsilon;
    f.body = {{"kind", "neural"}, {"model", model.to_json()}};
    f.model = std::make_shared<const LatentModel>(std::move(model));
    return f;
  }

  static ModelFile from_json(const nlohmann::json& j) {
    ModelFile f;
    try {
      f.env = j.at("env");
      f.reset_epsilon = j.at("reset_epsilon");
      const std::string kind = j.at("kind");
      if (kind == "neural") {
        f.body = {{"kind", kind}, {"model", j.at("model")}};
        f.model = std::make_shared<const LatentModel>(LatentModel::from_json(j.at("model")));
      } else if (kind == "tabular") {
        f.body = j;
        f.body.erase("env");
        f.body.erase("reset_epsilon");
        f.model = tabular_from_json(j);
      } else {
        throw ConfigError("unknown model kind '" + kind + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("malformed model file: ") + e.what());
    }
    return f;
  }

  static ModelFile load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read model file " + path);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("model file " + path + ": " + e.what());
    }
    return from_json(j);
  }

 private:
  // {"n_bits", "mdp", "policy", "embedding": [{"state": [...], "code": z}]}
  static std::shared_ptr<const LatentSpaceModel> tabular_from_json(const nlohmann::json& j) {
    env::TabularMdp mdp = env::TabularMdp::from_json(j.at("mdp"));
    certify::PolicyRows policy = j.at("policy").get<certify::PolicyRows>();
    std::map<std::vector<long long>, std::uint64_t> table;
    for (const auto& e : j.at("embedding")) {
      const std::vector<double> v = e.at("state");
      table[env::Tabulation::key(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())))] = e.at("code");
    }
    auto embed = [table](const env::State& s, const env::Labels&) {
      auto it = table.find(env::Tabulation::key(s));
      if (it == table.end()) throw DimensionMismatch("state has no entry in the tabular embedding");
      return it->second;
    };
    std::vector<std::string> ap = mdp.ap;
    return std::make_shared<const TabularLatentModel>(j.at("n_bits").get<int>(), std::move(ap), std::move(mdp), std::move(policy),
                                                      std::move(embed));
  }
};

/// Tabular model reproducing the reset-wrapped environment exactly: each
/// state reachable from the initial or the reset state gets its own code (labels in the leading bits, state
/// index in the rest). `policy` maps ground indices to action rows; uniform
/// when empty.
inline ModelFile exact_tabular_copy(const std::string& env_name, double reset_epsilon, const certify::PolicyRows& policy = {}) {
  ModelFile f;
  f.env = env_name;
  f.reset_epsilon = reset_epsilon;
  const auto wrapped = f.environment();
  const env::Tabulation tab = env::tabulate(*wrapped, 100000, {wrapped->reset_state()});
  const env::TabularMdp& g = tab.mdp;
  int idx_bits = 0;
  while ((1 << idx_bits) < g.n_states) ++idx_bits;
  const int n_ap = static_cast<int>(g.ap.size());
  const int n = n_ap + idx_bits;
  if (n > 16) throw ConfigError("environment too large for an exact tabular copy");
  auto code_of = [&](int s) {
    std::uint64_t c = 0;
    for (int l : g.labels[static_cast<std::size_t>(s)]) c = (c << 1) | static_cast<std::uint64_t>(l);
    return (c << idx_bits) | static_cast<std::uint64_t>(s);
  };
  const auto k = static_cast<std::size_t>(g.n_actions);
  env::TabularMdp t;
  t.n_states = 1 << n;
  t.n_actions = g.n_actions;
  t.ap = g.ap;
  certify::PolicyRows rows(static_cast<std::size_t>(t.n_states), std::vector<double>(k, 1.0 / static_cast<double>(k)));
  for (int z = 0; z < t.n_states; ++z) {
    std::vector<double> self(static_cast<std::size_t>(t.n_states), 0.0);
    self[static_cast<std::size_t>(z)] = 1.0;
    t.P.emplace_back(k, self);
    t.R.emplace_back(k, 0.0);
    env::Labels l;
    for (int i = 0; i < n_ap; ++i) l.push_back((z >> (n - 1 - i)) & 1);
    t.labels.push_back(l);
  }
  nlohmann::json embedding = nlohmann::json::array();
  for (int s = 0; s < g.n_states; ++s) {
    const auto z = code_of(s);
    for (std::size_t a = 0; a < k; ++a) {
      std::vector<double> row(static_cast<std::size_t>(t.n_states), 0.0);
      for (int s2 = 0; s2 < g.n_states; ++s2) row[code_of(s2)] += g.P[s][a][s2];
      t.P[z][a] = row;
      t.R[z][a] = g.R[s][a];
    }
    if (!policy.empty()) rows[z] = policy.at(static_cast<std::size_t>(s));
    const env::State& x = tab.states[static_cast<std::size_t>(s)];
    embedding.push_back({{"state", std::vector<double>(x.data(), x.data() + x.size())}, {"code", z}});
  }
  t.s_init = static_cast<int>(code_of(g.s_init));
  f.body = {{"kind", "tabular"}, {"n_bits", n}, {"mdp", t.to_json()}, {"policy", rows}, {"embedding", embedding}};
  f.model = ModelFile::from_json(f.to_json()).model;
  return f;
}

}  // namespace waemdp::latent
