#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "waemdp/env/environments.hpp"
#include "waemdp/latent/explicit.hpp"
#include "waemdp/latent/model.hpp"

using namespace waemdp;
using latent::LatentConfig;
using latent::LatentModel;

namespace {

LatentConfig small_config(int n_bits, std::vector<std::string> ap, int state_dim, env::ActionSpace actions, int latent_actions = 0) {
  LatentConfig c;
  c.n_bits = n_bits;
  c.atomic_props = std::move(ap);
  c.state_dim = state_dim;
  c.actions = std::move(actions);
  c.latent_actions = latent_actions;
  c.hidden = {16};
  c.made_hidden = {16};
  return c;
}

// Model whose transition flow is the given table over codes.
LatentModel chain_model(int n_bits, int n_actions, std::function<Eigen::VectorXd(std::uint64_t, int)> row) {
  LatentModel m(small_config(n_bits, {}, 1, env::ActionSpace::Discrete(n_actions)), 1);
  m.set_transition_flow(dist::BernoulliFlow(dist::tabular_conditioner(n_bits, n_bits + n_actions, [=](const Eigen::RowVectorXd& ctx) {
    Eigen::Index a = 0;
    ctx.tail(n_actions).maxCoeff(&a);
    return row(dist::index_of(ctx.head(n_bits)), static_cast<int>(a));
  })));
  return m;
}

double tv(const std::vector<double>& p, const Eigen::VectorXd& q) {
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) d += std::abs(p[i] - q(static_cast<Eigen::Index>(i)));
  return 0.5 * d;
}

}  // namespace

TEST(Extract, FourStateChain) {
  LatentModel m = chain_model(2, 1, [](std::uint64_t z, int) {
    Eigen::VectorXd p = Eigen::VectorXd::Zero(4);
    if (z == 0) {
      p << 0.0, 0.5, 0.25, 0.25;
    } else {
      p(static_cast<Eigen::Index>(z)) = 1.0;
    }
    return p;
  });
  const auto x = latent::extract_explicit(m);
  ASSERT_EQ(x.mdp.n_states, 4);
  EXPECT_EQ(x.codes, (std::vector<std::uint64_t>{0, 1, 2, 3}));
  const std::vector<double> expect0{0.0, 0.5, 0.25, 0.25};
  for (int t = 0; t < 4; ++t) EXPECT_NEAR(x.mdp.P[0][0][t], expect0[static_cast<std::size_t>(t)], 1e-12);
  for (int s = 1; s < 4; ++s) EXPECT_NEAR(x.mdp.P[s][0][s], 1.0, 1e-12);
}

TEST(Extract, UniformFlowReachesAllCodes) {
  LatentModel m = chain_model(3, 2, [](std::uint64_t, int) { return Eigen::VectorXd::Constant(8, 1.0 / 8); });
  const auto x = latent::extract_explicit(m);
  ASSERT_EQ(x.mdp.n_states, 8);
  for (const auto& rows : x.mdp.P)
    for (const auto& row : rows)
      for (double p : row) EXPECT_NEAR(p, 0.125, 1e-12);
}

TEST(Extract, ReproducesExactChain) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  std::vector<std::vector<Eigen::VectorXd>> table(16, std::vector<Eigen::VectorXd>(2));
  for (auto& rows : table)
    for (auto& r : rows) {
      r = Eigen::VectorXd::NullaryExpr(16, [&] { return u(rng); });
      r /= r.sum();
    }
  LatentModel m = chain_model(4, 2, [table](std::uint64_t z, int a) { return table[z][static_cast<std::size_t>(a)]; });
  const auto x = latent::extract_explicit(m);
  ASSERT_EQ(x.mdp.n_states, 16);
  for (int s = 0; s < 16; ++s)
    for (int a = 0; a < 2; ++a) {
      std::vector<double> by_code(16);
      for (int t = 0; t < 16; ++t) by_code[x.codes[static_cast<std::size_t>(t)]] = x.mdp.P[s][a][t];
      EXPECT_LE(tv(by_code, table[x.codes[static_cast<std::size_t>(s)]][static_cast<std::size_t>(a)]), 1e-9);
    }
}

TEST(Extract, RowSumsMatchResidual) {
  LatentConfig c = small_config(5, {"goal"}, 2, env::ActionSpace::Discrete(3));
  LatentModel m(c, 9);
  const auto x = latent::extract_explicit(m, {.prune = 1e-3});
  for (int s = 0; s < x.mdp.n_states; ++s)
    for (int a = 0; a < x.mdp.n_actions; ++a) {
      const double total = std::accumulate(x.mdp.P[s][a].begin(), x.mdp.P[s][a].end(), 0.0);
      EXPECT_LE(total, 1.0 + 1e-12);
      EXPECT_GE(total, 1.0 - x.residual[static_cast<std::size_t>(s)] - 1e-12);
    }
  // Rows carry the model's own rewards, labels, and policy.
  for (int s = 0; s < x.mdp.n_states; ++s) {
    const std::uint64_t z = x.codes[static_cast<std::size_t>(s)];
    EXPECT_EQ(x.mdp.labels[static_cast<std::size_t>(s)], m.labels_of(z));
    EXPECT_DOUBLE_EQ(x.mdp.R[s][1], m.reward(z, 1));
    EXPECT_NEAR(std::accumulate(x.policy[static_cast<std::size_t>(s)].begin(), x.policy[static_cast<std::size_t>(s)].end(), 0.0), 1.0, 1e-12);
  }
}

TEST(Extract, BudgetExceeded) {
  LatentModel m = chain_model(3, 1, [](std::uint64_t, int) { return Eigen::VectorXd::Constant(8, 1.0 / 8); });
  EXPECT_THROW((void)latent::extract_explicit(m, {.budget = 4}), BudgetExceeded);
  EXPECT_NO_THROW((void)latent::extract_explicit(m, {.budget = 8}));
}

TEST(Extract, SampledSuccessorsAboveSixteenBits) {
  const int n = 17;
  LatentModel m(small_config(n, {}, 1, env::ActionSpace::Discrete(1)), 2);
  // Self-loop: bit i copies bit i of the current code.
  m.set_transition_flow(dist::BernoulliFlow(std::make_shared<dist::FunctionConditioner>(
      n, n + 1, [n](const Eigen::RowVectorXd& ctx, const Eigen::RowVectorXd&) {
        return Eigen::RowVectorXd((2.0 * ctx.head(n).array() - 1.0) * dist::kSaturatedLogit);
      })));
  m.set_initial_state(12345);
  const auto x = latent::extract_explicit(m, {.successor_samples = 16});
  ASSERT_EQ(x.mdp.n_states, 1);
  EXPECT_EQ(x.codes[0], 12345U);
  EXPECT_NEAR(x.mdp.P[0][0][0], 1.0, 1e-12);
  EXPECT_LT(x.residual[0], 1e-12);
  EXPECT_EQ(x.warnings.size(), 1U);
}

TEST(LatentModel, LabelsArePreserved) {
  env::PointMass2D pm;
  LatentModel m(small_config(6, pm.atomic_props(), 2, pm.action_space(), 3), 4);
  Rng rng(8);
  int goal = 0, unsafe = 0;
  for (int i = 0; i < 10000; ++i) {
    env::State s(2);
    s << 2.0 * uniform01(rng) - 1.0, 2.0 * uniform01(rng) - 1.0;
    const env::Labels l = pm.labels(s);
    goal += l[0];
    unsafe += l[1];
    ASSERT_EQ(m.labels_of(m.embed(s, l)), l);
  }
  EXPECT_GT(goal, 0);
  EXPECT_GT(unsafe, 0);
}

TEST(LatentModel, ResetLabelIsPreserved) {
  auto bundle = env::make_environment("gridworld");
  auto wrapped = std::make_shared<env::EpsilonResetMdp>(bundle.env, 0.5);
  const auto tab = env::tabulate(*wrapped);
  LatentModel m(small_config(6, wrapped->atomic_props(), wrapped->state_dim(), wrapped->action_space()), 4);
  for (const auto& s : tab.states) EXPECT_EQ(m.labels_of(m.embed(s, wrapped->labels(s))), wrapped->labels(s));
}

TEST(LatentModel, ZeroTemperatureEmbeddingIsDeterministic) {
  LatentModel m(small_config(6, {"goal"}, 2, env::ActionSpace::Discrete(2)), 3);
  Rng rng(1);
  for (int i = 0; i < 100; ++i) {
    const env::State s = env::State::NullaryExpr(2, [&] { return uniform01(rng); });
    EXPECT_EQ(m.embed(s, {0}), m.embed(s, {0}));
    EXPECT_EQ(m.embed_bits(s, {1})(0), 1.0);
  }
  EXPECT_THROW((void)m.embed(env::State::Zero(3), {0}), DimensionMismatch);
  EXPECT_THROW((void)m.embed(env::State::Zero(2), {0, 1}), DimensionMismatch);
}

TEST(LatentModel, RelaxedEmbeddingKeepsLabelBits) {
  for (double lambda : {0.1, 0.5, 1.0}) {
    LatentConfig c = small_config(6, {"goal", "unsafe"}, 2, env::ActionSpace::Discrete(2));
    c.temps.encoder = lambda;
    LatentModel m(c, 3);
    ad::Tape tape;
    ad::Binder bind(tape);
    Rng rng(2);
    const ad::Matrix states = ad::Matrix::NullaryExpr(32, 2, [&] { return uniform01(rng); });
    ad::Matrix labels(32, 2);
    for (Eigen::Index r = 0; r < 32; ++r) labels.row(r) << static_cast<double>(r % 2), static_cast<double>((r / 2) % 2);
    const ad::Matrix z = m.encode(bind, states, labels).value();
    ASSERT_EQ(z.cols(), 6);
    EXPECT_EQ(z.leftCols(2), labels);
    EXPECT_GT(z.rightCols(4).minCoeff(), 0.0);
    EXPECT_LT(z.rightCols(4).maxCoeff(), 1.0);
  }
}

TEST(LatentModel, IdentityActionRoundTrip) {
  LatentModel m(small_config(4, {}, 2, env::ActionSpace::Discrete(5)), 3);
  for (std::uint64_t z = 0; z < 16; ++z)
    for (int a = 0; a < 5; ++a) EXPECT_EQ(std::get<int>(m.decode_action(z, m.encode_action(z, a))), a);
  EXPECT_THROW((void)m.encode_action(0, 5), InvalidAction);
  EXPECT_THROW((void)m.decode_action(0, -1), InvalidAction);
}

TEST(LatentModel, DecodedBoxActionsStayInBounds) {
  env::PointMass2D pm;
  LatentModel m(small_config(5, pm.atomic_props(), 2, pm.action_space(), 3), 4);
  for (std::uint64_t z = 0; z < 32; ++z)
    for (int a = 0; a < 3; ++a) {
      EXPECT_TRUE(pm.action_space().contains(m.decode_action(z, a)));
      const int e = m.encode_action(z, m.decode_action(z, a));
      EXPECT_TRUE(e >= 0 && e < 3);
    }
}

TEST(LatentModel, DistributionsAreNormalized) {
  LatentModel m(small_config(6, {"goal", "unsafe"}, 2, env::ActionSpace::Discrete(4)), 6);
  for (std::uint64_t z : {0ULL, 17ULL, 63ULL}) {
    EXPECT_NEAR(m.policy_probs(z).sum(), 1.0, 1e-12);
    for (int a = 0; a < 4; ++a) {
      const Eigen::VectorXd p = m.transition_probs(z, a);
      EXPECT_NEAR(p.sum(), 1.0, 1e-10);
      EXPECT_NEAR(m.transition_prob(5, z, a), p(5), 1e-14);
      EXPECT_LE(std::abs(m.reward(z, a)), 0.5);
    }
  }
}

TEST(LatentModel, JsonRoundTrip) {
  env::PointMass2D pm;
  LatentModel m(small_config(5, pm.atomic_props(), 2, pm.action_space(), 3), 11);
  m.set_initial_state(7);
  const auto j = m.to_json();
  const LatentModel r = LatentModel::from_json(nlohmann::json::parse(j.dump()));
  EXPECT_EQ(r.initial_state(), 7U);
  const env::State s = (env::State(2) << 0.1, -0.4).finished();
  EXPECT_EQ(r.embed(s, {0, 0}), m.embed(s, {0, 0}));
  EXPECT_DOUBLE_EQ(r.reward(3, 2), m.reward(3, 2));
  EXPECT_TRUE(r.transition_probs(3, 1).isApprox(m.transition_probs(3, 1), 1e-14));
  EXPECT_EQ(std::get<std::vector<double>>(r.decode_action(4, 1)), std::get<std::vector<double>>(m.decode_action(4, 1)));
  EXPECT_THROW((void)LatentModel::from_json({{"config", {{"n_bits", 2}}}}), ConfigError);
}

TEST(LatentModel, ConfigValidation) {
  EXPECT_THROW(LatentModel(small_config(1, {"a", "b"}, 2, env::ActionSpace::Discrete(2)), 0), ConfigError);
  EXPECT_THROW(LatentModel(small_config(3, {}, 1, env::ActionSpace::Box({-1}, {1})), 0), ConfigError);
  LatentConfig c = small_config(3, {}, 1, env::ActionSpace::Discrete(4));
  c.temps.policy = 0.4;  // above 1/(k-1) for k = 4
  EXPECT_THROW(LatentModel(c, 0), DomainError);
}

TEST(LatentFlow, AbsorbingZeroRewardReturnsZero) {
  env::TabularMdp t;
  t.n_states = 1;
  t.n_actions = 2;
  t.P = {{{1.0}, {1.0}}};
  t.R = {{0.0, 0.0}};
  t.labels = {{}};
  env::TabularEnv e(t);
  LatentModel m(small_config(2, {}, 1, env::ActionSpace::Discrete(2)), 1);
  Rng rng(3);
  const auto run = latent::latent_flow_execute(m, e, 5, rng, 50);
  ASSERT_EQ(run.returns.size(), 5U);
  for (double r : run.returns) EXPECT_EQ(r, 0.0);
  EXPECT_EQ(run.trace.size(), 250U);
}

TEST(LatentFlow, SameSeedSameTrace) {
  auto bundle = env::make_environment("gridworld");
  auto wrapped = std::make_shared<env::EpsilonResetMdp>(bundle.env, 0.5);
  LatentModel m(small_config(6, wrapped->atomic_props(), wrapped->state_dim(), wrapped->action_space()), 4);
  Rng r1(42), r2(42);
  const auto a = latent::latent_flow_execute(m, *wrapped, 10, r1, 200);
  const auto b = latent::latent_flow_execute(m, *wrapped, 10, r2, 200);
  EXPECT_EQ(a.returns, b.returns);
  EXPECT_EQ(a.latent_states, b.latent_states);
  EXPECT_EQ(a.latent_actions, b.latent_actions);
  ASSERT_EQ(a.trace.size(), b.trace.size());
  for (std::size_t i = 0; i < a.trace.size(); ++i) EXPECT_EQ(a.trace[i].s_next, b.trace[i].s_next);
  // Every episode ends by entering the reset state.
  EXPECT_TRUE(wrapped->is_reset(a.trace.back().s_next));
}

TEST(LatentFlow, UniformLatentPolicyMatchesUniformGroundPolicy) {
  auto bundle = env::make_environment("cliff-walk");
  const auto& ground = *bundle.env;
  // Labels-only latent space with a uniform latent policy.
  env::TabularMdp t;
  t.n_states = 4;
  t.n_actions = 2;
  t.ap = ground.atomic_props();
  for (int z = 0; z < 4; ++z) {
    std::vector<double> self(4, 0.0);
    self[static_cast<std::size_t>(z)] = 1.0;
    t.P.push_back({self, self});
    t.R.push_back({0.0, 0.0});
    t.labels.push_back({z >> 1, z & 1});
  }
  latent::TabularLatentModel m(2, t.ap, t, certify::PolicyRows(4, {0.5, 0.5}),
                               [](const env::State&, const env::Labels& l) { return static_cast<std::uint64_t>(2 * l[0] + l[1]); });
  const int episodes = 20000;
  Rng rng(17);
  const auto run = latent::latent_flow_execute(m, ground, episodes, rng);
  const double latent_mean = std::accumulate(run.returns.begin(), run.returns.end(), 0.0) / episodes;

  const auto pi = env::uniform_policy(ground.action_space());
  double ground_total = 0.0;
  Rng g(18);
  for (int ep = 0; ep < episodes; ++ep) {
    env::State s = ground.initial_state();
    for (int t2 = 0; t2 < 1000; ++t2) {
      const auto x = ground.step(s, pi->sample(s, g), g);
      ground_total += x.r;
      if (ground.is_terminal(s)) break;
      s = x.s_next;
    }
  }
  const double ground_mean = ground_total / episodes;
  EXPECT_NEAR(latent_mean, ground_mean, 0.05 * std::abs(ground_mean));
}

TEST(LatentFlow, ExactAbstractionRecoversOptimalReturn) {
  auto bundle = env::make_environment("gridworld");
  const auto& ground = *bundle.env;
  const auto tab = env::tabulate(ground);
  const env::TabularMdp& g = tab.mdp;
  ASSERT_EQ(g.n_states, 25);
  auto code_of = [&](int s) {
    const auto& l = g.labels[static_cast<std::size_t>(s)];
    return static_cast<std::uint64_t>((l[0] << 6) | (l[1] << 5) | s);
  };
  auto terminal = [&](int s) { return ground.is_terminal(tab.states[static_cast<std::size_t>(s)]); };

  // Oracle: optimal expected undiscounted episode return by value iteration.
  std::vector<double> v(25, 0.0);
  std::vector<int> best(25, 0);
  for (int it = 0; it < 100000; ++it) {
    double delta = 0.0;
    for (int s = 0; s < 25; ++s) {
      double q_best = -1e9;
      for (int a = 0; a < 4; ++a) {
        double q = g.R[s][a];
        if (!terminal(s))
          for (int t = 0; t < 25; ++t) q += g.P[s][a][t] * v[static_cast<std::size_t>(t)];
        if (q > q_best + 1e-15) {
          q_best = q;
          best[static_cast<std::size_t>(s)] = a;
        }
      }
      delta = std::max(delta, std::abs(q_best - v[static_cast<std::size_t>(s)]));
      v[static_cast<std::size_t>(s)] = q_best;
    }
    if (delta < 1e-14) break;
  }

  const int n = 7;
  env::TabularMdp t;
  t.n_states = 1 << n;
  t.n_actions = 4;
  t.ap = g.ap;
  certify::PolicyRows policy(static_cast<std::size_t>(t.n_states), std::vector<double>(4, 0.25));
  for (int z = 0; z < t.n_states; ++z) {
    std::vector<double> self(static_cast<std::size_t>(t.n_states), 0.0);
    self[static_cast<std::size_t>(z)] = 1.0;
    t.P.push_back({self, self, self, self});
    t.R.push_back({0.0, 0.0, 0.0, 0.0});
    t.labels.push_back({(z >> 6) & 1, (z >> 5) & 1});
  }
  for (int s = 0; s < 25; ++s) {
    const auto z = code_of(s);
    for (int a = 0; a < 4; ++a) {
      std::vector<double> row(static_cast<std::size_t>(t.n_states), 0.0);
      for (int s2 = 0; s2 < 25; ++s2) row[code_of(s2)] += g.P[s][a][s2];
      t.P[z][static_cast<std::size_t>(a)] = row;
      t.R[z][static_cast<std::size_t>(a)] = g.R[s][a];
    }
    policy[z] = std::vector<double>(4, 0.0);
    policy[z][static_cast<std::size_t>(best[static_cast<std::size_t>(s)])] = 1.0;
  }
  t.s_init = static_cast<int>(code_of(0));
  latent::TabularLatentModel m(n, t.ap, t, policy, [&](const env::State& s, const env::Labels&) { return code_of(tab.index_of(s)); });

  const int episodes = 20000;
  Rng rng(23);
  const auto run = latent::latent_flow_execute(m, ground, episodes, rng);
  double mean = 0.0, sq = 0.0;
  for (double r : run.returns) {
    mean += r;
    sq += r * r;
  }
  mean /= episodes;
  const double se = std::sqrt(std::max(0.0, sq / episodes - mean * mean) / episodes);
  EXPECT_NEAR(mean, v[0], 4.0 * se + 1e-9);

  // The extracted latent MDP starts at the initial ground cell's code.
  const auto x = latent::extract_explicit(m);
  EXPECT_EQ(x.codes[0], code_of(0));
  EXPECT_EQ(x.mdp.n_states, 25);
}

namespace {

// Exact latent copy of a tabular ground MDP: code = (labels << idx_bits) | index,
// uniform latent policy, rewards multiplied by `scale`.
struct ExactCopy {
  env::Tabulation tab;
  std::unique_ptr<latent::TabularLatentModel> model;
};

ExactCopy exact_copy(const env::GroundMdp& ground, double scale) {
  ExactCopy out{env::tabulate(ground), nullptr};
  const env::TabularMdp& g = out.tab.mdp;
  const int idx_bits = 5;
  const int n = static_cast<int>(g.ap.size()) + idx_bits;
  auto code_of = [&g, idx_bits](int s) {
    std::uint64_t c = 0;
    for (int l : g.labels[static_cast<std::size_t>(s)]) c = (c << 1) | static_cast<std::uint64_t>(l);
    return (c << idx_bits) | static_cast<std::uint64_t>(s);
  };
  env::TabularMdp t;
  t.n_states = 1 << n;
  t.n_actions = g.n_actions;
  t.ap = g.ap;
  const auto k = static_cast<std::size_t>(g.n_actions);
  certify::PolicyRows policy(static_cast<std::size_t>(t.n_states), std::vector<double>(k, 1.0 / static_cast<double>(k)));
  for (int z = 0; z < t.n_states; ++z) {
    std::vector<double> self(static_cast<std::size_t>(t.n_states), 0.0);
    self[static_cast<std::size_t>(z)] = 1.0;
    t.P.emplace_back(k, self);
    t.R.emplace_back(k, 0.0);
    env::Labels l;
    for (std::size_t i = 0; i < g.ap.size(); ++i) l.push_back((z >> (n - 1 - static_cast<int>(i))) & 1);
    t.labels.push_back(l);
  }
  for (int s = 0; s < g.n_states; ++s) {
    const auto z = code_of(s);
    for (std::size_t a = 0; a < k; ++a) {
      std::vector<double> row(static_cast<std::size_t>(t.n_states), 0.0);
      for (int s2 = 0; s2 < g.n_states; ++s2) row[code_of(s2)] += g.P[s][a][s2];
      t.P[z][a] = row;
      t.R[z][a] = g.R[s][a] * scale;
    }
  }
  t.s_init = static_cast<int>(code_of(g.s_init));
  const env::Tabulation* tab = &out.tab;
  out.model = std::make_unique<latent::TabularLatentModel>(
      n, t.ap, t, policy, [tab, code_of](const env::State& s, const env::Labels&) { return code_of(tab->index_of(s)); });
  return out;
}

}  // namespace

TEST(ValueDifference, ExactCopyAgreesWithinTheInterval) {
  auto bundle = env::make_environment("gridworld");
  const auto copy = exact_copy(*bundle.env, 1.0);
  const auto x = latent::extract_explicit(*copy.model);
  const auto prop = certify::parse_property("return", bundle.env->atomic_props());
  Rng rng(5);
  const auto r = latent::value_difference(*copy.model, *bundle.env, x, prop, 0.9, 4000, rng);
  EXPECT_EQ(r.episodes, 4000);
  EXPECT_LE(r.difference, 2.0 * r.ground_ci95);
}

TEST(ValueDifference, RewardScalingIsDetected) {
  auto bundle = env::make_environment("gridworld");
  const auto copy = exact_copy(*bundle.env, 0.5);
  const auto x = latent::extract_explicit(*copy.model);
  const auto prop = certify::parse_property("return", bundle.env->atomic_props());
  Rng rng(6);
  const auto r = latent::value_difference(*copy.model, *bundle.env, x, prop, 0.9, 4000, rng);
  // Halving every reward halves the discounted value.
  EXPECT_NEAR(r.latent_value, 0.5 * r.ground_mean, 2.0 * 0.5 * r.ground_ci95);
  EXPECT_GT(r.difference, 4.0 * r.ground_ci95);
}

TEST(ValueDifference, ReachabilityUsesTheSameTrajectories) {
  auto bundle = env::make_environment("gridworld");
  const auto copy = exact_copy(*bundle.env, 1.0);
  const auto x = latent::extract_explicit(*copy.model);
  const auto prop = certify::parse_property("F goal", bundle.env->atomic_props());
  Rng rng(7);
  const auto r = latent::value_difference(*copy.model, *bundle.env, x, prop, 0.95, 4000, rng);
  EXPECT_GT(r.latent_value, 0.0);
  EXPECT_LE(r.difference, 2.0 * r.ground_ci95);
  Rng rng2(7);
  EXPECT_THROW(latent::value_difference(*copy.model, *bundle.env, x, prop, 0.95, 0, rng2), InsufficientSamples);
}
