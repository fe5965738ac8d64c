#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "waemdp/env/environments.hpp"
#include "waemdp/wae/train.hpp"

using namespace waemdp;
using wae::Matrix;
using wae::Var;

namespace {

env::TransitionSample tuple(double s, double a, double r, double sn) {
  env::TransitionSample t;
  t.s = env::State::Constant(1, s);
  t.a = std::vector<double>{a};
  t.r = r;
  t.s_next = env::State::Constant(1, sn);
  return t;
}

double exact_tv(const Eigen::VectorXd& p, const Eigen::VectorXd& q) { return 0.5 * (p - q).cwiseAbs().sum(); }

Eigen::VectorXd random_simplex(int n, Rng& rng) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = -std::log(uniform01(rng) + 1e-300);
  return v / v.sum();
}

// Support points with pairwise Euclidean distance 1 (the discrete metric).
Matrix discrete_points(int n) { return Matrix::Identity(n, n) / std::sqrt(2.0); }

latent::LatentConfig grid_config(const env::GroundMdp& env) {
  latent::LatentConfig c;
  c.n_bits = 6;
  c.atomic_props = env.atomic_props();
  c.state_dim = env.state_dim();
  c.actions = env.action_space();
  c.hidden = {16, 16};
  c.made_hidden = {16, 16};
  return c;
}

struct GridSetup {
  std::shared_ptr<const env::EpsilonResetMdp> env;
  env::PolicyPtr policy;
};

GridSetup grid() {
  auto bundle = env::make_environment("gridworld");
  return {std::make_shared<env::EpsilonResetMdp>(bundle.env, 0.5), bundle.scripted};
}

wae::TrainingConfig small_training(std::uint64_t seed) {
  wae::TrainingConfig t;
  t.batch = 16;
  t.steps = 20;
  t.m = 4;
  t.prefill = 64;
  t.burn_in = 10;
  t.critic.hidden = {16};
  t.seed = seed;
  return t;
}

std::vector<wae::MetricsRow> run(wae::Trainer& t) {
  std::vector<wae::MetricsRow> rows;
  t.run([&](const wae::MetricsRow& r) { rows.push_back(r); });
  return rows;
}

}  // namespace

TEST(RawDistance, Examples) {
  const auto t = tuple(0.3, 0.1, -0.2, 0.4);
  EXPECT_EQ(wae::raw_distance(t, t), 0.0);
  EXPECT_DOUBLE_EQ(wae::raw_distance(tuple(0, 0, 0, 0), tuple(1, 1, 1, 1)), 4.0);
  Rng rng(1);
  for (int i = 0; i < 100; ++i) {
    const auto a = tuple(uniform01(rng), uniform01(rng), uniform01(rng), uniform01(rng));
    const auto b = tuple(uniform01(rng), uniform01(rng), uniform01(rng), uniform01(rng));
    EXPECT_DOUBLE_EQ(wae::raw_distance(a, b), wae::raw_distance(b, a));
  }
  env::TransitionSample d = t;
  d.a = 1;
  EXPECT_THROW((void)wae::raw_distance(t, d), DimensionMismatch);
  env::TransitionSample two = t;
  two.s = env::State::Zero(2);
  EXPECT_THROW((void)wae::raw_distance(t, two), DimensionMismatch);
}

TEST(RawDistance, DiscreteActionsUseTheDiscreteMetric) {
  env::TransitionSample a = tuple(0, 0, 0, 0), b = a;
  a.a = 0;
  b.a = 3;
  EXPECT_EQ(wae::raw_distance(a, b), 1.0);
}

TEST(LatentMetric, Examples) {
  const Eigen::RowVectorXd x = Eigen::RowVectorXd::Constant(1, 0.2);
  EXPECT_EQ(wae::latent_metric(x, x, 0.5), 0.0);
  EXPECT_DOUBLE_EQ(wae::latent_metric(Eigen::RowVectorXd::Zero(1), Eigen::RowVectorXd::Ones(1), 1.0), 0.5);
  EXPECT_THROW((void)wae::latent_metric(x, x, 0.0), DomainError);
  EXPECT_THROW((void)wae::latent_metric(x, x, 1.5), DomainError);
}

TEST(LatentMetric, AxiomsOnRandomTriples) {
  Rng rng(2);
  for (int i = 0; i < 10000; ++i) {
    const double lambda = 0.05 + 0.95 * uniform01(rng);
    auto draw = [&] { return Eigen::RowVectorXd(Eigen::RowVectorXd::NullaryExpr(4, [&] { return uniform01(rng); })); };
    const auto x = draw(), y = draw(), z = draw();
    const double xy = wae::latent_metric(x, y, lambda), yz = wae::latent_metric(y, z, lambda), xz = wae::latent_metric(x, z, lambda);
    ASSERT_GE(xy, 0.0);
    ASSERT_LT(xy, 1.0);
    ASSERT_EQ(xy, wae::latent_metric(y, x, lambda));
    ASSERT_LE(xz, xy + yz + 1e-15);
    ASSERT_EQ(wae::latent_metric(x, x, lambda), 0.0);
  }
}

TEST(LatentMetric, LipschitzEquivalence) {
  Rng rng(3);
  for (int n : {1, 4, 13}) {
    for (int i = 0; i < 10000; ++i) {
      const double lambda = 0.05 + 0.95 * uniform01(rng);
      const Eigen::RowVectorXd x = Eigen::RowVectorXd::NullaryExpr(n, [&] { return uniform01(rng); });
      const Eigen::RowVectorXd y = Eigen::RowVectorXd::NullaryExpr(n, [&] { return uniform01(rng); });
      const double d = (x - y).norm(), dl = wae::latent_metric(x, y, lambda);
      const auto c = wae::latent_metric_equivalence(n, lambda);
      ASSERT_LE(c.lower * d, dl + 1e-15);
      ASSERT_LE(dl, c.upper * d + 1e-15);
    }
  }
}

TEST(GradientPenalty, Examples) {
  Rng rng(4);
  const Matrix x = Matrix::NullaryExpr(5, 3, [&] { return uniform01(rng); });
  const Matrix y = Matrix::NullaryExpr(5, 3, [&] { return uniform01(rng); });
  {
    ad::Tape tape;
    Matrix w(3, 1);
    w << 0.6, 0.0, 0.8;
    Var wv = tape.constant(w);
    EXPECT_NEAR(wae::gradient_penalty(tape, [&](const Var& v) { return ad::matmul(v, wv); }, x, y, rng).scalar(), 0.0, 1e-12);
  }
  {
    ad::Tape tape;
    const Matrix x1 = x.leftCols(1), y1 = y.leftCols(1);
    EXPECT_NEAR(wae::gradient_penalty(tape, [](const Var& v) { return ad::scale(v, 2.0); }, x1, y1, rng).scalar(), 5.0, 1e-12);
  }
  {
    ad::Tape tape;
    const Matrix x1 = x.leftCols(1), y1 = y.leftCols(1);
    EXPECT_NEAR(wae::gradient_penalty(tape, [](const Var& v) { return ad::scale(v, 0.0); }, x1, y1, rng).scalar(), 5.0, 1e-9);
  }
  ad::Tape tape;
  EXPECT_THROW((void)wae::gradient_penalty(tape, [](const Var& v) { return v; }, x, y.topRows(2), rng), ShapeMismatch);
}

TEST(DualEstimate, MatchesTotalVariation) {
  Rng rng(5);
  for (int instance = 0; instance < 10; ++instance) {
    const int n = 2 + static_cast<int>(uniform01(rng) * 7);
    const Eigen::VectorXd p = random_simplex(n, rng), q = random_simplex(n, rng);
    wae::DualOptions opt;
    opt.seed = static_cast<std::uint64_t>(instance);
    const double est = wae::dual_estimate(discrete_points(n), p, discrete_points(n), q, opt);
    EXPECT_NEAR(est, exact_tv(p, q), 0.05) << "instance " << instance << " with " << n << " points";
  }
}

TEST(DualEstimate, PointMassesAtDistanceOne) {
  Matrix a(1, 4), b(1, 4);
  a << 0.0, 0.0, 0.0, 0.0;
  b << 0.5, 0.5, 0.5, 0.5;
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(1);
  EXPECT_NEAR(wae::dual_estimate(a, one, b, one), 1.0, 0.05);
}

TEST(DualEstimate, ConditionalKernels) {
  // Context (s, a) fixed; successors are latent codes at distance 1.
  const Matrix z = discrete_points(2);
  auto rows = [&](std::vector<int> succ) {
    Matrix m(static_cast<Eigen::Index>(succ.size()), 3);
    for (std::size_t i = 0; i < succ.size(); ++i) m.row(static_cast<Eigen::Index>(i)) << 0.25, z.row(succ[i]);
    return m;
  };
  const Eigen::VectorXd half = Eigen::VectorXd::Constant(2, 0.5);
  // Ground kernel 0.5/0.5 against a model point mass.
  EXPECT_NEAR(wae::dual_estimate(rows({0, 1}), half, rows({0, 0}), half, {}, 1), 0.5, 0.05);
  // Identical conditionals.
  EXPECT_LE(std::abs(wae::dual_estimate(rows({0, 1}), half, rows({0, 1}), half, {}, 1)), 0.02);
}

TEST(DualEstimate, ConditioningIsNotMarginal) {
  const Matrix z = discrete_points(2);
  auto rows = [&](int s1, int s2) {
    Matrix m(2, 3);
    m << 0.0, z.row(s1), 1.0, z.row(s2);
    return m;
  };
  const Eigen::VectorXd half = Eigen::VectorXd::Constant(2, 0.5);
  const double matched = wae::dual_estimate(rows(0, 1), half, rows(0, 1), half, {}, 1);
  const double permuted = wae::dual_estimate(rows(0, 1), half, rows(1, 0), half, {}, 1);
  EXPECT_LE(std::abs(matched), 0.02);
  EXPECT_NEAR(permuted, 1.0, 0.05);
}

TEST(Regularizers, ConstantCriticsGiveZero) {
  auto g = grid();
  latent::LatentModel model(grid_config(*g.env), 1);
  Rng rng(6);
  wae::Critics critics(model.config(), {}, rng);
  for (auto* p : critics.parameters()) p->value.setZero();
  env::StationarySampler sampler(g.env, g.policy, 7, 10);
  const auto xs = sampler.sample(32);
  const wae::Batch b = wae::make_batch(xs, model.config());
  const auto noise = wae::Noise::draw(b.size(), model.n_bits(), model.n_actions(), rng);
  ad::Tape tape;
  ad::Binder bind(tape);
  const auto e = wae::embed_transition(model, bind, b, noise);
  EXPECT_EQ(wae::steady_state_regularizer(model, critics, bind, e, noise).estimate.scalar(), 0.0);
  EXPECT_EQ(wae::transition_regularizer(critics, bind, b, e).estimate.scalar(), 0.0);
  // Identity action mode: the embedded action is the ground action.
  EXPECT_EQ(e.a.value(), b.a);
  EXPECT_EQ(e.z.value().leftCols(3), b.label);
  EXPECT_EQ(e.z_next.value().leftCols(3), b.label_next);
}

TEST(Regularizers, PenaltiesAreFiniteAndNonnegative) {
  auto g = grid();
  latent::LatentModel model(grid_config(*g.env), 1);
  Rng rng(6);
  wae::Critics critics(model.config(), {}, rng);
  env::StationarySampler sampler(g.env, g.policy, 7, 10);
  const auto xs = sampler.sample(32);
  const wae::Batch b = wae::make_batch(xs, model.config());
  const auto noise = wae::Noise::draw(b.size(), model.n_bits(), model.n_actions(), rng);
  ad::Tape tape;
  ad::Binder bind(tape);
  const auto e = wae::embed_transition(model, bind, b, noise);
  const auto ss = wae::steady_state_regularizer(model, critics, bind, e, noise);
  const auto tr = wae::transition_regularizer(critics, bind, b, e);
  const double p1 = wae::steady_penalty(critics, bind, ss, rng).scalar(), p2 = wae::transition_penalty(critics, bind, tr, rng).scalar();
  EXPECT_TRUE(std::isfinite(p1) && p1 >= 0.0);
  EXPECT_TRUE(std::isfinite(p2) && p2 >= 0.0);
  EXPECT_EQ(ss.real.cols(), 2 * 6 + 4);
  EXPECT_EQ(tr.context.cols(), 3 + 4 + 6 + 4);
}

TEST(Reconstruction, ZeroDecodersGiveBatchNorms) {
  auto g = grid();
  latent::LatentModel model(grid_config(*g.env), 2);
  for (auto* p : model.parameters())
    if (p->name.rfind("decoder", 0) == 0 || p->name.rfind("reward", 0) == 0) p->value.setZero();
  env::StationarySampler sampler(g.env, g.policy, 8, 10);
  const auto xs = sampler.sample(200);
  const wae::Batch b = wae::make_batch(xs, model.config());
  Rng rng(9);
  const auto noise = wae::Noise::draw(b.size(), model.n_bits(), model.n_actions(), rng);
  ad::Tape tape;
  ad::Binder bind(tape);
  const auto e = wae::embed_transition(model, bind, b, noise);
  double expect = 0.0;
  for (const auto& x : xs) expect += x.s.norm() + x.s_next.norm() + std::abs(x.r);
  expect /= static_cast<double>(xs.size());
  EXPECT_NEAR(wae::reconstruction_loss(model, bind, b, e).scalar(), expect, 1e-12);
}

TEST(Reconstruction, EmptyBatchRejected) {
  auto g = grid();
  latent::LatentModel model(grid_config(*g.env), 2);
  EXPECT_THROW((void)wae::make_batch(std::vector<env::TransitionSample>{}, model.config()), EmptyBatch);
}

TEST(Training, MinMaxRatio) {
  auto g = grid();
  wae::Trainer t(latent::LatentModel(grid_config(*g.env), 1), g.env, g.policy, small_training(1));
  const auto rows = run(t);
  ASSERT_EQ(rows.size(), 20U);
  EXPECT_EQ(t.max_updates(), 20);
  EXPECT_EQ(t.min_updates(), 5);
  for (const auto& r : rows) {
    EXPECT_GE(r.recon, 0.0);
    EXPECT_GE(r.gp, 0.0);
  }
}

TEST(Training, SameSeedSameMetrics) {
  auto g = grid();
  wae::Trainer a(latent::LatentModel(grid_config(*g.env), 1), g.env, g.policy, small_training(3));
  wae::Trainer b(latent::LatentModel(grid_config(*g.env), 1), g.env, g.policy, small_training(3));
  const auto ra = run(a), rb = run(b);
  for (std::size_t i = 0; i < ra.size(); ++i) {
    EXPECT_EQ(ra[i].recon, rb[i].recon);
    EXPECT_EQ(ra[i].w_ss, rb[i].w_ss);
    EXPECT_EQ(ra[i].w_trans, rb[i].w_trans);
    EXPECT_EQ(ra[i].gp, rb[i].gp);
  }
}

TEST(Training, ZeroBetaDecouplesMinPlayer) {
  auto g = grid();
  auto ca = small_training(4), cb = small_training(4);
  ca.beta_ss = ca.beta_trans = cb.beta_ss = cb.beta_trans = 0.0;
  cb.gp_coef = 20.0;
  cb.max_adam.lr = 5e-3;
  wae::Trainer a(latent::LatentModel(grid_config(*g.env), 1), g.env, g.policy, ca);
  wae::Trainer b(latent::LatentModel(grid_config(*g.env), 1), g.env, g.policy, cb);
  const auto ra = run(a), rb = run(b);
  bool critics_differ = false;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    EXPECT_EQ(ra[i].recon, rb[i].recon);
    critics_differ = critics_differ || ra[i].w_ss != rb[i].w_ss;
  }
  EXPECT_TRUE(critics_differ);
}

TEST(Training, ResumeReproducesTheRun) {
  auto g = grid();
  wae::Trainer full(latent::LatentModel(grid_config(*g.env), 1), g.env, g.policy, small_training(5));
  const auto rf = run(full);

  auto half_cfg = small_training(5);
  half_cfg.steps = 10;
  wae::Trainer half(latent::LatentModel(grid_config(*g.env), 1), g.env, g.policy, half_cfg);
  auto rh = run(half);
  const auto j = nlohmann::json::parse(half.checkpoint().dump());
  auto resumed = wae::Trainer::resume(j, g.env, g.policy, 20);
  EXPECT_EQ(resumed->step_count(), 10);
  const auto rest = run(*resumed);
  rh.insert(rh.end(), rest.begin(), rest.end());
  ASSERT_EQ(rh.size(), rf.size());
  for (std::size_t i = 0; i < rf.size(); ++i) {
    EXPECT_EQ(rh[i].step, rf[i].step);
    EXPECT_EQ(rh[i].recon, rf[i].recon);
    EXPECT_EQ(rh[i].w_ss, rf[i].w_ss);
  }
  EXPECT_EQ(resumed->min_updates(), full.min_updates());
  EXPECT_EQ(resumed->model().initial_state(), full.model().initial_state());
}

TEST(Training, DivergenceSavesLastGoodState) {
  auto g = grid();
  wae::Trainer t(latent::LatentModel(grid_config(*g.env), 1), g.env, g.policy, small_training(6));
  const auto path = (std::filesystem::temp_directory_path() / "waemdp_divergence.json").string();
  std::filesystem::remove(path);
  t.set_divergence_checkpoint(path);
  (void)t.step();
  t.model().parameters().front()->value(0, 0) = std::nan("");
  EXPECT_THROW((void)t.step(), DivergenceDetected);
  ASSERT_TRUE(std::filesystem::exists(path));
  std::ifstream in(path);
  const auto j = nlohmann::json::parse(in);
  EXPECT_EQ(j.at("step").get<long>(), 1);
  std::filesystem::remove(path);
}

TEST(Training, ConfigValidation) {
  auto g = grid();
  auto bad = small_training(1);
  bad.m = 0;
  EXPECT_THROW(wae::Trainer(latent::LatentModel(grid_config(*g.env), 1), g.env, g.policy, bad), ConfigError);
  bad = small_training(1);
  bad.gp_coef = 0.0;
  EXPECT_THROW(wae::Trainer(latent::LatentModel(grid_config(*g.env), 1), g.env, g.policy, bad), ConfigError);
  auto cfg = grid_config(*g.env);
  cfg.atomic_props = {"goal", "unsafe"};
  EXPECT_THROW(wae::Trainer(latent::LatentModel(cfg, 1), g.env, g.policy, small_training(1)), DimensionMismatch);
  EXPECT_DOUBLE_EQ(wae::TrainingConfig::min_beta_for_metric(0.5), 2.0);
}
