#pragma once

// Pieces of the Wasserstein auto-encoded MDP objective: raw transition
// distance, latent metric, reconstruction loss, and the dual estimates of the
// steady-state and transition regularizers.

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "waemdp/autodiff/adam.hpp"
#include "waemdp/autodiff/checkpoint.hpp"
#include "waemdp/autodiff/mlp.hpp"
#include "waemdp/dist/relaxed.hpp"
#include "waemdp/latent/model.hpp"
#include "waemdp/wae/penalty.hpp"

namespace waemdp::wae {

using ad::Matrix;
using ad::Var;

/// d_S(s1, s2) + d_A(a1, a2) + |r1 - r2| + d_S(s1', s2'). States and box
/// actions use the Euclidean metric, discrete actions the discrete metric.
inline double raw_distance(const env::TransitionSample& t1, const env::TransitionSample& t2) {
  if (t1.s.size() != t2.s.size() || t1.s_next.size() != t2.s_next.size() || t1.s.size() != t1.s_next.size())
    throw DimensionMismatch("raw_distance: state dimensions differ");
  if (t1.a.index() != t2.a.index()) throw DimensionMismatch("raw_distance: action kinds differ");
  double da = 0.0;
  if (const int* i = std::get_if<int>(&t1.a)) {
    da = *i == std::get<int>(t2.a) ? 0.0 : 1.0;
  } else {
    const auto& x = std::get<std::vector<double>>(t1.a);
    const auto& y = std::get<std::vector<double>>(t2.a);
    if (x.size() != y.size()) throw DimensionMismatch("raw_distance: action dimensions differ");
    double sq = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) sq += (x[k] - y[k]) * (x[k] - y[k]);
    da = std::sqrt(sq);
  }
  return (t1.s - t2.s).norm() + da + std::abs(t1.r - t2.r) + (t1.s_next - t2.s_next).norm();
}

/// d_lambda(x, y) = d(x, y) / (lambda + d(x, y)) with d Euclidean.
inline double latent_metric(const Eigen::RowVectorXd& x, const Eigen::RowVectorXd& y, double lambda) {
  if (!(lambda > 0.0 && lambda <= 1.0)) throw DomainError("latent metric needs lambda in (0, 1]");
  if (x.size() != y.size()) throw DimensionMismatch("latent_metric: vectors differ in length");
  const double d = (x - y).norm();
  return d / (lambda + d);
}

/// Constants a, b with a d <= d_lambda <= b d on [0, 1]^n.
struct MetricEquivalence {
  double lower;
  double upper;
};
inline MetricEquivalence latent_metric_equivalence(int n, double lambda) {
  return {1.0 / (lambda + std::sqrt(static_cast<double>(n))), 1.0 / lambda};
}

struct CriticConfig {
  std::vector<int> hidden{64, 64};
  std::string activation = "leaky_relu";

  [[nodiscard]] nlohmann::json to_json() const { return {{"hidden", hidden}, {"activation", activation}}; }
  static CriticConfig from_json(const nlohmann::json& j) {
    CriticConfig c;
    c.hidden = j.value("hidden", c.hidden);
    c.activation = j.value("activation", c.activation);
    return c;
  }
};

/// The two Lipschitz networks of the max-player.
struct Critics {
  ad::Mlp steady;      // (z, a, z') -> R
  ad::Mlp transition;  // (s, a, z, abar, z') -> R

  Critics() = default;
  Critics(const latent::LatentConfig& m, const CriticConfig& c, Rng& rng) {
    const int n = m.n_bits, k = m.n_latent_actions();
    const auto act = ad::activation_from_name(c.activation);
    auto sizes = [&](int in) {
      std::vector<int> s{in};
      s.insert(s.end(), c.hidden.begin(), c.hidden.end());
      s.push_back(1);
      return s;
    };
    steady = ad::Mlp("critic_steady", ad::MlpSpec{sizes(2 * n + k), act, ad::Activation::Identity}, rng);
    transition = ad::Mlp("critic_transition", ad::MlpSpec{sizes(m.state_dim + m.action_dim() + 2 * n + k), act, ad::Activation::Identity}, rng);
  }

  std::vector<ad::Parameter*> parameters() {
    std::vector<ad::Parameter*> out;
    steady.collect(out);
    transition.collect(out);
    return out;
  }
};

/// Batch of ground transitions as matrices (one row per transition).
struct Batch {
  Matrix s, a, r, s_next, label, label_next;
  [[nodiscard]] Eigen::Index size() const { return s.rows(); }
};

inline Batch make_batch(std::span<const env::TransitionSample> xs, const latent::LatentConfig& cfg) {
  if (xs.empty()) throw EmptyBatch("empty transition batch");
  const auto n = static_cast<Eigen::Index>(xs.size());
  Batch b;
  b.s.resize(n, cfg.state_dim);
  b.s_next.resize(n, cfg.state_dim);
  b.a.resize(n, cfg.action_dim());
  b.r.resize(n, 1);
  b.label.resize(n, cfg.ap_bits());
  b.label_next.resize(n, cfg.ap_bits());
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& x = xs[static_cast<std::size_t>(i)];
    if (x.s.size() != cfg.state_dim || x.s_next.size() != cfg.state_dim)
      throw DimensionMismatch("transition state dimension differs from the model's state_dim");
    if (static_cast<int>(x.label.size()) != cfg.ap_bits() || static_cast<int>(x.label_next.size()) != cfg.ap_bits())
      throw DimensionMismatch("transition labels differ from the model's label bits");
    if (!cfg.actions.contains(x.a)) throw InvalidAction("batch action " + env::describe(x.a) + " outside the action space");
    b.s.row(i) = x.s.transpose();
    b.s_next.row(i) = x.s_next.transpose();
    b.a.row(i) = cfg.actions.encode(x.a);
    b.r(i, 0) = x.r;
    for (int j = 0; j < cfg.ap_bits(); ++j) {
      b.label(i, j) = x.label[static_cast<std::size_t>(j)];
      b.label_next(i, j) = x.label_next[static_cast<std::size_t>(j)];
    }
  }
  return b;
}

/// Noise for one objective evaluation.
struct Noise {
  Matrix action;       // Gumbel, N x k (action encoder)
  Matrix successor;    // logistic, N x n (model successor of the batch)
  Matrix prior;        // logistic, N x n (prior state)
  Matrix prior_action; // Gumbel, N x k (latent policy at the prior state)
  Matrix prior_next;   // logistic, N x n (model successor of the prior state)

  static Noise draw(Eigen::Index rows, int n, int k, Rng& rng) {
    Noise z;
    z.action = dist::gumbel_noise(rows, k, rng);
    z.successor = dist::logistic_noise(rows, n, rng);
    z.prior = dist::logistic_noise(rows, n, rng);
    z.prior_action = dist::gumbel_noise(rows, k, rng);
    z.prior_next = dist::logistic_noise(rows, n, rng);
    return z;
  }
};

/// Relaxed embedding of a batch: (z, abar, z') plus the model successor z*.
struct Embedded {
  Var z, a, z_next, z_model;
};

inline Embedded embed_transition(latent::LatentModel& model, ad::Binder& bind, const Batch& b, const Noise& noise) {
  Embedded e;
  e.z = model.encode(bind, b.s, b.label);
  e.z_next = model.encode(bind, b.s_next, b.label_next);
  e.a = model.encode_actions(bind, e.z, b.a, noise.action);
  e.z_model = model.transition_sample(bind, e.z, e.a, noise.successor);
  return e;
}

/// Mean of ||s - G(z)|| + d_A(a, psi(z, abar)) + |r - R(z, abar)| + ||s' - G(z')||.
inline Var reconstruction_loss(latent::LatentModel& model, ad::Binder& bind, const Batch& b, const Embedded& e) {
  if (b.size() == 0) throw EmptyBatch("empty batch");
  ad::Tape& tape = bind.tape();
  Var ds = ad::row_norm(ad::sub(tape.constant(b.s), model.decode_state(bind, e.z)));
  Var dn = ad::row_norm(ad::sub(tape.constant(b.s_next), model.decode_state(bind, e.z_next)));
  Var dr = ad::abs(ad::sub(tape.constant(b.r), model.reward(bind, e.z, e.a)));
  Var total = ad::add(ad::add(ds, dn), dr);
  if (!model.config().identity_actions())
    total = ad::add(total, ad::row_norm(ad::sub(tape.constant(b.a), model.decode_action(bind, e.z, e.a))));
  return ad::mean(total);
}

/// Dual estimate with the points each critic term was evaluated at.
struct DualTerm {
  Var estimate;  // mean critic(real) - mean critic(model)
  Matrix real;   // critic inputs of the first term (values)
  Matrix model;  // critic inputs of the second term (values)
  Matrix context;  // fixed leading inputs (transition regularizer only)
};

/// Steady-state regularizer: critic at (z, abar, z*) against a triple drawn
/// from the latent model's own stationary sampler (prior, policy, transition).
inline DualTerm steady_state_regularizer(latent::LatentModel& model, Critics& critics, ad::Binder& bind, const Embedded& e,
                                         const Noise& noise) {
  Var zp = model.prior_sample(bind, noise.prior);
  Var ap = model.policy_sample(bind, zp, noise.prior_action);
  Var zpn = model.transition_sample(bind, zp, ap, noise.prior_next);
  Var real = ad::concat(ad::concat(e.z, e.a), e.z_model);
  Var fake = ad::concat(ad::concat(zp, ap), zpn);
  DualTerm t;
  t.estimate = ad::sub(ad::mean(critics.steady.forward(bind, real)), ad::mean(critics.steady.forward(bind, fake)));
  t.real = real.value();
  t.model = fake.value();
  return t;
}

/// Transition regularizer: critic at (s, a, z, abar, z') against (s, a, z, abar, z*).
inline DualTerm transition_regularizer(Critics& critics, ad::Binder& bind, const Batch& b, const Embedded& e) {
  Var ctx = ad::concat(ad::concat(bind.tape().constant(b.s), bind.tape().constant(b.a)), ad::concat(e.z, e.a));
  DualTerm t;
  t.estimate = ad::sub(ad::mean(critics.transition.forward(bind, ad::concat(ctx, e.z_next))),
                       ad::mean(critics.transition.forward(bind, ad::concat(ctx, e.z_model))));
  t.real = e.z_next.value();
  t.model = e.z_model.value();
  t.context = ctx.value();
  return t;
}

/// Gradient penalty of the steady-state critic on full-triple interpolates.
inline Var steady_penalty(Critics& critics, ad::Binder& bind, const DualTerm& t, Rng& rng) {
  return gradient_penalty(bind.tape(), [&](const Var& x) { return critics.steady.forward(bind, x); }, t.real, t.model, rng);
}

/// Gradient penalty of the transition critic on successor-only interpolates.
inline Var transition_penalty(Critics& critics, ad::Binder& bind, const DualTerm& t, Rng& rng) {
  Var ctx = bind.tape().constant(t.context);
  return gradient_penalty(
      bind.tape(), [&](const Var& x) { return critics.transition.forward(bind, ad::concat(ctx, x)); }, t.real, t.model, rng);
}

// ---- standalone dual estimation on fixed finite distributions ----

struct DualOptions {
  std::vector<int> hidden{32, 32};
  long steps = 3000;
  int batch = 128;
  // The penalized optimum overshoots W by about W / (2 gp_coef).
  double gp_coef = 50.0;
  ad::AdamConfig adam{1e-3, 0.5, 0.9, 1e-8};
  std::uint64_t seed = 0;
};

/// Kantorovich dual estimate of W(P, Q) for finitely supported P and Q with
/// the Euclidean metric on the support points, maximized by a penalized
/// critic. With `context_cols > 0` the rows of P and Q are paired: row i of
/// both shares the leading context columns and the weight p(i) = q(i), and
/// the penalty acts on the remaining columns only.
inline double dual_estimate(const Matrix& p_points, const Eigen::VectorXd& p, const Matrix& q_points, const Eigen::VectorXd& q,
                            const DualOptions& opt = {}, int context_cols = 0) {
  if (p_points.cols() != q_points.cols()) throw ShapeMismatch("support points differ in dimension");
  if (p_points.rows() != p.size() || q_points.rows() != q.size()) throw ShapeMismatch("one weight per support point");
  if (context_cols > 0 && (p_points.rows() != q_points.rows() || (p - q).cwiseAbs().maxCoeff() > 1e-12))
    throw ShapeMismatch("paired dual estimation needs equal row weights");
  Rng rng(opt.seed);
  std::vector<int> sizes{static_cast<int>(p_points.cols())};
  sizes.insert(sizes.end(), opt.hidden.begin(), opt.hidden.end());
  sizes.push_back(1);
  ad::Mlp critic("critic", ad::MlpSpec{sizes, ad::Activation::LeakyRelu, ad::Activation::Identity}, rng);
  std::vector<ad::Parameter*> params;
  critic.collect(params);
  ad::Adam adam(opt.adam);
  const std::vector<double> pw(p.data(), p.data() + p.size()), qw(q.data(), q.data() + q.size());
  const Eigen::Index ctx = context_cols, tail = p_points.cols() - ctx;
  for (long step = 0; step < opt.steps; ++step) {
    ad::Tape tape;
    ad::Binder bind(tape);
    Var ep = ad::sum(ad::mul_const(critic.forward(bind, tape.constant(p_points)), Matrix(p)));
    Var eq = ad::sum(ad::mul_const(critic.forward(bind, tape.constant(q_points)), Matrix(q)));
    Matrix x(opt.batch, tail), y(opt.batch, tail), c(opt.batch, ctx);
    for (int i = 0; i < opt.batch; ++i) {
      const auto pi = static_cast<Eigen::Index>(categorical(rng, pw));
      const auto qi = context_cols > 0 ? pi : static_cast<Eigen::Index>(categorical(rng, qw));
      x.row(i) = p_points.row(pi).tail(tail);
      y.row(i) = q_points.row(qi).tail(tail);
      if (ctx > 0) c.row(i) = p_points.row(pi).head(ctx);
    }
    Var cv = tape.constant(c);
    Var gp = gradient_penalty(
        tape, [&](const Var& v) { return critic.forward(bind, ctx > 0 ? ad::concat(cv, v) : v); }, x, y, rng);
    Var obj = ad::sub(ad::sub(ep, eq), ad::scale(gp, opt.gp_coef / opt.batch));
    const auto grads = tape.gradient_values(obj, bind.vars(params));
    adam.step(params, grads, ad::Direction::Ascend);
  }
  const Matrix fp = critic.eval(p_points), fq = critic.eval(q_points);
  return p.dot(fp.col(0)) - q.dot(fq.col(0));
}

}  // namespace waemdp::wae
