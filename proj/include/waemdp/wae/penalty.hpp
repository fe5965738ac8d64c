#pragma once

#include <Eigen/Dense>

#include "waemdp/autodiff/tape.hpp"
#include "waemdp/rng.hpp"

namespace waemdp::wae {

/// Sum over rows of (||grad phi(x~)|| - 1)^2 with x~ = eps x + (1 - eps) y.
///
/// `phi` maps an N x d variable to N x 1 (rows independent). The interpolates
/// are fresh leaves, so the result depends on the parameters of phi only, and
/// its gradient with respect to them goes through the input gradient.
template <class Phi>
ad::Var gradient_penalty(ad::Tape& tape, Phi&& phi, const ad::Matrix& x, const ad::Matrix& y,
                         const Eigen::VectorXd& eps) {
  if (x.rows() != y.rows() || x.cols() != y.cols()) throw ShapeMismatch("gradient_penalty: x and y differ in shape");
  if (eps.size() != x.rows()) throw ShapeMismatch("gradient_penalty: one interpolation weight per row");
  ad::Matrix xt = x;
  for (Eigen::Index i = 0; i < x.rows(); ++i) xt.row(i) = eps(i) * x.row(i) + (1.0 - eps(i)) * y.row(i);
  ad::Var leaf = tape.leaf(std::move(xt), true);
  ad::Var out = phi(leaf);
  if (out.cols() != 1 || out.rows() != x.rows()) throw ShapeMismatch("gradient_penalty: critic must return N x 1");
  const ad::Var inputs[] = {leaf};
  ad::Var g = tape.grad(ad::sum(out), inputs)[0];
  return ad::sum(ad::square(ad::add_const(ad::row_norm(g), -1.0)));
}

template <class Phi>
ad::Var gradient_penalty(ad::Tape& tape, Phi&& phi, const ad::Matrix& x, const ad::Matrix& y, Rng& rng) {
  Eigen::VectorXd eps(x.rows());
  for (Eigen::Index i = 0; i < eps.size(); ++i) eps(i) = uniform01(rng);
  return gradient_penalty(tape, std::forward<Phi>(phi), x, y, eps);
}

}  // namespace waemdp::wae
