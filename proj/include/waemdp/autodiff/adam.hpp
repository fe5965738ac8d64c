#pragma once

#include <cmath>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "waemdp/autodiff/checkpoint.hpp"

namespace waemdp::ad {

enum class Direction { Descend, Ascend };

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam over a fixed, ordered parameter list.
class Adam {
 public:
  Adam() = default;
  explicit Adam(AdamConfig cfg) : cfg_(cfg) {}

  [[nodiscard]] const AdamConfig& config() const { return cfg_; }
  void set_lr(double lr) { cfg_.lr = lr; }
  [[nodiscard]] long steps() const { return t_; }

  void step(std::span<Parameter* const> params, std::span<const Matrix> grads, Direction dir) {
    if (params.size() != grads.size()) throw ShapeMismatch("adam: parameter and gradient counts differ");
    if (m_.empty()) {
      for (Parameter* p : params) {
        m_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
        v_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
      }
    }
    if (m_.size() != params.size()) throw ShapeMismatch("adam: parameter list changed between steps");
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (grads[i].rows() != params[i]->value.rows() || grads[i].cols() != params[i]->value.cols() ||
          m_[i].rows() != grads[i].rows() || m_[i].cols() != grads[i].cols())
        throw ShapeMismatch("adam: gradient shape differs for " + params[i]->name);
    }
    ++t_;
    const double sign = dir == Direction::Ascend ? 1.0 : -1.0;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * grads[i];
      v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * grads[i].cwiseProduct(grads[i]);
      const Eigen::ArrayXXd mhat = m_[i].array() / c1;
      const Eigen::ArrayXXd vhat = v_[i].array() / c2;
      params[i]->value.array() += sign * cfg_.lr * mhat / (vhat.sqrt() + cfg_.eps);
    }
  }

  [[nodiscard]] nlohmann::json to_json() const {
    nlohmann::json j;
    j["lr"] = cfg_.lr;
    j["beta1"] = cfg_.beta1;
    j["beta2"] = cfg_.beta2;
    j["eps"] = cfg_.eps;
    j["t"] = t_;
    j["m"] = nlohmann::json::array();
    j["v"] = nlohmann::json::array();
    for (const Matrix& m : m_) j["m"].push_back(matrix_to_json(m));
    for (const Matrix& v : v_) j["v"].push_back(matrix_to_json(v));
    return j;
  }

  static Adam from_json(const nlohmann::json& j) {
    Adam a(AdamConfig{j.at("lr"), j.at("beta1"), j.at("beta2"), j.at("eps")});
    a.t_ = j.at("t");
    for (const auto& e : j.at("m")) a.m_.push_back(matrix_from_json(e));
    for (const auto& e : j.at("v")) a.v_.push_back(matrix_from_json(e));
    return a;
  }

 private:
  AdamConfig cfg_;
  long t_ = 0;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
};

}  // namespace waemdp::ad
