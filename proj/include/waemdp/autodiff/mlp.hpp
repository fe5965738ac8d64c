#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "waemdp/autodiff/tape.hpp"
#include "waemdp/rng.hpp"

namespace waemdp::ad {

/// A named trainable array.
struct Parameter {
  std::string name;
  Matrix value;
};

/// Binds parameters to leaf variables of one tape, once per parameter.
class Binder {
 public:
  explicit Binder(Tape& tape) : tape_(&tape) {}

  Var operator()(Parameter& p) {
    auto it = vars_.find(&p);
    if (it != vars_.end()) return it->second;
    Var v = tape_->leaf(p.value, true);
    vars_.emplace(&p, v);
    return v;
  }

  std::vector<Var> vars(const std::vector<Parameter*>& ps) {
    std::vector<Var> out;
    out.reserve(ps.size());
    for (Parameter* p : ps) out.push_back((*this)(*p));
    return out;
  }

  [[nodiscard]] Tape& tape() const { return *tape_; }

 private:
  Tape* tape_;
  std::unordered_map<const Parameter*, Var> vars_;
};

enum class Activation { Identity, Relu, LeakyRelu, Tanh, Sigmoid, Softplus };

inline Var activate(const Var& x, Activation act) {
  switch (act) {
    case Activation::Identity: return x;
    case Activation::Relu: return relu(x);
    case Activation::LeakyRelu: return relu(x, 0.01);
    case Activation::Tanh: return tanh(x);
    case Activation::Sigmoid: return sigmoid(x);
    case Activation::Softplus: return softplus(x);
  }
  return x;
}

inline Matrix activate(const Matrix& x, Activation act) {
  switch (act) {
    case Activation::Identity: return x;
    case Activation::Relu: return x.cwiseMax(0.0);
    case Activation::LeakyRelu: return x.unaryExpr([](double v) { return v > 0 ? v : 0.01 * v; });
    case Activation::Tanh: return x.array().tanh().matrix();
    case Activation::Sigmoid: return x.unaryExpr([](double v) { return detail::sigmoid(v); });
    case Activation::Softplus: return x.unaryExpr([](double v) { return detail::softplus(v); });
  }
  return x;
}

inline std::string activation_name(Activation a) {
  switch (a) {
    case Activation::Identity: return "identity";
    case Activation::Relu: return "relu";
    case Activation::LeakyRelu: return "leaky_relu";
    case Activation::Tanh: return "tanh";
    case Activation::Sigmoid: return "sigmoid";
    case Activation::Softplus: return "softplus";
  }
  return "identity";
}

inline Activation activation_from_name(const std::string& s) {
  if (s == "relu") return Activation::Relu;
  if (s == "leaky_relu") return Activation::LeakyRelu;
  if (s == "tanh") return Activation::Tanh;
  if (s == "sigmoid") return Activation::Sigmoid;
  if (s == "softplus") return Activation::Softplus;
  if (s == "identity") return Activation::Identity;
  throw ConfigError("unknown activation '" + s + "'");
}

struct MlpSpec {
  std::vector<int> sizes;  // input, hidden..., output
  Activation hidden = Activation::Relu;
  Activation output = Activation::Identity;
};

/// Fully connected network acting on row-batched inputs (one sample per row).
///
/// Optional connectivity masks turn it into a MADE network; an optional masked
/// direct input-to-output matrix adds a skip connection.
class Mlp {
 public:
  Mlp() = default;

  Mlp(std::string name, MlpSpec spec, Rng& rng) : name_(std::move(name)), spec_(std::move(spec)) {
    if (spec_.sizes.size() < 2) throw ConfigError("mlp needs at least input and output sizes");
    for (std::size_t l = 0; l + 1 < spec_.sizes.size(); ++l) {
      const int fan_in = spec_.sizes[l];
      const int fan_out = spec_.sizes[l + 1];
      weights_.push_back({name_ + ".W" + std::to_string(l), glorot(fan_in, fan_out, rng)});
      biases_.push_back({name_ + ".b" + std::to_string(l), Matrix::Zero(1, fan_out)});
    }
  }

  /// Installs MADE masks (one per layer, fan_in x fan_out) and optionally a direct mask.
  void set_masks(std::vector<Matrix> masks, std::optional<Matrix> direct_mask, Rng& rng) {
    if (masks.size() != weights_.size()) throw ShapeMismatch("mask count differs from layer count");
    for (std::size_t l = 0; l < masks.size(); ++l) {
      if (masks[l].rows() != weights_[l].value.rows() || masks[l].cols() != weights_[l].value.cols())
        throw ShapeMismatch("mask shape differs from weight shape");
    }
    masks_ = std::move(masks);
    if (direct_mask) {
      const int in = spec_.sizes.front();
      const int out = spec_.sizes.back();
      if (direct_mask->rows() != in || direct_mask->cols() != out) throw ShapeMismatch("direct mask shape");
      direct_mask_ = std::move(direct_mask);
      direct_ = Parameter{name_ + ".D", glorot(in, out, rng)};
    }
  }

  [[nodiscard]] const MlpSpec& spec() const { return spec_; }
  [[nodiscard]] const std::string& name() const { return name_; }
  [[nodiscard]] int input_size() const { return spec_.sizes.front(); }
  [[nodiscard]] int output_size() const { return spec_.sizes.back(); }
  [[nodiscard]] const std::vector<Matrix>& masks() const { return masks_; }

  [[nodiscard]] std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& w : weights_) n += static_cast<std::size_t>(w.value.size());
    for (const auto& b : biases_) n += static_cast<std::size_t>(b.value.size());
    if (direct_) n += static_cast<std::size_t>(direct_->value.size());
    return n;
  }

  void collect(std::vector<Parameter*>& out) {
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      out.push_back(&weights_[l]);
      out.push_back(&biases_[l]);
    }
    if (direct_) out.push_back(&*direct_);
  }
  std::vector<Parameter*> parameters() {
    std::vector<Parameter*> out;
    collect(out);
    return out;
  }

  Parameter& weight(std::size_t l) { return weights_.at(l); }
  Parameter& bias(std::size_t l) { return biases_.at(l); }
  Parameter* direct() { return direct_ ? &*direct_ : nullptr; }

  Var forward(Binder& bind, const Var& x) {
    if (x.cols() != input_size()) throw ShapeMismatch(name_ + ": input has " + std::to_string(x.cols()) +
                                                      " columns, expected " + std::to_string(input_size()));
    Var h = x;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      Var w = bind(weights_[l]);
      if (!masks_.empty()) w = mul_const(w, masks_[l]);
      h = add_rowvec(matmul(h, w), bind(biases_[l]));
      if (l + 1 < weights_.size()) h = activate(h, spec_.hidden);
    }
    if (direct_) h = add(h, matmul(x, mul_const(bind(*direct_), *direct_mask_)));
    return activate(h, spec_.output);
  }

  [[nodiscard]] Matrix eval(const Matrix& x) const {
    if (x.cols() != input_size()) throw ShapeMismatch(name_ + ": input column count");
    Matrix h = x;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      Matrix z = masks_.empty() ? Matrix(h * weights_[l].value)
                                : Matrix(h * weights_[l].value.cwiseProduct(masks_[l]));
      z.rowwise() += biases_[l].value.row(0);
      h = (l + 1 < weights_.size()) ? activate(z, spec_.hidden) : z;
    }
    if (direct_) h += x * direct_->value.cwiseProduct(*direct_mask_);
    return activate(h, spec_.output);
  }

 private:
  static Matrix glorot(int fan_in, int fan_out, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Matrix w(fan_in, fan_out);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = (2.0 * uniform01(rng) - 1.0) * limit;
    return w;
  }

  std::string name_;
  MlpSpec spec_;
  std::vector<Parameter> weights_;
  std::vector<Parameter> biases_;
  std::vector<Matrix> masks_;
  std::optional<Matrix> direct_mask_;
  std::optional<Parameter> direct_;
};

}  // namespace waemdp::ad
