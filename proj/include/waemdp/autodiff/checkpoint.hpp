#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "waemdp/autodiff/mlp.hpp"

namespace waemdp::ad {

inline nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json e;
  e["shape"] = {m.rows(), m.cols()};
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  e["data"] = std::move(data);
  return e;
}

inline Matrix matrix_from_json(const nlohmann::json& e) {
  const Eigen::Index r = e.at("shape").at(0);
  const Eigen::Index c = e.at("shape").at(1);
  const std::vector<double> data = e.at("data");
  if (static_cast<Eigen::Index>(data.size()) != r * c) throw ShapeMismatch("checkpoint entry size differs from shape");
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index k = 0; k < c; ++k) m(i, k) = data[static_cast<std::size_t>(i * c + k)];
  return m;
}

/// Flat map name -> {shape, data} (row-major).
inline nlohmann::json save_parameters(const std::vector<Parameter*>& params) {
  nlohmann::json j = nlohmann::json::object();
  for (const Parameter* p : params) j[p->name] = matrix_to_json(p->value);
  return j;
}

inline void load_parameters(const std::vector<Parameter*>& params, const nlohmann::json& j) {
  for (Parameter* p : params) {
    if (!j.contains(p->name)) throw ConfigError("checkpoint lacks parameter " + p->name);
    Matrix m = matrix_from_json(j.at(p->name));
    if (m.rows() != p->value.rows() || m.cols() != p->value.cols())
      throw ShapeMismatch("checkpoint shape differs for " + p->name);
    p->value = std::move(m);
  }
}

}  // namespace waemdp::ad
