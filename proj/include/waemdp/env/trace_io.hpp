#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "waemdp/env/ground_mdp.hpp"

namespace waemdp::env {

inline nlohmann::json to_json(const TransitionSample& x) {
  nlohmann::json j;
  j["s"] = std::vector<double>(x.s.data(), x.s.data() + x.s.size());
  if (const int* i = std::get_if<int>(&x.a)) {
    j["a"] = *i;
  } else {
    j["a"] = std::get<std::vector<double>>(x.a);
  }
  j["r"] = x.r;
  j["s_next"] = std::vector<double>(x.s_next.data(), x.s_next.data() + x.s_next.size());
  j["label"] = x.label;
  j["label_next"] = x.label_next;
  j["ep"] = x.ep;
  j["t"] = x.t;
  return j;
}

inline TransitionSample sample_from_json(const nlohmann::json& j) {
  TransitionSample x;
  try {
    const std::vector<double> s = j.at("s");
    const std::vector<double> sn = j.at("s_next");
    x.s = Eigen::Map<const State>(s.data(), static_cast<Eigen::Index>(s.size()));
    x.s_next = Eigen::Map<const State>(sn.data(), static_cast<Eigen::Index>(sn.size()));
    if (j.at("a").is_array()) {
      x.a = j.at("a").get<std::vector<double>>();
    } else {
      x.a = j.at("a").get<int>();
    }
    x.r = j.at("r");
    x.label_next = j.at("label_next").get<Labels>();
    if (j.contains("label")) x.label = j.at("label").get<Labels>();
    x.ep = j.at("ep");
    x.t = j.at("t");
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed trace line: ") + e.what());
  }
  return x;
}

/// One JSON object per line.
inline void write_trace(const std::string& path, const std::vector<TransitionSample>& xs) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  for (const auto& x : xs) out << to_json(x).dump() << '\n';
}

inline std::vector<TransitionSample> read_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  std::vector<TransitionSample> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      out.push_back(sample_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(path + ": " + e.what());
    }
  }
  return out;
}

}  // namespace waemdp::env
