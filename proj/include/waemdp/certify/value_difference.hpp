#pragma once

#include <cmath>
#include <vector>

#include <nlohmann/json.hpp>

#include "waemdp/certify/property.hpp"
#include "waemdp/env/ground_mdp.hpp"

namespace waemdp::certify {

/// Discounted value of `prop` along one finite trajectory. Unresolved
/// reachability events count as 0.
inline double trajectory_value(const std::vector<env::TransitionSample>& xs, const Property& prop, double gamma) {
  double disc = 1.0;
  if (prop.kind == Property::Kind::Return) {
    double g = 0.0;
    for (const auto& x : xs) {
      g += disc * x.r;
      disc *= gamma;
    }
    return g;
  }
  for (const auto& x : xs) {
    if (prop.kind == Property::Kind::NextReach) {
      if (prop.target->eval(x.label) && prop.next->eval(x.label_next)) return disc * gamma;
    } else {
      if (prop.target->eval(x.label)) return disc;
      if (!prop.constraint->eval(x.label)) return 0.0;
    }
    disc *= gamma;
  }
  if (prop.kind != Property::Kind::NextReach && !xs.empty() && prop.target->eval(xs.back().label_next)) return disc;
  return 0.0;
}

/// Truncation horizon after which the discounted tail is below `tail`.
inline long horizon_for(double gamma, double tail, double bound = 0.5) {
  if (gamma <= 0.0) return 1;
  if (gamma >= 1.0) throw DomainError("horizon needs gamma < 1");
  return static_cast<long>(std::ceil(std::log(tail * (1.0 - gamma) / bound) / std::log(gamma))) + 1;
}

struct ValueDifferenceReport {
  double ground_mean = 0.0;
  double ground_ci95 = 0.0;  // half-width of the normal-approximation interval
  double latent_value = 0.0;
  double difference = 0.0;   // |ground_mean - latent_value|
  long episodes = 0;

  [[nodiscard]] nlohmann::json to_json() const {
    return {{"V_ground_mc", ground_mean}, {"V_ground_ci95", ground_ci95}, {"V_latent", latent_value},
            {"difference", difference}, {"episodes", episodes}};
  }
};

inline ValueDifferenceReport value_difference_report(const std::vector<double>& ground_values, double latent_value) {
  if (ground_values.empty()) throw InsufficientSamples("no Monte-Carlo episodes");
  ValueDifferenceReport r;
  r.episodes = static_cast<long>(ground_values.size());
  double sum = 0.0, sq = 0.0;
  for (double v : ground_values) sum += v;
  r.ground_mean = sum / static_cast<double>(r.episodes);
  for (double v : ground_values) sq += (v - r.ground_mean) * (v - r.ground_mean);
  const double var = r.episodes > 1 ? sq / static_cast<double>(r.episodes - 1) : 0.0;
  r.ground_ci95 = 1.96 * std::sqrt(var / static_cast<double>(r.episodes));
  r.latent_value = latent_value;
  r.difference = std::abs(r.ground_mean - latent_value);
  return r;
}

}  // namespace waemdp::certify
