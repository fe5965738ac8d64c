#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "waemdp/env/ground_mdp.hpp"
#include "waemdp/rng.hpp"

namespace waemdp::latent {

/// Zero-temperature view of a latent space model: everything extraction,
/// latent-flow execution, and certification need. Latent states are n-bit
/// codes whose leading bits are the labels.
class LatentSpaceModel {
 public:
  virtual ~LatentSpaceModel() = default;

  [[nodiscard]] virtual int n_bits() const = 0;
  [[nodiscard]] virtual int n_actions() const = 0;
  [[nodiscard]] virtual std::vector<std::string> atomic_props() const = 0;

  [[nodiscard]] virtual std::uint64_t embed(const env::State& s, const env::Labels& labels) const = 0;
  [[nodiscard]] virtual int encode_action(std::uint64_t z, const env::Action& a) const = 0;
  [[nodiscard]] virtual env::Action decode_action(std::uint64_t z, int abar) const = 0;

  [[nodiscard]] virtual Eigen::VectorXd policy_probs(std::uint64_t z) const = 0;
  [[nodiscard]] virtual double reward(std::uint64_t z, int abar) const = 0;
  [[nodiscard]] virtual double transition_prob(std::uint64_t z_next, std::uint64_t z, int abar) const = 0;
  /// Full successor distribution in code order; only for n_bits <= 16.
  [[nodiscard]] virtual Eigen::VectorXd transition_probs(std::uint64_t z, int abar) const = 0;
  [[nodiscard]] virtual std::uint64_t sample_successor(std::uint64_t z, int abar, Rng& rng) const = 0;
  [[nodiscard]] virtual std::uint64_t initial_state() const = 0;

  /// Labels read from the leading bits.
  [[nodiscard]] env::Labels labels_of(std::uint64_t z) const {
    const int ap = static_cast<int>(atomic_props().size());
    env::Labels l(static_cast<std::size_t>(ap));
    for (int i = 0; i < ap; ++i) l[static_cast<std::size_t>(i)] = static_cast<int>((z >> (n_bits() - 1 - i)) & 1U);
    return l;
  }
};

}  // namespace waemdp::latent
