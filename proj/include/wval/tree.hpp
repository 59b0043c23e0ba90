#pragma once

#include <cstdint>
#include <functional>
#include <random>

#include "wval/model.hpp"
#include "wval/strategies.hpp"

namespace wval {

/// Visitor for a complete play of the requested horizon with its probability.
using PlayVisitor = std::function<void(const Play&, double)>;

/// Exhaustive depth-first enumeration of every positive-probability play of
/// length `horizon` (states, actions, signals and beliefs x_1..x_{horizon+1}).
/// The last stage branches on the signal only. Throws BudgetExceeded when
/// more than `budget` tree nodes would be expanded. Returns nodes expanded.
std::size_t enumerate_plays(const Pomdp& p, const Belief& x1, const Strategy& strat, int horizon,
                            const PlayVisitor& visit, std::size_t budget = kDefaultNodeBudget);

/// Draws one play of length `horizon`. Beliefs are tracked when requested or
/// when the strategy is stationary.
class PlaySampler {
 public:
  PlaySampler(const Pomdp& p, const Belief& x1, const Strategy& strat, bool track_beliefs);
  PlaySampler(const Pomdp&, const Belief&, Strategy&&, bool) = delete;

  /// Overwrites `play` so its buffers are reused across samples.
  void sample(int horizon, std::mt19937_64& rng, Play& play);

 private:
  const Pomdp* p_;
  Belief x1_;
  const Strategy* strat_;
  bool track_beliefs_;
  StrategyCursor cursor_;
  // Flattened cumulative q(k,i) over (k',s) for inverse-cdf sampling.
  std::vector<std::vector<double>> cumulative_;
};

/// Index drawn from an unnormalized probability vector.
int sample_index(const Eigen::VectorXd& probs, std::mt19937_64& rng);

/// Per-shard seed derived from a base seed.
std::uint64_t shard_seed(std::uint64_t seed, std::uint64_t shard);

inline constexpr int kMonteCarloShards = 8;

}  // namespace wval
