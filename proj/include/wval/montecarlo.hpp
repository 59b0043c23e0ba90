#pragma once

#include <cmath>
#include <cstdint>
#include <exception>
#include <random>
#include <thread>
#include <vector>

#include "wval/tree.hpp"

namespace wval {

/// Welford accumulator; merges are order-dependent only through floating
/// point, and shards are always merged in index order.
struct RunningStats {
  double count = 0.0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    count += 1.0;
    const double delta = x - mean;
    mean += delta / count;
    m2 += delta * (x - mean);
  }

  void merge(const RunningStats& o) {
    if (o.count == 0.0) return;
    if (count == 0.0) {
      *this = o;
      return;
    }
    const double n = count + o.count;
    const double delta = o.mean - mean;
    mean += delta * o.count / n;
    m2 += o.m2 + delta * delta * count * o.count / n;
    count = n;
  }

  double variance() const { return count > 1.0 ? std::max(0.0, m2 / (count - 1.0)) : 0.0; }
  double standard_error() const { return count > 0.0 ? std::sqrt(variance() / count) : 0.0; }
};

/// Runs `samples` draws split over kMonteCarloShards independently seeded
/// shards. make_body() is called once per shard and must return a callable
/// `void(std::mt19937_64&, std::vector<RunningStats>&)` that performs one draw.
template <class MakeBody>
std::vector<RunningStats> sharded_monte_carlo(std::size_t samples, std::uint64_t seed,
                                              int num_stats, MakeBody make_body) {
  constexpr int shards = kMonteCarloShards;
  std::vector<std::vector<RunningStats>> parts(shards, std::vector<RunningStats>(num_stats));
  std::vector<std::exception_ptr> errors(shards);
  {
    std::vector<std::jthread> workers;
    for (int shard = 0; shard < shards; ++shard) {
      workers.emplace_back([&, shard] {
        try {
          auto body = make_body();
          std::mt19937_64 rng(shard_seed(seed, static_cast<std::uint64_t>(shard)));
          const std::size_t lo = samples * shard / shards;
          const std::size_t hi = samples * (shard + 1) / shards;
          for (std::size_t j = lo; j < hi; ++j) body(rng, parts[shard]);
        } catch (...) {
          errors[shard] = std::current_exception();
        }
      });
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  std::vector<RunningStats> out(num_stats);
  for (const auto& part : parts)
    for (int j = 0; j < num_stats; ++j) out[j].merge(part[j]);
  return out;
}

}  // namespace wval
