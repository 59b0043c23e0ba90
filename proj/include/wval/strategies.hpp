#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "wval/model.hpp"

namespace wval {

/// Distribution over actions as a function of the observed history.
struct BehaviorStrategy {
  std::string name;
  int num_actions = 0;
  std::function<Eigen::VectorXd(const ObservedHistory&)> rule;
};

/// Pure finite-memory strategy (sigma_u, sigma_a, M, m_0).
struct Transducer {
  int memory_size = 1;
  int initial = 0;
  int num_actions = 0;
  int num_signals = 0;
  std::vector<int> act;     // M -> I
  std::vector<int> update;  // (m, i, s) -> M, index (m * |I| + i) * |S| + s

  int next(int memory, int action, int signal) const {
    return update[(memory * num_actions + action) * num_signals + signal];
  }
  bool operator==(const Transducer&) const = default;
};

/// Strategy that plays according to the current belief only. Defined on a
/// finite support; off-support queries snap to the nearest support point
/// within L1 distance 1e-9.
struct StationaryStrategy {
  std::vector<Belief> support;
  std::vector<Eigen::VectorXd> actions;

  Eigen::VectorXd act(const Belief& x) const;
};

using Strategy = std::variant<BehaviorStrategy, Transducer, StationaryStrategy>;

int num_actions(const Strategy& s);

/// Action distribution after history h. `current` is the belief reached by h;
/// only stationary strategies read it.
Eigen::VectorXd strategy_action(const Strategy& strat, const ObservedHistory& h,
                                const Belief& current);

/// Incremental evaluation of a strategy along a growing history. Transducers
/// keep a memory stack instead of refolding the whole history.
class StrategyCursor {
 public:
  explicit StrategyCursor(const Strategy& strat);
  // Holds a pointer; a converted temporary would dangle.
  StrategyCursor(Strategy&&) = delete;

  Eigen::VectorXd act(const Belief& current) const;
  /// Deterministic action when the strategy is a transducer, else -1.
  int pure_action() const;
  void push(int action, int signal);
  void pop();
  void reset();
  const ObservedHistory& history() const { return history_; }

 private:
  const Strategy* strat_;
  ObservedHistory history_;
  std::vector<int> memory_;
};

// Built-in strategies.
Transducer always_play(const Pomdp& p, int action);
BehaviorStrategy uniform_strategy(int num_actions);
/// T for 2 stages, B once, T for 2^(2^2) stages, B once, ..., T for 2^(n^2)
/// stages, B once. `hold` and `switch_action` name T and B.
BehaviorStrategy doubling_strategy(int hold = 0, int switch_action = 1);
/// True when the doubling strategy plays the switch action at `stage` (1-based).
bool doubling_switches_at(long long stage);
/// `first` for `stages` stages, then `then` forever.
BehaviorStrategy switch_after(int num_actions, int first, int stages, int then);
/// History-dependent random mixed strategy: the action law is a seeded random
/// point of the simplex indexed by the last observed (action, signal) pair.
BehaviorStrategy random_behavior_strategy(int num_actions, int num_signals, std::uint64_t seed);

/// Fold a transducer over h and return the memory state reached.
int transducer_memory(const Transducer& t, const ObservedHistory& h);

/// Relabel reachable memory states in breadth-first order from the initial
/// state; unreachable states are dropped.
Transducer canonical_form(const Transducer& t);

/// Every pure finite-memory strategy with at most max_memory states, one per
/// relabeling class. Throws InvalidInput naming the raw count when it exceeds cap.
std::vector<Transducer> enumerate_transducers(const Pomdp& p, int max_memory,
                                              std::size_t cap = 10'000'000);

/// Number of raw (unreduced) transducers with exactly `memory` states.
double raw_transducer_count(const Pomdp& p, int memory);

}  // namespace wval
