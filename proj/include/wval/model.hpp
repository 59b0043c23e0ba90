#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "wval/errors.hpp"

namespace wval {

/// Probability vector over the state set K.
using Belief = Eigen::VectorXd;

inline constexpr double kProbabilityTolerance = 1e-9;
inline constexpr double kSignalCutoff = 1e-12;
inline constexpr double kCanonicalGrid = 1e-12;

/// Finite POMDP (K, I, S, q, r). Immutable once built; the constructor
/// validates every row of q and every reward.
class Pomdp {
 public:
  /// transition[k][i] is a |K| x |S| table of q(k,i)(k',s).
  /// reward is |K| x |I|.
  Pomdp(std::vector<std::string> states, std::vector<std::string> actions,
        std::vector<std::string> signals,
        std::vector<std::vector<Eigen::MatrixXd>> transition,
        Eigen::MatrixXd reward);

  int num_states() const { return static_cast<int>(states_.size()); }
  int num_actions() const { return static_cast<int>(actions_.size()); }
  int num_signals() const { return static_cast<int>(signals_.size()); }

  const std::vector<std::string>& states() const { return states_; }
  const std::vector<std::string>& actions() const { return actions_; }
  const std::vector<std::string>& signals() const { return signals_; }

  /// q(k,i) as a |K| x |S| table.
  const Eigen::MatrixXd& kernel(int k, int i) const { return transition_[k][i]; }
  double q(int k, int i, int next, int s) const { return transition_[k][i](next, s); }
  double reward(int k, int i) const { return reward_(k, i); }
  const Eigen::MatrixXd& rewards() const { return reward_; }

  /// q(k,i)(s): marginal signal law from a known state.
  Eigen::VectorXd signal_marginal(int k, int i) const {
    return transition_[k][i].colwise().sum().transpose();
  }

  int state_index(const std::string& name) const;
  int action_index(const std::string& name) const;
  int signal_index(const std::string& name) const;

 private:
  std::vector<std::string> states_;
  std::vector<std::string> actions_;
  std::vector<std::string> signals_;
  std::vector<std::vector<Eigen::MatrixXd>> transition_;
  Eigen::MatrixXd reward_;
};

/// One observed stage: the action played and the signal received after it.
struct ObservedStep {
  int action = 0;
  int signal = 0;
  bool operator==(const ObservedStep&) const = default;
};

/// Observed history of length m-1, i.e. the information available at stage m.
using ObservedHistory = std::vector<ObservedStep>;

/// Play truncated at a common horizon n: (k_1,i_1,s_1,...,k_n,i_n,s_n).
/// beliefs (x_1..x_{n+1}) and belief_rewards (g(x_m,i_m), m<=n) are filled by
/// the generators when belief tracking is on and left empty otherwise.
struct Play {
  std::vector<int> states;
  std::vector<int> actions;
  std::vector<int> signals;
  std::vector<Belief> beliefs;
  std::vector<double> belief_rewards;

  int length() const { return static_cast<int>(states.size()); }
  bool has_beliefs() const { return !belief_rewards.empty(); }
  ObservedHistory observed_prefix(int len) const;
};

/// Outcome of one signal in a belief update.
struct SignalBranch {
  int signal;
  double probability;
  Belief posterior;
};

void check_belief(const Pomdp& p, const Belief& x);

/// Signal law and Bayes posteriors after playing action i at belief x.
/// Signals with probability below 1e-12 are omitted.
std::vector<SignalBranch> belief_transition(const Pomdp& p, const Belief& x, int action);

/// Posterior after a single (action, signal). Falls back to the Dirac at the
/// first declared state when the signal has zero probability.
Belief bayes_update(const Pomdp& p, const Belief& x, int action, int signal);

/// Belief after an observed history starting from x1 (same fallback).
Belief belief_after(const Pomdp& p, const Belief& x1, const ObservedHistory& h);

/// g(x,i) = sum_k x(k) r(k,i).
double stage_payoff(const Pomdp& p, const Belief& x, int action);

Belief dirac(int num_states, int k);
Belief uniform_belief(int num_states);

/// Key of a belief on the 1e-12 grid; equal keys identify equal beliefs.
std::vector<std::int64_t> canonical_key(const Belief& x);
Belief canonical_belief(const Belief& x);

struct CanonicalKeyHash {
  std::size_t operator()(const std::vector<std::int64_t>& key) const;
};

/// Lift with state space K x {distinct reward values}; the second coordinate
/// carries the previous stage's reward and is the lifted reward.
struct LiftedPomdp;
LiftedPomdp known_payoff_lift(const Pomdp& p);

struct LiftedPomdp {
  Pomdp pomdp;
  std::vector<double> reward_levels;
  /// Lifted state index of (k, level).
  int lifted_state(int k, int level) const {
    return k * static_cast<int>(reward_levels.size()) + level;
  }
  /// Lift of a belief on K with every second coordinate at `level`.
  Belief lift_belief(const Belief& x, int level = 0) const;
};

/// Coarsest partition compatible with the known-payoffs property, as a class
/// id per state, or empty when the POMDP does not have known payoffs.
std::vector<int> known_payoffs_partition(const Pomdp& p);
inline bool has_known_payoffs(const Pomdp& p) { return !known_payoffs_partition(p).empty(); }

}  // namespace wval
