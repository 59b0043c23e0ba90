#pragma once

#include "wval/model.hpp"

namespace wval::instances {

/// Two frozen states {alpha, beta}, actions {alpha, beta}, one signal;
/// payoff 1 iff action matches state.
Pomdp matching_frozen();

/// Same as matching_frozen but the signal reveals the (unchanged) state.
Pomdp matching_revealed();

/// States {alpha, beta} redrawn uniformly each stage, payoff 1 in alpha.
/// One action; the signal reveals the state that was just left.
Pomdp uniform_redraw();

/// Blind MDP: states {alpha, beta}, actions {T, B}, one signal. T keeps the
/// state, B switches it; payoff 0 in alpha and 1 in beta.
Pomdp blind_switch();

/// Single action, frozen states, signal equals the (unchanged) state.
Pomdp revealed_identity(int num_states);

/// Single action Markov chain with the given row-stochastic matrix whose
/// signal reveals the next state; reward(k) supplied per state.
Pomdp revealed_chain(const Eigen::MatrixXd& transition, const Eigen::VectorXd& reward);

/// One state, one signal, |I| actions all paying `value`.
Pomdp constant_reward(double value, int num_actions = 2);

}  // namespace wval::instances
