#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "wval/evaluations.hpp"
#include "wval/model.hpp"
#include "wval/strategies.hpp"

namespace wval {

enum class ValueMethod { ExactDp, TruncatedDp, MonteCarlo, ErgodicExact };

std::string to_string(ValueMethod m);

struct ValueReport {
  double value = 0.0;
  ValueMethod method = ValueMethod::ExactDp;
  double error_bound = 0.0;
  long long horizon_or_samples = 0;
  nlohmann::json to_json() const;
};

/// Normalized n-stage value V_n(x1)/n by backward induction on beliefs.
ValueReport value_n(const Pomdp& p, const Belief& x1, int n,
                    std::size_t budget = kDefaultNodeBudget);

/// v_1(x1), ..., v_n(x1) from a single memoized recursion.
std::vector<double> value_sequence(const Pomdp& p, const Belief& x1, int n,
                                   std::size_t budget = kDefaultNodeBudget);

/// Discounted value truncated at the first T with (1-lambda)^T <= tol.
ValueReport value_discounted(const Pomdp& p, const Belief& x1, double lambda, double tol,
                             std::size_t budget = kDefaultNodeBudget);

/// v_{n_max}(x1) with the spread of v_n over the last quartile (plus 1/n_max)
/// as error bound. An estimate of the asymptotic value, never exact.
ValueReport asymptotic_value_estimate(const Pomdp& p, const Belief& x1, int n_max,
                                      std::size_t budget = kDefaultNodeBudget);

/// E[sum_m theta_m r(k_m, i_m)] over the play tree truncated at horizon; the
/// expected weight beyond the horizon is the error bound.
ValueReport weighted_payoff_exact(const Pomdp& p, const Belief& x1, const Strategy& strat,
                                  const Evaluation& e, int horizon,
                                  std::size_t budget = kDefaultNodeBudget);

/// Same quantity for a deterministic evaluation and a transducer, through the
/// stage laws of the product chain.
ValueReport weighted_payoff_chain(const Pomdp& p, const Belief& x1, const Transducer& t,
                                  const Evaluation& e, int horizon);

/// Monte Carlo estimate; error bound = 3 standard errors + mean tail weight.
ValueReport weighted_payoff_mc(const Pomdp& p, const Belief& x1, const Strategy& strat,
                               const Evaluation& e, int horizon, std::size_t samples,
                               std::uint64_t seed);

/// Payoff and truncated irregularity from the same sampled plays.
struct WeightedEstimate {
  ValueReport payoff;
  MonteCarloEstimate irregularity;
};
WeightedEstimate weighted_estimates_mc(const Pomdp& p, const Belief& x1, const Strategy& strat,
                                       const Evaluation& e, int horizon, std::size_t samples,
                                       std::uint64_t seed);

enum class LimitMode { LimsupState, LiminfState, LimsupBelief, LiminfBelief };

std::string to_string(LimitMode m);
LimitMode parse_limit_mode(const std::string& s);

/// The four finite-horizon proxies of one play (needs belief payoffs).
struct LimitProxies {
  double liminf_state = 0.0;
  double liminf_belief = 0.0;
  double limsup_belief = 0.0;
  double limsup_state = 0.0;
};
LimitProxies limit_proxies(const Pomdp& p, const Play& play);

/// Sample mean of the chosen proxy; error bound = 3 standard errors.
ValueReport limsup_belief_payoff_mc(const Pomdp& p, const Belief& x1, const Strategy& strat,
                                    int horizon, std::size_t samples, std::uint64_t seed,
                                    LimitMode mode);

/// All four proxies from the same sampled plays, with the standard error of
/// the per-play difference between belief and state limsup.
struct LimitEstimates {
  ValueReport liminf_state;
  ValueReport liminf_belief;
  ValueReport limsup_belief;
  ValueReport limsup_state;
  double limsup_difference = 0.0;
  double limsup_difference_se = 0.0;
  nlohmann::json to_json() const;
};
LimitEstimates limit_payoffs_mc(const Pomdp& p, const Belief& x1, const Strategy& strat,
                                int horizon, std::size_t samples, std::uint64_t seed);

}  // namespace wval
