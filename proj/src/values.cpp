#include "wval/values.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "wval/chain.hpp"
#include "wval/montecarlo.hpp"
#include "wval/tree.hpp"

namespace wval {

using nlohmann::json;

std::string to_string(ValueMethod m) {
  switch (m) {
    case ValueMethod::ExactDp: return "exact_dp";
    case ValueMethod::TruncatedDp: return "truncated_dp";
    case ValueMethod::MonteCarlo: return "monte_carlo";
    case ValueMethod::ErgodicExact: return "ergodic_exact";
  }
  return "exact_dp";
}

json ValueReport::to_json() const {
  return {{"value", value},
          {"method", to_string(method)},
          {"error_bound", error_bound},
          {"horizon_or_samples", horizon_or_samples}};
}

namespace {

// Memoized backward induction W_t(x) = max_i [a g(x,i) + b sum_s p_s W_{t-1}(x_s)].
class BeliefDp {
 public:
  BeliefDp(const Pomdp& p, double stage_weight, double continuation, std::size_t budget)
      : p_(p), a_(stage_weight), b_(continuation), budget_(budget) {}

  double value(const Belief& x, int t) {
    if (t == 0) return 0.0;
    if (static_cast<int>(memo_.size()) <= t) memo_.resize(t + 1);
    auto key = canonical_key(x);
    if (auto it = memo_[t].find(key); it != memo_[t].end()) return it->second;
    if (++nodes_ > budget_)
      throw BudgetExceeded("belief DP exceeds the node budget of " + std::to_string(budget_),
                           nodes_);
    double best = -1.0;
    for (int i = 0; i < p_.num_actions(); ++i) {
      double v = a_ * x.dot(p_.rewards().col(i));
      for (const auto& br : belief_transition(p_, x, i))
        v += b_ * br.probability * value(br.posterior, t - 1);
      if (v > best) best = v;  // first maximizer wins ties
    }
    memo_[t].emplace(std::move(key), best);
    return best;
  }

 private:
  const Pomdp& p_;
  double a_, b_;
  std::size_t budget_;
  std::size_t nodes_ = 0;
  std::vector<std::unordered_map<std::vector<std::int64_t>, double, CanonicalKeyHash>> memo_;
};

void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidInput(what);
}

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

}  // namespace

std::vector<double> value_sequence(const Pomdp& p, const Belief& x1, int n, std::size_t budget) {
  require(n >= 1, "n must be >= 1");
  check_belief(p, x1);
  BeliefDp dp(p, 1.0, 1.0, budget);
  std::vector<double> out(n);
  for (int t = 1; t <= n; ++t) out[t - 1] = clamp01(dp.value(x1, t) / t);
  return out;
}

ValueReport value_n(const Pomdp& p, const Belief& x1, int n, std::size_t budget) {
  require(n >= 1, "n must be >= 1");
  check_belief(p, x1);
  BeliefDp dp(p, 1.0, 1.0, budget);
  return {clamp01(dp.value(x1, n) / n), ValueMethod::ExactDp, 0.0, n};
}

ValueReport value_discounted(const Pomdp& p, const Belief& x1, double lambda, double tol,
                             std::size_t budget) {
  require(lambda > 0.0 && lambda < 1.0, "lambda must lie in (0,1)");
  require(tol > 0.0 && tol < 1.0, "tol must lie in (0,1)");
  check_belief(p, x1);
  const double steps = std::ceil(std::log(tol) / std::log1p(-lambda));
  if (steps > static_cast<double>(budget))
    throw BudgetExceeded("discounted horizon " + std::to_string(steps) + " exceeds the budget",
                         static_cast<std::size_t>(std::min(steps, 1e18)));
  const int horizon = std::max(1, static_cast<int>(steps));
  BeliefDp dp(p, lambda, 1.0 - lambda, budget);
  const double v = dp.value(x1, horizon);
  return {clamp01(v), ValueMethod::TruncatedDp, std::pow(1.0 - lambda, horizon), horizon};
}

ValueReport asymptotic_value_estimate(const Pomdp& p, const Belief& x1, int n_max,
                                      std::size_t budget) {
  require(n_max >= 2, "n_max must be >= 2");
  const auto v = value_sequence(p, x1, n_max, budget);
  const int first = (3 * n_max + 3) / 4;  // ceil(3 n_max / 4)
  const auto [lo, hi] = std::minmax_element(v.begin() + (first - 1), v.end());
  return {v.back(), ValueMethod::TruncatedDp, (*hi - *lo) + 1.0 / n_max, n_max};
}

namespace {

// Expected weight beyond the horizon is only recoverable for normalized
// evaluations; otherwise the support must be covered.
bool needs_tail(const Evaluation& e, int horizon) {
  const auto s = e.support();
  if (s && *s <= horizon) return false;
  if (e.normalization() == Normalization::None)
    throw TruncationError("horizon " + std::to_string(horizon) +
                          " does not cover an unnormalized evaluation");
  return true;
}

double play_payoff(const Pomdp& p, const Play& play, std::span<const double> w) {
  double total = 0.0;
  for (std::size_t m = 0; m < w.size(); ++m)
    total += w[m] * p.reward(play.states[m], play.actions[m]);
  return total;
}

double sum(std::span<const double> w) {
  double total = 0.0;
  for (double x : w) total += x;
  return total;
}

}  // namespace

ValueReport weighted_payoff_exact(const Pomdp& p, const Belief& x1, const Strategy& strat,
                                  const Evaluation& e, int horizon, std::size_t budget) {
  require(horizon >= 1, "horizon must be >= 1");
  const bool tail = needs_tail(e, horizon);
  double value = 0.0, weight = 0.0;
  std::vector<double> w(horizon);
  enumerate_plays(
      p, x1, strat, horizon,
      [&](const Play& play, double prob) {
        e.weights(play, w);
        value += prob * play_payoff(p, play, w);
        weight += prob * sum(w);
      },
      budget);
  const double bound = tail ? std::max(0.0, 1.0 - weight) : 0.0;
  return {clamp01(value), tail ? ValueMethod::TruncatedDp : ValueMethod::ExactDp, bound, horizon};
}

ValueReport weighted_payoff_chain(const Pomdp& p, const Belief& x1, const Transducer& t,
                                  const Evaluation& e, int horizon) {
  require(horizon >= 1, "horizon must be >= 1");
  const bool tail = needs_tail(e, horizon);
  const auto w = e.deterministic_weights(horizon);
  const auto c = product_chain<double>(p, t, x1);
  Eigen::VectorXd y = c.initial;
  double value = 0.0;
  for (int m = 0; m < horizon; ++m) {
    value += w[m] * y.dot(c.payoff);
    y = (y.transpose() * c.transition).transpose();
  }
  const double bound = tail ? std::max(0.0, 1.0 - sum(w)) : 0.0;
  return {clamp01(value), ValueMethod::ErgodicExact, bound, horizon};
}

ValueReport weighted_payoff_mc(const Pomdp& p, const Belief& x1, const Strategy& strat,
                               const Evaluation& e, int horizon, std::size_t samples,
                               std::uint64_t seed) {
  require(samples >= 1, "samples must be >= 1");
  require(horizon >= 1, "horizon must be >= 1");
  check_belief(p, x1);
  const bool tail = needs_tail(e, horizon);
  const auto stats = sharded_monte_carlo(samples, seed, 2, [&] {
    return [sampler = PlaySampler(p, x1, strat, e.needs_beliefs()), play = Play{},
            w = std::vector<double>(horizon), &e, &p,
            horizon](std::mt19937_64& rng, std::vector<RunningStats>& out) mutable {
      sampler.sample(horizon, rng, play);
      e.weights(play, w);
      out[0].add(play_payoff(p, play, w));
      out[1].add(sum(w));
    };
  });
  const double tail_weight = tail ? std::max(0.0, 1.0 - stats[1].mean) : 0.0;
  return {clamp01(stats[0].mean), ValueMethod::MonteCarlo,
          3.0 * stats[0].standard_error() + tail_weight, static_cast<long long>(samples)};
}

WeightedEstimate weighted_estimates_mc(const Pomdp& p, const Belief& x1, const Strategy& strat,
                                       const Evaluation& e, int horizon, std::size_t samples,
                                       std::uint64_t seed) {
  require(samples >= 1, "samples must be >= 1");
  require(horizon >= 1, "horizon must be >= 1");
  check_belief(p, x1);
  const bool tail = needs_tail(e, horizon);
  const auto stats = sharded_monte_carlo(samples, seed, 3, [&] {
    return [sampler = PlaySampler(p, x1, strat, e.needs_beliefs()), play = Play{},
            w = std::vector<double>(horizon), &e, &p,
            horizon](std::mt19937_64& rng, std::vector<RunningStats>& out) mutable {
      sampler.sample(horizon, rng, play);
      e.weights(play, w);
      out[0].add(play_payoff(p, play, w));
      out[1].add(sum(w));
      out[2].add(play_irregularity(w));
    };
  });
  const double tail_weight = tail ? std::max(0.0, 1.0 - stats[1].mean) : 0.0;
  return {{clamp01(stats[0].mean), ValueMethod::MonteCarlo,
           3.0 * stats[0].standard_error() + tail_weight, static_cast<long long>(samples)},
          {stats[2].mean, stats[2].standard_error(), samples}};
}

std::string to_string(LimitMode m) {
  switch (m) {
    case LimitMode::LimsupState: return "limsup_state";
    case LimitMode::LiminfState: return "liminf_state";
    case LimitMode::LimsupBelief: return "limsup_belief";
    case LimitMode::LiminfBelief: return "liminf_belief";
  }
  return "limsup_state";
}

LimitMode parse_limit_mode(const std::string& s) {
  for (auto m : {LimitMode::LimsupState, LimitMode::LiminfState, LimitMode::LimsupBelief,
                 LimitMode::LiminfBelief})
    if (to_string(m) == s) return m;
  throw InvalidInput("unknown limit mode '" + s + "'");
}

LimitProxies limit_proxies(const Pomdp& p, const Play& play) {
  require(play.has_beliefs(), "limit proxies need belief payoffs");
  std::vector<double> r(play.length());
  for (int m = 0; m < play.length(); ++m) r[m] = p.reward(play.states[m], play.actions[m]);
  return {liminf_proxy(r), liminf_proxy(play.belief_rewards), limsup_proxy(play.belief_rewards),
          limsup_proxy(r)};
}

LimitEstimates limit_payoffs_mc(const Pomdp& p, const Belief& x1, const Strategy& strat,
                                int horizon, std::size_t samples, std::uint64_t seed) {
  require(samples >= 1, "samples must be >= 1");
  require(horizon >= 2, "horizon must be >= 2");
  check_belief(p, x1);
  const auto stats = sharded_monte_carlo(samples, seed, 5, [&] {
    return [sampler = PlaySampler(p, x1, strat, true), play = Play{}, &p, horizon](
               std::mt19937_64& rng, std::vector<RunningStats>& out) mutable {
      sampler.sample(horizon, rng, play);
      const auto q = limit_proxies(p, play);
      out[0].add(q.liminf_state);
      out[1].add(q.liminf_belief);
      out[2].add(q.limsup_belief);
      out[3].add(q.limsup_state);
      out[4].add(q.limsup_belief - q.limsup_state);
    };
  });
  auto report = [&](int j) {
    return ValueReport{stats[j].mean, ValueMethod::MonteCarlo, 3.0 * stats[j].standard_error(),
                       static_cast<long long>(samples)};
  };
  return {report(0), report(1), report(2), report(3), stats[4].mean, stats[4].standard_error()};
}

json LimitEstimates::to_json() const {
  return {{"liminf_state", liminf_state.to_json()},
          {"liminf_belief", liminf_belief.to_json()},
          {"limsup_belief", limsup_belief.to_json()},
          {"limsup_state", limsup_state.to_json()},
          {"limsup_difference", limsup_difference},
          {"limsup_difference_se", limsup_difference_se}};
}

ValueReport limsup_belief_payoff_mc(const Pomdp& p, const Belief& x1, const Strategy& strat,
                                    int horizon, std::size_t samples, std::uint64_t seed,
                                    LimitMode mode) {
  const auto all = limit_payoffs_mc(p, x1, strat, horizon, samples, seed);
  switch (mode) {
    case LimitMode::LimsupState: return all.limsup_state;
    case LimitMode::LiminfState: return all.liminf_state;
    case LimitMode::LimsupBelief: return all.limsup_belief;
    case LimitMode::LiminfBelief: return all.liminf_belief;
  }
  return all.limsup_state;
}

}  // namespace wval
