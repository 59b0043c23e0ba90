#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "wval/model.hpp"
#include "wval/strategies.hpp"

namespace wval {

/// Information the weight theta_m may depend on.
enum class Measurability {
  PrefixObserved,  // first m-1 (action, signal) pairs
  PrefixFull,      // first m-1 stages including states
  PlayObserved,    // the whole observed play
  General,
};

enum class Normalization { Pointwise, InExpectation, None };

std::string to_string(Measurability m);
std::string to_string(Normalization n);

namespace detail {

class WeightRule {
 public:
  virtual ~WeightRule() = default;
  /// Fills theta_1..theta_n, n = out.size().
  virtual void weights(const Play& play, std::span<double> out) const = 0;
  virtual Measurability measurability() const = 0;
  virtual Normalization normalization() const = 0;
  virtual bool deterministic() const { return false; }
  virtual bool needs_beliefs() const { return false; }
  /// Last stage that can carry positive weight, when finite.
  virtual std::optional<int> support() const { return std::nullopt; }
  /// Upper bound on sum_{m >= horizon} |theta_m - theta_{m+1}|.
  virtual std::optional<double> tail_variation(int /*horizon*/) const { return std::nullopt; }
  virtual nlohmann::json to_json() const = 0;
};

}  // namespace detail

/// Weight process theta = (theta_m) over plays. Cheap to copy.
class Evaluation {
 public:
  explicit Evaluation(std::shared_ptr<const detail::WeightRule> rule) : rule_(std::move(rule)) {}

  void weights(const Play& play, std::span<double> out) const { rule_->weights(play, out); }
  std::vector<double> weights(const Play& play, int n) const;
  /// Weights of a deterministic evaluation; throws for history-dependent ones.
  std::vector<double> deterministic_weights(int n) const;

  Measurability measurability() const { return rule_->measurability(); }
  Normalization normalization() const { return rule_->normalization(); }
  bool deterministic() const { return rule_->deterministic(); }
  bool needs_beliefs() const { return rule_->needs_beliefs(); }
  std::optional<int> support() const { return rule_->support(); }
  std::optional<double> tail_variation(int horizon) const { return rule_->tail_variation(horizon); }
  nlohmann::json to_json() const { return rule_->to_json(); }

 private:
  std::shared_ptr<const detail::WeightRule> rule_;
};

// Standard families.
Evaluation n_stage(int n);
Evaluation discounted(double lambda);
/// Explicit non-increasing weights, zero afterwards.
Evaluation decreasing(std::vector<double> weights);
/// levels[j] on stages breaks[j-1]+1 .. breaks[j] (breaks[-1] = 0), zero after.
Evaluation piecewise_constant(std::vector<int> breaks, std::vector<double> levels);
/// Weight 1/l on stages 1..l if k_1 is the first state, on l+1..2l otherwise.
Evaluation state_block(int l);
/// Weight 1/l on the first run of l consecutive stages spent in the first
/// state; zero when no such run fits in the play.
Evaluation run_block(int l);
/// theta_m = 1/eta * 1{m <= eta}, eta = eta_horizon of the belief payoffs of
/// the first `horizon` stages.
Evaluation limsup_theta(int l, int horizon);
Evaluation zero_evaluation();
/// omega_m = theta_{tl+1} for tl+1 <= m <= (t+1)l.
Evaluation block_smooth(const Evaluation& e, int l);

/// Parses {"kind": ..., ...}; see README for the kinds.
Evaluation make_evaluation(const nlohmann::json& spec);

/// Named normalized history-dependent evaluations with known closed-form
/// irregularity, used for sweeps.
struct NamedEvaluation {
  std::string name;
  Evaluation evaluation;
};
std::vector<NamedEvaluation> standard_evaluation_catalog();

// Finite-horizon limsup/liminf proxies of an average-payoff sequence.

/// Stages [first, last] (1-based) over which the proxies take max/min of the
/// prefix averages: [ceil(sqrt(n)), n].
struct TailWindow {
  int first;
  int last;
};
TailWindow limsup_window(int n);
std::vector<double> prefix_averages(std::span<const double> payoffs);
double limsup_proxy(std::span<const double> payoffs);
double liminf_proxy(std::span<const double> payoffs);

/// Smallest n' >= l whose prefix average is within 1/l of limsup_proxy;
/// returns payoffs.size() when no index qualifies.
int eta_horizon(std::span<const double> payoffs, int l);

// Irregularity.

struct IrregularityReport {
  double lower = 0.0;
  double upper = 0.0;
  int horizon = 0;
  double tail_bound = 0.0;
  nlohmann::json to_json() const;
};

/// |theta_1| + sum_{m<n} |theta_m - theta_{m+1}| + theta_n, i.e. the
/// irregularity of the weights extended by zero after stage n.
double play_irregularity(std::span<const double> w);

/// I(theta, x1, sigma) by exhaustive enumeration of the play tree.
IrregularityReport irregularity_exact(const Pomdp& p, const Belief& x1, const Strategy& strat,
                                      const Evaluation& e, int horizon,
                                      std::size_t budget = kDefaultNodeBudget);

/// I(theta, x1) = sup over strategies, by backward induction over the
/// observed-history tree (attained by a pure strategy).
IrregularityReport irregularity_sup(const Pomdp& p, const Belief& x1, const Evaluation& e,
                                    int horizon, std::size_t budget = kDefaultNodeBudget);

struct MonteCarloEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
  std::size_t samples = 0;
  nlohmann::json to_json() const;
};

/// Horizon-truncated irregularity estimated from sampled plays.
MonteCarloEstimate irregularity_mc(const Pomdp& p, const Belief& x1, const Strategy& strat,
                                   const Evaluation& e, int horizon, std::size_t samples,
                                   std::uint64_t seed);

// Conditional (prefix-observed) versions.

/// Observed-history trie with the probability mass of each prefix and the
/// mass-weighted sum of theta_{d+1} over plays through it (d = depth).
struct ObservedTree {
  struct Node {
    int parent = -1;
    int depth = 0;
    ObservedStep step;
    double mass = 0.0;
    double weight_sum = 0.0;
    std::vector<std::pair<int, int>> children;  // (action * |S| + signal, node)
  };

  int num_signals = 1;
  int horizon = 0;
  std::vector<Node> nodes;

  int child(int node, int action, int signal) const;
  /// rho at the node: E[theta_{depth+1} | prefix].
  double weight(int node) const {
    const auto& n = nodes[node];
    return n.mass > 0.0 ? n.weight_sum / n.mass : 0.0;
  }
};

ObservedTree conditional_tree(const Pomdp& p, const Belief& x1, const Strategy& strat,
                              const Evaluation& e, int horizon,
                              std::size_t budget = kDefaultNodeBudget);

/// rho_m = E[theta_m | first m-1 observed pairs]; zero off the reachable tree.
Evaluation conditional_evaluation(std::shared_ptr<const ObservedTree> tree);
Evaluation conditional_evaluation(const Pomdp& p, const Belief& x1, const Strategy& strat,
                                  const Evaluation& e, int horizon,
                                  std::size_t budget = kDefaultNodeBudget);

}  // namespace wval
