#include "wval/evaluations.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "wval/montecarlo.hpp"
#include "wval/tree.hpp"

namespace wval {

using nlohmann::json;

std::string to_string(Measurability m) {
  switch (m) {
    case Measurability::PrefixObserved: return "prefix_observed";
    case Measurability::PrefixFull: return "prefix_full";
    case Measurability::PlayObserved: return "play_observed";
    case Measurability::General: return "general";
  }
  return "general";
}

std::string to_string(Normalization n) {
  switch (n) {
    case Normalization::Pointwise: return "pointwise";
    case Normalization::InExpectation: return "in_expectation";
    case Normalization::None: return "none";
  }
  return "none";
}

std::vector<double> Evaluation::weights(const Play& play, int n) const {
  if (n < 0) throw InvalidInput("weight count must be >= 0");
  std::vector<double> w(static_cast<std::size_t>(n));
  rule_->weights(play, w);
  return w;
}

std::vector<double> Evaluation::deterministic_weights(int n) const {
  if (!deterministic()) throw InvalidInput("evaluation is history-dependent");
  return weights(Play{}, n);
}

namespace {

constexpr double kNormalizationTolerance = 1e-9;

void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidInput(what);
}

// Deterministic weights with finite support, stored explicitly.
class FixedWeights final : public detail::WeightRule {
 public:
  FixedWeights(std::vector<double> w, json spec) : w_(std::move(w)), spec_(std::move(spec)) {
    for (double x : w_) require(x >= 0.0 && x <= 1.0, "weights must lie in [0,1]");
    while (!w_.empty() && w_.back() == 0.0) w_.pop_back();
    const double total = std::accumulate(w_.begin(), w_.end(), 0.0);
    normalized_ = std::abs(total - 1.0) <= kNormalizationTolerance;
  }

  void weights(const Play&, std::span<double> out) const override {
    for (std::size_t m = 0; m < out.size(); ++m) out[m] = m < w_.size() ? w_[m] : 0.0;
  }
  Measurability measurability() const override { return Measurability::PrefixObserved; }
  Normalization normalization() const override {
    return normalized_ ? Normalization::Pointwise : Normalization::None;
  }
  bool deterministic() const override { return true; }
  std::optional<int> support() const override { return static_cast<int>(w_.size()); }
  std::optional<double> tail_variation(int horizon) const override {
    double total = 0.0;
    for (std::size_t m = std::max(horizon, 1) - 1; m < w_.size(); ++m)
      total += std::abs(w_[m] - (m + 1 < w_.size() ? w_[m + 1] : 0.0));
    return total;
  }
  json to_json() const override { return spec_; }

 private:
  std::vector<double> w_;
  json spec_;
  bool normalized_ = false;
};

class Discounted final : public detail::WeightRule {
 public:
  explicit Discounted(double lambda) : lambda_(lambda) {}

  void weights(const Play&, std::span<double> out) const override {
    double w = lambda_;
    for (double& x : out) {
      x = w;
      w *= 1.0 - lambda_;
    }
  }
  Measurability measurability() const override { return Measurability::PrefixObserved; }
  Normalization normalization() const override { return Normalization::Pointwise; }
  bool deterministic() const override { return true; }
  std::optional<int> support() const override {
    return lambda_ == 1.0 ? std::optional<int>(1) : std::nullopt;
  }
  std::optional<double> tail_variation(int horizon) const override {
    // weights decrease to zero, so the tail variation telescopes to theta_H
    return lambda_ * std::pow(1.0 - lambda_, std::max(horizon, 1) - 1);
  }
  json to_json() const override { return {{"kind", "discounted"}, {"lambda", lambda_}}; }

 private:
  double lambda_;
};

class StateBlock final : public detail::WeightRule {
 public:
  explicit StateBlock(int l) : l_(l) {}

  void weights(const Play& play, std::span<double> out) const override {
    require(play.length() >= 1 || out.empty(), "state_block needs the first state");
    const int first = !out.empty() && play.states[0] != 0 ? l_ : 0;
    for (std::size_t m = 0; m < out.size(); ++m) {
      const int stage = static_cast<int>(m);
      out[m] = stage >= first && stage < first + l_ ? 1.0 / l_ : 0.0;
    }
  }
  Measurability measurability() const override { return Measurability::PrefixFull; }
  Normalization normalization() const override { return Normalization::Pointwise; }
  std::optional<int> support() const override { return 2 * l_; }
  json to_json() const override { return {{"kind", "state_block_ex1"}, {"l", l_}}; }

 private:
  int l_;
};

class RunBlock final : public detail::WeightRule {
 public:
  explicit RunBlock(int l) : l_(l) {}

  void weights(const Play& play, std::span<double> out) const override {
    std::fill(out.begin(), out.end(), 0.0);
    int run = 0;
    for (int m = 0; m < play.length(); ++m) {
      run = play.states[m] == 0 ? run + 1 : 0;
      if (run == l_) {
        for (int j = m - l_ + 1; j <= m && j < static_cast<int>(out.size()); ++j)
          out[j] = 1.0 / l_;
        return;
      }
    }
  }
  Measurability measurability() const override { return Measurability::PlayObserved; }
  Normalization normalization() const override { return Normalization::Pointwise; }
  json to_json() const override { return {{"kind", "run_block_ex2"}, {"l", l_}}; }

 private:
  int l_;
};

class LimsupTheta final : public detail::WeightRule {
 public:
  LimsupTheta(int l, int horizon) : l_(l), horizon_(horizon) {}

  void weights(const Play& play, std::span<double> out) const override {
    if (static_cast<int>(play.belief_rewards.size()) < horizon_)
      throw InvalidInput("limsup_theta needs belief payoffs over " + std::to_string(horizon_) +
                         " stages");
    const int eta = eta_horizon(std::span(play.belief_rewards).first(horizon_), l_);
    for (std::size_t m = 0; m < out.size(); ++m)
      out[m] = static_cast<int>(m) < eta ? 1.0 / eta : 0.0;
  }
  Measurability measurability() const override { return Measurability::PlayObserved; }
  Normalization normalization() const override { return Normalization::Pointwise; }
  bool needs_beliefs() const override { return true; }
  std::optional<int> support() const override { return horizon_; }
  json to_json() const override {
    return {{"kind", "limsup_theta"}, {"l", l_}, {"horizon", horizon_}};
  }

 private:
  int l_;
  int horizon_;
};

class Zero final : public detail::WeightRule {
 public:
  void weights(const Play&, std::span<double> out) const override {
    std::fill(out.begin(), out.end(), 0.0);
  }
  Measurability measurability() const override { return Measurability::PrefixObserved; }
  Normalization normalization() const override { return Normalization::None; }
  bool deterministic() const override { return true; }
  std::optional<int> support() const override { return 0; }
  std::optional<double> tail_variation(int) const override { return 0.0; }
  json to_json() const override { return {{"kind", "zero"}}; }
};

class BlockSmooth final : public detail::WeightRule {
 public:
  BlockSmooth(Evaluation inner, int l) : inner_(std::move(inner)), l_(l) {}

  void weights(const Play& play, std::span<double> out) const override {
    const auto w = inner_.weights(play, static_cast<int>(out.size()));
    for (std::size_t m = 0; m < out.size(); ++m) out[m] = w[m / l_ * l_];
  }
  Measurability measurability() const override { return inner_.measurability(); }
  Normalization normalization() const override {
    return l_ == 1 ? inner_.normalization() : Normalization::None;
  }
  bool deterministic() const override { return inner_.deterministic(); }
  bool needs_beliefs() const override { return inner_.needs_beliefs(); }
  std::optional<int> support() const override {
    const auto s = inner_.support();
    if (!s) return std::nullopt;
    return *s == 0 ? 0 : ((*s - 1) / l_ + 1) * l_;
  }
  std::optional<double> tail_variation(int horizon) const override {
    // each jump of omega is bounded by the variation of theta over one block
    const int block_start = (std::max(horizon, 1) - 1) / l_ * l_ + 1;
    return inner_.tail_variation(block_start);
  }
  json to_json() const override {
    return {{"kind", "block_smooth"}, {"l", l_}, {"inner", inner_.to_json()}};
  }

 private:
  Evaluation inner_;
  int l_;
};

class Conditional final : public detail::WeightRule {
 public:
  explicit Conditional(std::shared_ptr<const ObservedTree> tree) : tree_(std::move(tree)) {}

  void weights(const Play& play, std::span<double> out) const override {
    std::fill(out.begin(), out.end(), 0.0);
    const int n = std::min(static_cast<int>(out.size()), tree_->horizon);
    int node = 0;
    for (int m = 0; m < n; ++m) {
      if (m > 0) {
        node = tree_->child(node, play.actions[m - 1], play.signals[m - 1]);
        if (node < 0) return;
      }
      out[m] = tree_->weight(node);
    }
  }
  Measurability measurability() const override { return Measurability::PrefixObserved; }
  Normalization normalization() const override { return Normalization::InExpectation; }
  std::optional<int> support() const override { return tree_->horizon; }
  json to_json() const override {
    return {{"kind", "conditional"},
            {"horizon", tree_->horizon},
            {"nodes", tree_->nodes.size()}};
  }

 private:
  std::shared_ptr<const ObservedTree> tree_;
};

template <class Rule, class... Args>
Evaluation make(Args&&... args) {
  return Evaluation(std::make_shared<const Rule>(std::forward<Args>(args)...));
}

}  // namespace

Evaluation n_stage(int n) {
  require(n >= 1, "n_stage needs n >= 1");
  return make<FixedWeights>(std::vector<double>(n, 1.0 / n), json{{"kind", "n_stage"}, {"n", n}});
}

Evaluation discounted(double lambda) {
  require(lambda > 0.0 && lambda <= 1.0, "discounted needs lambda in (0,1]");
  return make<Discounted>(lambda);
}

Evaluation decreasing(std::vector<double> weights) {
  require(!weights.empty(), "decreasing needs at least one weight");
  for (std::size_t m = 1; m < weights.size(); ++m)
    require(weights[m] <= weights[m - 1], "decreasing weights must be non-increasing");
  json spec{{"kind", "decreasing"}, {"weights", weights}};
  return make<FixedWeights>(std::move(weights), std::move(spec));
}

Evaluation piecewise_constant(std::vector<int> breaks, std::vector<double> levels) {
  require(!breaks.empty() && breaks.size() == levels.size(),
          "piecewise_constant needs one level per break");
  std::vector<double> w;
  int prev = 0;
  for (std::size_t j = 0; j < breaks.size(); ++j) {
    require(breaks[j] > prev, "piecewise_constant breaks must be increasing and >= 1");
    w.insert(w.end(), breaks[j] - prev, levels[j]);
    prev = breaks[j];
  }
  json spec{{"kind", "piecewise_constant"}, {"breaks", breaks}, {"levels", levels}};
  return make<FixedWeights>(std::move(w), std::move(spec));
}

Evaluation state_block(int l) {
  require(l >= 1, "state_block needs l >= 1");
  return make<StateBlock>(l);
}

Evaluation run_block(int l) {
  require(l >= 1, "run_block needs l >= 1");
  return make<RunBlock>(l);
}

Evaluation limsup_theta(int l, int horizon) {
  require(l >= 1, "limsup_theta needs l >= 1");
  require(horizon >= l, "limsup_theta needs horizon >= l");
  return make<LimsupTheta>(l, horizon);
}

Evaluation zero_evaluation() { return make<Zero>(); }

Evaluation block_smooth(const Evaluation& e, int l) {
  require(l >= 1, "block_smooth needs l >= 1");
  if (l == 1) return e;
  return make<BlockSmooth>(e, l);
}

Evaluation make_evaluation(const json& spec) {
  try {
    const std::string kind = spec.at("kind").get<std::string>();
    if (kind == "n_stage") return n_stage(spec.at("n").get<int>());
    if (kind == "discounted") return discounted(spec.at("lambda").get<double>());
    if (kind == "decreasing") return decreasing(spec.at("weights").get<std::vector<double>>());
    if (kind == "piecewise_constant")
      return piecewise_constant(spec.at("breaks").get<std::vector<int>>(),
                                spec.at("levels").get<std::vector<double>>());
    if (kind == "state_block_ex1") return state_block(spec.at("l").get<int>());
    if (kind == "run_block_ex2") return run_block(spec.at("l").get<int>());
    if (kind == "limsup_theta")
      return limsup_theta(spec.at("l").get<int>(), spec.at("horizon").get<int>());
    if (kind == "zero") return zero_evaluation();
    if (kind == "block_smooth")
      return block_smooth(make_evaluation(spec.at("inner")), spec.at("l").get<int>());
    throw InvalidInput("unknown evaluation kind '" + kind + "'");
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("malformed evaluation spec: ") + e.what());
  }
}

std::vector<NamedEvaluation> standard_evaluation_catalog() {
  std::vector<NamedEvaluation> out;
  for (int n : {2, 5, 10, 20, 50, 100})
    out.push_back({"n_stage(" + std::to_string(n) + ")", n_stage(n)});
  for (double lambda : {0.5, 0.2, 0.1, 0.05, 0.02, 0.01}) {
    json spec{{"lambda", lambda}};
    out.push_back({"discounted(" + spec["lambda"].dump() + ")", discounted(lambda)});
  }
  for (int n : {10, 40}) {
    // triangular: theta_m proportional to n - m + 1, irregularity 2 theta_1
    std::vector<double> w(n);
    const double total = n * (n + 1) / 2.0;
    for (int m = 0; m < n; ++m) w[m] = (n - m) / total;
    out.push_back({"triangular(" + std::to_string(n) + ")", decreasing(std::move(w))});
  }
  for (int n : {10, 40}) {
    // half the mass on the first n stages, half on the next 2n
    out.push_back({"two_level(" + std::to_string(n) + ")",
                   piecewise_constant({n, 3 * n}, {0.5 / n, 0.25 / n})});
  }
  return out;
}

TailWindow limsup_window(int n) {
  require(n >= 1, "window needs a positive horizon");
  int r = static_cast<int>(std::sqrt(static_cast<double>(n)));
  while (static_cast<long long>(r) * r < n) ++r;
  while (r > 1 && static_cast<long long>(r - 1) * (r - 1) >= n) --r;
  return {std::max(r, 1), n};
}

std::vector<double> prefix_averages(std::span<const double> payoffs) {
  std::vector<double> avg(payoffs.size());
  double sum = 0.0;
  for (std::size_t m = 0; m < payoffs.size(); ++m) {
    sum += payoffs[m];
    avg[m] = sum / static_cast<double>(m + 1);
  }
  return avg;
}

namespace {

template <class Pick>
double window_extreme(std::span<const double> payoffs, Pick pick) {
  require(!payoffs.empty(), "payoff sequence is empty");
  const auto avg = prefix_averages(payoffs);
  const auto win = limsup_window(static_cast<int>(payoffs.size()));
  double best = avg[win.first - 1];
  for (int m = win.first; m < win.last; ++m) best = pick(best, avg[m]);
  return best;
}

}  // namespace

double limsup_proxy(std::span<const double> payoffs) {
  return window_extreme(payoffs, [](double a, double b) { return std::max(a, b); });
}

double liminf_proxy(std::span<const double> payoffs) {
  return window_extreme(payoffs, [](double a, double b) { return std::min(a, b); });
}

int eta_horizon(std::span<const double> payoffs, int l) {
  require(l >= 1, "eta_horizon needs l >= 1");
  require(static_cast<int>(payoffs.size()) >= l, "payoff sequence shorter than l");
  const auto avg = prefix_averages(payoffs);
  const double target = limsup_proxy(payoffs) - 1.0 / l - 1e-12;
  for (std::size_t m = static_cast<std::size_t>(l) - 1; m < avg.size(); ++m)
    if (avg[m] >= target) return static_cast<int>(m + 1);
  return static_cast<int>(payoffs.size());
}

json IrregularityReport::to_json() const {
  return {{"lower", lower}, {"upper", upper}, {"horizon", horizon}, {"tail_bound", tail_bound}};
}

json MonteCarloEstimate::to_json() const {
  return {{"mean", mean}, {"standard_error", standard_error}, {"samples", samples}};
}

double play_irregularity(std::span<const double> w) {
  if (w.empty()) return 0.0;
  double total = std::abs(w[0]) + std::abs(w.back());
  for (std::size_t m = 0; m + 1 < w.size(); ++m) total += std::abs(w[m] - w[m + 1]);
  return total;
}

namespace {

// Tail handling shared by the exact and supremum computations. Returns the
// tail bound, zero when the support is covered.
double tail_for(const Evaluation& e, int horizon) {
  require(horizon >= 1, "horizon must be >= 1");
  const auto s = e.support();
  if (s && *s <= horizon) return 0.0;
  const auto tail = e.tail_variation(horizon);
  if (!tail)
    throw TruncationError("horizon " + std::to_string(horizon) +
                          " does not cover the evaluation support and no tail bound exists");
  return *tail;
}

}  // namespace

IrregularityReport irregularity_exact(const Pomdp& p, const Belief& x1, const Strategy& strat,
                                      const Evaluation& e, int horizon, std::size_t budget) {
  const double tail = tail_for(e, horizon);
  double with_last = 0.0, without_last = 0.0;
  std::vector<double> w(horizon);
  enumerate_plays(
      p, x1, strat, horizon,
      [&](const Play& play, double prob) {
        e.weights(play, w);
        const double f = play_irregularity(w);
        with_last += prob * f;
        without_last += prob * (f - std::abs(w.back()));
      },
      budget);
  IrregularityReport r;
  r.horizon = horizon;
  r.tail_bound = tail;
  r.lower = with_last;
  r.upper = tail == 0.0 ? with_last : std::max(with_last, without_last + tail);
  return r;
}

namespace {

// Trie over full observed histories of a fixed length with two accumulators
// at the leaves, maximized by backward induction over actions.
class ObservedMaximizer {
 public:
  ObservedMaximizer(int num_actions, int num_signals)
      : na_(num_actions), ns_(num_signals), nodes_(1) {}

  void add(const Play& play, double a, double b) {
    int node = 0;
    for (int m = 0; m < play.length(); ++m) {
      const int code = play.actions[m] * ns_ + play.signals[m];
      auto& ch = nodes_[node].children;
      auto it = std::find_if(ch.begin(), ch.end(), [&](auto& c) { return c.first == code; });
      if (it == ch.end()) {
        const int id = static_cast<int>(nodes_.size());
        nodes_[node].children.emplace_back(code, id);
        nodes_.emplace_back();
        node = id;
      } else {
        node = it->second;
      }
    }
    nodes_[node].a += a;
    nodes_[node].b += b;
  }

  std::pair<double, double> solve() { return solve(0); }

 private:
  struct Node {
    double a = 0.0, b = 0.0;
    std::vector<std::pair<int, int>> children;
  };

  std::pair<double, double> solve(int node) {
    if (nodes_[node].children.empty()) return {nodes_[node].a, nodes_[node].b};
    std::vector<double> sa(na_, 0.0), sb(na_, 0.0);
    std::vector<bool> seen(na_, false);
    for (auto [code, child] : nodes_[node].children) {
      const auto [va, vb] = solve(child);
      sa[code / ns_] += va;
      sb[code / ns_] += vb;
      seen[code / ns_] = true;
    }
    double best_a = 0.0, best_b = 0.0;
    for (int i = 0; i < na_; ++i) {
      if (!seen[i]) continue;
      best_a = std::max(best_a, sa[i]);
      best_b = std::max(best_b, sb[i]);
    }
    return {best_a, best_b};
  }

  int na_, ns_;
  std::vector<Node> nodes_;
};

}  // namespace

IrregularityReport irregularity_sup(const Pomdp& p, const Belief& x1, const Evaluation& e,
                                    int horizon, std::size_t budget) {
  const double tail = tail_for(e, horizon);
  const Strategy uniform = uniform_strategy(p.num_actions());
  // plays under the uniform strategy carry the action factor |I|^-H
  const double rescale = std::pow(static_cast<double>(p.num_actions()), horizon);
  ObservedMaximizer tree(p.num_actions(), p.num_signals());
  std::vector<double> w(horizon);
  enumerate_plays(
      p, x1, uniform, horizon,
      [&](const Play& play, double prob) {
        e.weights(play, w);
        const double f = play_irregularity(w);
        tree.add(play, prob * rescale * f, prob * rescale * (f - std::abs(w.back())));
      },
      budget);
  const auto [with_last, without_last] = tree.solve();
  IrregularityReport r;
  r.horizon = horizon;
  r.tail_bound = tail;
  r.lower = with_last;
  r.upper = tail == 0.0 ? with_last : std::max(with_last, without_last + tail);
  return r;
}

MonteCarloEstimate irregularity_mc(const Pomdp& p, const Belief& x1, const Strategy& strat,
                                   const Evaluation& e, int horizon, std::size_t samples,
                                   std::uint64_t seed) {
  require(samples >= 1, "samples must be >= 1");
  require(horizon >= 1, "horizon must be >= 1");
  check_belief(p, x1);
  const auto stats = sharded_monte_carlo(samples, seed, 1, [&] {
    return [sampler = PlaySampler(p, x1, strat, e.needs_beliefs()), play = Play{},
            w = std::vector<double>(horizon), &e,
            horizon](std::mt19937_64& rng, std::vector<RunningStats>& out) mutable {
      sampler.sample(horizon, rng, play);
      e.weights(play, w);
      out[0].add(play_irregularity(w));
    };
  });
  return {stats[0].mean, stats[0].standard_error(), samples};
}

int ObservedTree::child(int node, int action, int signal) const {
  const int code = action * num_signals + signal;
  for (auto [c, id] : nodes[node].children)
    if (c == code) return id;
  return -1;
}

ObservedTree conditional_tree(const Pomdp& p, const Belief& x1, const Strategy& strat,
                              const Evaluation& e, int horizon, std::size_t budget) {
  require(horizon >= 1, "horizon must be >= 1");
  ObservedTree tree;
  tree.num_signals = p.num_signals();
  tree.horizon = horizon;
  tree.nodes.emplace_back();
  std::vector<double> w(horizon);
  enumerate_plays(
      p, x1, strat, horizon,
      [&](const Play& play, double prob) {
        e.weights(play, w);
        int node = 0;
        for (int m = 0; m < horizon; ++m) {
          if (m > 0) {
            const int a = play.actions[m - 1], s = play.signals[m - 1];
            int next = tree.child(node, a, s);
            if (next < 0) {
              next = static_cast<int>(tree.nodes.size());
              tree.nodes[node].children.emplace_back(a * tree.num_signals + s, next);
              ObservedTree::Node fresh;
              fresh.parent = node;
              fresh.depth = m;
              fresh.step = {a, s};
              tree.nodes.push_back(std::move(fresh));
            }
            node = next;
          }
          tree.nodes[node].mass += prob;
          tree.nodes[node].weight_sum += prob * w[m];
        }
      },
      budget);
  return tree;
}

Evaluation conditional_evaluation(std::shared_ptr<const ObservedTree> tree) {
  require(tree != nullptr && !tree->nodes.empty(), "conditional evaluation needs a tree");
  return make<Conditional>(std::move(tree));
}

Evaluation conditional_evaluation(const Pomdp& p, const Belief& x1, const Strategy& strat,
                                  const Evaluation& e, int horizon, std::size_t budget) {
  return conditional_evaluation(
      std::make_shared<const ObservedTree>(conditional_tree(p, x1, strat, e, horizon, budget)));
}

}  // namespace wval
