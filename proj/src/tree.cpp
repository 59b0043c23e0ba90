#include "wval/tree.hpp"

#include <algorithm>

namespace wval {

namespace {

class Enumerator {
 public:
  Enumerator(const Pomdp& p, const Strategy& strat, int horizon, const PlayVisitor& visit,
             std::size_t budget)
      : p_(p), cursor_(strat), horizon_(horizon), visit_(visit), budget_(budget) {}

  std::size_t run(const Belief& x1) {
    play_.beliefs.push_back(x1);
    for (int k = 0; k < p_.num_states(); ++k) {
      if (x1(k) <= 0.0) continue;
      charge();
      play_.states.push_back(k);
      stage(x1(k));
      play_.states.pop_back();
    }
    return nodes_;
  }

 private:
  void charge() {
    if (++nodes_ > budget_)
      throw BudgetExceeded("play tree exceeds the node budget of " + std::to_string(budget_),
                           nodes_);
  }

  // play_ holds k_1..k_m and x_1..x_m; expand stage m.
  void stage(double prob) {
    const int m = play_.length();
    const int k = play_.states.back();
    const Belief x = play_.beliefs.back();  // beliefs may reallocate below
    const Eigen::VectorXd dist = cursor_.act(x);
    for (int i = 0; i < p_.num_actions(); ++i) {
      const double pi = dist(i);
      if (pi <= 0.0) continue;
      play_.actions.push_back(i);
      play_.belief_rewards.push_back(x.dot(p_.rewards().col(i)));
      const Eigen::MatrixXd& kern = p_.kernel(k, i);
      for (int s = 0; s < p_.num_signals(); ++s) {
        const double ps = kern.col(s).sum();
        if (ps <= 0.0) continue;
        play_.signals.push_back(s);
        play_.beliefs.push_back(bayes_update(p_, x, i, s));
        if (m == horizon_) {
          charge();
          visit_(play_, prob * pi * ps);
        } else {
          cursor_.push(i, s);
          for (int next = 0; next < p_.num_states(); ++next) {
            const double qn = kern(next, s);
            if (qn <= 0.0) continue;
            charge();
            play_.states.push_back(next);
            stage(prob * pi * qn);
            play_.states.pop_back();
          }
          cursor_.pop();
        }
        play_.beliefs.pop_back();
        play_.signals.pop_back();
      }
      play_.belief_rewards.pop_back();
      play_.actions.pop_back();
    }
  }

  const Pomdp& p_;
  StrategyCursor cursor_;
  int horizon_;
  const PlayVisitor& visit_;
  std::size_t budget_;
  std::size_t nodes_ = 0;
  Play play_;
};

}  // namespace

std::size_t enumerate_plays(const Pomdp& p, const Belief& x1, const Strategy& strat, int horizon,
                            const PlayVisitor& visit, std::size_t budget) {
  check_belief(p, x1);
  if (horizon < 1) throw InvalidInput("horizon must be >= 1");
  if (num_actions(strat) != p.num_actions())
    throw InvalidInput("strategy action count does not match the POMDP");
  Enumerator e(p, strat, horizon, visit, budget);
  return e.run(x1);
}

int sample_index(const Eigen::VectorXd& probs, std::mt19937_64& rng) {
  const double u = std::generate_canonical<double, 53>(rng) * probs.sum();
  double acc = 0.0;
  int last = 0;
  for (int i = 0; i < probs.size(); ++i) {
    if (probs(i) <= 0.0) continue;
    acc += probs(i);
    last = i;
    if (u < acc) return i;
  }
  return last;
}

std::uint64_t shard_seed(std::uint64_t seed, std::uint64_t shard) {
  // splitmix64 of the combined value
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (shard + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

PlaySampler::PlaySampler(const Pomdp& p, const Belief& x1, const Strategy& strat,
                         bool track_beliefs)
    : p_(&p),
      x1_(x1),
      strat_(&strat),
      track_beliefs_(track_beliefs || std::holds_alternative<StationaryStrategy>(strat)),
      cursor_(strat) {
  check_belief(p, x1);
  if (num_actions(strat) != p.num_actions())
    throw InvalidInput("strategy action count does not match the POMDP");
  const int nk = p.num_states(), ns = p.num_signals();
  for (int k = 0; k < nk; ++k)
    for (int i = 0; i < p.num_actions(); ++i) {
      std::vector<double> cdf(static_cast<std::size_t>(nk * ns));
      double acc = 0.0;
      for (int next = 0; next < nk; ++next)
        for (int s = 0; s < ns; ++s) cdf[next * ns + s] = (acc += p.q(k, i, next, s));
      cumulative_.push_back(std::move(cdf));
    }
}

void PlaySampler::sample(int horizon, std::mt19937_64& rng, Play& play) {
  const Pomdp& p = *p_;
  play.states.resize(horizon);
  play.actions.resize(horizon);
  play.signals.resize(horizon);
  if (track_beliefs_) {
    play.beliefs.resize(horizon + 1);
    play.belief_rewards.resize(horizon);
    play.beliefs[0] = x1_;
  } else {
    play.beliefs.clear();
    play.belief_rewards.clear();
  }
  cursor_.reset();
  int k = sample_index(x1_, rng);
  const int ns = p.num_signals();
  for (int m = 0; m < horizon; ++m) {
    play.states[m] = k;
    int i = cursor_.pure_action();
    if (i < 0) {
      const Belief& x = track_beliefs_ ? play.beliefs[m] : x1_;
      i = sample_index(cursor_.act(x), rng);
    }
    play.actions[m] = i;
    const auto& cdf = cumulative_[k * p.num_actions() + i];
    const double u = std::generate_canonical<double, 53>(rng) * cdf.back();
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    std::size_t cell = std::min<std::size_t>(it - cdf.begin(), cdf.size() - 1);
    const int next = static_cast<int>(cell) / ns;
    const int s = static_cast<int>(cell) % ns;
    play.signals[m] = s;
    if (track_beliefs_) {
      play.belief_rewards[m] = play.beliefs[m].dot(p.rewards().col(i));
      play.beliefs[m + 1] = bayes_update(p, play.beliefs[m], i, s);
    }
    cursor_.push(i, s);
    k = next;
  }
}

}  // namespace wval
