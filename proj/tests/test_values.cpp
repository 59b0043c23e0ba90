#include <doctest.h>

#include <cmath>
#include <map>
#include <random>

#include "oracles.hpp"
#include "wval/chain.hpp"
#include "wval/instances.hpp"
#include "wval/tree.hpp"
#include "wval/values.hpp"

using namespace wval;

namespace {

Pomdp random_pomdp(int nk, int ni, int ns, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::string> k, i, s;
  for (int j = 0; j < nk; ++j) k.push_back("k" + std::to_string(j));
  for (int j = 0; j < ni; ++j) i.push_back("i" + std::to_string(j));
  for (int j = 0; j < ns; ++j) s.push_back("s" + std::to_string(j));
  std::vector<std::vector<Eigen::MatrixXd>> t(nk);
  Eigen::MatrixXd r(nk, ni);
  for (int a = 0; a < nk; ++a)
    for (int b = 0; b < ni; ++b) {
      Eigen::MatrixXd m(nk, ns);
      for (int x = 0; x < nk; ++x)
        for (int y = 0; y < ns; ++y) m(x, y) = u(rng) < 0.3 ? 0.0 : u(rng);
      if (m.sum() == 0.0) m(0, 0) = 1.0;
      t[a].push_back(m / m.sum());
      r(a, b) = u(rng);
    }
  return Pomdp(k, i, s, t, r);
}

Belief random_belief(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Belief x(n);
  for (int j = 0; j < n; ++j) x(j) = u(rng);
  return x / x.sum();
}

// Best n-stage average over all pure strategies, by enumerating them and
// evaluating each with the joint-law recursion.
double best_pure_value(const Pomdp& p, const Belief& x1, int n) {
  const int ni = p.num_actions(), ns = p.num_signals();
  std::vector<std::vector<int>> histories{{}};
  for (std::size_t j = 0; j < histories.size(); ++j) {
    if (static_cast<int>(histories[j].size()) + 1 >= n) continue;
    for (int c = 0; c < ni * ns; ++c) {
      auto h = histories[j];
      h.push_back(c);
      histories.push_back(h);
    }
  }
  std::vector<int> choice(histories.size(), 0);
  double best = -1.0;
  for (;;) {
    std::map<std::vector<int>, int> table;
    for (std::size_t j = 0; j < histories.size(); ++j) table[histories[j]] = choice[j];
    oracle::Policy policy = [&](const std::vector<int>& a, const std::vector<int>& s) {
      std::vector<int> key;
      for (std::size_t j = 0; j < a.size(); ++j) key.push_back(a[j] * ns + s[j]);
      Eigen::VectorXd d = Eigen::VectorXd::Zero(ni);
      d(table.at(key)) = 1.0;
      return d;
    };
    const double v = oracle::expect(p, x1, policy, n, [&](const oracle::Path& path) {
      double t = 0.0;
      for (int m = 0; m < n; ++m) t += p.reward(path.states[m], path.actions[m]);
      return t / n;
    });
    best = std::max(best, v);
    std::size_t j = 0;
    for (; j < choice.size(); ++j) {
      if (++choice[j] < ni) break;
      choice[j] = 0;
    }
    if (j == choice.size()) break;
  }
  return best;
}

Play sample_play(const Pomdp& p, const Belief& x1, const Strategy& s, int n, std::uint64_t seed) {
  PlaySampler sampler(p, x1, s, true);
  std::mt19937_64 rng(seed);
  Play play;
  sampler.sample(n, rng, play);
  return play;
}

}  // namespace

TEST_CASE("n-stage value examples") {
  const Pomdp frozen = instances::matching_frozen();
  for (int n : {1, 2, 7, 30}) {
    const auto r = value_n(frozen, uniform_belief(2), n);
    CHECK(r.value == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(r.method == ValueMethod::ExactDp);
    CHECK(r.error_bound == 0.0);
  }
  const Pomdp revealed = instances::matching_revealed();
  for (int n : {1, 2, 5, 40}) CHECK(value_n(revealed, uniform_belief(2), n).value == doctest::Approx(1.0 - 0.5 / n));
  const Pomdp constant = instances::constant_reward(0.3, 3);
  for (int n : {1, 9}) CHECK(value_n(constant, uniform_belief(1), n).value == doctest::Approx(0.3));
  CHECK_THROWS_AS(value_n(frozen, uniform_belief(2), 0), InvalidInput);
}

TEST_CASE("n-stage value agrees with pure-strategy search") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 30; ++trial) {
    const Pomdp p = random_pomdp(2 + trial % 2, 2, 2, rng);
    const Belief x1 = random_belief(p.num_states(), rng);
    for (int n : {1, 2}) CHECK(value_n(p, x1, n).value == doctest::Approx(best_pure_value(p, x1, n)).epsilon(1e-10));
  }
  for (int trial = 0; trial < 5; ++trial) {
    const Pomdp p = random_pomdp(3, 2, 1, rng);
    const Belief x1 = random_belief(3, rng);
    CHECK(value_n(p, x1, 4).value == doctest::Approx(best_pure_value(p, x1, 4)).epsilon(1e-10));
  }
}

TEST_CASE("value sequence matches individual calls") {
  std::mt19937_64 rng(8);
  const Pomdp p = random_pomdp(2, 2, 2, rng);
  const Belief x1 = random_belief(2, rng);
  const auto seq = value_sequence(p, x1, 8);
  REQUIRE(seq.size() == 8);
  for (int n = 1; n <= 8; ++n) CHECK(seq[n - 1] == doctest::Approx(value_n(p, x1, n).value));
}

TEST_CASE("discounted value examples") {
  const double tol = 1e-6;
  const auto c = value_discounted(instances::constant_reward(0.8), uniform_belief(1), 0.3, tol);
  CHECK(std::abs(c.value - 0.8) <= tol);
  CHECK(c.method == ValueMethod::TruncatedDp);
  CHECK(c.error_bound <= tol);
  CHECK(std::abs(value_discounted(instances::matching_frozen(), uniform_belief(2), 0.2, tol).value - 0.5) <= tol);
  for (double lambda : {0.5, 0.2, 0.1}) {
    const auto r = value_discounted(instances::matching_revealed(), uniform_belief(2), lambda, tol);
    CHECK(std::abs(r.value - (1 - lambda / 2)) <= tol);
    CHECK(r.error_bound == doctest::Approx(std::pow(1 - lambda, r.horizon_or_samples)));
  }
  CHECK_THROWS_AS(value_discounted(instances::matching_revealed(), uniform_belief(2), 1e-6, 1e-9, 1000),
                  BudgetExceeded);
}

TEST_CASE("asymptotic value estimate examples") {
  const auto a = asymptotic_value_estimate(instances::matching_frozen(), uniform_belief(2), 40);
  CHECK(a.value == doctest::Approx(0.5));
  CHECK(a.error_bound == doctest::Approx(1.0 / 40));
  const auto c = asymptotic_value_estimate(instances::constant_reward(0.6), uniform_belief(1), 20);
  CHECK(c.value == doctest::Approx(0.6));
  const auto r = asymptotic_value_estimate(instances::matching_revealed(), uniform_belief(2), 64);
  CHECK(r.value == doctest::Approx(1.0 - 1.0 / 128));
  // spread of 1 - 1/(2n) over n in [48, 64]
  CHECK(r.error_bound == doctest::Approx((1.0 / 96 - 1.0 / 128) + 1.0 / 64));
  CHECK(to_string(r.method) != "exact_dp");
}

TEST_CASE("exact weighted payoff examples") {
  const Pomdp frozen = instances::matching_frozen();
  const Belief x1 = uniform_belief(2);
  for (const auto& e : {n_stage(5), discounted(0.3), piecewise_constant({2, 4}, {0.25, 0.25})}) {
    for (const Strategy& s : {Strategy(uniform_strategy(2)), Strategy(random_behavior_strategy(2, 1, 3)),
                              Strategy(switch_after(2, 0, 2, 1))}) {
      const auto r = weighted_payoff_exact(frozen, x1, s, e, 8);
      CHECK(r.value + r.error_bound >= 0.5 - 1e-9);
      CHECK(r.value <= 0.5 + 1e-9);
    }
  }
  for (int l : {1, 2, 4}) {
    const auto r = weighted_payoff_exact(frozen, x1, Strategy(switch_after(2, 0, l, 1)), state_block(l), 2 * l);
    CHECK(r.value == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.error_bound == 0.0);
  }
  CHECK(weighted_payoff_exact(frozen, x1, Strategy(uniform_strategy(2)), zero_evaluation(), 4).value == 0.0);
}

TEST_CASE("exact weighted payoff agrees with the joint-law recursion") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const Pomdp p = random_pomdp(2 + trial % 2, 2, 2, rng);
    const Belief x1 = random_belief(p.num_states(), rng);
    const BehaviorStrategy s = random_behavior_strategy(2, 2, trial);
    const int n = 4;
    oracle::Policy policy = [&](const std::vector<int>& a, const std::vector<int>& sig) {
      ObservedHistory h;
      for (std::size_t j = 0; j < a.size(); ++j) h.push_back({a[j], sig[j]});
      return s.rule(h);
    };
    const std::vector<double> w{0.4, 0.3, 0.2, 0.1};
    const double expected = oracle::expect(p, x1, policy, n, [&](const oracle::Path& path) {
      double t = 0.0;
      for (int m = 0; m < n; ++m) t += w[m] * p.reward(path.states[m], path.actions[m]);
      return t;
    });
    CHECK(weighted_payoff_exact(p, x1, Strategy(s), decreasing(w), n).value == doctest::Approx(expected));
    const double blocks = oracle::expect(p, x1, policy, n, [&](const oracle::Path& path) {
      const int start = path.states[0] == 0 ? 0 : 2;
      return 0.5 * (p.reward(path.states[start], path.actions[start]) +
                    p.reward(path.states[start + 1], path.actions[start + 1]));
    });
    CHECK(weighted_payoff_exact(p, x1, Strategy(s), state_block(2), n).value == doctest::Approx(blocks));
  }
}

TEST_CASE("chain-based weighted payoff matches the tree") {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 10; ++trial) {
    const Pomdp p = random_pomdp(2, 2, 2, rng);
    const Belief x1 = random_belief(2, rng);
    const auto ts = enumerate_transducers(p, 2);
    const Transducer& t = ts[trial % ts.size()];
    for (const auto& e : {n_stage(5), discounted(0.4), decreasing({0.3, 0.3, 0.2, 0.1, 0.1})}) {
      const auto tree = weighted_payoff_exact(p, x1, Strategy(t), e, 5);
      const auto chain = weighted_payoff_chain(p, x1, t, e, 5);
      CHECK(chain.value == doctest::Approx(tree.value).epsilon(1e-12));
      CHECK(chain.method == ValueMethod::ErgodicExact);
    }
  }
}

TEST_CASE("Monte Carlo weighted payoff examples") {
  const Pomdp constant = instances::constant_reward(0.25);
  const auto c = weighted_payoff_mc(constant, uniform_belief(1), Strategy(uniform_strategy(2)), n_stage(5), 5, 200, 1);
  CHECK(c.value == doctest::Approx(0.25));
  CHECK(c.error_bound == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(c.method == ValueMethod::MonteCarlo);

  const Pomdp redraw = instances::uniform_redraw();
  const auto r = weighted_payoff_mc(redraw, uniform_belief(2), Strategy(uniform_strategy(1)), run_block(5), 400, 4000, 2);
  CHECK(r.value >= 0.99);
  CHECK(std::abs(r.value - 1.0) <= r.error_bound);

  const Pomdp frozen = instances::matching_frozen();
  const auto f = weighted_payoff_mc(frozen, uniform_belief(2), Strategy(uniform_strategy(2)), n_stage(10), 10, 20000, 3);
  CHECK(std::abs(f.value - 0.5) <= f.error_bound);
  const auto again = weighted_payoff_mc(frozen, uniform_belief(2), Strategy(uniform_strategy(2)), n_stage(10), 10, 20000, 3);
  CHECK(again.value == f.value);
}

TEST_CASE("limit proxies") {
  const Pomdp constant = instances::constant_reward(0.4);
  for (LimitMode mode : {LimitMode::LimsupState, LimitMode::LiminfState, LimitMode::LimsupBelief, LimitMode::LiminfBelief}) {
    CHECK(limsup_belief_payoff_mc(constant, uniform_belief(1), Strategy(uniform_strategy(2)), 50, 20, 1, mode).value ==
          doctest::Approx(0.4));
    CHECK(parse_limit_mode(to_string(mode)) == mode);
  }
  CHECK_THROWS_AS(parse_limit_mode("sideways"), InvalidInput);

  const Pomdp blind = instances::blind_switch();
  const Strategy d = Strategy(doubling_strategy(0, 1));
  double liminf = 0.0;
  for (int k = 0; k < 2; ++k) {
    const auto sup = limsup_belief_payoff_mc(blind, dirac(2, k), d, 100000, 1, 0, LimitMode::LimsupState);
    CHECK(sup.value >= 0.9);
    liminf += limsup_belief_payoff_mc(blind, dirac(2, k), d, 100000, 1, 0, LimitMode::LiminfState).value / 2;
  }
  CHECK(liminf <= 0.2);
}

TEST_CASE("limit proxies are ordered on every play") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 40; ++trial) {
    const Pomdp p = random_pomdp(3, 2, 2, rng);
    const Belief x1 = random_belief(3, rng);
    const Play play = sample_play(p, x1, Strategy(random_behavior_strategy(2, 2, trial)), 300, trial);
    const auto r = limit_proxies(p, play);
    CHECK(r.liminf_state <= r.limsup_state + 1e-9);
    CHECK(r.liminf_belief <= r.limsup_belief + 1e-9);
  }
  // Where beliefs are exact the belief and state proxies coincide.
  const Pomdp rev = instances::matching_revealed();
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Play play = sample_play(rev, dirac(2, 1), Strategy(uniform_strategy(2)), 200, seed);
    const auto r = limit_proxies(rev, play);
    CHECK(r.limsup_state == doctest::Approx(r.limsup_belief));
    CHECK(r.liminf_state == doctest::Approx(r.liminf_belief));
  }
}

TEST_CASE("limit estimates carry a paired standard error") {
  const Pomdp rev = instances::matching_revealed();
  const auto est = limit_payoffs_mc(rev, uniform_belief(2), Strategy(uniform_strategy(2)), 200, 2000, 5);
  CHECK(est.limsup_difference == doctest::Approx(est.limsup_belief.value - est.limsup_state.value));
  CHECK(est.limsup_difference_se >= 0.0);
  CHECK(est.to_json().contains("limsup_difference"));
}

TEST_CASE("n-stage value is a supermartingale along the belief tree") {
  std::mt19937_64 rng(55);
  const int big = 8;
  for (int trial = 0; trial < 4; ++trial) {
    const Pomdp p = random_pomdp(2, 2, 2, rng);
    const Belief x1 = random_belief(2, rng);
    const double err = asymptotic_value_estimate(p, x1, big).error_bound;
    const double here = value_n(p, x1, big).value;
    for (int i = 0; i < 2; ++i) {
      double next = 0.0;
      for (const auto& br : belief_transition(p, x1, i)) next += br.probability * value_n(p, br.posterior, big).value;
      CHECK(next <= here + 2 * err);
    }
  }
}

TEST_CASE("weighted payoff of the best transducer approaches the asymptotic value") {
  // gamma >= v* - 4 l I - 0.05 for catalog evaluations with small irregularity
  const std::vector<Pomdp> ps{instances::blind_switch(), instances::uniform_redraw(), instances::matching_revealed()};
  for (const Pomdp& p : ps) {
    const Belief x1 = uniform_belief(p.num_states());
    const auto asym = asymptotic_value_estimate(p, x1, 40);
    const auto ts = enumerate_transducers(p, 2);
    const Transducer* best = &ts[0];
    double best_value = -1.0;
    for (const auto& t : ts) {
      const double v = liminf_value_transducer(p, x1, t);
      if (v > best_value) best_value = v, best = &t;
    }
    const auto c = product_chain(p, *best, x1);
    const int l = mixing_threshold(c, ergodic_decomposition(c));
    for (const auto& named : standard_evaluation_catalog()) {
      const auto w = named.evaluation.deterministic_weights(4000);
      const double irr = play_irregularity(w);
      if (irr > 0.1) continue;
      const double g = weighted_payoff_chain(p, x1, *best, named.evaluation, 4000).value;
      CHECK(g >= asym.value - 4 * l * irr - 0.05);
    }
  }
}

TEST_CASE("excess over the asymptotic value shrinks with the irregularity") {
  const Pomdp p = instances::matching_revealed();
  const Belief x1 = uniform_belief(2);
  const double asym = asymptotic_value_estimate(p, x1, 64).value;
  double previous = 1.0;
  for (int n : {2, 5, 10, 20, 50}) {
    // the best strategy for n stages is found by the DP
    const double excess = std::max(0.0, value_n(p, x1, n).value - asym);
    CHECK(excess <= previous + 1e-12);
    previous = excess;
  }
  const Pomdp frozen = instances::matching_frozen();
  const double a = asymptotic_value_estimate(frozen, x1, 40).value;
  double prev = 1.0;
  for (int n : {2, 5, 10, 20}) {
    const double excess = std::abs(value_n(frozen, x1, n).value - a);
    CHECK(excess <= prev + 1e-12);
    prev = excess;
  }
}

TEST_CASE("report json always carries method and error bound") {
  const auto r = value_n(instances::matching_frozen(), uniform_belief(2), 3);
  const auto j = r.to_json();
  CHECK(j.contains("method"));
  CHECK(j.contains("error_bound"));
  CHECK(j["method"] == "exact_dp");
}
