#include <doctest.h>

#include <cmath>
#include <random>

#include "wval/chain.hpp"
#include "wval/evaluations.hpp"
#include "wval/instances.hpp"
#include "wval/montecarlo.hpp"

using namespace wval;

namespace {

MarkovChain<double> make_chain(Eigen::MatrixXd t, Eigen::VectorXd f, Eigen::VectorXd init) {
  MarkovChain<double> c{std::move(t), std::move(f), std::move(init)};
  c.validate();
  return c;
}

// Random chain with sparse rows so that several classes and transient states appear.
MarkovChain<double> random_chain(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    if (u(rng) < 0.25) {
      t(i, i) = 1.0;
      continue;
    }
    for (int j = 0; j < n; ++j)
      if (u(rng) < 0.4) t(i, j) = u(rng);
    if (t.row(i).sum() == 0.0) t(i, (i + 1) % n) = 1.0;
    t.row(i) /= t.row(i).sum();
  }
  Eigen::VectorXd f(n), init(n);
  for (int i = 0; i < n; ++i) {
    f(i) = u(rng);
    init(i) = u(rng);
  }
  init /= init.sum();
  return make_chain(t, f, init);
}

}  // namespace

TEST_CASE("product chain examples") {
  const Pomdp blind = instances::blind_switch();
  const auto c = product_chain(blind, always_play(blind, 0), uniform_belief(2));
  CHECK(c.size() == 2);
  CHECK(c.transition.isApprox(Eigen::MatrixXd::Identity(2, 2)));
  CHECK(c.payoff(0) == 0.0);
  CHECK(c.payoff(1) == 1.0);
  CHECK(c.initial(0) == 0.5);

  const Pomdp redraw = instances::uniform_redraw();
  for (const auto& t : enumerate_transducers(redraw, 1)) {
    const auto r = product_chain(redraw, t, uniform_belief(2));
    CHECK(r.size() == 2);
    CHECK((r.transition.array() - 0.5).abs().maxCoeff() < 1e-15);
  }

  Eigen::MatrixXd p3(3, 3);
  p3 << 0.2, 0.8, 0.0, 0.0, 0.5, 0.5, 1.0, 0.0, 0.0;
  const Pomdp three = instances::revealed_chain(p3, Eigen::Vector3d(0.1, 0.5, 0.9));
  Transducer t2{2, 0, 1, 3, {0, 0}, {1, 0, 1, 0, 0, 1}};
  const auto c3 = product_chain(three, t2, uniform_belief(3));
  CHECK(c3.size() == 6);
  c3.validate();
}

TEST_CASE("ergodic decomposition examples") {
  const auto id = make_chain(Eigen::MatrixXd::Identity(2, 2), Eigen::Vector2d(0.0, 1.0),
                             Eigen::Vector2d(0.3, 0.7));
  const auto d = ergodic_decomposition(id);
  CHECK(d.num_classes() == 2);
  CHECK(d.transient.empty());
  CHECK(d.absorption.isApprox(id.initial));
  for (int k = 0; k < 2; ++k) CHECK(d.class_values(k) == id.payoff(d.classes[k][0]));

  const Pomdp redraw = instances::uniform_redraw();
  const auto e = ergodic_decomposition(product_chain(redraw, always_play(redraw, 0), uniform_belief(2)));
  CHECK(e.num_classes() == 1);
  CHECK(e.stationary[0].isApprox(Eigen::Vector2d(0.5, 0.5)));
  CHECK(e.class_values(0) == doctest::Approx(0.5));

  Eigen::Matrix3d t;
  t << 0.0, 0.3, 0.7, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0;
  const auto f = ergodic_decomposition(make_chain(t, Eigen::Vector3d(0.5, 0.2, 0.8), Eigen::Vector3d(1, 0, 0)));
  CHECK(f.transient == std::vector<int>{0});
  REQUIRE(f.num_classes() == 2);
  for (int k = 0; k < 2; ++k)
    CHECK(f.absorption(k) == doctest::Approx(f.classes[k][0] == 1 ? 0.3 : 0.7));
}

TEST_CASE("decomposition invariants on random chains") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    const auto c = random_chain(2 + trial % 7, rng);
    const auto d = ergodic_decomposition(c);
    std::vector<int> seen(c.size(), 0);
    for (int u : d.transient) ++seen[u];
    for (int k = 0; k < d.num_classes(); ++k) {
      for (int u : d.classes[k]) ++seen[u];
      const Eigen::VectorXd& pi = d.stationary[k];
      CHECK(pi.sum() == doctest::Approx(1.0).epsilon(1e-9));
      CHECK(((pi.transpose() * c.transition).transpose() - pi).cwiseAbs().maxCoeff() < 1e-9);
      double mass_in = 0.0;
      for (int u : d.classes[k]) mass_in += pi(u);
      CHECK(mass_in == doctest::Approx(1.0));
      CHECK(d.class_values(k) == doctest::Approx(pi.dot(c.payoff)));
      // closed: no mass leaves the class
      for (int u : d.classes[k]) {
        double stay = 0.0;
        for (int v : d.classes[k]) stay += c.transition(u, v);
        CHECK(stay == doctest::Approx(1.0));
      }
    }
    for (int s : seen) CHECK(s == 1);
    CHECK(d.absorption.sum() == doctest::Approx(1.0).epsilon(1e-9));
    // long-run class masses from P^(2^40) by repeated squaring
    Eigen::MatrixXd power = c.transition;
    for (int j = 0; j < 40; ++j) {
      power = power * power;
      for (int r = 0; r < power.rows(); ++r) power.row(r) /= power.row(r).sum();
    }
    const Eigen::VectorXd far = (c.initial.transpose() * power).transpose();
    for (int k = 0; k < d.num_classes(); ++k) {
      double mass = 0.0;
      for (int u : d.classes[k]) mass += far(u);
      CHECK(mass == doctest::Approx(d.absorption(k)).epsilon(1e-6));
    }
  }
}

TEST_CASE("step distribution") {
  const Pomdp redraw = instances::uniform_redraw();
  const auto c = product_chain(redraw, always_play(redraw, 0), dirac(2, 0));
  CHECK(step_distribution(c, 0) == c.initial);
  CHECK(step_distribution(c, 5).isApprox(Eigen::Vector2d(0.5, 0.5)));
  const auto id = make_chain(Eigen::MatrixXd::Identity(3, 3), Eigen::Vector3d(0, 0.5, 1),
                             Eigen::Vector3d(0.2, 0.3, 0.5));
  CHECK(step_distribution(id, 17) == id.initial);
  CHECK_THROWS_AS(step_distribution(id, -1), InvalidInput);
}

TEST_CASE("liminf value examples") {
  const Pomdp blind = instances::blind_switch();
  CHECK(liminf_value_transducer(blind, uniform_belief(2), always_play(blind, 0)) == doctest::Approx(0.5));
  const Pomdp redraw = instances::uniform_redraw();
  for (const auto& t : enumerate_transducers(redraw, 1))
    CHECK(liminf_value_transducer(redraw, uniform_belief(2), t) == doctest::Approx(0.5));
  const Pomdp constant = instances::constant_reward(0.37);
  CHECK(liminf_value_transducer(constant, uniform_belief(1), always_play(constant, 1)) ==
        doctest::Approx(0.37));
}

TEST_CASE("class averages match long simulations") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 8; ++trial) {
    const auto c = random_chain(3 + trial % 4, rng);
    const auto d = ergodic_decomposition(c);
    for (int k = 0; k < d.num_classes(); ++k) {
      // batch means over 100 batches of 1000 steps
      RunningStats batches;
      int u = d.classes[k][0];
      std::uniform_real_distribution<double> unif(0.0, 1.0);
      for (int b = 0; b < 100; ++b) {
        double sum = 0.0;
        for (int s = 0; s < 1000; ++s) {
          sum += c.payoff(u);
          const double x = unif(rng);
          double acc = 0.0;
          int next = c.size() - 1;
          for (int v = 0; v < c.size(); ++v)
            if ((acc += c.transition(u, v)) > x) {
              next = v;
              break;
            }
          u = next;
        }
        batches.add(sum / 1000.0);
      }
      CHECK(std::abs(batches.mean - d.class_values(k)) <= 3 * batches.standard_error() + 1e-12);
    }
  }
}

TEST_CASE("transient mass decays below the mixing threshold") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const auto c = random_chain(3 + trial % 5, rng);
    const auto d = ergodic_decomposition(c);
    double previous = 2.0;
    for (int l = 0; l < 60; ++l) {
      const Eigen::VectorXd y = step_distribution(c, l);
      double mass = 0.0;
      for (int u : d.transient) mass += y(u);
      CHECK(mass <= previous + 1e-12);
      previous = mass;
    }
    const int n = mixing_threshold(c, d);
    if (n < kMixingCap) {
      const Eigen::VectorXd y = step_distribution(c, n);
      double mass = 0.0;
      for (int u : d.transient) mass += y(u);
      CHECK(mass < 0.01);
    }
  }
}

TEST_CASE("weighted payoff lower bound through the mixing threshold") {
  // E[sum theta_m f(u_m)] >= liminf value - 4 l I(theta) - eps, eps = 0.05.
  std::vector<MarkovChain<double>> chains;
  const Pomdp blind = instances::blind_switch();
  chains.push_back(product_chain(blind, always_play(blind, 0), uniform_belief(2)));
  const Pomdp redraw = instances::uniform_redraw();
  chains.push_back(product_chain(redraw, always_play(redraw, 0), uniform_belief(2)));
  Eigen::Matrix3d t;
  t << 0.5, 0.2, 0.3, 0.0, 0.1, 0.9, 0.0, 0.6, 0.4;
  chains.push_back(make_chain(t, Eigen::Vector3d(1.0, 0.0, 0.7), Eigen::Vector3d(1, 0, 0)));
  for (const auto& c : chains) {
    const auto d = ergodic_decomposition(c);
    const double liminf = d.absorption.dot(d.class_values);
    const int l = mixing_threshold(c, d);
    for (const auto& named : standard_evaluation_catalog()) {
      const int n = 4000;
      const auto w = named.evaluation.deterministic_weights(n);
      double payoff = 0.0;
      Eigen::VectorXd y = c.initial;
      for (int m = 0; m < n; ++m) {
        payoff += w[m] * y.dot(c.payoff);
        y = (y.transpose() * c.transition).transpose();
      }
      const double irr = play_irregularity(w);
      CHECK(payoff >= liminf - 4.0 * l * irr - 0.05);
    }
  }
}

TEST_CASE("long double instantiation agrees with double") {
  Eigen::MatrixXd p3(3, 3);
  p3 << 0.2, 0.8, 0.0, 0.0, 0.5, 0.5, 0.25, 0.25, 0.5;
  const Pomdp three = instances::revealed_chain(p3, Eigen::Vector3d(0.1, 0.5, 0.9));
  for (const auto& t : enumerate_transducers(three, 2)) {
    const long double ld = liminf_value_transducer<long double>(three, uniform_belief(3), t);
    const double dd = liminf_value_transducer(three, uniform_belief(3), t);
    CHECK(static_cast<double>(ld) == doctest::Approx(dd).epsilon(1e-12));
  }
}

TEST_CASE("invalid chains are rejected") {
  CHECK_THROWS_AS(make_chain(Eigen::Matrix2d::Constant(0.6), Eigen::Vector2d(0, 1), Eigen::Vector2d(0.5, 0.5)),
                  InvalidInput);
  CHECK_THROWS_AS(make_chain(Eigen::Matrix2d::Identity(), Eigen::Vector2d(0, 2), Eigen::Vector2d(0.5, 0.5)),
                  InvalidInput);
}
