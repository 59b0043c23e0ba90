#include "wval/strategies.hpp"

#include <cmath>
#include <limits>
#include <deque>
#include <random>
#include <set>

namespace wval {

namespace {

Eigen::VectorXd point_mass(int n, int i) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
  v(i) = 1.0;
  return v;
}

}  // namespace

Eigen::VectorXd StationaryStrategy::act(const Belief& x) const {
  double best = std::numeric_limits<double>::infinity();
  std::size_t arg = 0;
  for (std::size_t j = 0; j < support.size(); ++j) {
    if (support[j].size() != x.size()) continue;
    const double d = (support[j] - x).lpNorm<1>();
    if (d < best) {
      best = d;
      arg = j;
    }
  }
  if (!(best <= kProbabilityTolerance))
    throw InvalidInput("stationary strategy is undefined at the queried belief (L1 distance " +
                       std::to_string(best) + " to the nearest support point)");
  return actions[arg];
}

int num_actions(const Strategy& s) {
  return std::visit(
      [](const auto& v) -> int {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, StationaryStrategy>)
          return v.actions.empty() ? 0 : static_cast<int>(v.actions.front().size());
        else
          return v.num_actions;
      },
      s);
}

int transducer_memory(const Transducer& t, const ObservedHistory& h) {
  int m = t.initial;
  for (const auto& step : h) m = t.next(m, step.action, step.signal);
  return m;
}

Eigen::VectorXd strategy_action(const Strategy& strat, const ObservedHistory& h,
                                const Belief& current) {
  return std::visit(
      [&](const auto& v) -> Eigen::VectorXd {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, BehaviorStrategy>)
          return v.rule(h);
        else if constexpr (std::is_same_v<T, Transducer>)
          return point_mass(v.num_actions, v.act[transducer_memory(v, h)]);
        else
          return v.act(current);
      },
      strat);
}

StrategyCursor::StrategyCursor(const Strategy& strat) : strat_(&strat) { reset(); }

void StrategyCursor::reset() {
  history_.clear();
  memory_.clear();
  if (const auto* t = std::get_if<Transducer>(strat_)) memory_.push_back(t->initial);
}

Eigen::VectorXd StrategyCursor::act(const Belief& current) const {
  if (const auto* t = std::get_if<Transducer>(strat_))
    return point_mass(t->num_actions, t->act[memory_.back()]);
  return strategy_action(*strat_, history_, current);
}

int StrategyCursor::pure_action() const {
  if (const auto* t = std::get_if<Transducer>(strat_)) return t->act[memory_.back()];
  return -1;
}

void StrategyCursor::push(int action, int signal) {
  history_.push_back({action, signal});
  if (const auto* t = std::get_if<Transducer>(strat_))
    memory_.push_back(t->next(memory_.back(), action, signal));
}

void StrategyCursor::pop() {
  history_.pop_back();
  if (std::holds_alternative<Transducer>(*strat_)) memory_.pop_back();
}

Transducer always_play(const Pomdp& p, int action) {
  if (action < 0 || action >= p.num_actions()) throw InvalidInput("always: unknown action");
  Transducer t;
  t.memory_size = 1;
  t.num_actions = p.num_actions();
  t.num_signals = p.num_signals();
  t.act = {action};
  t.update.assign(static_cast<std::size_t>(p.num_actions() * p.num_signals()), 0);
  return t;
}

BehaviorStrategy uniform_strategy(int num_actions) {
  return {"uniform", num_actions, [num_actions](const ObservedHistory&) {
            return Eigen::VectorXd::Constant(num_actions, 1.0 / num_actions);
          }};
}

bool doubling_switches_at(long long stage) {
  // Block n occupies 2^(n^2) hold stages followed by one switch stage.
  long long end = 0;
  for (int n = 1;; ++n) {
    const int exponent = n * n;
    if (exponent >= 62) return false;
    end += (1LL << exponent) + 1;
    if (stage == end) return true;
    if (stage < end) return false;
  }
}

BehaviorStrategy doubling_strategy(int hold, int switch_action) {
  const int n = std::max(hold, switch_action) + 1;
  return {"doubling", n, [=](const ObservedHistory& h) {
            const long long stage = static_cast<long long>(h.size()) + 1;
            return point_mass(n, doubling_switches_at(stage) ? switch_action : hold);
          }};
}

BehaviorStrategy switch_after(int num_actions, int first, int stages, int then) {
  return {"switch_after", num_actions, [=](const ObservedHistory& h) {
            return point_mass(num_actions, static_cast<int>(h.size()) < stages ? first : then);
          }};
}

BehaviorStrategy random_behavior_strategy(int num_actions, int num_signals, std::uint64_t seed) {
  // Row 0 is the empty history; row 1 + i*|S| + s follows the last pair (i,s).
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<Eigen::VectorXd> table;
  for (int row = 0; row <= num_actions * num_signals; ++row) {
    Eigen::VectorXd w(num_actions);
    for (int i = 0; i < num_actions; ++i) w(i) = -std::log(1.0 - unif(rng));
    table.push_back(w / w.sum());
  }
  return {"random:" + std::to_string(seed), num_actions,
          [table = std::move(table), num_signals](const ObservedHistory& h) {
            if (h.empty()) return table[0];
            return table[1 + h.back().action * num_signals + h.back().signal];
          }};
}

Transducer canonical_form(const Transducer& t) {
  std::vector<int> label(t.memory_size, -1);
  std::vector<int> order;
  std::deque<int> queue{t.initial};
  label[t.initial] = 0;
  order.push_back(t.initial);
  while (!queue.empty()) {
    const int m = queue.front();
    queue.pop_front();
    for (int i = 0; i < t.num_actions; ++i)
      for (int s = 0; s < t.num_signals; ++s) {
        const int n = t.next(m, i, s);
        if (label[n] < 0) {
          label[n] = static_cast<int>(order.size());
          order.push_back(n);
          queue.push_back(n);
        }
      }
  }
  Transducer c;
  c.memory_size = static_cast<int>(order.size());
  c.initial = 0;
  c.num_actions = t.num_actions;
  c.num_signals = t.num_signals;
  c.act.resize(order.size());
  c.update.resize(order.size() * t.num_actions * t.num_signals);
  for (std::size_t j = 0; j < order.size(); ++j) {
    c.act[j] = t.act[order[j]];
    for (int i = 0; i < t.num_actions; ++i)
      for (int s = 0; s < t.num_signals; ++s)
        c.update[(j * t.num_actions + i) * t.num_signals + s] = label[t.next(order[j], i, s)];
  }
  return c;
}

double raw_transducer_count(const Pomdp& p, int memory) {
  return std::pow(p.num_actions(), memory) *
         std::pow(memory, memory * p.num_actions() * p.num_signals());
}

std::vector<Transducer> enumerate_transducers(const Pomdp& p, int max_memory, std::size_t cap) {
  if (max_memory < 1) throw InvalidInput("max_memory must be >= 1");
  double total = 0.0;
  for (int m = 1; m <= max_memory; ++m) total += raw_transducer_count(p, m);
  if (total > static_cast<double>(cap))
    throw InvalidInput("transducer enumeration needs " + std::to_string(total) +
                       " raw transducers, above the cap of " + std::to_string(cap));

  const int ni = p.num_actions(), ns = p.num_signals();
  std::vector<Transducer> out;
  std::set<std::vector<int>> seen;
  for (int size = 1; size <= max_memory; ++size) {
    Transducer t;
    t.memory_size = size;
    t.num_actions = ni;
    t.num_signals = ns;
    t.act.assign(size, 0);
    t.update.assign(static_cast<std::size_t>(size * ni * ns), 0);
    // Odometer over act then update digits.
    for (;;) {
      Transducer c = canonical_form(t);
      std::vector<int> code{c.memory_size};
      code.insert(code.end(), c.act.begin(), c.act.end());
      code.insert(code.end(), c.update.begin(), c.update.end());
      if (seen.insert(code).second) out.push_back(std::move(c));

      std::size_t d = 0;
      for (; d < t.act.size(); ++d) {
        if (++t.act[d] < ni) break;
        t.act[d] = 0;
      }
      if (d < t.act.size()) continue;
      std::size_t e = 0;
      for (; e < t.update.size(); ++e) {
        if (++t.update[e] < size) break;
        t.update[e] = 0;
      }
      if (e == t.update.size()) break;
    }
  }
  return out;
}

}  // namespace wval
