#include "wval/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

namespace wval {

namespace {

int find_name(const std::vector<std::string>& names, const std::string& name, const char* what) {
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw InvalidInput(std::string("unknown ") + what + " '" + name + "'");
  return static_cast<int>(it - names.begin());
}

}  // namespace

Pomdp::Pomdp(std::vector<std::string> states, std::vector<std::string> actions,
             std::vector<std::string> signals,
             std::vector<std::vector<Eigen::MatrixXd>> transition, Eigen::MatrixXd reward)
    : states_(std::move(states)),
      actions_(std::move(actions)),
      signals_(std::move(signals)),
      transition_(std::move(transition)),
      reward_(std::move(reward)) {
  if (states_.empty() || actions_.empty() || signals_.empty())
    throw InvalidInput("states, actions and signals must be non-empty");
  const auto nk = states_.size(), ni = actions_.size(), ns = signals_.size();
  if (transition_.size() != nk) throw InvalidInput("transition has wrong number of states");
  if (reward_.rows() != static_cast<Eigen::Index>(nk) ||
      reward_.cols() != static_cast<Eigen::Index>(ni))
    throw InvalidInput("reward table must be |K| x |I|");
  for (std::size_t k = 0; k < nk; ++k) {
    if (transition_[k].size() != ni) throw InvalidInput("transition has wrong number of actions");
    for (std::size_t i = 0; i < ni; ++i) {
      const auto& t = transition_[k][i];
      const std::string row = "(" + states_[k] + "," + actions_[i] + ")";
      if (t.rows() != static_cast<Eigen::Index>(nk) || t.cols() != static_cast<Eigen::Index>(ns))
        throw InvalidInput("transition row " + row + " must be a |K| x |S| table");
      if ((t.array() < 0.0).any() || !t.allFinite())
        throw InvalidInput("transition row " + row + " has a negative or non-finite entry");
      const double sum = t.sum();
      if (std::abs(sum - 1.0) > kProbabilityTolerance) {
        std::ostringstream msg;
        msg << "transition row " << row << " sums to " << sum << " (deviation "
            << std::scientific << std::abs(sum - 1.0) << ")";
        throw InvalidInput(msg.str());
      }
      const double r = reward_(k, i);
      if (!(r >= 0.0 && r <= 1.0)) {
        std::ostringstream msg;
        msg << "reward " << row << " = " << r << " lies outside [0,1]";
        throw InvalidInput(msg.str());
      }
    }
  }
}

int Pomdp::state_index(const std::string& name) const { return find_name(states_, name, "state"); }
int Pomdp::action_index(const std::string& name) const { return find_name(actions_, name, "action"); }
int Pomdp::signal_index(const std::string& name) const { return find_name(signals_, name, "signal"); }

ObservedHistory Play::observed_prefix(int len) const {
  ObservedHistory h;
  h.reserve(len);
  for (int m = 0; m < len; ++m) h.push_back({actions[m], signals[m]});
  return h;
}

void check_belief(const Pomdp& p, const Belief& x) {
  if (x.size() != p.num_states())
    throw InvalidInput("belief has dimension " + std::to_string(x.size()) + ", expected " +
                       std::to_string(p.num_states()));
  if ((x.array() < -kProbabilityTolerance).any() || (x.array() > 1.0 + kProbabilityTolerance).any())
    throw InvalidInput("belief entries must lie in [0,1]");
  if (std::abs(x.sum() - 1.0) > kProbabilityTolerance)
    throw InvalidInput("belief entries must sum to 1");
}

namespace {

void check_action(const Pomdp& p, int action) {
  if (action < 0 || action >= p.num_actions())
    throw InvalidInput("action index " + std::to_string(action) + " out of range");
}

// q(x,i)(k',s) as a |K| x |S| table.
Eigen::MatrixXd joint_next(const Pomdp& p, const Belief& x, int action) {
  Eigen::MatrixXd joint = Eigen::MatrixXd::Zero(p.num_states(), p.num_signals());
  for (int k = 0; k < p.num_states(); ++k)
    if (x(k) > 0.0) joint += x(k) * p.kernel(k, action);
  return joint;
}

}  // namespace

std::vector<SignalBranch> belief_transition(const Pomdp& p, const Belief& x, int action) {
  if (x.size() != p.num_states())
    throw InvalidInput("belief has dimension " + std::to_string(x.size()) + ", expected " +
                       std::to_string(p.num_states()));
  check_action(p, action);
  const Eigen::MatrixXd joint = joint_next(p, x, action);
  std::vector<SignalBranch> out;
  for (int s = 0; s < p.num_signals(); ++s) {
    const double mass = joint.col(s).sum();
    if (mass < kSignalCutoff) continue;
    out.push_back({s, mass, joint.col(s) / mass});
  }
  return out;
}

Belief bayes_update(const Pomdp& p, const Belief& x, int action, int signal) {
  Belief next = Belief::Zero(p.num_states());
  for (int k = 0; k < p.num_states(); ++k)
    if (x(k) > 0.0) next += x(k) * p.kernel(k, action).col(signal);
  const double mass = next.sum();
  if (mass <= 0.0) return dirac(p.num_states(), 0);
  return next / mass;
}

Belief belief_after(const Pomdp& p, const Belief& x1, const ObservedHistory& h) {
  check_belief(p, x1);
  Belief x = x1;
  for (const auto& step : h) {
    check_action(p, step.action);
    if (step.signal < 0 || step.signal >= p.num_signals())
      throw InvalidInput("signal index out of range");
    x = bayes_update(p, x, step.action, step.signal);
  }
  return x;
}

double stage_payoff(const Pomdp& p, const Belief& x, int action) {
  if (x.size() != p.num_states()) throw InvalidInput("belief dimension mismatch in stage_payoff");
  check_action(p, action);
  return x.dot(p.rewards().col(action));
}

Belief dirac(int num_states, int k) {
  Belief x = Belief::Zero(num_states);
  x(k) = 1.0;
  return x;
}

Belief uniform_belief(int num_states) {
  return Belief::Constant(num_states, 1.0 / num_states);
}

std::vector<std::int64_t> canonical_key(const Belief& x) {
  std::vector<std::int64_t> key(x.size());
  for (Eigen::Index k = 0; k < x.size(); ++k)
    key[k] = static_cast<std::int64_t>(std::llround(x(k) / kCanonicalGrid));
  return key;
}

Belief canonical_belief(const Belief& x) {
  Belief y(x.size());
  for (Eigen::Index k = 0; k < x.size(); ++k)
    y(k) = static_cast<double>(std::llround(x(k) / kCanonicalGrid)) * kCanonicalGrid;
  return y;
}

std::size_t CanonicalKeyHash::operator()(const std::vector<std::int64_t>& key) const {
  std::size_t h = 0xcbf29ce484222325ULL;
  for (auto v : key) {
    h ^= static_cast<std::size_t>(v) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  }
  return h;
}

LiftedPomdp known_payoff_lift(const Pomdp& p) {
  std::vector<double> levels;
  for (int k = 0; k < p.num_states(); ++k)
    for (int i = 0; i < p.num_actions(); ++i) levels.push_back(p.reward(k, i));
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end(),
                           [](double a, double b) { return std::abs(a - b) <= kCanonicalGrid; }),
               levels.end());
  const int nu = static_cast<int>(levels.size());
  auto level_of = [&](double r) {
    for (int u = 0; u < nu; ++u)
      if (std::abs(levels[u] - r) <= kCanonicalGrid) return u;
    throw InternalError("reward level not found");
  };

  const int nk = p.num_states(), ni = p.num_actions(), ns = p.num_signals();
  std::vector<std::string> names;
  for (int k = 0; k < nk; ++k)
    for (int u = 0; u < nu; ++u) {
      std::ostringstream name;
      name << p.states()[k] << "|" << levels[u];
      names.push_back(name.str());
    }
  std::vector<std::vector<Eigen::MatrixXd>> transition(nk * nu);
  Eigen::MatrixXd reward(nk * nu, ni);
  for (int k = 0; k < nk; ++k)
    for (int u = 0; u < nu; ++u) {
      const int from = k * nu + u;
      for (int i = 0; i < ni; ++i) {
        Eigen::MatrixXd t = Eigen::MatrixXd::Zero(nk * nu, ns);
        const int carried = level_of(p.reward(k, i));
        for (int next = 0; next < nk; ++next) t.row(next * nu + carried) = p.kernel(k, i).row(next);
        transition[from].push_back(std::move(t));
        reward(from, i) = levels[u];
      }
    }
  return LiftedPomdp{Pomdp(std::move(names), p.actions(), p.signals(), std::move(transition),
                           std::move(reward)),
                     std::move(levels)};
}

Belief LiftedPomdp::lift_belief(const Belief& x, int level) const {
  const int nu = static_cast<int>(reward_levels.size());
  Belief y = Belief::Zero(x.size() * nu);
  for (Eigen::Index k = 0; k < x.size(); ++k) y(k * nu + level) = x(k);
  return y;
}

std::vector<int> known_payoffs_partition(const Pomdp& p) {
  const int nk = p.num_states();
  std::vector<int> parent(nk);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  for (int s = 0; s < p.num_signals(); ++s) {
    int first = -1;
    for (int next = 0; next < nk; ++next) {
      bool reachable = false;
      for (int k = 0; k < nk && !reachable; ++k)
        for (int i = 0; i < p.num_actions() && !reachable; ++i)
          reachable = p.q(k, i, next, s) > 0.0;
      if (!reachable) continue;
      if (first < 0) first = next;
      else parent[find(next)] = find(first);
    }
  }
  std::vector<int> cls(nk);
  std::map<int, int> ids;
  for (int k = 0; k < nk; ++k) {
    const int root = find(k);
    auto [it, _] = ids.emplace(root, static_cast<int>(ids.size()));
    cls[k] = it->second;
  }
  for (int a = 0; a < nk; ++a)
    for (int b = a + 1; b < nk; ++b)
      if (cls[a] == cls[b] && (p.rewards().row(a) - p.rewards().row(b)).cwiseAbs().maxCoeff() > 0.0)
        return {};
  return cls;
}

}  // namespace wval
