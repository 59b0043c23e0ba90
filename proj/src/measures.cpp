#include "wval/measures.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>

#include "wval/tree.hpp"

namespace wval {

using nlohmann::json;

namespace {

using Key = std::vector<std::int64_t>;

std::vector<Atom> merge_atoms(const std::vector<Atom>& atoms) {
  std::map<Key, Atom> merged;
  int dim = -1;
  for (const auto& a : atoms) {
    if (dim < 0) dim = static_cast<int>(a.belief.size());
    if (a.belief.size() != dim) throw InvalidInput("atoms have different dimensions");
    if (!(a.mass >= 0.0)) throw InvalidInput("atom mass must be non-negative");
    auto [it, fresh] = merged.try_emplace(canonical_key(a.belief), a);
    if (!fresh) it->second.mass += a.mass;
  }
  std::vector<Atom> out;
  for (auto& [key, a] : merged)
    if (a.mass >= kAtomCutoff) out.push_back(std::move(a));
  return out;
}

}  // namespace

SupportedMeasure::SupportedMeasure(const std::vector<Atom>& atoms) : atoms_(merge_atoms(atoms)) {
  if (atoms_.empty()) throw InvalidInput("measure has no atoms");
  const double total = total_mass();
  if (std::abs(total - 1.0) > kProbabilityTolerance)
    throw InvalidInput("measure masses sum to " + std::to_string(total));
  for (const auto& a : atoms_) {
    if ((a.belief.array() < -kProbabilityTolerance).any() ||
        std::abs(a.belief.sum() - 1.0) > kProbabilityTolerance)
      throw InvalidInput("measure atom is not a belief");
  }
}

SupportedMeasure SupportedMeasure::normalized(const std::vector<Atom>& atoms, double* scale) {
  double total = 0.0;
  for (const auto& a : atoms) total += a.mass;
  if (!(total > 0.0)) throw InvalidInput("measure has zero total mass");
  std::vector<Atom> scaled = atoms;
  for (auto& a : scaled) a.mass /= total;
  if (scale) *scale = total;
  return SupportedMeasure(scaled);
}

SupportedMeasure SupportedMeasure::dirac(const Belief& x) { return SupportedMeasure({{x, 1.0}}); }

double SupportedMeasure::total_mass() const {
  double total = 0.0;
  for (const auto& a : atoms_) total += a.mass;
  return total;
}

json SupportedMeasure::to_json() const {
  json atoms = json::array();
  for (const auto& a : atoms_)
    atoms.push_back({{"belief", std::vector<double>(a.belief.data(), a.belief.data() + a.belief.size())},
                     {"mass", a.mass}});
  return {{"atoms", atoms}};
}

SupportedMeasure SupportedMeasure::from_json(const json& j) {
  try {
    std::vector<Atom> atoms;
    for (const auto& a : j.at("atoms")) {
      const auto b = a.at("belief").get<std::vector<double>>();
      atoms.push_back({Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size())),
                       a.at("mass").get<double>()});
    }
    return SupportedMeasure(atoms);
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("malformed measure: ") + e.what());
  }
}

OccupationMeasure occupation_measure(const Pomdp& p, const Belief& x1, const Strategy& strat,
                                     const Evaluation& e, int horizon, std::size_t budget) {
  if (horizon < 1) throw InvalidInput("horizon must be >= 1");
  std::map<Key, Atom> mass;
  std::vector<double> w(horizon);
  enumerate_plays(
      p, x1, strat, horizon,
      [&](const Play& play, double prob) {
        e.weights(play, w);
        for (int m = 0; m < horizon; ++m) {
          if (w[m] == 0.0) continue;
          auto [it, fresh] = mass.try_emplace(canonical_key(play.beliefs[m]),
                                              Atom{play.beliefs[m], 0.0});
          it->second.mass += prob * w[m];
        }
      },
      budget);
  std::vector<Atom> atoms;
  for (auto& [key, a] : mass) atoms.push_back(std::move(a));
  OccupationMeasure out;
  out.measure = SupportedMeasure::normalized(atoms, &out.total_weight);
  return out;
}

SupportedMeasure image_measure(const Pomdp& p, const SupportedMeasure& mu,
                               const StationaryStrategy& strat) {
  std::vector<Atom> out;
  for (const auto& a : mu.atoms()) {
    check_belief(p, a.belief);
    const Eigen::VectorXd act = strat.act(a.belief);
    if (act.size() != p.num_actions()) throw InvalidInput("strategy action count mismatch");
    for (int i = 0; i < p.num_actions(); ++i) {
      if (act(i) <= 0.0) continue;
      for (const auto& br : belief_transition(p, a.belief, i))
        out.push_back({br.posterior, a.mass * act(i) * br.probability});
    }
  }
  return SupportedMeasure::normalized(out);
}

namespace {

// Successive shortest paths with Johnson potentials on a dense bipartite
// transportation network. Supplies are integers; costs are reals.
class Transport {
 public:
  Transport(std::vector<std::int64_t> supply, std::vector<std::int64_t> demand,
            Eigen::MatrixXd cost)
      : supply_(std::move(supply)),
        demand_(std::move(demand)),
        cost_(std::move(cost)),
        flow_(Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>::Zero(cost_.rows(),
                                                                                 cost_.cols())) {}

  double solve() {
    const int a = static_cast<int>(supply_.size()), b = static_cast<int>(demand_.size());
    // left nodes 0..a-1, right nodes a..a+b-1, source a+b, sink a+b+1
    const int source = a + b, sink = a + b + 1, n = a + b + 2;
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> potential(n, 0.0), dist(n);
    std::vector<int> prev(n);
    std::vector<bool> done(n);
    for (;;) {
      if (std::all_of(supply_.begin(), supply_.end(), [](auto s) { return s == 0; })) break;
      std::fill(dist.begin(), dist.end(), inf);
      std::fill(prev.begin(), prev.end(), -1);
      std::fill(done.begin(), done.end(), false);
      dist[source] = 0.0;
      for (;;) {
        int u = -1;
        for (int v = 0; v < n; ++v)
          if (!done[v] && dist[v] < inf && (u < 0 || dist[v] < dist[u])) u = v;
        if (u < 0) break;
        done[u] = true;
        if (u == source) {
          for (int i = 0; i < a; ++i)
            if (supply_[i] > 0) relax(u, i, 0.0, dist, potential, prev);
        } else if (u < a) {
          for (int j = 0; j < b; ++j) relax(u, a + j, cost_(u, j), dist, potential, prev);
        } else if (u < a + b) {
          const int j = u - a;
          for (int i = 0; i < a; ++i)
            if (flow_(i, j) > 0) relax(u, i, -cost_(i, j), dist, potential, prev);
          if (demand_[j] > 0) relax(u, sink, 0.0, dist, potential, prev);
        }
      }
      if (dist[sink] == inf) throw InternalError("transport network has no augmenting path");
      // bottleneck along source -> i -> j (-> i' -> j' ...) -> sink
      const int last = prev[sink];
      std::int64_t amount = demand_[last - a];
      int v = last;
      while (prev[v] != source) {
        const int u = prev[v];
        if (u >= a) amount = std::min(amount, flow_(v, u - a));
        v = u;
      }
      amount = std::min(amount, supply_[v]);
      supply_[v] -= amount;
      demand_[last - a] -= amount;
      for (v = last; prev[v] != source; v = prev[v]) {
        const int u = prev[v];
        if (u < a)
          flow_(u, v - a) += amount;
        else
          flow_(v, u - a) -= amount;
      }
      for (int u = 0; u < n; ++u)
        if (dist[u] < inf) potential[u] += dist[u];
    }
    double total = 0.0;
    for (Eigen::Index i = 0; i < flow_.rows(); ++i)
      for (Eigen::Index j = 0; j < flow_.cols(); ++j)
        if (flow_(i, j) > 0) total += static_cast<double>(flow_(i, j)) * cost_(i, j);
    return total;
  }

 private:
  static void relax(int u, int v, double c, std::vector<double>& dist,
                    const std::vector<double>& potential, std::vector<int>& prev) {
    // reduced costs are non-negative up to rounding
    const double reduced = std::max(0.0, c + potential[u] - potential[v]);
    if (dist[u] + reduced < dist[v]) {
      dist[v] = dist[u] + reduced;
      prev[v] = u;
    }
  }

  std::vector<std::int64_t> supply_, demand_;
  Eigen::MatrixXd cost_;
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> flow_;
};

std::vector<std::int64_t> integer_masses(const SupportedMeasure& mu) {
  const auto scale = static_cast<std::int64_t>(kTransportScale);
  std::vector<std::int64_t> out;
  std::int64_t total = 0;
  std::size_t largest = 0;
  for (std::size_t j = 0; j < mu.size(); ++j) {
    out.push_back(std::llround(mu.atoms()[j].mass / mu.total_mass() * kTransportScale));
    total += out.back();
    if (mu.atoms()[j].mass > mu.atoms()[largest].mass) largest = j;
  }
  out[largest] += scale - total;
  return out;
}

}  // namespace

double kr_distance(const SupportedMeasure& mu, const SupportedMeasure& nu) {
  if (mu.size() == 0 || nu.size() == 0) throw InvalidInput("measure has no atoms");
  if (mu.dimension() != nu.dimension()) throw InvalidInput("measures live on different K");
  Eigen::MatrixXd cost(mu.size(), nu.size());
  for (std::size_t i = 0; i < mu.size(); ++i)
    for (std::size_t j = 0; j < nu.size(); ++j)
      cost(i, j) = (mu.atoms()[i].belief - nu.atoms()[j].belief).lpNorm<1>();
  Transport t(integer_masses(mu), integer_masses(nu), std::move(cost));
  return t.solve() / kTransportScale;
}

double invariance_residual(const Pomdp& p, const SupportedMeasure& mu,
                           const StationaryStrategy& strat) {
  return kr_distance(mu, image_measure(p, mu, strat));
}

Disintegration disintegrate(const Pomdp& p, const Belief& x1, const Strategy& strat,
                            const Evaluation& e, int horizon, std::size_t budget) {
  if (horizon < 1) throw InvalidInput("horizon must be >= 1");
  struct Node {
    int parent = -1;
    ObservedStep step;
    Belief belief;
    double theta = 0.0;    // weight of the stage following this history
    double shifted = 0.0;  // weight of the stage that produced its last pair
    std::vector<std::pair<int, int>> children;
  };
  const int ns = p.num_signals();
  std::vector<Node> nodes(1);
  nodes[0].belief = x1;
  std::vector<double> w(horizon);
  enumerate_plays(
      p, x1, strat, horizon,
      [&](const Play& play, double prob) {
        e.weights(play, w);
        int node = 0;
        for (int m = 0; m < horizon; ++m) {
          nodes[node].theta += prob * w[m];
          const int code = play.actions[m] * ns + play.signals[m];
          auto& ch = nodes[node].children;
          auto it = std::find_if(ch.begin(), ch.end(), [&](auto& c) { return c.first == code; });
          int next;
          if (it == ch.end()) {
            next = static_cast<int>(nodes.size());
            nodes[node].children.emplace_back(code, next);
            Node fresh;
            fresh.parent = node;
            fresh.step = {play.actions[m], play.signals[m]};
            fresh.belief = play.beliefs[m + 1];
            nodes.push_back(std::move(fresh));
          } else {
            next = it->second;
          }
          nodes[next].shifted += prob * w[m];
          node = next;
        }
      },
      budget);

  Disintegration out;
  std::vector<Atom> shifted_atoms;
  for (const auto& n : nodes) {
    out.total_weight += n.theta;
    out.history_distance += std::abs(n.theta - n.shifted);
    if (n.shifted > 0.0) shifted_atoms.push_back({n.belief, n.shifted});
  }
  if (!(out.total_weight > 0.0)) throw InvalidInput("evaluation puts no weight within the horizon");

  auto history_of = [&](int id) {
    ObservedHistory h;
    for (; nodes[id].parent >= 0; id = nodes[id].parent) h.push_back(nodes[id].step);
    std::reverse(h.begin(), h.end());
    return h;
  };
  std::map<Key, DisintegrationGroup> groups;
  for (int id = 0; id < static_cast<int>(nodes.size()); ++id) {
    const auto& n = nodes[id];
    if (n.theta <= 0.0) continue;
    auto [it, fresh] = groups.try_emplace(canonical_key(n.belief));
    if (fresh) it->second.belief = n.belief;
    it->second.weight += n.theta;
    auto h = history_of(id);
    Eigen::VectorXd act = strategy_action(strat, h, n.belief);
    it->second.entries.push_back({std::move(h), n.theta, std::move(act)});
  }
  std::vector<Atom> occupation_atoms;
  for (auto& [key, g] : groups) {
    Eigen::VectorXd act = Eigen::VectorXd::Zero(p.num_actions());
    for (auto& entry : g.entries) {
      entry.mass /= g.weight;
      act += entry.mass * entry.action;
    }
    occupation_atoms.push_back({g.belief, g.weight});
    g.weight /= out.total_weight;
    out.induced.support.push_back(g.belief);
    out.induced.actions.push_back(act);
    out.groups.push_back(std::move(g));
  }
  out.occupation = SupportedMeasure::normalized(occupation_atoms);
  out.shifted = SupportedMeasure::normalized(shifted_atoms);
  out.history_distance /= out.total_weight;
  return out;
}

}  // namespace wval
