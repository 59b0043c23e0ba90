#pragma once

#include <vector>

#include <json.hpp>

#include "wval/evaluations.hpp"
#include "wval/model.hpp"
#include "wval/strategies.hpp"

namespace wval {

struct Atom {
  Belief belief;
  double mass = 0.0;
};

/// Finitely supported probability measure on beliefs. Atoms are merged on
/// the canonical belief grid, pruned below 1e-12 and kept in key order.
class SupportedMeasure {
 public:
  SupportedMeasure() = default;
  /// Throws InvalidInput unless the masses sum to 1 within 1e-9.
  explicit SupportedMeasure(const std::vector<Atom>& atoms);

  /// Rescales positive masses to total 1 first; `scale` receives the factor.
  static SupportedMeasure normalized(const std::vector<Atom>& atoms, double* scale = nullptr);
  static SupportedMeasure dirac(const Belief& x);

  const std::vector<Atom>& atoms() const { return atoms_; }
  std::size_t size() const { return atoms_.size(); }
  int dimension() const { return atoms_.empty() ? 0 : static_cast<int>(atoms_[0].belief.size()); }
  double total_mass() const;

  nlohmann::json to_json() const;
  static SupportedMeasure from_json(const nlohmann::json& j);

 private:
  std::vector<Atom> atoms_;
};

inline constexpr double kAtomCutoff = 1e-12;

/// Weight-theta_m mass on the belief x_m, averaged over plays and divided by
/// the expected total weight (reported).
struct OccupationMeasure {
  SupportedMeasure measure;
  double total_weight = 0.0;
};
OccupationMeasure occupation_measure(const Pomdp& p, const Belief& x1, const Strategy& strat,
                                     const Evaluation& e, int horizon,
                                     std::size_t budget = kDefaultNodeBudget);

/// One-step image of mu when actions follow a stationary strategy.
SupportedMeasure image_measure(const Pomdp& p, const SupportedMeasure& mu,
                               const StationaryStrategy& strat);

/// Kantorovich-Rubinstein distance for the L1 ground metric, by min-cost
/// flow on integer masses scaled by 1e12.
double kr_distance(const SupportedMeasure& mu, const SupportedMeasure& nu);

inline constexpr double kTransportScale = 1e12;

double invariance_residual(const Pomdp& p, const SupportedMeasure& mu,
                           const StationaryStrategy& strat);

struct DisintegrationEntry {
  ObservedHistory history;
  double mass = 0.0;  // conditional on the group
  Eigen::VectorXd action;
};

struct DisintegrationGroup {
  Belief belief;
  double weight = 0.0;  // normalized occupation mass of the group
  std::vector<DisintegrationEntry> entries;
};

/// Observed histories weighted by theta (history of length m-1 gets theta_m)
/// grouped by end belief, the stationary strategy they induce, the end-belief
/// measures of the weighted and one-step shifted history measures, and the L1
/// distance between those history measures.
struct Disintegration {
  std::vector<DisintegrationGroup> groups;
  StationaryStrategy induced;
  SupportedMeasure occupation;
  SupportedMeasure shifted;
  double history_distance = 0.0;
  double total_weight = 0.0;
};
Disintegration disintegrate(const Pomdp& p, const Belief& x1, const Strategy& strat,
                            const Evaluation& e, int horizon,
                            std::size_t budget = kDefaultNodeBudget);

}  // namespace wval
