#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "wval/model.hpp"
#include "wval/strategies.hpp"

namespace wval {

/// Finite Markov chain with a per-state payoff and an initial law.
template <class Scalar = double>
struct MarkovChain {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Matrix transition;
  Vector payoff;
  Vector initial;

  int size() const { return static_cast<int>(transition.rows()); }

  void validate() const {
    const Eigen::Index n = transition.rows();
    if (n == 0 || transition.cols() != n || payoff.size() != n || initial.size() != n)
      throw InvalidInput("chain dimensions do not match");
    for (Eigen::Index u = 0; u < n; ++u) {
      if ((transition.row(u).array() < Scalar(0)).any())
        throw InvalidInput("chain row " + std::to_string(u) + " has a negative entry");
      const Scalar dev = transition.row(u).sum() - Scalar(1);
      if (std::abs(static_cast<double>(dev)) > kProbabilityTolerance)
        throw InvalidInput("chain row " + std::to_string(u) + " sums off by " +
                           std::to_string(static_cast<double>(dev)));
      if (payoff(u) < Scalar(0) || payoff(u) > Scalar(1))
        throw InvalidInput("chain payoff outside [0,1]");
    }
    if (std::abs(static_cast<double>(initial.sum() - Scalar(1))) > kProbabilityTolerance ||
        (initial.array() < Scalar(0)).any())
      throw InvalidInput("chain initial law is not a probability vector");
  }
};

template <class Scalar = double>
struct ErgodicDecomposition {
  using Vector = typename MarkovChain<Scalar>::Vector;

  std::vector<int> transient;
  std::vector<std::vector<int>> classes;
  /// Full-length vectors, each supported on its class.
  std::vector<Vector> stationary;
  Vector class_values;
  Vector absorption;

  int num_classes() const { return static_cast<int>(classes.size()); }
};

inline constexpr double kEdgeThreshold = 1e-12;

/// Chain on K x M (index k * |M| + m) induced by a transducer.
template <class Scalar = double>
MarkovChain<Scalar> product_chain(const Pomdp& p, const Transducer& t, const Belief& x1) {
  check_belief(p, x1);
  if (t.num_actions != p.num_actions() || t.num_signals != p.num_signals())
    throw InvalidInput("transducer alphabets do not match the POMDP");
  const int nk = p.num_states(), nm = t.memory_size;
  MarkovChain<Scalar> c;
  c.transition = MarkovChain<Scalar>::Matrix::Zero(nk * nm, nk * nm);
  c.payoff.resize(nk * nm);
  c.initial = MarkovChain<Scalar>::Vector::Zero(nk * nm);
  for (int k = 0; k < nk; ++k) {
    c.initial(k * nm + t.initial) = static_cast<Scalar>(x1(k));
    for (int m = 0; m < nm; ++m) {
      const int u = k * nm + m;
      const int i = t.act[m];
      c.payoff(u) = static_cast<Scalar>(p.reward(k, i));
      for (int next = 0; next < nk; ++next)
        for (int s = 0; s < p.num_signals(); ++s)
          c.transition(u, next * nm + t.next(m, i, s)) += static_cast<Scalar>(p.q(k, i, next, s));
    }
  }
  return c;
}

namespace detail {

/// Tarjan's algorithm without recursion; returns a component id per vertex.
inline std::vector<int> strongly_connected(const std::vector<std::vector<int>>& adj) {
  const int n = static_cast<int>(adj.size());
  std::vector<int> index(n, -1), low(n, 0), comp(n, -1), stack;
  std::vector<bool> on_stack(n, false);
  int counter = 0, ncomp = 0;
  struct Frame {
    int v;
    std::size_t edge;
  };
  for (int root = 0; root < n; ++root) {
    if (index[root] >= 0) continue;
    std::vector<Frame> dfs{{root, 0}};
    index[root] = low[root] = counter++;
    stack.push_back(root);
    on_stack[root] = true;
    while (!dfs.empty()) {
      Frame& f = dfs.back();
      if (f.edge < adj[f.v].size()) {
        const int w = adj[f.v][f.edge++];
        if (index[w] < 0) {
          index[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack[w] = true;
          dfs.push_back({w, 0});
        } else if (on_stack[w]) {
          low[f.v] = std::min(low[f.v], index[w]);
        }
        continue;
      }
      const int v = f.v;
      dfs.pop_back();
      if (!dfs.empty()) low[dfs.back().v] = std::min(low[dfs.back().v], low[v]);
      if (low[v] == index[v]) {
        int w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          comp[w] = ncomp;
        } while (w != v);
        ++ncomp;
      }
    }
  }
  return comp;
}

}  // namespace detail

/// Recurrent classes (closed SCCs of the support graph), stationary laws,
/// class payoffs and absorption probabilities from the initial law.
template <class Scalar>
ErgodicDecomposition<Scalar> ergodic_decomposition(const MarkovChain<Scalar>& c) {
  using Matrix = typename MarkovChain<Scalar>::Matrix;
  using Vector = typename MarkovChain<Scalar>::Vector;
  c.validate();
  const int n = c.size();
  std::vector<std::vector<int>> adj(n);
  for (int u = 0; u < n; ++u)
    for (int v = 0; v < n; ++v)
      if (static_cast<double>(c.transition(u, v)) > kEdgeThreshold) adj[u].push_back(v);
  const auto comp = detail::strongly_connected(adj);
  const int ncomp = n == 0 ? 0 : *std::max_element(comp.begin(), comp.end()) + 1;
  std::vector<bool> closed(ncomp, true);
  for (int u = 0; u < n; ++u)
    for (int v : adj[u])
      if (comp[v] != comp[u]) closed[comp[u]] = false;

  ErgodicDecomposition<Scalar> d;
  std::vector<int> class_of(n, -1), comp_class(ncomp, -1);
  for (int u = 0; u < n; ++u) {
    if (!closed[comp[u]]) {
      d.transient.push_back(u);
      continue;
    }
    if (comp_class[comp[u]] < 0) {
      comp_class[comp[u]] = d.num_classes();
      d.classes.emplace_back();
    }
    class_of[u] = comp_class[comp[u]];
    d.classes[class_of[u]].push_back(u);
  }

  const int nc = d.num_classes();
  d.class_values.resize(nc);
  for (int k = 0; k < nc; ++k) {
    const auto& cls = d.classes[k];
    const int sz = static_cast<int>(cls.size());
    // pi (P - I) = 0 with the last equation replaced by sum(pi) = 1
    Matrix a(sz, sz);
    for (int r = 0; r < sz; ++r)
      for (int col = 0; col < sz; ++col)
        a(r, col) = c.transition(cls[col], cls[r]) - (r == col ? Scalar(1) : Scalar(0));
    a.row(sz - 1).setOnes();
    Vector b = Vector::Zero(sz);
    b(sz - 1) = Scalar(1);
    Eigen::FullPivLU<Matrix> lu(a);
    if (!lu.isInvertible())
      throw InternalError("singular stationary system for class " + std::to_string(k));
    const Vector pi = lu.solve(b);
    Vector full = Vector::Zero(n);
    Scalar value(0);
    for (int r = 0; r < sz; ++r) {
      full(cls[r]) = pi(r);
      value += pi(r) * c.payoff(cls[r]);
    }
    d.stationary.push_back(std::move(full));
    d.class_values(k) = value;
  }

  d.absorption = Vector::Zero(nc);
  for (int u = 0; u < n; ++u)
    if (class_of[u] >= 0) d.absorption(class_of[u]) += c.initial(u);
  const int nt = static_cast<int>(d.transient.size());
  if (nt > 0 && nc > 0) {
    // (I - Q) H = R, H(t, k) = P_t(absorbed in class k)
    Matrix iq = Matrix::Identity(nt, nt);
    Matrix r = Matrix::Zero(nt, nc);
    for (int a = 0; a < nt; ++a) {
      for (int b = 0; b < nt; ++b) iq(a, b) -= c.transition(d.transient[a], d.transient[b]);
      for (int v = 0; v < n; ++v)
        if (class_of[v] >= 0) r(a, class_of[v]) += c.transition(d.transient[a], v);
    }
    Eigen::FullPivLU<Matrix> lu(iq);
    if (!lu.isInvertible()) throw InternalError("singular absorption system");
    const Matrix h = lu.solve(r);
    for (int a = 0; a < nt; ++a) d.absorption += c.initial(d.transient[a]) * h.row(a).transpose();
  }
  return d;
}

/// Law of u_{l+1}: initial times P^l.
template <class Scalar>
typename MarkovChain<Scalar>::Vector step_distribution(const MarkovChain<Scalar>& c, int l) {
  if (l < 0) throw InvalidInput("step count must be >= 0");
  typename MarkovChain<Scalar>::Vector y = c.initial;
  for (int j = 0; j < l; ++j) y = (y.transpose() * c.transition).transpose();
  return y;
}

inline constexpr int kMixingCap = 10'000;

/// Smallest l such that the transient mass after l steps is below tol and,
/// from every state of every class, the mean payoff of the first l stages is
/// within tol of the class value. Returns cap when never reached.
template <class Scalar>
int mixing_threshold(const MarkovChain<Scalar>& c, const ErgodicDecomposition<Scalar>& d,
                     double tol = 0.01, int cap = kMixingCap) {
  using Vector = typename MarkovChain<Scalar>::Vector;
  Vector y = c.initial;
  Vector v = c.payoff;  // P^j f
  Vector sum = Vector::Zero(c.size());
  for (int l = 1; l <= cap; ++l) {
    y = (y.transpose() * c.transition).transpose();
    sum += v;
    v = c.transition * v;
    double transient = 0.0;
    for (int u : d.transient) transient += static_cast<double>(y(u));
    if (transient >= tol) continue;
    bool close = true;
    for (int k = 0; k < d.num_classes() && close; ++k)
      for (int u : d.classes[k])
        if (std::abs(static_cast<double>(sum(u) / Scalar(l) - d.class_values(k))) > tol) {
          close = false;
          break;
        }
    if (close) return l;
  }
  return cap;
}

/// E[liminf of average payoffs] under a transducer: sum_d absorption_d gamma_d.
template <class Scalar = double>
Scalar liminf_value_transducer(const Pomdp& p, const Belief& x1, const Transducer& t) {
  const auto c = product_chain<Scalar>(p, t, x1);
  const auto d = ergodic_decomposition(c);
  return d.absorption.dot(d.class_values);
}

}  // namespace wval
