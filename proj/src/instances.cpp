#include "wval/instances.hpp"

namespace wval::instances {

namespace {

using Kernel = std::vector<std::vector<Eigen::MatrixXd>>;

Kernel empty_kernel(int nk, int ni, int ns) {
  return Kernel(nk, std::vector<Eigen::MatrixXd>(ni, Eigen::MatrixXd::Zero(nk, ns)));
}

}  // namespace

Pomdp matching_frozen() {
  Kernel q = empty_kernel(2, 2, 1);
  for (int k = 0; k < 2; ++k)
    for (int i = 0; i < 2; ++i) q[k][i](k, 0) = 1.0;
  Eigen::MatrixXd r(2, 2);
  r << 1, 0, 0, 1;
  return Pomdp({"alpha", "beta"}, {"alpha", "beta"}, {"s0"}, std::move(q), r);
}

Pomdp matching_revealed() {
  Kernel q = empty_kernel(2, 2, 2);
  for (int k = 0; k < 2; ++k)
    for (int i = 0; i < 2; ++i) q[k][i](k, k) = 1.0;
  Eigen::MatrixXd r(2, 2);
  r << 1, 0, 0, 1;
  return Pomdp({"alpha", "beta"}, {"alpha", "beta"}, {"alpha", "beta"}, std::move(q), r);
}

Pomdp uniform_redraw() {
  Kernel q = empty_kernel(2, 1, 2);
  for (int k = 0; k < 2; ++k)
    for (int next = 0; next < 2; ++next) q[k][0](next, k) = 0.5;
  Eigen::MatrixXd r(2, 1);
  r << 1, 0;
  return Pomdp({"alpha", "beta"}, {"wait"}, {"was_alpha", "was_beta"}, std::move(q), r);
}

Pomdp blind_switch() {
  Kernel q = empty_kernel(2, 2, 1);
  for (int k = 0; k < 2; ++k) {
    q[k][0](k, 0) = 1.0;
    q[k][1](1 - k, 0) = 1.0;
  }
  Eigen::MatrixXd r(2, 2);
  r << 0, 0, 1, 1;
  return Pomdp({"alpha", "beta"}, {"T", "B"}, {"s0"}, std::move(q), r);
}

Pomdp revealed_identity(int num_states) {
  return revealed_chain(Eigen::MatrixXd::Identity(num_states, num_states),
                        Eigen::VectorXd::LinSpaced(num_states, 0.0, 1.0));
}

Pomdp revealed_chain(const Eigen::MatrixXd& transition, const Eigen::VectorXd& reward) {
  const int n = static_cast<int>(transition.rows());
  Kernel q = empty_kernel(n, 1, n);
  std::vector<std::string> names;
  for (int k = 0; k < n; ++k) {
    names.push_back("k" + std::to_string(k));
    for (int next = 0; next < n; ++next) q[k][0](next, next) = transition(k, next);
  }
  Eigen::MatrixXd r = reward;
  return Pomdp(names, {"wait"}, names, std::move(q), r);
}

Pomdp constant_reward(double value, int num_actions) {
  Kernel q = empty_kernel(1, num_actions, 1);
  std::vector<std::string> actions;
  for (int i = 0; i < num_actions; ++i) {
    q[0][i](0, 0) = 1.0;
    actions.push_back("a" + std::to_string(i));
  }
  return Pomdp({"only"}, actions, {"s0"}, std::move(q),
               Eigen::MatrixXd::Constant(1, num_actions, value));
}

}  // namespace wval::instances
