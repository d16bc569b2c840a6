#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "trajcv/environment.hpp"

namespace trajcv {

struct TabularMDP {
  int n_states = 0;
  int n_actions = 0;
  std::vector<MatrixXd> transition;  // transition[s](a, s') = P(s' | s, a)
  MatrixXd cost;                     // cost(s, a)
  VectorXd p1;
  int horizon = 1;

  void validate() const;
  double p(int s, int a, int s_next) const { return transition[s](a, s_next); }
};

class TabularEnv final : public Environment, private CostFn {
 public:
  explicit TabularEnv(TabularMDP mdp);

  int state_dim() const override { return 1; }
  ActionSpace action_space() const override { return {true, 0, mdp_.n_actions}; }
  int horizon() const override { return mdp_.horizon; }
  State initial_state(Rng& rng) const override;
  StepResult step(const State& s, const Action& a, Rng& rng) const override;
  const CostFn& cost() const override { return *this; }
  std::unique_ptr<Environment> perturbed(double) const override { return std::make_unique<TabularEnv>(mdp_); }

  const TabularMDP& mdp() const { return mdp_; }

 private:
  double value(const State& s, const Action& a) const override;
  TabularMDP mdp_;
};

inline constexpr double kDefaultEnumerationBudget = 1e7;

// Depth-first visit of every positive-probability trajectory.
void for_each_trajectory(const TabularMDP& mdp, const SoftmaxPolicy& policy,
                         const std::function<void(const Trajectory&, double)>& visit,
                         double budget = kDefaultEnumerationBudget);

std::vector<std::pair<Trajectory, double>> enumerate_trajectories(const TabularMDP& mdp, const SoftmaxPolicy& policy,
                                                                  double budget = kDefaultEnumerationBudget);

void check_enumeration_budget(const TabularMDP& mdp, double budget);

// J(pi) and grad J(pi) as probability-weighted sums over all trajectories.
double enumerated_objective(const TabularMDP& mdp, const SoftmaxPolicy& policy,
                            double budget = kDefaultEnumerationBudget);
VectorXd exact_policy_gradient(const TabularMDP& mdp, const SoftmaxPolicy& policy,
                               double budget = kDefaultEnumerationBudget);

// q^pi by backward induction: q[t](s, a) for 0-based t, with v_{h+1} = 0.
std::vector<MatrixXd> q_pi(const TabularMDP& mdp, const SoftmaxPolicy& policy);
std::vector<VectorXd> v_pi(const TabularMDP& mdp, const SoftmaxPolicy& policy);

// Marginal state distribution at every 0-based step.
std::vector<VectorXd> state_marginals(const TabularMDP& mdp, const SoftmaxPolicy& policy);

struct RandomMdpOptions {
  int n_states = 3;
  int n_actions = 2;
  int horizon = 3;
  bool deterministic = false;
};
TabularMDP random_tabular_mdp(const RandomMdpOptions& opt, Rng& rng);
SoftmaxPolicy random_softmax_policy(int n_states, int n_actions, double scale, Rng& rng);

}  // namespace trajcv
