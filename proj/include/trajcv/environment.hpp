#pragma once

#include <memory>

#include "trajcv/common.hpp"
#include "trajcv/policy.hpp"
#include "trajcv/rng.hpp"

namespace trajcv {

// Known instantaneous cost c(s, a) with action derivatives, as required by the
// quadratic Q approximators.
class CostFn {
 public:
  virtual ~CostFn() = default;
  virtual double value(const State& s, const Action& a) const = 0;
  virtual VectorXd grad_action(const State& s, const VectorXd& a) const;
  virtual MatrixXd hess_action(const State& s, const VectorXd& a) const;
  virtual bool quadratic_in_action() const { return false; }
};

struct StepResult {
  State next;
  double cost = 0.0;
  bool done = false;
};

// Finite-horizon, undiscounted MDP. Implementations are immutable; step is a
// pure function of (state, action, rng).
class Environment {
 public:
  virtual ~Environment() = default;

  virtual int state_dim() const = 0;
  virtual ActionSpace action_space() const = 0;
  virtual int horizon() const = 0;
  virtual State initial_state(Rng& rng) const = 0;
  virtual StepResult step(const State& s, const Action& a, Rng& rng) const = 0;
  virtual const CostFn& cost() const = 0;
  // Same task with physical parameters scaled by factor (biased simulator).
  virtual std::unique_ptr<Environment> perturbed(double factor) const = 0;

 protected:
  void check_step_args(const State& s, const Action& a) const;
};

// Roll the policy out for at most h steps (h <= horizon; h <= 0 means the
// environment horizon). Scores are filled from policy.score.
Trajectory rollout(const Environment& env, const Policy& policy, Rng& rng, int h = 0);

// Continue from a given state, optionally forcing the first action.
Trajectory rollout_from(const Environment& env, const Policy& policy, const State& start, const Action* first_action,
                        Rng& rng);

}  // namespace trajcv
