#pragma once

#include "trajcv/environment.hpp"

namespace trajcv {

struct CartPoleConfig {
  double mass_cart = 1.0;
  double mass_pole = 0.1;
  double half_length = 0.5;
  double gravity = 9.8;
  double dt = 0.02;
  double threshold = 0.2;     // rad
  int horizon = 200;
  double start_offset = 0.01;  // half-width of the uniform start perturbation
  double force_scale = 10.0;   // force = force_scale * action

  void validate() const;
};

// Continuous-force cart-pole. State (x, x_dot, angle, angle_dot). The reward
// is the indicator of the pole being within the angle threshold; it is stored
// as cost -1. The episode ends on the step whose successor leaves the
// threshold.
class CartPole final : public Environment, private CostFn {
 public:
  explicit CartPole(CartPoleConfig cfg);

  int state_dim() const override { return 4; }
  ActionSpace action_space() const override { return {false, 1, 0}; }
  int horizon() const override { return cfg_.horizon; }
  State initial_state(Rng& rng) const override;
  StepResult step(const State& s, const Action& a, Rng& rng) const override;
  const CostFn& cost() const override { return *this; }
  std::unique_ptr<Environment> perturbed(double factor) const override;

  // Deterministic one-step integration (semi-implicit Euler).
  VectorXd integrate(const VectorXd& x, double force) const;
  bool upright(const VectorXd& x) const;
  const CartPoleConfig& config() const { return cfg_; }

 private:
  double value(const State& s, const Action& a) const override;
  VectorXd grad_action(const State& s, const VectorXd& a) const override;
  MatrixXd hess_action(const State& s, const VectorXd& a) const override;
  bool quadratic_in_action() const override { return true; }

  CartPoleConfig cfg_;
};

}  // namespace trajcv
