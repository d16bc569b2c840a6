#include "trajcv/cartpole.hpp"

#include <cmath>

namespace trajcv {

void CartPoleConfig::validate() const {
  if (!(dt > 0.0)) throw InputError("cart-pole: dt must be positive");
  if (!(threshold > 0.0)) throw InputError("cart-pole: threshold must be positive");
  if (!(mass_cart > 0.0) || !(mass_pole > 0.0) || !(half_length > 0.0)) throw InputError("cart-pole: masses and length must be positive");
  if (horizon < 1) throw InputError("cart-pole: horizon must be positive");
  if (start_offset < 0.0) throw InputError("cart-pole: start offset must be non-negative");
}

CartPole::CartPole(CartPoleConfig cfg) : cfg_(cfg) { cfg_.validate(); }

State CartPole::initial_state(Rng& rng) const {
  std::uniform_real_distribution<double> u(-cfg_.start_offset, cfg_.start_offset);
  State s;
  s.values = VectorXd(4);
  for (int i = 0; i < 4; ++i) s.values(i) = u(rng);
  s.time_index = 1;
  return s;
}

VectorXd CartPole::integrate(const VectorXd& x, double force) const {
  const double total = cfg_.mass_cart + cfg_.mass_pole;
  const double pml = cfg_.mass_pole * cfg_.half_length;
  const double theta = x(2), theta_dot = x(3);
  const double c = std::cos(theta), s = std::sin(theta);
  const double temp = (force + pml * theta_dot * theta_dot * s) / total;
  const double theta_acc =
      (cfg_.gravity * s - c * temp) / (cfg_.half_length * (4.0 / 3.0 - cfg_.mass_pole * c * c / total));
  const double x_acc = temp - pml * theta_acc * c / total;

  VectorXd next(4);
  next(1) = x(1) + cfg_.dt * x_acc;
  next(0) = x(0) + cfg_.dt * next(1);
  next(3) = x(3) + cfg_.dt * theta_acc;
  next(2) = x(2) + cfg_.dt * next(3);
  return next;
}

bool CartPole::upright(const VectorXd& x) const { return std::abs(x(2)) <= cfg_.threshold; }

StepResult CartPole::step(const State& s, const Action& a, Rng&) const {
  check_step_args(s, a);
  StepResult r;
  r.cost = upright(s.values) ? -1.0 : 0.0;
  r.next.values = integrate(s.values, cfg_.force_scale * a.values(0));
  r.next.time_index = s.time_index + 1;
  if (!r.next.values.allFinite()) throw NumericError("cart-pole: non-finite state", s.time_index);
  r.done = !upright(r.next.values) || r.next.time_index > cfg_.horizon;
  return r;
}

std::unique_ptr<Environment> CartPole::perturbed(double factor) const {
  CartPoleConfig c = cfg_;
  c.mass_cart *= factor;
  c.mass_pole *= factor;
  c.half_length *= factor;
  return std::make_unique<CartPole>(c);
}

double CartPole::value(const State& s, const Action&) const { return upright(s.values) ? -1.0 : 0.0; }

VectorXd CartPole::grad_action(const State&, const VectorXd&) const { return VectorXd::Zero(1); }

MatrixXd CartPole::hess_action(const State&, const VectorXd&) const { return MatrixXd::Zero(1, 1); }

}  // namespace trajcv
