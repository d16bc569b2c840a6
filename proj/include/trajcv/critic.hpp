#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "trajcv/environment.hpp"
#include "trajcv/q_function.hpp"

namespace trajcv {

struct FitReport {
  double mse = 0.0;
  bool rank_deficient = false;  // solved by minimum-norm least squares
  int samples = 0;
};

// Quadratic model of the cost-to-go over the input x = (state values[, t/h]):
//   v(x) = c0 + b^T x + 1/2 x^T M x.
// Beyond the horizon the value is 0 by convention.
class ValueModel {
 public:
  ValueModel() = default;
  ValueModel(int state_dim, bool include_time, int horizon);

  double value(const State& s) const;
  VectorXd gradient(const State& s) const;  // w.r.t. state values
  MatrixXd hessian(const State& s) const;   // w.r.t. state values

  int state_dim() const { return state_dim_; }
  int input_dim() const { return state_dim_ + (include_time_ ? 1 : 0); }
  bool include_time() const { return include_time_; }
  int horizon() const { return horizon_; }
  int coefficient_count() const;

  VectorXd input(const State& s) const;
  VectorXd monomials(const State& s) const;
  void set_coefficients(const VectorXd& w);  // in monomial order
  VectorXd coefficients() const;

  double c0 = 0.0;
  VectorXd b;
  MatrixXd M;

  void write(std::ostream& os) const;
  static ValueModel read(std::istream& is);

 private:
  bool beyond_horizon(const State& s) const { return s.time_index > horizon_; }
  int state_dim_ = 0;
  bool include_time_ = false;
  int horizon_ = 1;
};

// Deterministic affine next-state model: next = W (values, 1) + U a.
class DynamicsModel {
 public:
  DynamicsModel() = default;
  DynamicsModel(int state_dim, int action_dim);

  State predict(const State& s, const VectorXd& a) const;
  // d next / d a, shape state_dim x action_dim.
  const MatrixXd& action_jacobian() const { return U; }

  int state_dim() const { return static_cast<int>(W.rows()); }
  int action_dim() const { return static_cast<int>(U.cols()); }

  MatrixXd W;
  MatrixXd U;

  void write(std::ostream& os) const;
  static DynamicsModel read(std::istream& is);
};

ValueModel fit_value(const std::vector<std::pair<State, double>>& data, int state_dim, bool include_time, int horizon,
                     FitReport* report = nullptr);

struct Transition {
  State state;
  VectorXd action;
  State next;
};
DynamicsModel fit_dynamics(const std::vector<Transition>& data, FitReport* report = nullptr);

// (State, C_{t:T}) pairs and transitions from a batch of rollouts.
std::vector<std::pair<State, double>> return_samples(const std::vector<Trajectory>& trajs);
// Consecutive in-trajectory pairs (S_t, A_t, S_{t+1}).
std::vector<Transition> transition_samples(const std::vector<Trajectory>& trajs);

enum class QVariant { dyn, next, next_gn, diff, diff_gn };
QVariant parse_qvariant(const std::string& name);
std::string to_string(QVariant v);

// c(s, a) + v(d(s, a))
double q_dyn(const ValueModel& v, const DynamicsModel& d, const CostFn& c, const State& s, const VectorXd& a);

// Quadratic expansion of a Q approximator around m = mu_theta(s).
QuadraticExpansion build_quadratic_q(QVariant variant, const ValueModel& v, const DynamicsModel& d, const CostFn& c,
                                     const State& s, const GaussianPolicy& policy);

// A QFunction view over fitted models for a fixed policy.
class ModelQFunction final : public QFunction {
 public:
  ModelQFunction(QVariant variant, ValueModel v, DynamicsModel d, const CostFn& cost, GaussianPolicy policy);

  double value(const State& s, const Action& a) const override;
  std::optional<QuadraticExpansion> quadratic(const State& s) const override;

 private:
  QVariant variant_;
  ValueModel v_;
  DynamicsModel d_;
  const CostFn& cost_;
  GaussianPolicy policy_;
};

}  // namespace trajcv
