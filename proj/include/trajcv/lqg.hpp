#pragma once

#include <vector>

#include "trajcv/environment.hpp"
#include "trajcv/q_function.hpp"

namespace trajcv {

struct LqgConfig {
  MatrixXd A, B;
  MatrixXd W;       // process noise covariance
  MatrixXd Q, R;    // cost s^T Q s + a^T R a
  MatrixXd init_cov;
  int horizon = 50;

  void validate() const;
  int state_dim() const { return static_cast<int>(A.rows()); }
  int action_dim() const { return static_cast<int>(B.cols()); }
};

class Lqg final : public Environment, private CostFn {
 public:
  explicit Lqg(LqgConfig cfg);

  int state_dim() const override { return cfg_.state_dim(); }
  ActionSpace action_space() const override { return {false, cfg_.action_dim(), 0}; }
  int horizon() const override { return cfg_.horizon; }
  State initial_state(Rng& rng) const override;
  StepResult step(const State& s, const Action& a, Rng& rng) const override;
  const CostFn& cost() const override { return *this; }
  std::unique_ptr<Environment> perturbed(double factor) const override;

  const LqgConfig& config() const { return cfg_; }

 private:
  double value(const State& s, const Action& a) const override;
  VectorXd grad_action(const State& s, const VectorXd& a) const override;
  MatrixXd hess_action(const State& s, const VectorXd& a) const override;
  bool quadratic_in_action() const override { return true; }

  LqgConfig cfg_;
  MatrixXd noise_factor_;
  MatrixXd init_factor_;
};

// v(s) = s^T P s + p^T s + c
struct QuadraticForm {
  MatrixXd P;
  VectorXd p;
  double c = 0.0;
  double operator()(const VectorXd& s) const { return s.dot(P * s) + p.dot(s) + c; }
};

// Exact value functions of the linear-Gaussian policy a = K s + k + sqrt(sigma) z
// by backward recursion. Entry t-1 holds v_t for t = 1..h+1 (v_{h+1} = 0).
std::vector<QuadraticForm> lqg_linear_policy_values(const LqgConfig& cfg, const MatrixXd& K, const VectorXd& k,
                                                    double sigma);

// q^pi_t(s, a) from the values returned above.
double lqg_q_pi(const LqgConfig& cfg, const std::vector<QuadraticForm>& values, const VectorXd& s, const VectorXd& a,
                int t);

// q^pi as a QFunction; exactly quadratic in the action (expansion at a = 0).
class LqgQFunction final : public QFunction {
 public:
  LqgQFunction(LqgConfig cfg, std::vector<QuadraticForm> values) : cfg_(std::move(cfg)), values_(std::move(values)) {}
  double value(const State& s, const Action& a) const override;
  std::optional<QuadraticExpansion> quadratic(const State& s) const override;

 private:
  LqgConfig cfg_;
  std::vector<QuadraticForm> values_;
};

// Symmetric square root of a PSD matrix.
MatrixXd psd_sqrt(const MatrixXd& m);

}  // namespace trajcv
