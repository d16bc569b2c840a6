#pragma once

#include <memory>
#include <optional>

#include "trajcv/common.hpp"
#include "trajcv/rng.hpp"

namespace trajcv {

// Polynomial feature map phi(x). Degree 1 is the affine map (x, 1); degree 2
// appends the monomials x_i x_j (i <= j) before the trailing 1.
struct FeatureMap {
  int input_dim = 0;
  int degree = 1;

  int dim() const;
  VectorXd operator()(const VectorXd& x) const;
};

class Policy {
 public:
  virtual ~Policy() = default;

  virtual int param_dim() const = 0;
  virtual VectorXd params() const = 0;
  virtual std::unique_ptr<Policy> with_params(const VectorXd& p) const = 0;
  virtual std::unique_ptr<Policy> clone() const = 0;
  virtual ActionSpace action_space() const = 0;

  virtual Action sample(const State& s, Rng& rng) const = 0;
  // grad_params log pi_s(a)
  virtual VectorXd score(const State& s, const Action& a) const = 0;
  virtual double log_prob(const State& s, const Action& a) const = 0;
  // KL(this_s || other_s)
  virtual double kl(const Policy& other, const State& s) const = 0;
};

// N(mu_theta(s), sigma I) with mu_theta(s) = theta^T phi(s). sigma is the
// variance. Parameter layout: theta flattened row-major (phi index major),
// followed by sigma.
class GaussianPolicy final : public Policy {
 public:
  GaussianPolicy(FeatureMap features, MatrixXd theta, double sigma);

  int param_dim() const override { return static_cast<int>(theta_.size()) + 1; }
  VectorXd params() const override;
  std::unique_ptr<Policy> with_params(const VectorXd& p) const override;
  std::unique_ptr<Policy> clone() const override { return std::make_unique<GaussianPolicy>(*this); }
  ActionSpace action_space() const override { return {false, action_dim(), 0}; }

  Action sample(const State& s, Rng& rng) const override;
  VectorXd score(const State& s, const Action& a) const override;
  double log_prob(const State& s, const Action& a) const override;
  double kl(const Policy& other, const State& s) const override;

  VectorXd mean(const State& s) const;
  // Sensitivity of the log-density to the mean, embedded in parameter space:
  // returns J^T v where J = d mu / d theta, with a zero sigma slot.
  VectorXd mean_pullback(const State& s, const VectorXd& v) const;
  Action reparam_apply(const State& s, const VectorXd& r) const;

  int action_dim() const { return static_cast<int>(theta_.cols()); }
  double sigma() const { return sigma_; }
  const MatrixXd& theta() const { return theta_; }
  const FeatureMap& features() const { return features_; }
  int sigma_index() const { return static_cast<int>(theta_.size()); }

 private:
  FeatureMap features_;
  MatrixXd theta_;  // feature_dim x action_dim
  double sigma_;
};

// Tabular Gibbs policy over a finite state set: pi_s(a) ~ exp(z[s][a]).
// Parameter layout: the logits table flattened row-major.
class SoftmaxPolicy final : public Policy {
 public:
  explicit SoftmaxPolicy(MatrixXd logits);

  int param_dim() const override { return static_cast<int>(logits_.size()); }
  VectorXd params() const override;
  std::unique_ptr<Policy> with_params(const VectorXd& p) const override;
  std::unique_ptr<Policy> clone() const override { return std::make_unique<SoftmaxPolicy>(*this); }
  ActionSpace action_space() const override { return {true, 0, n_actions()}; }

  Action sample(const State& s, Rng& rng) const override;
  VectorXd score(const State& s, const Action& a) const override;
  double log_prob(const State& s, const Action& a) const override;
  double kl(const Policy& other, const State& s) const override;

  VectorXd probabilities(int state) const;
  // grad_params pi_s(a) for every a, as a param_dim x n_actions matrix.
  MatrixXd probability_jacobian(int state) const;

  int n_states() const { return static_cast<int>(logits_.rows()); }
  int n_actions() const { return static_cast<int>(logits_.cols()); }
  const MatrixXd& logits() const { return logits_; }

 private:
  void check_state(int s) const;
  MatrixXd logits_;
};

// q(a) = q0 + g^T (a - m) + 1/2 (a - m)^T H (a - m)
struct QuadraticQ {
  double q0 = 0.0;
  VectorXd g;
  MatrixXd H;
  VectorXd m;

  double evaluate(const VectorXd& a) const;
  int dim() const { return static_cast<int>(m.size()); }
  void validate() const;
};

// d q0 / dm and d tr(H) / dm, used when the expansion center is tied to the
// policy mean (m = mu_theta(s)) and the coefficients move with it.
struct CenterSensitivity {
  VectorXd dq0_dm;
  VectorXd dtrace_dm;
};

// E_{A ~ pi_s}[q(A)] in closed form.
double expectation_quadratic(const GaussianPolicy& policy, const State& s, const QuadraticQ& q);

// grad_(theta, sigma) of expectation_quadratic. With no sensitivity the
// coefficients are constants, and the result equals E[N q(A)]. With a
// sensitivity the derivative also flows through m = mu_theta(s).
VectorXd grad_expectation_quadratic(const GaussianPolicy& policy, const State& s, const QuadraticQ& q,
                                    const std::optional<CenterSensitivity>& sensitivity = std::nullopt);

// Downcast helpers raising UnsupportedError on mismatch.
const GaussianPolicy& as_gaussian(const Policy& p);
const SoftmaxPolicy& as_softmax(const Policy& p);

}  // namespace trajcv
