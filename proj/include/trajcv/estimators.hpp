#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>

#include "trajcv/q_function.hpp"

namespace trajcv {

using StateValueFn = std::function<double(const State&)>;

// Per-step ingredients of an action-dependent CV at (S_k, A_k):
// Q^_k, E_{A_k|S_k}[Q^_k] and grad E_{A_k|S_k}[Q^_k] (= E[N_k Q^_k]).
struct CvTerms {
  double q = 0.0;
  double expected_q = 0.0;
  VectorXd grad_expected_q;
};

class ActionControlVariate {
 public:
  virtual ~ActionControlVariate() = default;
  virtual CvTerms terms(const State& s, const Action& a) const = 0;
};

struct ExpectationMethod {
  enum class Kind { closed_form, monte_carlo };
  Kind kind = Kind::closed_form;
  int n_samples = 1000;
  bool common_random_numbers = true;
  std::uint64_t seed = 0;
  // Differentiate through the expansion center m = mu_theta(s) as well.
  bool chain_rule = false;
};

// Binds q^ to the policy it is evaluated against. closed_form needs a tabular
// softmax policy or a q^ that is quadratic in the action under a Gaussian
// policy; monte_carlo needs a Gaussian policy (reparameterized draws).
std::unique_ptr<ActionControlVariate> make_control_variate(const QFunction& q, const Policy& policy,
                                                           const ExpectationMethod& method);

struct McExpectation {
  double value = 0.0;
  VectorXd grad;
};

// Sample mean of q^(omega(s, r_i)) and the baseline-corrected score-function
// estimate of grad E, (1/(n-1)) sum_i N_i (q_i - mean); draws is action_dim x n.
McExpectation mc_conditional_expectation(const QFunction& q, const State& s, const GaussianPolicy& policy,
                                         const MatrixXd& draws);
McExpectation mc_conditional_expectation(const QFunction& q, const State& s, const GaussianPolicy& policy, int n,
                                         std::uint64_t crn_seed);
MatrixXd standard_normal_draws(int dim, int n, std::uint64_t seed);

// ---------------------------------------------------------------- estimators

// per_t[t] = N_t C_{t:T}
GradEstimate pg_vanilla(const Trajectory& traj);
// per_t[t] = N_t (C_{t:T} - v^(S_t))
GradEstimate pg_state_cv(const Trajectory& traj, const StateValueFn& v);
// per_t[t] = N_t (C_{t:T} - Q^_t) + grad E[Q^_t]
GradEstimate pg_state_action_cv(const Trajectory& traj, const ActionControlVariate& cv);
// per_t[t] = N_t (C_{t:T} - Q^_t - sum_{k>t} (Q^_k - E[Q^_k])) + grad E[Q^_t],
// computed in one backward pass.
GradEstimate pg_trajcv(const Trajectory& traj, const ActionControlVariate& cv);

enum class EstimatorKind { vanilla, state_cv, state_action_cv, trajcv };
EstimatorKind parse_estimator(const std::string& name);
std::string to_string(EstimatorKind k);

// The CV ingredients an estimator may need; unused members can stay empty.
struct EstimatorInputs {
  StateValueFn value;
  const ActionControlVariate* cv = nullptr;
};

GradEstimate estimate(EstimatorKind kind, const Trajectory& traj, const EstimatorInputs& in);

// Per-trajectory equal-weight average of estimates, reduced in index order.
VectorXd average_total(const std::vector<GradEstimate>& estimates);

}  // namespace trajcv
