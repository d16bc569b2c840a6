#pragma once

#include <cstdint>
#include <vector>

#include "trajcv/critic.hpp"
#include "trajcv/environment.hpp"
#include "trajcv/estimators.hpp"

namespace trajcv {

struct TrainConfig {
  EstimatorKind estimator = EstimatorKind::trajcv;
  QVariant qvariant = QVariant::next_gn;
  ExpectationMethod expectation;
  int rollouts = 5;
  int iterations = 300;
  double kl_limit = 0.01;
  double damping = 1e-3;
  double lr = 1.0;  // cap on the natural step length eta
  std::uint64_t seed = 0;
  double sigma_init = 1.0;
  int feature_degree = 1;
  int critic_window = 20;  // iterations of data kept for critic fitting
  // Whether the current batch is part of the critic's training window. Off
  // keeps the control variates independent of the batch they are applied to.
  bool critic_include_current = false;
  bool value_time_feature = true;
  // Fit the dynamics model on rollouts from a perturbed copy of the task.
  bool biased_simulator = false;
  double simulator_factor = 1.1;
  // State-CV estimator with a large rollout count.
  bool upper_bound = false;
  int upper_bound_rollouts = 5000;
  int threads = 1;

  void validate() const;
};

struct CurveRow {
  int iteration = 0;
  double reward_mean = 0.0;
  double reward_p25 = 0.0;
  double reward_p75 = 0.0;
  double grad_norm = 0.0;
  double sigma = 0.0;
};

struct LearningCurve {
  std::vector<CurveRow> rows;
};

// Mean over all steps of (D N_t)(D N_t)^T + damping I, with D = diag(scale)
// (empty scale means identity).
MatrixXd estimate_fisher(const std::vector<Trajectory>& trajs, double damping, const VectorXd& scale = VectorXd());

struct NaturalStepOptions {
  double lr = 1.0;
  int max_backtracks = 10;
  double kl_slack = 1.5;
  // Optimize log sigma instead of sigma for Gaussian policies.
  bool log_sigma = true;
};

struct NaturalStepResult {
  VectorXd params;
  double eta = 0.0;
  double kl = 0.0;  // sampled-state mean KL(old || new) of the accepted step
  int backtracks = 0;
  bool accepted = true;
};

// Coordinates in which the Fisher is formed: 1 everywhere, sigma at the
// sigma slot of a Gaussian policy when log_sigma is set.
VectorXd coordinate_scale(const Policy& policy, bool log_sigma);

// Steps along F^-1 (-cost_grad); fisher must be expressed in the coordinates
// of coordinate_scale(policy, opt.log_sigma).
NaturalStepResult natural_step(const Policy& policy, const VectorXd& cost_grad, const MatrixXd& fisher,
                               double kl_limit, const std::vector<State>& states,
                               const NaturalStepOptions& opt = {});

// Sample quantile with linear interpolation.
double quantile(std::vector<double> xs, double q);

LearningCurve train(const Environment& env, const TrainConfig& cfg);

// First iteration whose mean reward reaches threshold; rows.size() + 1 when
// the curve never gets there.
int iterations_to_threshold(const LearningCurve& curve, double threshold);

}  // namespace trajcv
