#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "trajcv/environment.hpp"
#include "trajcv/estimators.hpp"
#include "trajcv/tabular.hpp"

namespace trajcv {

// Trace-of-variance components of one gradient component G~_t under the
// ordering S_t -> A_t -> S_{t+1} -> A_{t+1} -> ... :
//   v_state  = Tr Var_{S_t} E[G~_t | S_t]
//   v_action = Tr E_{S_t} Var_{A_t|S_t} E[G~_t | S_t, A_t]
//   v_future = Tr E_{S_t,A_t} Var[G~_t | S_t, A_t]
// Exact decompositions also split v_future into v_dyn[i] (the S_{t+1+i} term)
// and v_act[i] (the A_{t+1+i} term).
struct VarianceComponents {
  int t = 1;
  double v_state = 0.0;
  double v_action = 0.0;
  double v_future = 0.0;
  std::vector<double> v_dyn;
  std::vector<double> v_act;
  double se_state = 0.0;
  double se_action = 0.0;
  double se_future = 0.0;

  double sum() const { return v_state + v_action + v_future; }
};

using ComponentEstimator = std::function<GradEstimate(const Trajectory&)>;

// Exact decomposition by walking the trajectory tree, for every t at once.
std::vector<VarianceComponents> decompose_exact_all(const TabularMDP& mdp, const SoftmaxPolicy& policy,
                                                    const ComponentEstimator& estimator,
                                                    double budget = kDefaultEnumerationBudget);
VarianceComponents decompose_exact(const TabularMDP& mdp, const SoftmaxPolicy& policy,
                                   const ComponentEstimator& estimator, int t,
                                   double budget = kDefaultEnumerationBudget);

struct EnumeratedVariance {
  std::vector<double> per_t;  // Tr Var[G~_t]
  double total = 0.0;         // Tr Var[sum_t G~_t]
  VectorXd mean;              // E[sum_t G~_t]
};
// Direct two-pass enumeration of the variances.
EnumeratedVariance enumerated_variance(const TabularMDP& mdp, const SoftmaxPolicy& policy,
                                       const ComponentEstimator& estimator,
                                       double budget = kDefaultEnumerationBudget);

struct NestedSampleSizes {
  int n_outer = 200;
  int n_mid = 8;
  int n_inner = 8;
  // Extra rollouts from each S_t whose mean return b is used only for the
  // v_state term, through fbar_j - b N_j (N has mean zero given S_t). 0 = off.
  int n_baseline = 0;
};

// Nested Monte Carlo: roll in to S_t (n_outer), draw A_t (n_mid), then roll
// out futures (n_inner). Each level uses an unbiased (n-1) estimator and the
// lower-level noise is subtracted; standard errors are delete-one jackknife
// over the outer index. Rollouts that end before t contribute G~_t = 0.
// The v_state estimate is much noisier than the others when the action
// terms dominate; n_baseline > 0 cancels most of that noise without bias.
VarianceComponents decompose_sampled(const Environment& env, const Policy& policy,
                                     const ComponentEstimator& estimator, int t, const NestedSampleSizes& n,
                                     std::uint64_t seed);

using EstimatorFactory = std::function<ComponentEstimator(const Policy&)>;
using PolicyFactory = std::function<std::unique_ptr<Policy>(double sigma)>;

struct SigmaScanRow {
  double sigma = 0.0;
  VarianceComponents components;
};
struct SigmaScan {
  std::vector<SigmaScanRow> rows;
  // d log(component) / d log(sigma), least squares over the scan.
  double slope_state = 0.0;
  double slope_action = 0.0;
  double slope_future = 0.0;
};
SigmaScan theorem1_scan(const Environment& env, const PolicyFactory& make_policy,
                           const std::vector<double>& sigmas, int t, const NestedSampleSizes& n,
                           std::uint64_t seed, const EstimatorFactory& make_estimator);

// ---------------------------------------------------------------- chains

// Finite random variables X_1..X_n with conditionals p(X_k | X_{<k}) and a
// target function of all of them.
struct ChainVariable {
  std::string name;
  int support = 2;
  std::function<std::vector<double>(const std::vector<int>& previous)> conditional;
};
struct ChainSpec {
  std::vector<ChainVariable> variables;
  std::function<double(const std::vector<int>& values)> f;
};

// Explicit joint distribution, the substrate for ordering decompositions.
struct JointTable {
  int n_vars = 0;
  std::vector<int> support;
  std::vector<std::vector<int>> values;
  std::vector<double> prob;
  std::vector<VectorXd> f;
};

JointTable chain_joint(const ChainSpec& chain);

// Trace terms E Var_{X_j | X_<j} E[f | X_<=j] for each position of order
// (a permutation of variable ids).
std::vector<double> decompose_joint(const JointTable& table, const std::vector<int>& order);
double joint_trace_variance(const JointTable& table);

struct ChainDecomposition {
  std::vector<double> terms;
  double total_variance = 0.0;
};
ChainDecomposition chain_decompose(const ChainSpec& chain);

// Var_X E_Y[f] and E_Y Var_X[f] for independent finite X, Y; f is nx x ny.
std::pair<double, double> conditional_variance_sides(const VectorXd& px, const VectorXd& py, const MatrixXd& f);

// ---------------------------------------------------------------- orderings

struct OrderingVar {
  bool is_state = true;  // S_k if true, R_k otherwise
  int step = 1;
  bool operator==(const OrderingVar&) const = default;
};

struct OrderingSpec {
  std::vector<OrderingVar> sequence;
  bool feasible = false;
  std::string to_string() const;
};

// R_k must precede every S_{k+1..h}; S_t must come first.
bool is_feasible(const std::vector<OrderingVar>& sequence, int t, int h);
OrderingSpec natural_ordering(int t, int h);
OrderingSpec randomness_first_ordering(int t, int h);
// Every ordering with S_t first, feasible or not.
std::vector<OrderingSpec> all_orderings(int t, int h);
std::vector<OrderingSpec> feasible_orderings(int t, int h);

// Policy expressed as omega(s, r) with r uniform on {0..n_r-1}.
struct FiniteReparamPolicy {
  int n_r = 2;
  std::vector<std::vector<int>> omega;  // omega[s][r] -> action

  // Softmax policy with the induced action probabilities (log-count logits).
  SoftmaxPolicy induced_policy(int n_actions) const;
};
FiniteReparamPolicy random_reparam_policy(int n_states, int n_actions, int n_r, Rng& rng);

// Joint table over (S_t..S_h, R_t..R_h) with f = G_t = N_t C_{t:h}. Variable
// id of S_k is k - t, of R_k is (h - t + 1) + (k - t).
JointTable window_table(const TabularMDP& mdp, const FiniteReparamPolicy& policy, int t);
std::vector<int> ordering_ids(const OrderingSpec& ordering, int t, int h);

// Variance of G_t left after subtracting the optimal CV for every
// action-randomness position of the ordering, conditioned on S_t (the S_t
// term is shared by all orderings).
double ordering_residue(const TabularMDP& mdp, const FiniteReparamPolicy& policy, const OrderingSpec& ordering,
                        int t);
double ordering_residue(const JointTable& table, const OrderingSpec& ordering, int t, int h);

struct VarianceBound {
  double lhs = 0.0;  // Tr Var[G]
  double rhs = 0.0;  // h sum_t Tr Var[G_t]
  bool holds = false;
};
VarianceBound variance_bound_check(const TabularMDP& mdp, const SoftmaxPolicy& policy);

}  // namespace trajcv
