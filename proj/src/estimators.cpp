#include "trajcv/estimators.hpp"

#include <cstring>

#include "trajcv/rng.hpp"

namespace trajcv {

namespace {

class TabularCv final : public ActionControlVariate {
 public:
  TabularCv(const QFunction& q, const SoftmaxPolicy& policy) : q_(q), policy_(policy) {}

  CvTerms terms(const State& s, const Action& a) const override {
    const int st = s.tabular_index();
    const VectorXd pi = policy_.probabilities(st);
    VectorXd qs(pi.size());
    for (int b = 0; b < pi.size(); ++b) qs(b) = q_.value(s, Action::discrete(b));
    return {qs(*a.index), pi.dot(qs), policy_.probability_jacobian(st) * qs};
  }

 private:
  const QFunction& q_;
  const SoftmaxPolicy& policy_;
};

class QuadraticCv final : public ActionControlVariate {
 public:
  QuadraticCv(const QFunction& q, const GaussianPolicy& policy, bool chain_rule)
      : q_(q), policy_(policy), chain_rule_(chain_rule) {}

  CvTerms terms(const State& s, const Action& a) const override {
    auto ex = q_.quadratic(s);
    if (!ex) throw UnsupportedError("closed-form expectation requires a Q approximator quadratic in the action");
    CvTerms out;
    out.q = ex->q.evaluate(a.values);
    out.expected_q = expectation_quadratic(policy_, s, ex->q);
    out.grad_expected_q =
        grad_expectation_quadratic(policy_, s, ex->q, chain_rule_ ? std::optional(ex->sensitivity) : std::nullopt);
    return out;
  }

 private:
  const QFunction& q_;
  const GaussianPolicy& policy_;
  bool chain_rule_;
};

std::uint64_t state_key(const State& s) {
  std::uint64_t h = splitmix64(static_cast<std::uint64_t>(s.time_index));
  for (int i = 0; i < s.values.size(); ++i) {
    std::uint64_t bits;
    const double v = s.values(i);
    std::memcpy(&bits, &v, sizeof bits);
    h = splitmix64(h ^ bits);
  }
  return h;
}

class MonteCarloCv final : public ActionControlVariate {
 public:
  MonteCarloCv(const QFunction& q, const GaussianPolicy& policy, const ExpectationMethod& m)
      : q_(q), policy_(policy), method_(m) {
    if (m.n_samples < 1) throw InputError("monte carlo expectation: n_samples must be >= 1");
    if (m.common_random_numbers) draws_ = standard_normal_draws(policy.action_dim(), m.n_samples, m.seed);
  }

  CvTerms terms(const State& s, const Action& a) const override {
    const McExpectation e =
        method_.common_random_numbers
            ? mc_conditional_expectation(q_, s, policy_, draws_)
            : mc_conditional_expectation(q_, s, policy_, method_.n_samples, method_.seed ^ state_key(s));
    return {q_.value(s, a), e.value, e.grad};
  }

 private:
  const QFunction& q_;
  const GaussianPolicy& policy_;
  ExpectationMethod method_;
  MatrixXd draws_;
};

}  // namespace

std::unique_ptr<ActionControlVariate> make_control_variate(const QFunction& q, const Policy& policy,
                                                           const ExpectationMethod& method) {
  if (method.kind == ExpectationMethod::Kind::monte_carlo)
    return std::make_unique<MonteCarloCv>(q, as_gaussian(policy), method);
  if (const auto* sm = dynamic_cast<const SoftmaxPolicy*>(&policy)) return std::make_unique<TabularCv>(q, *sm);
  return std::make_unique<QuadraticCv>(q, as_gaussian(policy), method.chain_rule);
}

MatrixXd standard_normal_draws(int dim, int n, std::uint64_t seed) {
  Rng rng = derive_stream(seed, {0x6372'6e00ULL});
  MatrixXd d(dim, n);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < dim; ++i) d(i, j) = nd(rng);
  return d;
}

McExpectation mc_conditional_expectation(const QFunction& q, const State& s, const GaussianPolicy& policy,
                                         const MatrixXd& draws) {
  const int n = static_cast<int>(draws.cols());
  if (n < 1) throw InputError("mc_conditional_expectation: n must be >= 1");
  if (draws.rows() != policy.action_dim()) throw InputError("mc_conditional_expectation: draw dimension mismatch");
  const VectorXd mu = policy.mean(s);
  const double sd = std::sqrt(policy.sigma());
  const int da = policy.action_dim();

  VectorXd qs(n);
  for (int i = 0; i < n; ++i) qs(i) = q.value(s, Action::continuous(mu + sd * draws.col(i)));
  McExpectation out;
  out.value = qs.mean();

  // Score of a_i = mu + sd r_i: theta-block phi (r_i / sd), sigma-block
  // (|r_i|^2 - d) / (2 sigma). Accumulate sum_i N_i w_i without materializing N_i.
  const bool paired = n >= 2;
  VectorXd mean_block = VectorXd::Zero(da);
  double sigma_block = 0.0;
  for (int i = 0; i < n; ++i) {
    const double w = paired ? qs(i) - out.value : qs(i);
    mean_block += w * draws.col(i) / sd;
    sigma_block += w * (draws.col(i).squaredNorm() - da) / (2.0 * policy.sigma());
  }
  const double denom = paired ? n - 1.0 : 1.0;
  out.grad = policy.mean_pullback(s, mean_block / denom);
  out.grad(policy.sigma_index()) = sigma_block / denom;
  return out;
}

McExpectation mc_conditional_expectation(const QFunction& q, const State& s, const GaussianPolicy& policy, int n,
                                         std::uint64_t crn_seed) {
  return mc_conditional_expectation(q, s, policy, standard_normal_draws(policy.action_dim(), n, crn_seed));
}

// ---------------------------------------------------------------- estimators

namespace {

GradEstimate make_estimate(const Trajectory& traj) {
  if (traj.empty()) throw InputError("estimator: empty trajectory");
  if (static_cast<int>(traj.scores.size()) != traj.length()) throw InputError("estimator: scores not filled");
  GradEstimate g;
  g.per_t = MatrixXd::Zero(traj.scores[0].size(), traj.length());
  return g;
}

void finish(GradEstimate& g) { g.total = g.per_t.rowwise().sum(); }

}  // namespace

GradEstimate pg_vanilla(const Trajectory& traj) {
  GradEstimate g = make_estimate(traj);
  const auto suffix = traj.suffix_costs();
  for (int t = 0; t < traj.length(); ++t) g.per_t.col(t) = traj.scores[t] * suffix[t];
  finish(g);
  return g;
}

GradEstimate pg_state_cv(const Trajectory& traj, const StateValueFn& v) {
  GradEstimate g = make_estimate(traj);
  const auto suffix = traj.suffix_costs();
  for (int t = 0; t < traj.length(); ++t) g.per_t.col(t) = traj.scores[t] * (suffix[t] - v(traj.states[t]));
  finish(g);
  return g;
}

GradEstimate pg_state_action_cv(const Trajectory& traj, const ActionControlVariate& cv) {
  GradEstimate g = make_estimate(traj);
  const auto suffix = traj.suffix_costs();
  for (int t = 0; t < traj.length(); ++t) {
    const CvTerms k = cv.terms(traj.states[t], traj.actions[t]);
    g.per_t.col(t) = traj.scores[t] * (suffix[t] - k.q) + k.grad_expected_q;
  }
  finish(g);
  return g;
}

GradEstimate pg_trajcv(const Trajectory& traj, const ActionControlVariate& cv) {
  GradEstimate g = make_estimate(traj);
  const auto suffix = traj.suffix_costs();
  double future_advantage = 0.0;  // sum_{k>t} (Q^_k - E[Q^_k])
  for (int t = traj.length() - 1; t >= 0; --t) {
    const CvTerms k = cv.terms(traj.states[t], traj.actions[t]);
    g.per_t.col(t) = traj.scores[t] * (suffix[t] - k.q - future_advantage) + k.grad_expected_q;
    future_advantage += k.q - k.expected_q;
  }
  finish(g);
  return g;
}

EstimatorKind parse_estimator(const std::string& name) {
  if (name == "vanilla") return EstimatorKind::vanilla;
  if (name == "state" || name == "state_cv") return EstimatorKind::state_cv;
  if (name == "sa" || name == "state_action" || name == "state_action_cv") return EstimatorKind::state_action_cv;
  if (name == "trajcv" || name == "traj") return EstimatorKind::trajcv;
  throw InputError("unknown estimator: " + name);
}

std::string to_string(EstimatorKind k) {
  switch (k) {
    case EstimatorKind::vanilla: return "vanilla";
    case EstimatorKind::state_cv: return "state";
    case EstimatorKind::state_action_cv: return "sa";
    case EstimatorKind::trajcv: return "trajcv";
  }
  return "?";
}

GradEstimate estimate(EstimatorKind kind, const Trajectory& traj, const EstimatorInputs& in) {
  switch (kind) {
    case EstimatorKind::vanilla: return pg_vanilla(traj);
    case EstimatorKind::state_cv:
      if (!in.value) throw InputError("state CV estimator needs a value function");
      return pg_state_cv(traj, in.value);
    case EstimatorKind::state_action_cv:
      if (!in.cv) throw InputError("state-action CV estimator needs a control variate");
      return pg_state_action_cv(traj, *in.cv);
    case EstimatorKind::trajcv:
      if (!in.cv) throw InputError("TrajCV estimator needs a control variate");
      return pg_trajcv(traj, *in.cv);
  }
  throw InputError("unknown estimator");
}

VectorXd average_total(const std::vector<GradEstimate>& estimates) {
  if (estimates.empty()) throw InputError("average_total: no estimates");
  VectorXd sum = VectorXd::Zero(estimates[0].total.size());
  for (const auto& e : estimates) sum += e.total;
  return sum / static_cast<double>(estimates.size());
}

}  // namespace trajcv
