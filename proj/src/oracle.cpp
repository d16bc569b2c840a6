#include "trajcv/oracle.hpp"

#include <algorithm>
#include <cmath>

#include "trajcv/variance.hpp"

namespace trajcv {

Fault parse_fault(const std::string& name) {
  if (name == "none" || name.empty()) return Fault::none;
  if (name == "cv_sign") return Fault::cv_sign;
  throw InputError("unknown fault: " + name);
}

namespace {

class SignFlipped final : public ActionControlVariate {
 public:
  explicit SignFlipped(std::unique_ptr<ActionControlVariate> inner) : inner_(std::move(inner)) {}
  CvTerms terms(const State& s, const Action& a) const override {
    CvTerms k = inner_->terms(s, a);
    k.grad_expected_q = -k.grad_expected_q;
    return k;
  }

 private:
  std::unique_ptr<ActionControlVariate> inner_;
};

}  // namespace

std::unique_ptr<ActionControlVariate> sign_flipped(std::unique_ptr<ActionControlVariate> inner) {
  return std::make_unique<SignFlipped>(std::move(inner));
}

RandomInstance random_instance(std::uint64_t seed, int index, bool deterministic) {
  Rng rng = derive_stream(seed, {0x0a11ULL, static_cast<std::uint64_t>(index)});
  std::uniform_int_distribution<int> size(2, 3);
  RandomMdpOptions opt;
  opt.n_states = size(rng);
  opt.n_actions = size(rng);
  opt.horizon = size(rng);
  opt.deterministic = deterministic;
  TabularMDP mdp = random_tabular_mdp(opt, rng);
  SoftmaxPolicy pi = random_softmax_policy(opt.n_states, opt.n_actions, 1.0, rng);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::vector<MatrixXd> q(opt.horizon, MatrixXd(opt.n_states, opt.n_actions));
  std::vector<VectorXd> b(opt.horizon, VectorXd(opt.n_states));
  for (int t = 0; t < opt.horizon; ++t) {
    for (int s = 0; s < opt.n_states; ++s) {
      b[t](s) = u(rng);
      for (int a = 0; a < opt.n_actions; ++a) q[t](s, a) = u(rng);
    }
  }
  return {std::move(mdp), std::move(pi), TabularQ(std::move(q)), std::move(b)};
}

namespace {

struct Bound {
  StateValueFn value;
  std::unique_ptr<ActionControlVariate> cv;
};

Bound bind(const RandomInstance& inst, Fault fault) {
  Bound b;
  const auto* table = &inst.baseline;
  b.value = [table](const State& s) { return (*table)[s.time_index - 1](s.tabular_index()); };
  b.cv = make_control_variate(inst.q, inst.policy, {});
  if (fault == Fault::cv_sign) b.cv = sign_flipped(std::move(b.cv));
  return b;
}

constexpr EstimatorKind kKinds[] = {EstimatorKind::vanilla, EstimatorKind::state_cv, EstimatorKind::state_action_cv,
                                    EstimatorKind::trajcv};

}  // namespace

std::vector<CheckResult> run_oracle_suite(const OracleOptions& opt) {
  std::vector<CheckResult> out;

  CheckResult unbiased{"unbiasedness", true, 0.0, 1e-10, opt.mdp_instances};
  CheckResult additive{"additivity", true, 0.0, 1e-10, opt.mdp_instances};
  for (int i = 0; i < opt.mdp_instances; ++i) {
    const RandomInstance inst = random_instance(opt.seed, i);
    const Bound b = bind(inst, opt.fault);
    const EstimatorInputs in{b.value, b.cv.get()};
    const VectorXd exact = exact_policy_gradient(inst.mdp, inst.policy);
    for (EstimatorKind k : kKinds) {
      const ComponentEstimator est = [&](const Trajectory& tr) { return estimate(k, tr, in); };
      const EnumeratedVariance ev = enumerated_variance(inst.mdp, inst.policy, est);
      unbiased.max_deviation = std::max(unbiased.max_deviation, (ev.mean - exact).lpNorm<Eigen::Infinity>());
      const auto comps = decompose_exact_all(inst.mdp, inst.policy, est);
      for (const auto& c : comps) {
        additive.max_deviation = std::max(additive.max_deviation, std::abs(c.sum() - ev.per_t[c.t - 1]));
        double fine = 0.0;
        for (double v : c.v_dyn) fine += v;
        for (double v : c.v_act) fine += v;
        additive.max_deviation = std::max(additive.max_deviation, std::abs(fine - c.v_future));
      }
    }
  }
  unbiased.passed = unbiased.max_deviation <= unbiased.tolerance;
  additive.passed = additive.max_deviation <= additive.tolerance;
  out.push_back(unbiased);
  out.push_back(additive);

  // Natural ordering minimal among feasible ones; infeasible ones rejected.
  CheckResult ordering{"ordering_residue", true, 0.0, 1e-12, opt.ordering_instances};
  for (int i = 0; i < opt.ordering_instances; ++i) {
    Rng rng = derive_stream(opt.seed, {0x0bd5ULL, static_cast<std::uint64_t>(i)});
    RandomMdpOptions mo;
    mo.n_states = 2;
    mo.n_actions = 2;
    mo.horizon = 3;
    const TabularMDP mdp = random_tabular_mdp(mo, rng);
    const FiniteReparamPolicy rp = random_reparam_policy(mo.n_states, mo.n_actions, 3, rng);
    for (int t = 1; t <= mo.horizon; ++t) {
      const JointTable table = window_table(mdp, rp, t);
      const double natural = ordering_residue(table, natural_ordering(t, mo.horizon), t, mo.horizon);
      for (const auto& o : all_orderings(t, mo.horizon)) {
        if (!o.feasible) {
          bool rejected = false;
          try {
            ordering_residue(table, o, t, mo.horizon);
          } catch (const InputError&) {
            rejected = true;
          }
          if (!rejected) ordering.passed = false;
          continue;
        }
        const double r = ordering_residue(table, o, t, mo.horizon);
        ordering.max_deviation = std::max(ordering.max_deviation, natural - r);
      }
    }
  }
  ordering.passed = ordering.passed && ordering.max_deviation <= ordering.tolerance;
  out.push_back(ordering);

  CheckResult ineq{"conditional_variance", true, 0.0, 1e-10, opt.inequality_instances};
  for (int i = 0; i < opt.inequality_instances; ++i) {
    Rng rng = derive_stream(opt.seed, {0x1e11ULL, static_cast<std::uint64_t>(i)});
    std::uniform_int_distribution<int> size(2, 5);
    std::uniform_real_distribution<double> u(0.05, 1.0), v(-3.0, 3.0);
    const int nx = size(rng), ny = size(rng);
    VectorXd px(nx), py(ny);
    for (int k = 0; k < nx; ++k) px(k) = u(rng);
    for (int k = 0; k < ny; ++k) py(k) = u(rng);
    px /= px.sum();
    py /= py.sum();
    MatrixXd f(nx, ny);
    for (int a = 0; a < nx; ++a)
      for (int c = 0; c < ny; ++c) f(a, c) = v(rng);
    const auto [lhs, rhs] = conditional_variance_sides(px, py, f);
    ineq.max_deviation = std::max(ineq.max_deviation, lhs - rhs);
  }
  ineq.passed = ineq.max_deviation <= ineq.tolerance;
  out.push_back(ineq);

  CheckResult bound{"variance_bound", true, 0.0, 1e-10, opt.mdp_instances};
  for (int i = 0; i < opt.mdp_instances; ++i) {
    const RandomInstance inst = random_instance(opt.seed, i);
    const VarianceBound vb = variance_bound_check(inst.mdp, inst.policy);
    bound.max_deviation = std::max(bound.max_deviation, vb.lhs - vb.rhs);
    if (!vb.holds) bound.passed = false;
  }
  bound.passed = bound.passed && bound.max_deviation <= bound.tolerance;
  out.push_back(bound);
  return out;
}

}  // namespace trajcv
