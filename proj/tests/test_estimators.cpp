#include <cmath>

#include "doctest.h"
#include "trajcv/estimators.hpp"
#include "trajcv/lqg.hpp"
#include "trajcv/tabular.hpp"
#include "trajcv/variance.hpp"

using namespace trajcv;

namespace {

struct Instance {
  TabularMDP mdp;
  SoftmaxPolicy policy;
};

Instance random_mdp(Rng& rng, bool deterministic, int ns = 3, int na = 2, int h = 3) {
  RandomMdpOptions o;
  o.n_states = ns;
  o.n_actions = na;
  o.horizon = h;
  o.deterministic = deterministic;
  TabularMDP m = random_tabular_mdp(o, rng);
  return {m, random_softmax_policy(ns, na, 1.0, rng)};
}

std::vector<MatrixXd> random_q_table(const TabularMDP& m, Rng& rng) {
  std::vector<MatrixXd> q;
  for (int t = 0; t < m.horizon; ++t) {
    MatrixXd x(m.n_states, m.n_actions);
    for (int i = 0; i < x.size(); ++i) x.data()[i] = standard_normal(1, rng)(0);
    q.push_back(x);
  }
  return q;
}

VectorXd enumerated_mean(const TabularMDP& m, const SoftmaxPolicy& p, const ComponentEstimator& est) {
  VectorXd mean = VectorXd::Zero(p.param_dim());
  for_each_trajectory(m, p, [&](const Trajectory& tr, double w) { mean += w * est(tr).total; });
  return mean;
}

}  // namespace

TEST_SUITE("estimators") {
  TEST_CASE("zero control variates reduce to vanilla") {
    Rng rng(1);
    const Instance inst = random_mdp(rng, false);
    const TabularQ zero(std::vector<MatrixXd>(3, MatrixXd::Zero(3, 2)));
    const auto cv = make_control_variate(zero, inst.policy, {});
    TabularEnv env(inst.mdp);
    for (int i = 0; i < 20; ++i) {
      const Trajectory tr = rollout(env, inst.policy, rng);
      const GradEstimate van = pg_vanilla(tr);
      CHECK(pg_state_cv(tr, [](const State&) { return 0.0; }).per_t.isApprox(van.per_t));
      CHECK((pg_state_action_cv(tr, *cv).per_t - van.per_t).norm() < 1e-14);
      CHECK((pg_trajcv(tr, *cv).per_t - van.per_t).norm() < 1e-14);
    }
  }

  TEST_CASE("one-step TrajCV equals the state-action CV") {
    Rng rng(2);
    const Instance inst = random_mdp(rng, false, 3, 3, 1);
    const TabularQ q(random_q_table(inst.mdp, rng));
    const auto cv = make_control_variate(q, inst.policy, {});
    TabularEnv env(inst.mdp);
    for (int i = 0; i < 10; ++i) {
      const Trajectory tr = rollout(env, inst.policy, rng);
      CHECK((pg_trajcv(tr, *cv).total - pg_state_action_cv(tr, *cv).total).norm() < 1e-14);
    }
  }

  TEST_CASE("hand-computed two-step estimates") {
    Rng rng(3);
    const Instance inst = random_mdp(rng, false, 2, 2, 2);
    const auto table = random_q_table(inst.mdp, rng);
    const TabularQ q(table);
    const auto cv = make_control_variate(q, inst.policy, {});
    const Trajectory tr = rollout(TabularEnv(inst.mdp), inst.policy, rng);
    REQUIRE(tr.length() == 2);

    auto terms = [&](int t) {
      const int s = tr.states[t].tabular_index(), a = *tr.actions[t].index;
      const VectorXd pr = inst.policy.probabilities(s);
      CvTerms c;
      c.q = table[t](s, a);
      c.expected_q = pr.dot(table[t].row(s).transpose());
      c.grad_expected_q = inst.policy.probability_jacobian(s) * table[t].row(s).transpose();
      return c;
    };
    const CvTerms c1 = terms(0), c2 = terms(1);
    const double C1 = tr.costs[0] + tr.costs[1], C2 = tr.costs[1];
    const VectorXd& N1 = tr.scores[0];
    const VectorXd& N2 = tr.scores[1];

    const GradEstimate van = pg_vanilla(tr);
    CHECK((van.per_t.col(0) - N1 * C1).norm() < 1e-14);
    CHECK((van.per_t.col(1) - N2 * C2).norm() < 1e-14);
    CHECK((van.total - N1 * C1 - N2 * C2).norm() < 1e-14);

    const GradEstimate sa = pg_state_action_cv(tr, *cv);
    CHECK((sa.per_t.col(0) - (N1 * (C1 - c1.q) + c1.grad_expected_q)).norm() < 1e-14);
    CHECK((sa.per_t.col(1) - (N2 * (C2 - c2.q) + c2.grad_expected_q)).norm() < 1e-14);

    const GradEstimate tj = pg_trajcv(tr, *cv);
    CHECK((tj.per_t.col(0) - (N1 * (C1 - c1.q - (c2.q - c2.expected_q)) + c1.grad_expected_q)).norm() < 1e-14);
    CHECK((tj.per_t.col(1) - sa.per_t.col(1)).norm() < 1e-14);

    auto v = [&](const State& s) { return 0.5 * s.tabular_index() + s.time_index; };
    const GradEstimate st = pg_state_cv(tr, v);
    CHECK((st.per_t.col(0) - N1 * (C1 - v(tr.states[0]))).norm() < 1e-14);
  }

  TEST_CASE("totals are sums of the per-step columns") {
    Rng rng(4);
    const Instance inst = random_mdp(rng, false);
    const TabularQ q(random_q_table(inst.mdp, rng));
    const auto cv = make_control_variate(q, inst.policy, {});
    EstimatorInputs in;
    in.value = [](const State& s) { return 0.1 * s.tabular_index(); };
    in.cv = cv.get();
    const Trajectory tr = rollout(TabularEnv(inst.mdp), inst.policy, rng);
    for (auto k : {EstimatorKind::vanilla, EstimatorKind::state_cv, EstimatorKind::state_action_cv,
                   EstimatorKind::trajcv}) {
      const GradEstimate g = estimate(k, tr, in);
      CHECK(g.length() == tr.length());
      CHECK((g.per_t.rowwise().sum() - g.total).norm() < 1e-12);
    }
  }

  TEST_CASE("all estimators are unbiased under enumeration") {
    Rng rng(5);
    for (int trial = 0; trial < 10; ++trial) {
      const Instance inst = random_mdp(rng, trial % 2 == 0, 2 + trial % 2, 2 + trial % 2, 1 + trial % 3);
      const TabularQ q(random_q_table(inst.mdp, rng));
      const auto cv = make_control_variate(q, inst.policy, {});
      const VectorXd g = exact_policy_gradient(inst.mdp, inst.policy);
      const VectorXd b = standard_normal(inst.mdp.n_states, rng);
      auto v = [&](const State& s) { return b(s.tabular_index()) * s.time_index; };
      CHECK((enumerated_mean(inst.mdp, inst.policy, pg_vanilla) - g).norm() < 1e-10);
      CHECK((enumerated_mean(inst.mdp, inst.policy, [&](const Trajectory& t) { return pg_state_cv(t, v); }) - g).norm() <
            1e-10);
      CHECK((enumerated_mean(inst.mdp, inst.policy,
                             [&](const Trajectory& t) { return pg_state_action_cv(t, *cv); }) -
             g)
                .norm() < 1e-10);
      CHECK((enumerated_mean(inst.mdp, inst.policy, [&](const Trajectory& t) { return pg_trajcv(t, *cv); }) - g)
                .norm() < 1e-10);
    }
  }

  TEST_CASE("with exact q on deterministic dynamics TrajCV <= SA <= vanilla") {
    Rng rng(6);
    for (int trial = 0; trial < 10; ++trial) {
      const Instance inst = random_mdp(rng, true, 3, 3, 3);
      const TabularQ q(q_pi(inst.mdp, inst.policy));
      const auto cv = make_control_variate(q, inst.policy, {});
      const auto van = enumerated_variance(inst.mdp, inst.policy, pg_vanilla);
      const auto sa =
          enumerated_variance(inst.mdp, inst.policy, [&](const Trajectory& t) { return pg_state_action_cv(t, *cv); });
      const auto tj =
          enumerated_variance(inst.mdp, inst.policy, [&](const Trajectory& t) { return pg_trajcv(t, *cv); });
      for (int t = 0; t < 3; ++t) {
        CHECK(tj.per_t[t] <= sa.per_t[t] + 1e-12);
        CHECK(sa.per_t[t] <= van.per_t[t] + 1e-12);
      }
    }
  }

  TEST_CASE("Monte Carlo expectation") {
    Rng rng(7);
    QuadraticQ qq;
    qq.q0 = 1.0;
    qq.g = standard_normal(2, rng);
    qq.H = MatrixXd::Identity(2, 2) * 2.0;
    qq.m = VectorXd::Zero(2);
    const ConstantQuadraticQ q(qq);
    const GaussianPolicy pol(FeatureMap{1, 1}, 0.3 * MatrixXd::Ones(2, 2), 0.5);
    State s;
    s.values = VectorXd::Constant(1, 0.8);

    const McExpectation a = mc_conditional_expectation(q, s, pol, 1000, 42);
    const McExpectation b = mc_conditional_expectation(q, s, pol, 1000, 42);
    CHECK(a.value == b.value);
    CHECK(a.grad == b.grad);

    const int n = 200000;
    const McExpectation big = mc_conditional_expectation(q, s, pol, n, 7);
    const double exact = expectation_quadratic(pol, s, qq);
    CHECK(std::abs(big.value - exact) < 0.01 * std::max(1.0, std::abs(exact)));
    const VectorXd ge = grad_expectation_quadratic(pol, s, qq);
    CHECK((big.grad - ge).norm() < 0.05 * std::max(1.0, ge.norm()));

    // A constant q has zero sampled gradient thanks to the mean correction.
    QuadraticQ c = qq;
    c.g.setZero();
    c.H.setZero();
    const McExpectation k = mc_conditional_expectation(ConstantQuadraticQ(c), s, pol, 50, 3);
    CHECK(k.value == doctest::Approx(1.0));
    CHECK(k.grad.norm() < 1e-12);

    CHECK_THROWS_AS(mc_conditional_expectation(q, s, pol, 0, 1), InputError);
    CHECK_THROWS_AS(mc_conditional_expectation(q, s, pol, MatrixXd::Zero(3, 5)), InputError);
  }

  TEST_CASE("closed form needs a quadratic q under a Gaussian policy") {
    Rng rng(8);
    const Instance inst = random_mdp(rng, false);
    const TabularQ q(random_q_table(inst.mdp, rng));
    const GaussianPolicy g(FeatureMap{1, 1}, MatrixXd::Zero(2, 1), 1.0);
    CHECK_THROWS_AS(make_control_variate(q, g, {})->terms(State::tabular(0, 1), Action::continuous(VectorXd::Zero(1))),
                    UnsupportedError);
  }

  TEST_CASE("error paths and names") {
    Trajectory empty;
    CHECK_THROWS_AS(pg_vanilla(empty), InputError);
    CHECK_THROWS_AS(average_total({}), InputError);
    Rng rng(9);
    const Instance inst = random_mdp(rng, false);
    const Trajectory tr = rollout(TabularEnv(inst.mdp), inst.policy, rng);
    CHECK_THROWS_AS(estimate(EstimatorKind::trajcv, tr, {}), InputError);
    CHECK_THROWS_AS(estimate(EstimatorKind::state_cv, tr, {}), InputError);
    CHECK(parse_estimator(to_string(EstimatorKind::state_action_cv)) == EstimatorKind::state_action_cv);
    CHECK(parse_estimator("vanilla") == EstimatorKind::vanilla);
    CHECK_THROWS_AS(parse_estimator("nope"), InputError);
  }

  TEST_CASE("average_total is the plain mean") {
    GradEstimate a, b;
    a.total = VectorXd::Constant(2, 1.0);
    b.total = VectorXd::Constant(2, 3.0);
    CHECK(average_total({a, b}) == VectorXd::Constant(2, 2.0));
  }
}
