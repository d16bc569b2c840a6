#include <cmath>
#include <sstream>

#include "doctest.h"
#include "trajcv/cartpole.hpp"
#include "trajcv/critic.hpp"
#include "trajcv/lqg.hpp"

using namespace trajcv;

namespace {

State vec_state(const VectorXd& v, int t = 1) {
  State s;
  s.values = v;
  s.time_index = t;
  return s;
}

MatrixXd random_matrix(int r, int c, Rng& rng) {
  MatrixXd m(r, c);
  for (int i = 0; i < m.size(); ++i) m.data()[i] = standard_normal(1, rng)(0);
  return m;
}

ValueModel random_value_model(int ds, bool time, int h, Rng& rng) {
  ValueModel v(ds, time, h);
  const int n = v.input_dim();
  v.c0 = standard_normal(1, rng)(0);
  v.b = standard_normal(n, rng);
  const MatrixXd m = random_matrix(n, n, rng);
  v.M = m + m.transpose();
  return v;
}

LqgConfig small_lqg(Rng& rng, double noise) {
  LqgConfig c;
  c.A = 0.5 * random_matrix(2, 2, rng);
  c.B = random_matrix(2, 1, rng);
  c.W = noise * MatrixXd::Identity(2, 2);
  c.Q = MatrixXd::Identity(2, 2);
  c.R = 0.5 * MatrixXd::Identity(1, 1);
  c.init_cov = MatrixXd::Identity(2, 2);
  c.horizon = 6;
  return c;
}

// a^4 / 4 with derivatives; not quadratic in the action.
class QuarticCost final : public CostFn {
 public:
  double value(const State&, const Action& a) const override { return std::pow(a.values(0), 4) / 4; }
  VectorXd grad_action(const State&, const VectorXd& a) const override {
    return VectorXd::Constant(1, std::pow(a(0), 3));
  }
  MatrixXd hess_action(const State&, const VectorXd& a) const override {
    return MatrixXd::Constant(1, 1, 3 * a(0) * a(0));
  }
};

}  // namespace

TEST_SUITE("critic") {
  TEST_CASE("realizable quadratic values are recovered") {
    Rng rng(1);
    for (bool time : {false, true}) {
      const ValueModel truth = random_value_model(3, time, 10, rng);
      std::vector<std::pair<State, double>> data;
      for (int i = 0; i < 200; ++i) {
        const State s = vec_state(standard_normal(3, rng), 1 + i % 10);
        data.emplace_back(s, truth.value(s));
      }
      FitReport rep;
      const ValueModel fit = fit_value(data, 3, time, 10, &rep);
      CHECK(rep.mse < 1e-10);
      CHECK_FALSE(rep.rank_deficient);
      CHECK(rep.samples == 200);
      const State probe = vec_state(standard_normal(3, rng), 4);
      CHECK(fit.value(probe) == doctest::Approx(truth.value(probe)).epsilon(1e-8));
    }
  }

  TEST_CASE("constant returns give a constant model") {
    Rng rng(2);
    std::vector<std::pair<State, double>> data;
    for (int i = 0; i < 50; ++i) data.emplace_back(vec_state(standard_normal(2, rng)), 3.5);
    const ValueModel v = fit_value(data, 2, false, 5);
    CHECK(v.c0 == doctest::Approx(3.5));
    CHECK(v.b.norm() < 1e-10);
    CHECK(v.M.norm() < 1e-10);
  }

  TEST_CASE("noisy fits do no worse than the sample variance") {
    Rng rng(3);
    std::vector<std::pair<State, double>> data;
    double sum = 0, sq = 0;
    for (int i = 0; i < 500; ++i) {
      const VectorXd x = standard_normal(2, rng);
      const double y = x(0) * x(1) + 2 * standard_normal(1, rng)(0);
      data.emplace_back(vec_state(x), y);
      sum += y;
      sq += y * y;
    }
    FitReport rep;
    fit_value(data, 2, false, 5, &rep);
    CHECK(rep.mse <= sq / 500 - (sum / 500) * (sum / 500));
  }

  TEST_CASE("too few samples is an input error") {
    std::vector<std::pair<State, double>> data{{vec_state(VectorXd::Zero(2)), 1.0}};
    CHECK_THROWS_AS(fit_value(data, 2, false, 5), InputError);
    CHECK_THROWS_AS(fit_dynamics({}), InputError);
  }

  TEST_CASE("linear dynamics are recovered from noiseless LQG rollouts") {
    Rng rng(4);
    const LqgConfig cfg = small_lqg(rng, 0.0);
    const Lqg env(cfg);
    const GaussianPolicy pol(FeatureMap{2, 1}, MatrixXd::Zero(3, 1), 1.0);
    std::vector<Trajectory> trajs;
    for (int i = 0; i < 20; ++i) trajs.push_back(rollout(env, pol, rng));
    FitReport rep;
    const DynamicsModel d = fit_dynamics(transition_samples(trajs), &rep);
    CHECK(rep.mse < 1e-20);
    CHECK((d.W.leftCols(2) - cfg.A).norm() < 1e-9);
    CHECK(d.W.col(2).norm() < 1e-9);
    CHECK((d.U - cfg.B).norm() < 1e-9);
  }

  TEST_CASE("a repeated transition is rank deficient but fits exactly") {
    Transition tr{vec_state(VectorXd::Constant(2, 1.0)), VectorXd::Constant(1, 0.5),
                  vec_state(VectorXd::Constant(2, 2.0), 2)};
    std::vector<Transition> data(10, tr);
    FitReport rep;
    const DynamicsModel d = fit_dynamics(data, &rep);
    CHECK(rep.rank_deficient);
    CHECK((d.predict(tr.state, tr.action).values - tr.next.values).norm() < 1e-9);
  }

  TEST_CASE("cart-pole dynamics residual shrinks with more data") {
    const CartPole env(CartPoleConfig{});
    auto heldout = [&](int n, std::uint64_t seed) {
      Rng rng(seed);
      auto draw = [&] {
        const VectorXd x = 0.05 * standard_normal(4, rng);
        const VectorXd a = standard_normal(1, rng);
        return Transition{vec_state(x), a, vec_state(env.integrate(x, env.config().force_scale * a(0)), 2)};
      };
      std::vector<Transition> train;
      for (int i = 0; i < n; ++i) train.push_back(draw());
      const DynamicsModel d = fit_dynamics(train);
      double err = 0;
      for (int i = 0; i < 2000; ++i) {
        const Transition t = draw();
        err += (d.predict(t.state, t.action).values - t.next.values).squaredNorm();
      }
      return err / 2000;
    };
    CHECK(heldout(10000, 5) < heldout(100, 5));
  }

  TEST_CASE("return and transition samples") {
    Trajectory tr;
    for (int t = 1; t <= 3; ++t) {
      tr.states.push_back(vec_state(VectorXd::Constant(1, t), t));
      tr.actions.push_back(Action::continuous(VectorXd::Constant(1, -t)));
      tr.costs.push_back(t);
      tr.scores.push_back(VectorXd::Zero(1));
    }
    const auto r = return_samples({tr});
    REQUIRE(r.size() == 3);
    CHECK(r[0].second == 6.0);
    CHECK(r[1].second == 5.0);
    CHECK(r[2].second == 3.0);
    const auto s = transition_samples({tr});
    REQUIRE(s.size() == 2);
    CHECK(s[1].next.values(0) == 3.0);
    CHECK(s[1].action(0) == -2.0);
  }

  TEST_CASE("value model beyond the horizon is zero") {
    Rng rng(6);
    const ValueModel v = random_value_model(2, true, 4, rng);
    const State s = vec_state(VectorXd::Ones(2), 5);
    CHECK(v.value(s) == 0.0);
    CHECK(v.gradient(s).isZero(0.0));
  }

  TEST_CASE("q_dyn with a zero value model is the cost") {
    Rng rng(7);
    const Lqg env(small_lqg(rng, 0.1));
    const ValueModel v(2, false, 6);
    const DynamicsModel d(2, 1);
    const State s = vec_state(standard_normal(2, rng));
    const VectorXd a = standard_normal(1, rng);
    CHECK(q_dyn(v, d, env.cost(), s, a) == doctest::Approx(env.cost().value(s, Action::continuous(a))));
  }

  TEST_CASE("q_dyn is q^pi on noiseless LQG with exact models") {
    Rng rng(8);
    const LqgConfig cfg = small_lqg(rng, 0.0);
    const Lqg env(cfg);
    const MatrixXd K = 0.3 * random_matrix(1, 2, rng);
    const VectorXd k = VectorXd::Constant(1, 0.2);
    const auto values = lqg_linear_policy_values(cfg, K, k, 0.4);
    DynamicsModel d(2, 1);
    d.W.leftCols(2) = cfg.A;
    d.U = cfg.B;
    for (int t = 1; t < cfg.horizon; ++t) {
      ValueModel v(2, false, cfg.horizon);
      v.c0 = values[t].c;
      v.b = values[t].p;
      v.M = 2 * values[t].P;
      const VectorXd x = standard_normal(2, rng);
      const VectorXd a = standard_normal(1, rng);
      CHECK(q_dyn(v, d, env.cost(), vec_state(x, t), a) == doctest::Approx(lqg_q_pi(cfg, values, x, a, t)).epsilon(1e-10));
    }
  }

  TEST_CASE("quadratic variants") {
    Rng rng(9);
    const Lqg env(small_lqg(rng, 0.1));
    const ValueModel v = random_value_model(2, true, 6, rng);
    DynamicsModel d(2, 1);
    d.W = random_matrix(2, 3, rng);
    d.U = random_matrix(2, 1, rng);
    MatrixXd theta = random_matrix(3, 1, rng);
    const GaussianPolicy pol(FeatureMap{2, 1}, theta, 0.5);
    const State s = vec_state(standard_normal(2, rng), 3);
    const VectorXd m = pol.mean(s);

    const auto next = build_quadratic_q(QVariant::next, v, d, env.cost(), s, pol);
    const auto next_gn = build_quadratic_q(QVariant::next_gn, v, d, env.cost(), s, pol);
    const auto diff = build_quadratic_q(QVariant::diff, v, d, env.cost(), s, pol);
    const auto diff_gn = build_quadratic_q(QVariant::diff_gn, v, d, env.cost(), s, pol);

    const double qd_m = q_dyn(v, d, env.cost(), s, m);
    CHECK(next.q.evaluate(m) == doctest::Approx(qd_m));
    CHECK(next_gn.q.evaluate(m) == doctest::Approx(qd_m));
    CHECK(diff.q.evaluate(m) == doctest::Approx(v.value(s)));
    CHECK(diff.q.g.isApprox(next.q.g));

    // Affine dynamics and quadratic costs make the Gauss-Newton expansion exact.
    for (int i = 0; i < 100; ++i) {
      const VectorXd a = 3 * standard_normal(1, rng);
      CHECK(next_gn.q.evaluate(a) == doctest::Approx(q_dyn(v, d, env.cost(), s, a)).epsilon(1e-10));
    }

    const State sn = d.predict(s, m);
    const MatrixXd gn = d.U.transpose() * v.hessian(sn) * d.U;
    CHECK((diff_gn.q.H - diff.q.H - gn).norm() < 1e-10);
    CHECK((next_gn.q.H - next.q.H - gn).norm() < 1e-10);

    CHECK(next.sensitivity.dq0_dm.isApprox(next.q.g));
    CHECK(diff.sensitivity.dq0_dm.isZero(0.0));

    const ModelQFunction mq(QVariant::dyn, v, d, env.cost(), pol);
    CHECK_FALSE(mq.quadratic(s).has_value());
    CHECK(mq.value(s, Action::continuous(m)) == doctest::Approx(qd_m));
    CHECK_THROWS_AS(build_quadratic_q(QVariant::dyn, v, d, env.cost(), s, pol), UnsupportedError);
  }

  TEST_CASE("first-order expansion error is second order in the step") {
    Rng rng(10);
    const Lqg env(small_lqg(rng, 0.1));
    const ValueModel v = random_value_model(2, false, 6, rng);
    DynamicsModel d(2, 1);
    d.W = random_matrix(2, 3, rng);
    d.U = random_matrix(2, 1, rng);
    const GaussianPolicy pol(FeatureMap{2, 1}, random_matrix(3, 1, rng), 0.5);
    const State s = vec_state(standard_normal(2, rng));
    const auto q = build_quadratic_q(QVariant::next, v, d, env.cost(), s, pol);
    const VectorXd m = pol.mean(s);
    auto residual = [&](double h) {
      const VectorXd a = m + VectorXd::Constant(1, h);
      const double lin = q.q.q0 + q.q.g.dot(a - m);
      return std::abs(q_dyn(v, d, env.cost(), s, a) - lin);
    };
    CHECK(residual(1e-2) / residual(1e-3) == doctest::Approx(100.0).epsilon(0.01));
  }

  TEST_CASE("value gradient and Hessian match finite differences") {
    Rng rng(11);
    const ValueModel v = random_value_model(3, true, 8, rng);
    const State s = vec_state(standard_normal(3, rng), 2);
    const VectorXd g = v.gradient(s);
    const MatrixXd H = v.hessian(s);
    for (int i = 0; i < 3; ++i) {
      State up = s, dn = s;
      up.values(i) += 1e-5;
      dn.values(i) -= 1e-5;
      CHECK((v.value(up) - v.value(dn)) / 2e-5 == doctest::Approx(g(i)).epsilon(1e-6));
      const VectorXd hc = (v.gradient(up) - v.gradient(dn)) / 2e-5;
      CHECK((hc - H.col(i)).norm() < 1e-6);
    }
  }

  TEST_CASE("dynamics Jacobian matches finite differences") {
    Rng rng(12);
    DynamicsModel d(3, 2);
    d.W = random_matrix(3, 4, rng);
    d.U = random_matrix(3, 2, rng);
    const State s = vec_state(standard_normal(3, rng));
    const VectorXd a = standard_normal(2, rng);
    for (int j = 0; j < 2; ++j) {
      VectorXd up = a, dn = a;
      up(j) += 1e-6;
      dn(j) -= 1e-6;
      const VectorXd fd = (d.predict(s, up).values - d.predict(s, dn).values) / 2e-6;
      CHECK((fd - d.action_jacobian().col(j)).norm() < 1e-8);
    }
  }

  TEST_CASE("models survive a write/read round trip") {
    Rng rng(13);
    const ValueModel v = random_value_model(2, true, 7, rng);
    std::stringstream sv;
    v.write(sv);
    const ValueModel v2 = ValueModel::read(sv);
    CHECK(v2.coefficients() == v.coefficients());
    CHECK(v2.include_time());
    CHECK(v2.horizon() == 7);

    DynamicsModel d(2, 1);
    d.W = random_matrix(2, 3, rng);
    d.U = random_matrix(2, 1, rng);
    std::stringstream sd;
    d.write(sd);
    const DynamicsModel d2 = DynamicsModel::read(sd);
    CHECK(d2.W == d.W);
    CHECK(d2.U == d.U);

    std::stringstream bad("nonsense 1 2");
    CHECK_THROWS_AS(DynamicsModel::read(bad), InputError);
  }

  TEST_CASE("next variants need a cost quadratic in the action") {
    const QuarticCost c;
    const ValueModel v(1, false, 3);
    const DynamicsModel d(1, 1);
    const GaussianPolicy pol(FeatureMap{1, 1}, MatrixXd::Constant(2, 1, 0.5), 1.0);
    const State s = vec_state(VectorXd::Constant(1, 1.0));
    CHECK_THROWS_AS(build_quadratic_q(QVariant::next, v, d, c, s, pol), UnsupportedError);
    const auto q = build_quadratic_q(QVariant::diff, v, d, c, s, pol);
    // The cost Hessian 3 a^2 moves with the center m = 1: d tr / dm = 6.
    CHECK(q.sensitivity.dtrace_dm(0) == doctest::Approx(6.0).epsilon(1e-6));
  }

  TEST_CASE("variant names") {
    CHECK(parse_qvariant("diff-gn") == QVariant::diff_gn);
    CHECK(to_string(parse_qvariant("next_gn")) == "next_gn");
    CHECK_THROWS_AS(parse_qvariant("bogus"), InputError);
  }
}
