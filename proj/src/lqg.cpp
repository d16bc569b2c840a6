#include "trajcv/lqg.hpp"

#include <Eigen/Eigenvalues>

namespace trajcv {

namespace {

bool is_psd(const MatrixXd& m, double tol) {
  if (m.rows() != m.cols()) return false;
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10) return false;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(m);
  return es.eigenvalues().minCoeff() >= tol;
}

}  // namespace

MatrixXd psd_sqrt(const MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(m);
  VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

void LqgConfig::validate() const {
  const int n = state_dim();
  if (n < 1 || A.cols() != n || B.rows() != n || B.cols() < 1) throw InputError("lqg: inconsistent A/B shapes");
  const int m = action_dim();
  if (W.rows() != n || Q.rows() != n || init_cov.rows() != n || R.rows() != m) throw InputError("lqg: inconsistent covariance shapes");
  if (!is_psd(W, -1e-12)) throw InputError("lqg: W must be positive semidefinite");
  if (!is_psd(Q, -1e-12)) throw InputError("lqg: Q must be positive semidefinite");
  if (!is_psd(init_cov, -1e-12)) throw InputError("lqg: initial covariance must be positive semidefinite");
  if (!is_psd(R, 1e-14)) throw InputError("lqg: R must be positive definite");
  if (horizon < 1) throw InputError("lqg: horizon must be positive");
}

Lqg::Lqg(LqgConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  noise_factor_ = psd_sqrt(cfg_.W);
  init_factor_ = psd_sqrt(cfg_.init_cov);
}

State Lqg::initial_state(Rng& rng) const {
  State s;
  s.values = init_factor_ * standard_normal(state_dim(), rng);
  s.time_index = 1;
  return s;
}

StepResult Lqg::step(const State& s, const Action& a, Rng& rng) const {
  check_step_args(s, a);
  StepResult r;
  r.cost = value(s, a);
  r.next.values = cfg_.A * s.values + cfg_.B * a.values;
  if (!cfg_.W.isZero(0.0)) r.next.values += noise_factor_ * standard_normal(state_dim(), rng);
  r.next.time_index = s.time_index + 1;
  r.done = r.next.time_index > cfg_.horizon;
  return r;
}

std::unique_ptr<Environment> Lqg::perturbed(double factor) const {
  LqgConfig c = cfg_;
  c.A *= factor;
  c.B *= factor;
  return std::make_unique<Lqg>(c);
}

double Lqg::value(const State& s, const Action& a) const {
  return s.values.dot(cfg_.Q * s.values) + a.values.dot(cfg_.R * a.values);
}

VectorXd Lqg::grad_action(const State&, const VectorXd& a) const { return 2.0 * cfg_.R * a; }

MatrixXd Lqg::hess_action(const State&, const VectorXd&) const { return 2.0 * cfg_.R; }

std::vector<QuadraticForm> lqg_linear_policy_values(const LqgConfig& cfg, const MatrixXd& K, const VectorXd& k,
                                                    double sigma) {
  const int n = cfg.state_dim();
  std::vector<QuadraticForm> v(cfg.horizon + 1);
  v[cfg.horizon] = {MatrixXd::Zero(n, n), VectorXd::Zero(n), 0.0};
  const MatrixXd F = cfg.A + cfg.B * K;
  const VectorXd Bk = cfg.B * k;
  const MatrixXd noise = sigma * cfg.B * cfg.B.transpose() + cfg.W;
  for (int t = cfg.horizon - 1; t >= 0; --t) {
    const QuadraticForm& nx = v[t + 1];
    QuadraticForm cur;
    cur.P = cfg.Q + K.transpose() * cfg.R * K + F.transpose() * nx.P * F;
    cur.P = 0.5 * (cur.P + cur.P.transpose());
    cur.p = 2.0 * K.transpose() * cfg.R * k + 2.0 * F.transpose() * nx.P * Bk + F.transpose() * nx.p;
    cur.c = k.dot(cfg.R * k) + sigma * cfg.R.trace() + Bk.dot(nx.P * Bk) + (nx.P * noise).trace() + nx.p.dot(Bk) + nx.c;
    v[t] = cur;
  }
  return v;
}

double lqg_q_pi(const LqgConfig& cfg, const std::vector<QuadraticForm>& values, const VectorXd& s, const VectorXd& a,
                int t) {
  const QuadraticForm& nx = values.at(t);  // v_{t+1} lives at index t
  const VectorXd mean_next = cfg.A * s + cfg.B * a;
  return s.dot(cfg.Q * s) + a.dot(cfg.R * a) + nx(mean_next) + (nx.P * cfg.W).trace();
}

double LqgQFunction::value(const State& s, const Action& a) const {
  return lqg_q_pi(cfg_, values_, s.values, a.values, s.time_index);
}

std::optional<QuadraticExpansion> LqgQFunction::quadratic(const State& s) const {
  const QuadraticForm& nx = values_.at(s.time_index);
  const MatrixXd P = 0.5 * (nx.P + nx.P.transpose());
  const VectorXd as = cfg_.A * s.values;
  QuadraticExpansion e;
  const int da = cfg_.action_dim();
  e.q.m = VectorXd::Zero(da);
  e.q.q0 = s.values.dot(cfg_.Q * s.values) + as.dot(P * as) + nx.p.dot(as) + nx.c + (P * cfg_.W).trace();
  e.q.g = 2.0 * cfg_.B.transpose() * P * as + cfg_.B.transpose() * nx.p;
  e.q.H = 2.0 * (cfg_.R + cfg_.B.transpose() * P * cfg_.B);
  e.q.H = 0.5 * (e.q.H + e.q.H.transpose());
  e.sensitivity = {VectorXd::Zero(da), VectorXd::Zero(da)};
  return e;
}

}  // namespace trajcv
