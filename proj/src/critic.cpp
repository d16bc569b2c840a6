#include "trajcv/critic.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

namespace trajcv {

namespace {

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// Least squares with a rank check; rank-deficient designs fall back to the
// minimum-norm solution.
MatrixXd solve_least_squares(const MatrixXd& X, const MatrixXd& Y, FitReport* report) {
  Eigen::ColPivHouseholderQR<MatrixXd> qr(X);
  qr.setThreshold(1e-10);
  MatrixXd w;
  bool deficient = qr.rank() < X.cols();
  if (deficient) {
    Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(X);
    cod.setThreshold(1e-10);
    w = cod.solve(Y);
  } else {
    w = qr.solve(Y);
  }
  if (report) {
    report->rank_deficient = deficient;
    report->samples = static_cast<int>(X.rows());
    report->mse = (X * w - Y).squaredNorm() / static_cast<double>(X.rows() * Y.cols());
  }
  return w;
}

}  // namespace

// ---------------------------------------------------------------- ValueModel

ValueModel::ValueModel(int state_dim, bool include_time, int horizon)
    : state_dim_(state_dim), include_time_(include_time), horizon_(horizon) {
  const int n = input_dim();
  b = VectorXd::Zero(n);
  M = MatrixXd::Zero(n, n);
}

int ValueModel::coefficient_count() const {
  const int n = input_dim();
  return 1 + n + n * (n + 1) / 2;
}

VectorXd ValueModel::input(const State& s) const {
  if (s.values.size() != state_dim_) throw InputError("value model: state dimension mismatch");
  VectorXd x(input_dim());
  x.head(state_dim_) = s.values;
  if (include_time_) x(state_dim_) = static_cast<double>(s.time_index) / horizon_;
  return x;
}

VectorXd ValueModel::monomials(const State& s) const {
  const VectorXd x = input(s);
  const int n = input_dim();
  VectorXd m(coefficient_count());
  int k = 0;
  m(k++) = 1.0;
  for (int i = 0; i < n; ++i) m(k++) = x(i);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) m(k++) = x(i) * x(j);
  return m;
}

void ValueModel::set_coefficients(const VectorXd& w) {
  if (w.size() != coefficient_count()) throw InputError("value model: coefficient count mismatch");
  const int n = input_dim();
  int k = 0;
  c0 = w(k++);
  b = w.segment(k, n);
  k += n;
  M = MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      if (i == j) {
        M(i, i) = 2.0 * w(k++);
      } else {
        M(i, j) = M(j, i) = w(k++);
      }
    }
}

VectorXd ValueModel::coefficients() const {
  const int n = input_dim();
  VectorXd w(coefficient_count());
  int k = 0;
  w(k++) = c0;
  for (int i = 0; i < n; ++i) w(k++) = b(i);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) w(k++) = (i == j) ? 0.5 * M(i, i) : M(i, j);
  return w;
}

double ValueModel::value(const State& s) const {
  if (beyond_horizon(s)) return 0.0;
  const VectorXd x = input(s);
  return c0 + b.dot(x) + 0.5 * x.dot(M * x);
}

VectorXd ValueModel::gradient(const State& s) const {
  if (beyond_horizon(s)) return VectorXd::Zero(state_dim_);
  const VectorXd x = input(s);
  return (b + M * x).head(state_dim_);
}

MatrixXd ValueModel::hessian(const State& s) const {
  if (beyond_horizon(s)) return MatrixXd::Zero(state_dim_, state_dim_);
  return M.topLeftCorner(state_dim_, state_dim_);
}

void ValueModel::write(std::ostream& os) const {
  os << "value_model " << state_dim_ << ' ' << (include_time_ ? 1 : 0) << ' ' << horizon_ << ' ' << coefficient_count()
     << '\n';
  const VectorXd w = coefficients();
  for (int i = 0; i < w.size(); ++i) os << (i ? " " : "") << fmt17(w(i));
  os << '\n';
}

ValueModel ValueModel::read(std::istream& is) {
  std::string tag;
  int d = 0, inc = 0, h = 0, n = 0;
  if (!(is >> tag >> d >> inc >> h >> n) || tag != "value_model") throw InputError("value model: bad header");
  ValueModel v(d, inc != 0, h);
  if (n != v.coefficient_count()) throw InputError("value model: coefficient count mismatch");
  VectorXd w(n);
  for (int i = 0; i < n; ++i)
    if (!(is >> w(i))) throw InputError("value model: truncated coefficients");
  v.set_coefficients(w);
  return v;
}

// ---------------------------------------------------------------- DynamicsModel

DynamicsModel::DynamicsModel(int state_dim, int action_dim)
    : W(MatrixXd::Zero(state_dim, state_dim + 1)), U(MatrixXd::Zero(state_dim, action_dim)) {}

State DynamicsModel::predict(const State& s, const VectorXd& a) const {
  if (s.values.size() != state_dim() || a.size() != action_dim()) throw InputError("dynamics model: dimension mismatch");
  State n;
  n.values = W.leftCols(state_dim()) * s.values + W.col(state_dim()) + U * a;
  n.time_index = s.time_index + 1;
  return n;
}

void DynamicsModel::write(std::ostream& os) const {
  os << "dynamics_model " << state_dim() << ' ' << action_dim() << '\n';
  for (int i = 0; i < W.rows(); ++i)
    for (int j = 0; j < W.cols(); ++j) os << ((i || j) ? " " : "") << fmt17(W(i, j));
  os << '\n';
  for (int i = 0; i < U.rows(); ++i)
    for (int j = 0; j < U.cols(); ++j) os << ((i || j) ? " " : "") << fmt17(U(i, j));
  os << '\n';
}

DynamicsModel DynamicsModel::read(std::istream& is) {
  std::string tag;
  int ds = 0, da = 0;
  if (!(is >> tag >> ds >> da) || tag != "dynamics_model") throw InputError("dynamics model: bad header");
  DynamicsModel d(ds, da);
  for (int i = 0; i < d.W.rows(); ++i)
    for (int j = 0; j < d.W.cols(); ++j)
      if (!(is >> d.W(i, j))) throw InputError("dynamics model: truncated coefficients");
  for (int i = 0; i < d.U.rows(); ++i)
    for (int j = 0; j < d.U.cols(); ++j)
      if (!(is >> d.U(i, j))) throw InputError("dynamics model: truncated coefficients");
  return d;
}

// ---------------------------------------------------------------- fitting

ValueModel fit_value(const std::vector<std::pair<State, double>>& data, int state_dim, bool include_time, int horizon,
                     FitReport* report) {
  ValueModel v(state_dim, include_time, horizon);
  const int p = v.coefficient_count();
  if (static_cast<int>(data.size()) < p) throw InputError("fit_value: fewer samples than coefficients");
  MatrixXd X(data.size(), p);
  MatrixXd y(data.size(), 1);
  for (std::size_t i = 0; i < data.size(); ++i) {
    X.row(i) = v.monomials(data[i].first).transpose();
    y(i, 0) = data[i].second;
  }
  v.set_coefficients(solve_least_squares(X, y, report).col(0));
  return v;
}

DynamicsModel fit_dynamics(const std::vector<Transition>& data, FitReport* report) {
  if (data.empty()) throw InputError("fit_dynamics: no data");
  const int ds = static_cast<int>(data[0].state.values.size());
  const int da = static_cast<int>(data[0].action.size());
  const int p = ds + 1 + da;
  if (static_cast<int>(data.size()) < p) throw InputError("fit_dynamics: fewer samples than coefficients");
  MatrixXd X(data.size(), p);
  MatrixXd Y(data.size(), ds);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Transition& tr = data[i];
    if (tr.state.values.size() != ds || tr.action.size() != da || tr.next.values.size() != ds)
      throw InputError("fit_dynamics: inconsistent sample dimensions");
    X.row(i).head(ds) = tr.state.values.transpose();
    X(i, ds) = 1.0;
    X.row(i).tail(da) = tr.action.transpose();
    Y.row(i) = tr.next.values.transpose();
  }
  const MatrixXd w = solve_least_squares(X, Y, report);  // p x ds
  DynamicsModel d(ds, da);
  d.W = w.topRows(ds + 1).transpose();
  d.U = w.bottomRows(da).transpose();
  return d;
}

std::vector<std::pair<State, double>> return_samples(const std::vector<Trajectory>& trajs) {
  std::vector<std::pair<State, double>> out;
  for (const auto& tr : trajs) {
    const auto suffix = tr.suffix_costs();
    for (int t = 0; t < tr.length(); ++t) out.emplace_back(tr.states[t], suffix[t]);
  }
  return out;
}

std::vector<Transition> transition_samples(const std::vector<Trajectory>& trajs) {
  std::vector<Transition> out;
  for (const auto& tr : trajs)
    for (int t = 0; t + 1 < tr.length(); ++t) out.push_back({tr.states[t], tr.actions[t].values, tr.states[t + 1]});
  return out;
}

// ---------------------------------------------------------------- Q approximators

QVariant parse_qvariant(const std::string& name) {
  if (name == "dyn") return QVariant::dyn;
  if (name == "next") return QVariant::next;
  if (name == "next_gn" || name == "next-gn") return QVariant::next_gn;
  if (name == "diff") return QVariant::diff;
  if (name == "diff_gn" || name == "diff-gn") return QVariant::diff_gn;
  throw InputError("unknown Q variant: " + name);
}

std::string to_string(QVariant v) {
  switch (v) {
    case QVariant::dyn: return "dyn";
    case QVariant::next: return "next";
    case QVariant::next_gn: return "next_gn";
    case QVariant::diff: return "diff";
    case QVariant::diff_gn: return "diff_gn";
  }
  return "?";
}

double q_dyn(const ValueModel& v, const DynamicsModel& d, const CostFn& c, const State& s, const VectorXd& a) {
  return c.value(s, Action::continuous(a)) + v.value(d.predict(s, a));
}

QuadraticExpansion build_quadratic_q(QVariant variant, const ValueModel& v, const DynamicsModel& d, const CostFn& c,
                                     const State& s, const GaussianPolicy& policy) {
  if (variant == QVariant::dyn) throw UnsupportedError("q_dyn has no quadratic-in-action form");
  const bool next = variant == QVariant::next || variant == QVariant::next_gn;
  const bool gauss_newton = variant == QVariant::next_gn || variant == QVariant::diff_gn;
  if (next && !c.quadratic_in_action())
    throw UnsupportedError("next / next_gn variants require a cost quadratic in the action");

  const VectorXd m = policy.mean(s);
  const State s_next = d.predict(s, m);
  const MatrixXd J = d.action_jacobian().transpose();  // action_dim x state_dim
  const VectorXd grad_v = v.gradient(s_next);
  const VectorXd grad_c = c.grad_action(s, m);

  QuadraticExpansion out;
  QuadraticQ& q = out.q;
  q.m = m;
  q.g = grad_c + J * grad_v;
  q.H = c.hess_action(s, m);
  q.q0 = next ? c.value(s, Action::continuous(m)) + v.value(s_next) : v.value(s);
  if (gauss_newton) q.H += J * v.hessian(s_next) * J.transpose();
  q.H = 0.5 * (q.H + q.H.transpose());

  const int da = static_cast<int>(m.size());
  out.sensitivity.dq0_dm = next ? q.g : VectorXd::Zero(da);
  out.sensitivity.dtrace_dm = VectorXd::Zero(da);
  if (!c.quadratic_in_action()) {
    // Only the cost Hessian can move with m; the model Hessians are constant.
    const double eps = 1e-5;
    for (int i = 0; i < da; ++i) {
      VectorXd mp = m, mm = m;
      mp(i) += eps;
      mm(i) -= eps;
      out.sensitivity.dtrace_dm(i) = (c.hess_action(s, mp).trace() - c.hess_action(s, mm).trace()) / (2.0 * eps);
    }
  }
  return out;
}

ModelQFunction::ModelQFunction(QVariant variant, ValueModel v, DynamicsModel d, const CostFn& cost,
                               GaussianPolicy policy)
    : variant_(variant), v_(std::move(v)), d_(std::move(d)), cost_(cost), policy_(std::move(policy)) {}

double ModelQFunction::value(const State& s, const Action& a) const {
  if (variant_ == QVariant::dyn) return q_dyn(v_, d_, cost_, s, a.values);
  return build_quadratic_q(variant_, v_, d_, cost_, s, policy_).q.evaluate(a.values);
}

std::optional<QuadraticExpansion> ModelQFunction::quadratic(const State& s) const {
  if (variant_ == QVariant::dyn) return std::nullopt;
  return build_quadratic_q(variant_, v_, d_, cost_, s, policy_);
}

}  // namespace trajcv
