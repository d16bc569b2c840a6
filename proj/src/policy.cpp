#include "trajcv/policy.hpp"

#include <cmath>
#include <numbers>

namespace trajcv {

int FeatureMap::dim() const {
  if (degree == 1) return input_dim + 1;
  if (degree == 2) return input_dim + input_dim * (input_dim + 1) / 2 + 1;
  throw ParameterError("feature degree must be 1 or 2");
}

VectorXd FeatureMap::operator()(const VectorXd& x) const {
  if (x.size() != input_dim) throw InputError("feature map: state dimension mismatch");
  VectorXd phi(dim());
  int k = 0;
  for (int i = 0; i < input_dim; ++i) phi(k++) = x(i);
  if (degree == 2)
    for (int i = 0; i < input_dim; ++i)
      for (int j = i; j < input_dim; ++j) phi(k++) = x(i) * x(j);
  phi(k) = 1.0;
  return phi;
}

// ---------------------------------------------------------------- Gaussian

GaussianPolicy::GaussianPolicy(FeatureMap features, MatrixXd theta, double sigma)
    : features_(features), theta_(std::move(theta)), sigma_(sigma) {
  if (!(sigma_ > 0.0) || !std::isfinite(sigma_)) throw ParameterError("gaussian policy: sigma must be positive");
  if (theta_.rows() != features_.dim()) throw InputError("gaussian policy: theta rows must equal feature dimension");
  if (theta_.cols() < 1) throw InputError("gaussian policy: action dimension must be positive");
}

VectorXd GaussianPolicy::params() const {
  VectorXd p(param_dim());
  int k = 0;
  for (int i = 0; i < theta_.rows(); ++i)
    for (int j = 0; j < theta_.cols(); ++j) p(k++) = theta_(i, j);
  p(k) = sigma_;
  return p;
}

std::unique_ptr<Policy> GaussianPolicy::with_params(const VectorXd& p) const {
  if (p.size() != param_dim()) throw InputError("gaussian policy: parameter size mismatch");
  MatrixXd th(theta_.rows(), theta_.cols());
  int k = 0;
  for (int i = 0; i < th.rows(); ++i)
    for (int j = 0; j < th.cols(); ++j) th(i, j) = p(k++);
  return std::make_unique<GaussianPolicy>(features_, th, p(k));
}

VectorXd GaussianPolicy::mean(const State& s) const { return theta_.transpose() * features_(s.values); }

VectorXd GaussianPolicy::mean_pullback(const State& s, const VectorXd& v) const {
  const VectorXd phi = features_(s.values);
  VectorXd out = VectorXd::Zero(param_dim());
  const int da = action_dim();
  for (int i = 0; i < phi.size(); ++i)
    for (int j = 0; j < da; ++j) out(i * da + j) = phi(i) * v(j);
  return out;
}

Action GaussianPolicy::reparam_apply(const State& s, const VectorXd& r) const {
  if (r.size() != action_dim()) throw InputError("reparam_apply: draw dimension mismatch");
  return Action::continuous(mean(s) + std::sqrt(sigma_) * r);
}

Action GaussianPolicy::sample(const State& s, Rng& rng) const {
  return reparam_apply(s, standard_normal(action_dim(), rng));
}

VectorXd GaussianPolicy::score(const State& s, const Action& a) const {
  if (a.is_discrete() || a.values.size() != action_dim()) throw InputError("gaussian score: invalid action");
  const VectorXd diff = a.values - mean(s);
  VectorXd out = mean_pullback(s, diff / sigma_);
  out(sigma_index()) = diff.squaredNorm() / (2.0 * sigma_ * sigma_) - action_dim() / (2.0 * sigma_);
  return out;
}

double GaussianPolicy::log_prob(const State& s, const Action& a) const {
  if (a.is_discrete() || a.values.size() != action_dim()) throw InputError("gaussian log_prob: invalid action");
  const double d = action_dim();
  return -0.5 * d * std::log(2.0 * std::numbers::pi * sigma_) - (a.values - mean(s)).squaredNorm() / (2.0 * sigma_);
}

double GaussianPolicy::kl(const Policy& other, const State& s) const {
  const auto& o = as_gaussian(other);
  const double d = action_dim();
  const double r = sigma_ / o.sigma_;
  return 0.5 * (d * r + (o.mean(s) - mean(s)).squaredNorm() / o.sigma_ - d - d * std::log(r));
}

// ---------------------------------------------------------------- Softmax

SoftmaxPolicy::SoftmaxPolicy(MatrixXd logits) : logits_(std::move(logits)) {
  if (logits_.rows() < 1 || logits_.cols() < 1) throw InputError("softmax policy: empty logits table");
  if (!logits_.allFinite()) throw ParameterError("softmax policy: logits must be finite");
}

void SoftmaxPolicy::check_state(int s) const {
  if (s < 0 || s >= n_states()) throw InputError("softmax policy: state index out of range");
}

VectorXd SoftmaxPolicy::params() const {
  VectorXd p(param_dim());
  int k = 0;
  for (int i = 0; i < logits_.rows(); ++i)
    for (int j = 0; j < logits_.cols(); ++j) p(k++) = logits_(i, j);
  return p;
}

std::unique_ptr<Policy> SoftmaxPolicy::with_params(const VectorXd& p) const {
  if (p.size() != param_dim()) throw InputError("softmax policy: parameter size mismatch");
  MatrixXd z(logits_.rows(), logits_.cols());
  int k = 0;
  for (int i = 0; i < z.rows(); ++i)
    for (int j = 0; j < z.cols(); ++j) z(i, j) = p(k++);
  return std::make_unique<SoftmaxPolicy>(z);
}

VectorXd SoftmaxPolicy::probabilities(int state) const {
  check_state(state);
  VectorXd z = logits_.row(state).transpose();
  z.array() -= z.maxCoeff();
  VectorXd e = z.array().exp();
  return e / e.sum();
}

MatrixXd SoftmaxPolicy::probability_jacobian(int state) const {
  const VectorXd pi = probabilities(state);
  const int na = n_actions();
  MatrixXd jac = MatrixXd::Zero(param_dim(), na);
  for (int a = 0; a < na; ++a)
    for (int b = 0; b < na; ++b) jac(state * na + b, a) = pi(a) * ((a == b ? 1.0 : 0.0) - pi(b));
  return jac;
}

Action SoftmaxPolicy::sample(const State& s, Rng& rng) const {
  return Action::discrete(sample_categorical(probabilities(s.tabular_index()), rng));
}

VectorXd SoftmaxPolicy::score(const State& s, const Action& a) const {
  const int st = s.tabular_index();
  if (!a.is_discrete() || *a.index < 0 || *a.index >= n_actions()) throw InputError("softmax score: invalid action");
  const VectorXd pi = probabilities(st);
  VectorXd out = VectorXd::Zero(param_dim());
  const int na = n_actions();
  for (int b = 0; b < na; ++b) out(st * na + b) = (b == *a.index ? 1.0 : 0.0) - pi(b);
  return out;
}

double SoftmaxPolicy::log_prob(const State& s, const Action& a) const {
  const int st = s.tabular_index();
  check_state(st);
  if (!a.is_discrete() || *a.index < 0 || *a.index >= n_actions()) throw InputError("softmax log_prob: invalid action");
  const VectorXd z = logits_.row(st).transpose();
  const double mx = z.maxCoeff();
  return z(*a.index) - mx - std::log((z.array() - mx).exp().sum());
}

double SoftmaxPolicy::kl(const Policy& other, const State& s) const {
  const auto& o = as_softmax(other);
  const VectorXd p = probabilities(s.tabular_index());
  const VectorXd q = o.probabilities(s.tabular_index());
  double kl = 0.0;
  for (int a = 0; a < p.size(); ++a)
    if (p(a) > 0.0) kl += p(a) * std::log(p(a) / q(a));
  return kl;
}

// ---------------------------------------------------------------- QuadraticQ

double QuadraticQ::evaluate(const VectorXd& a) const {
  const VectorXd d = a - m;
  return q0 + g.dot(d) + 0.5 * d.dot(H * d);
}

void QuadraticQ::validate() const {
  const int n = dim();
  if (g.size() != n || H.rows() != n || H.cols() != n) throw InputError("quadratic q: inconsistent dimensions");
  if ((H - H.transpose()).cwiseAbs().maxCoeff() > 1e-10) throw InputError("quadratic q: H must be symmetric");
}

double expectation_quadratic(const GaussianPolicy& policy, const State& s, const QuadraticQ& q) {
  q.validate();
  if (q.dim() != policy.action_dim()) throw InputError("expectation_quadratic: dimension mismatch");
  const VectorXd d = policy.mean(s) - q.m;
  return q.q0 + q.g.dot(d) + 0.5 * d.dot(q.H * d) + 0.5 * policy.sigma() * q.H.trace();
}

VectorXd grad_expectation_quadratic(const GaussianPolicy& policy, const State& s, const QuadraticQ& q,
                                    const std::optional<CenterSensitivity>& sensitivity) {
  q.validate();
  if (q.dim() != policy.action_dim()) throw InputError("grad_expectation_quadratic: dimension mismatch");
  const VectorXd mu = policy.mean(s);
  VectorXd dmu;
  if (sensitivity) {
    if (sensitivity->dq0_dm.size() != q.dim() || sensitivity->dtrace_dm.size() != q.dim())
      throw InputError("grad_expectation_quadratic: sensitivity dimension mismatch");
    if ((mu - q.m).cwiseAbs().maxCoeff() > 1e-9)
      throw InputError("grad_expectation_quadratic: chain-rule mode requires m = mu_theta(s)");
    // At m = mu the explicit g and H(mu - m) contributions cancel against the
    // -m terms, leaving only the movement of the coefficients.
    dmu = sensitivity->dq0_dm + 0.5 * policy.sigma() * sensitivity->dtrace_dm;
  } else {
    dmu = q.g + q.H * (mu - q.m);
  }
  VectorXd out = policy.mean_pullback(s, dmu);
  out(policy.sigma_index()) = 0.5 * q.H.trace();
  return out;
}

const GaussianPolicy& as_gaussian(const Policy& p) {
  const auto* g = dynamic_cast<const GaussianPolicy*>(&p);
  if (!g) throw UnsupportedError("operation requires a Gaussian policy");
  return *g;
}

const SoftmaxPolicy& as_softmax(const Policy& p) {
  const auto* g = dynamic_cast<const SoftmaxPolicy*>(&p);
  if (!g) throw UnsupportedError("operation requires a tabular softmax policy");
  return *g;
}

}  // namespace trajcv
