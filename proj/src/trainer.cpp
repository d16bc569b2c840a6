#include "trajcv/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "trajcv/parallel.hpp"

namespace trajcv {

void TrainConfig::validate() const {
  if (!(kl_limit > 0.0)) throw InputError("train: kl_limit must be positive");
  if (rollouts < 1) throw InputError("train: rollouts must be >= 1");
  if (iterations < 0) throw InputError("train: iterations must be >= 0");
  if (!(damping >= 0.0)) throw InputError("train: damping must be non-negative");
  if (!(lr > 0.0)) throw InputError("train: lr must be positive");
  if (!(sigma_init > 0.0)) throw ParameterError("train: sigma_init must be positive");
  if (feature_degree < 1 || feature_degree > 2) throw InputError("train: feature_degree must be 1 or 2");
  if (critic_window < 1) throw InputError("train: critic_window must be >= 1");
  if (upper_bound && upper_bound_rollouts < 1) throw InputError("train: upper_bound_rollouts must be >= 1");
  if (threads < 1) throw InputError("train: threads must be >= 1");
}

MatrixXd estimate_fisher(const std::vector<Trajectory>& trajs, double damping, const VectorXd& scale) {
  long steps = 0;
  MatrixXd f;
  for (const auto& tr : trajs)
    for (const auto& n : tr.scores) {
      const VectorXd u = scale.size() ? VectorXd(scale.cwiseProduct(n)) : n;
      if (!f.size()) f = MatrixXd::Zero(u.size(), u.size());
      f.noalias() += u * u.transpose();
      ++steps;
    }
  if (steps == 0) throw InputError("estimate_fisher: no steps");
  f /= static_cast<double>(steps);
  f.diagonal().array() += damping;
  return f;
}

VectorXd coordinate_scale(const Policy& policy, bool log_sigma) {
  VectorXd d = VectorXd::Ones(policy.param_dim());
  if (log_sigma)
    if (const auto* g = dynamic_cast<const GaussianPolicy*>(&policy)) d(g->sigma_index()) = g->sigma();
  return d;
}

NaturalStepResult natural_step(const Policy& policy, const VectorXd& cost_grad, const MatrixXd& fisher,
                               double kl_limit, const std::vector<State>& states, const NaturalStepOptions& opt) {
  if (!(kl_limit > 0.0)) throw InputError("natural_step: kl_limit must be positive");
  const int n = policy.param_dim();
  if (cost_grad.size() != n || fisher.rows() != n || fisher.cols() != n)
    throw InputError("natural_step: dimension mismatch");
  if (!cost_grad.allFinite()) throw NumericError("natural_step: non-finite gradient");
  Eigen::LLT<MatrixXd> llt(fisher);
  if (llt.info() != Eigen::Success) throw NumericError("natural_step: Fisher matrix is not positive definite");

  const auto* gauss = dynamic_cast<const GaussianPolicy*>(&policy);
  const bool log_sigma = opt.log_sigma && gauss;
  const VectorXd scale = coordinate_scale(policy, log_sigma);
  const VectorXd delta = llt.solve(scale.cwiseProduct(-cost_grad));
  const double quad = delta.dot(fisher * delta);

  NaturalStepResult out;
  const VectorXd p0 = policy.params();
  out.eta = quad > 0.0 ? std::min(opt.lr, std::sqrt(2.0 * kl_limit / quad)) : opt.lr;
  if (delta.squaredNorm() == 0.0) {
    out.params = p0;
    return out;
  }
  if (states.empty()) throw InputError("natural_step: no states to check the KL on");

  for (int b = 0; b <= opt.max_backtracks; ++b) {
    VectorXd p = p0 + out.eta * delta;
    if (log_sigma) p(gauss->sigma_index()) = p0(gauss->sigma_index()) * std::exp(out.eta * delta(gauss->sigma_index()));
    double kl = std::numeric_limits<double>::infinity();
    try {
      const auto next = policy.with_params(p);
      kl = 0.0;
      for (const auto& s : states) kl += policy.kl(*next, s);
      kl /= static_cast<double>(states.size());
    } catch (const ParameterError&) {
      // invalid sigma: treat as an oversized step
    }
    if (kl <= opt.kl_slack * kl_limit) {
      out.params = p;
      out.kl = kl;
      out.backtracks = b;
      return out;
    }
    if (b < opt.max_backtracks) out.eta *= 0.5;
  }
  out.params = p0;
  out.accepted = false;
  out.backtracks = opt.max_backtracks;
  out.kl = 0.0;
  return out;
}

double quantile(std::vector<double> xs, double q) {
  if (xs.empty()) throw InputError("quantile: empty sample");
  std::sort(xs.begin(), xs.end());
  const double pos = q * (xs.size() - 1);
  const size_t lo = static_cast<size_t>(std::floor(pos));
  const size_t hi = std::min(lo + 1, xs.size() - 1);
  return xs[lo] + (pos - lo) * (xs[hi] - xs[lo]);
}

namespace {

std::vector<Trajectory> flatten(const std::deque<std::vector<Trajectory>>& window) {
  std::vector<Trajectory> all;
  for (const auto& batch : window) all.insert(all.end(), batch.begin(), batch.end());
  return all;
}

std::vector<Trajectory> sample_batch(const Environment& env, const Policy& policy, int n, int threads,
                                     std::uint64_t seed, std::uint64_t tag, int iteration) {
  std::vector<Trajectory> batch(n);
  parallel_for(n, threads, [&](int i) {
    Rng rng = derive_stream(seed, {tag, static_cast<std::uint64_t>(iteration), static_cast<std::uint64_t>(i)});
    batch[i] = rollout(env, policy, rng);
  });
  return batch;
}

template <class E>
[[noreturn]] void rethrow_at(const E& e, int iteration) {
  throw E("iteration " + std::to_string(iteration) + ": " + e.what());
}

}  // namespace

LearningCurve train(const Environment& env, const TrainConfig& cfg) {
  cfg.validate();
  const ActionSpace as = env.action_space();
  if (as.discrete) throw UnsupportedError("train: continuous action space required");
  const int ds = env.state_dim();
  const FeatureMap features{ds, cfg.feature_degree};
  std::unique_ptr<Policy> policy =
      std::make_unique<GaussianPolicy>(features, MatrixXd::Zero(features.dim(), as.dim), cfg.sigma_init);

  const EstimatorKind kind = cfg.upper_bound ? EstimatorKind::state_cv : cfg.estimator;
  const int n_roll = cfg.upper_bound ? cfg.upper_bound_rollouts : cfg.rollouts;
  const bool needs_value = kind != EstimatorKind::vanilla;
  const bool needs_q = kind == EstimatorKind::state_action_cv || kind == EstimatorKind::trajcv;
  std::unique_ptr<Environment> simulator;
  if (cfg.biased_simulator && needs_q) simulator = env.perturbed(cfg.simulator_factor);

  std::deque<std::vector<Trajectory>> window, sim_window;
  LearningCurve curve;
  for (int it = 1; it <= cfg.iterations; ++it) {
    try {
      const GaussianPolicy& gp = as_gaussian(*policy);
      std::vector<Trajectory> batch = sample_batch(env, *policy, n_roll, cfg.threads, cfg.seed, 1, it);
      auto push = [&](auto& w, std::vector<Trajectory> b) {
        w.push_back(std::move(b));
        if (static_cast<int>(w.size()) > cfg.critic_window) w.pop_front();
      };
      std::vector<Trajectory> sim_batch;
      if (simulator) sim_batch = sample_batch(*simulator, *policy, n_roll, cfg.threads, cfg.seed, 2, it);
      if (cfg.critic_include_current) {
        push(window, batch);
        if (simulator) push(sim_window, sim_batch);
      }

      ValueModel vm(ds, cfg.value_time_feature, env.horizon());
      DynamicsModel dm(ds, as.dim);
      if (needs_value) {
        const auto data = flatten(window);
        try {
          vm = fit_value(return_samples(data), ds, cfg.value_time_feature, env.horizon());
        } catch (const InputError&) {
          // too little data yet: keep the zero model
        }
        if (needs_q) {
          try {
            dm = fit_dynamics(transition_samples(simulator ? flatten(sim_window) : data));
          } catch (const InputError&) {
          }
        }
      }

      if (!cfg.critic_include_current) {
        push(window, batch);
        if (simulator) push(sim_window, sim_batch);
      }

      std::unique_ptr<ModelQFunction> q;
      std::unique_ptr<ActionControlVariate> cv;
      EstimatorInputs in;
      if (needs_value) in.value = [&vm](const State& s) { return vm.value(s); };
      if (needs_q) {
        q = std::make_unique<ModelQFunction>(cfg.qvariant, vm, dm, env.cost(), gp);
        ExpectationMethod m = cfg.expectation;
        m.seed = derive_stream(cfg.seed, {3, static_cast<std::uint64_t>(it)})();
        cv = make_control_variate(*q, gp, m);
        in.cv = cv.get();
      }

      VectorXd grad = VectorXd::Zero(policy->param_dim());
      std::vector<double> rewards;
      std::vector<State> states;
      for (const auto& tr : batch) {
        grad += estimate(kind, tr, in).total;
        rewards.push_back(-tr.total_cost());
        states.insert(states.end(), tr.states.begin(), tr.states.end());
      }
      grad /= static_cast<double>(batch.size());
      if (!grad.allFinite()) throw NumericError("train: non-finite gradient estimate");

      CurveRow row;
      row.iteration = it;
      double sum = 0.0;
      for (double r : rewards) sum += r;
      row.reward_mean = sum / rewards.size();
      row.reward_p25 = quantile(rewards, 0.25);
      row.reward_p75 = quantile(rewards, 0.75);
      row.grad_norm = grad.norm();
      row.sigma = gp.sigma();
      curve.rows.push_back(row);

      const MatrixXd fisher = estimate_fisher(batch, cfg.damping, coordinate_scale(*policy, true));
      NaturalStepOptions opt;
      opt.lr = cfg.lr;
      const NaturalStepResult step = natural_step(*policy, grad, fisher, cfg.kl_limit, states, opt);
      policy = policy->with_params(step.params);
    } catch (const NumericError& e) {
      rethrow_at(e, it);
    } catch (const EstimationError& e) {
      rethrow_at(e, it);
    } catch (const UnsupportedError& e) {
      rethrow_at(e, it);
    } catch (const InputError& e) {
      rethrow_at(e, it);
    } catch (const ParameterError& e) {
      rethrow_at(e, it);
    }
  }
  return curve;
}

int iterations_to_threshold(const LearningCurve& curve, double threshold) {
  for (const auto& r : curve.rows)
    if (r.reward_mean >= threshold) return r.iteration;
  return static_cast<int>(curve.rows.size()) + 1;
}

}  // namespace trajcv
