#include "trajcv/environment.hpp"

namespace trajcv {

VectorXd CostFn::grad_action(const State&, const VectorXd&) const {
  throw UnsupportedError("cost function does not provide action derivatives");
}

MatrixXd CostFn::hess_action(const State&, const VectorXd&) const {
  throw UnsupportedError("cost function does not provide action derivatives");
}

void Environment::check_step_args(const State& s, const Action& a) const {
  if (s.time_index < 1 || s.time_index > horizon()) throw InputError("step: time index outside [1, h]");
  const ActionSpace sp = action_space();
  if (sp.discrete) {
    if (!a.is_discrete() || *a.index < 0 || *a.index >= sp.n_actions) throw InputError("step: invalid discrete action");
  } else {
    if (a.is_discrete() || a.values.size() != sp.dim) throw InputError("step: invalid action dimension");
    if (!a.values.allFinite()) throw InputError("step: non-finite action");
  }
}

namespace {

Trajectory run(const Environment& env, const Policy& policy, State s, const Action* first_action, Rng& rng, int h) {
  Trajectory traj;
  const int reserve = h - s.time_index + 1;
  if (reserve > 0) {
    traj.states.reserve(reserve);
    traj.actions.reserve(reserve);
    traj.costs.reserve(reserve);
    traj.scores.reserve(reserve);
  }
  bool first = true;
  while (s.time_index <= h) {
    if (!s.values.allFinite()) throw NumericError("rollout: non-finite state", s.time_index);
    Action a = (first && first_action) ? *first_action : policy.sample(s, rng);
    first = false;
    VectorXd score = policy.score(s, a);
    StepResult r = env.step(s, a, rng);
    traj.states.push_back(std::move(s));
    traj.actions.push_back(std::move(a));
    traj.costs.push_back(r.cost);
    traj.scores.push_back(std::move(score));
    if (r.done) break;
    s = std::move(r.next);
  }
  return traj;
}

}  // namespace

Trajectory rollout(const Environment& env, const Policy& policy, Rng& rng, int h) {
  const int horizon = (h <= 0 || h > env.horizon()) ? env.horizon() : h;
  if (policy.action_space().discrete != env.action_space().discrete) throw InputError("rollout: action space mismatch");
  return run(env, policy, env.initial_state(rng), nullptr, rng, horizon);
}

Trajectory rollout_from(const Environment& env, const Policy& policy, const State& start, const Action* first_action,
                        Rng& rng) {
  return run(env, policy, start, first_action, rng, env.horizon());
}

}  // namespace trajcv
