#include "trajcv/tabular.hpp"

#include <cmath>

namespace trajcv {

void TabularMDP::validate() const {
  if (n_states < 1 || n_actions < 1 || horizon < 1) throw InputError("tabular mdp: sizes must be positive");
  if (static_cast<int>(transition.size()) != n_states) throw InputError("tabular mdp: transition tensor size");
  for (int s = 0; s < n_states; ++s) {
    const MatrixXd& row = transition[s];
    if (row.rows() != n_actions || row.cols() != n_states) throw InputError("tabular mdp: transition tensor shape");
    for (int a = 0; a < n_actions; ++a) {
      if ((row.row(a).array() < 0.0).any()) throw InputError("tabular mdp: negative transition probability");
      if (std::abs(row.row(a).sum() - 1.0) > 1e-12) throw InputError("tabular mdp: transition row not normalized");
    }
  }
  if (cost.rows() != n_states || cost.cols() != n_actions || !cost.allFinite()) throw InputError("tabular mdp: cost table");
  if (p1.size() != n_states || (p1.array() < 0.0).any() || std::abs(p1.sum() - 1.0) > 1e-12)
    throw InputError("tabular mdp: initial distribution not normalized");
}

TabularEnv::TabularEnv(TabularMDP mdp) : mdp_(std::move(mdp)) { mdp_.validate(); }

State TabularEnv::initial_state(Rng& rng) const { return State::tabular(sample_categorical(mdp_.p1, rng), 1); }

double TabularEnv::value(const State& s, const Action& a) const { return mdp_.cost(s.tabular_index(), *a.index); }

StepResult TabularEnv::step(const State& s, const Action& a, Rng& rng) const {
  check_step_args(s, a);
  const int st = s.tabular_index();
  const VectorXd row = mdp_.transition[st].row(*a.index).transpose();
  StepResult r;
  r.cost = mdp_.cost(st, *a.index);
  r.next = State::tabular(sample_categorical(row, rng), s.time_index + 1);
  r.done = s.time_index + 1 > mdp_.horizon;
  return r;
}

void check_enumeration_budget(const TabularMDP& mdp, double budget) {
  const double leaves = std::pow(static_cast<double>(mdp.n_states) * mdp.n_actions, mdp.horizon);
  if (leaves > budget) throw CapacityError("enumeration budget exceeded: " + std::to_string(leaves) + " paths");
}

namespace {

struct Enumerator {
  const TabularMDP& mdp;
  const SoftmaxPolicy& policy;
  const std::function<void(const Trajectory&, double)>& visit;
  Trajectory traj;

  void expand_state(int s, int t, double prob) {
    const State st = State::tabular(s, t);
    const VectorXd pi = policy.probabilities(s);
    for (int a = 0; a < mdp.n_actions; ++a) {
      if (pi(a) <= 0.0) continue;
      const Action act = Action::discrete(a);
      traj.states.push_back(st);
      traj.actions.push_back(act);
      traj.costs.push_back(mdp.cost(s, a));
      traj.scores.push_back(policy.score(st, act));
      const double pa = prob * pi(a);
      if (t == mdp.horizon) {
        visit(traj, pa);
      } else {
        for (int s2 = 0; s2 < mdp.n_states; ++s2) {
          const double ps = mdp.p(s, a, s2);
          if (ps > 0.0) expand_state(s2, t + 1, pa * ps);
        }
      }
      traj.states.pop_back();
      traj.actions.pop_back();
      traj.costs.pop_back();
      traj.scores.pop_back();
    }
  }
};

}  // namespace

void for_each_trajectory(const TabularMDP& mdp, const SoftmaxPolicy& policy,
                         const std::function<void(const Trajectory&, double)>& visit, double budget) {
  mdp.validate();
  check_enumeration_budget(mdp, budget);
  if (policy.n_states() != mdp.n_states || policy.n_actions() != mdp.n_actions)
    throw InputError("enumeration: policy does not match mdp");
  Enumerator e{mdp, policy, visit, {}};
  for (int s = 0; s < mdp.n_states; ++s)
    if (mdp.p1(s) > 0.0) e.expand_state(s, 1, mdp.p1(s));
}

std::vector<std::pair<Trajectory, double>> enumerate_trajectories(const TabularMDP& mdp, const SoftmaxPolicy& policy,
                                                                  double budget) {
  std::vector<std::pair<Trajectory, double>> out;
  for_each_trajectory(
      mdp, policy, [&](const Trajectory& tr, double p) { out.emplace_back(tr, p); }, budget);
  return out;
}

double enumerated_objective(const TabularMDP& mdp, const SoftmaxPolicy& policy, double budget) {
  double j = 0.0;
  for_each_trajectory(
      mdp, policy, [&](const Trajectory& tr, double p) { j += p * tr.total_cost(); }, budget);
  return j;
}

VectorXd exact_policy_gradient(const TabularMDP& mdp, const SoftmaxPolicy& policy, double budget) {
  VectorXd g = VectorXd::Zero(policy.param_dim());
  for_each_trajectory(
      mdp, policy,
      [&](const Trajectory& tr, double p) {
        const auto suffix = tr.suffix_costs();
        for (int t = 0; t < tr.length(); ++t) g += p * suffix[t] * tr.scores[t];
      },
      budget);
  return g;
}

std::vector<MatrixXd> q_pi(const TabularMDP& mdp, const SoftmaxPolicy& policy) {
  std::vector<MatrixXd> q(mdp.horizon, MatrixXd::Zero(mdp.n_states, mdp.n_actions));
  VectorXd v_next = VectorXd::Zero(mdp.n_states);
  for (int t = mdp.horizon - 1; t >= 0; --t) {
    VectorXd v(mdp.n_states);
    for (int s = 0; s < mdp.n_states; ++s) {
      for (int a = 0; a < mdp.n_actions; ++a) q[t](s, a) = mdp.cost(s, a) + mdp.transition[s].row(a).dot(v_next);
      v(s) = policy.probabilities(s).dot(q[t].row(s).transpose());
    }
    v_next = v;
  }
  return q;
}

std::vector<VectorXd> v_pi(const TabularMDP& mdp, const SoftmaxPolicy& policy) {
  const auto q = q_pi(mdp, policy);
  std::vector<VectorXd> v(mdp.horizon, VectorXd::Zero(mdp.n_states));
  for (int t = 0; t < mdp.horizon; ++t)
    for (int s = 0; s < mdp.n_states; ++s) v[t](s) = policy.probabilities(s).dot(q[t].row(s).transpose());
  return v;
}

std::vector<VectorXd> state_marginals(const TabularMDP& mdp, const SoftmaxPolicy& policy) {
  std::vector<VectorXd> d(mdp.horizon);
  d[0] = mdp.p1;
  for (int t = 1; t < mdp.horizon; ++t) {
    d[t] = VectorXd::Zero(mdp.n_states);
    for (int s = 0; s < mdp.n_states; ++s) {
      const VectorXd pi = policy.probabilities(s);
      for (int a = 0; a < mdp.n_actions; ++a) d[t] += d[t - 1](s) * pi(a) * mdp.transition[s].row(a).transpose();
    }
  }
  return d;
}

TabularMDP random_tabular_mdp(const RandomMdpOptions& opt, Rng& rng) {
  TabularMDP m;
  m.n_states = opt.n_states;
  m.n_actions = opt.n_actions;
  m.horizon = opt.horizon;
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::uniform_int_distribution<int> pick(0, opt.n_states - 1);
  m.transition.assign(opt.n_states, MatrixXd::Zero(opt.n_actions, opt.n_states));
  for (int s = 0; s < opt.n_states; ++s)
    for (int a = 0; a < opt.n_actions; ++a) {
      if (opt.deterministic) {
        m.transition[s](a, pick(rng)) = 1.0;
      } else {
        for (int s2 = 0; s2 < opt.n_states; ++s2) m.transition[s](a, s2) = u(rng);
        m.transition[s].row(a) /= m.transition[s].row(a).sum();
      }
    }
  std::uniform_real_distribution<double> c(-1.0, 1.0);
  m.cost = MatrixXd(opt.n_states, opt.n_actions);
  for (int s = 0; s < opt.n_states; ++s)
    for (int a = 0; a < opt.n_actions; ++a) m.cost(s, a) = c(rng);
  m.p1 = VectorXd(opt.n_states);
  for (int s = 0; s < opt.n_states; ++s) m.p1(s) = u(rng);
  m.p1 /= m.p1.sum();
  return m;
}

SoftmaxPolicy random_softmax_policy(int n_states, int n_actions, double scale, Rng& rng) {
  std::normal_distribution<double> n(0.0, scale);
  MatrixXd z(n_states, n_actions);
  for (int s = 0; s < n_states; ++s)
    for (int a = 0; a < n_actions; ++a) z(s, a) = n(rng);
  return SoftmaxPolicy(z);
}

}  // namespace trajcv
