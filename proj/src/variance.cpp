#include "trajcv/variance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

namespace trajcv {

// ---------------------------------------------------------------- exact tree

namespace {

// Walks the tree S_1, A_1, ..., S_h, A_h. Level 2(k-1) is S_k, level
// 2(k-1)+1 is A_k. terms_[level](t) accumulates
// E || E[G~_t | <= level] - E[G~_t | < level] ||^2.
class TreeDecomposer {
 public:
  TreeDecomposer(const TabularMDP& mdp, const SoftmaxPolicy& policy, const ComponentEstimator& est)
      : mdp_(mdp), policy_(policy), est_(est), h_(mdp.horizon) {
    terms_.assign(2 * h_, VectorXd::Zero(h_));
  }

  void run() {
    std::vector<MatrixXd> children;
    MatrixXd root;
    double total_p = 0.0;
    for (int s = 0; s < mdp_.n_states; ++s) {
      const double p = mdp_.p1(s);
      if (p <= 0.0) continue;
      traj_.states.push_back(State::tabular(s, 1));
      children.push_back(state_node(1, s, p));
      traj_.states.pop_back();
      root = root.size() ? MatrixXd(root + p * children.back()) : MatrixXd(p * children.back());
      total_p += p;
    }
    root /= total_p;
    int idx = 0;
    for (int s = 0; s < mdp_.n_states; ++s) {
      const double p = mdp_.p1(s);
      if (p <= 0.0) continue;
      terms_[0] += p * (children[idx++] - root).colwise().squaredNorm().transpose();
    }
  }

  const std::vector<VectorXd>& terms() const { return terms_; }

 private:
  // E[f | prefix through S_k = s]; prob is the prefix probability.
  MatrixXd state_node(int k, int s, double prob) {
    const VectorXd pi = policy_.probabilities(s);
    std::vector<MatrixXd> ea(pi.size());
    MatrixXd mean;
    for (int a = 0; a < pi.size(); ++a) {
      if (pi(a) <= 0.0) continue;
      const State st = State::tabular(s, k);
      const Action act = Action::discrete(a);
      traj_.actions.push_back(act);
      traj_.costs.push_back(mdp_.cost(s, a));
      traj_.scores.push_back(policy_.score(st, act));
      if (k == h_) {
        ea[a] = est_(traj_).per_t;
      } else {
        std::vector<std::pair<double, MatrixXd>> next;
        MatrixXd acc;
        for (int s2 = 0; s2 < mdp_.n_states; ++s2) {
          const double p = mdp_.p(s, a, s2);
          if (p <= 0.0) continue;
          traj_.states.push_back(State::tabular(s2, k + 1));
          MatrixXd e = state_node(k + 1, s2, prob * pi(a) * p);
          traj_.states.pop_back();
          acc = acc.size() ? MatrixXd(acc + p * e) : MatrixXd(p * e);
          next.emplace_back(p, std::move(e));
        }
        ea[a] = acc;
        const int level = 2 * k;  // S_{k+1}
        for (const auto& [p, e] : next)
          terms_[level] += prob * pi(a) * p * (e - acc).colwise().squaredNorm().transpose();
      }
      traj_.actions.pop_back();
      traj_.costs.pop_back();
      traj_.scores.pop_back();
      mean = mean.size() ? MatrixXd(mean + pi(a) * ea[a]) : MatrixXd(pi(a) * ea[a]);
    }
    const int level = 2 * (k - 1) + 1;  // A_k
    for (int a = 0; a < pi.size(); ++a) {
      if (pi(a) <= 0.0) continue;
      terms_[level] += prob * pi(a) * (ea[a] - mean).colwise().squaredNorm().transpose();
    }
    return mean;
  }

  const TabularMDP& mdp_;
  const SoftmaxPolicy& policy_;
  const ComponentEstimator& est_;
  int h_;
  Trajectory traj_;
  std::vector<VectorXd> terms_;
};

}  // namespace

std::vector<VarianceComponents> decompose_exact_all(const TabularMDP& mdp, const SoftmaxPolicy& policy,
                                                    const ComponentEstimator& estimator, double budget) {
  mdp.validate();
  check_enumeration_budget(mdp, budget);
  TreeDecomposer tree(mdp, policy, estimator);
  tree.run();
  const auto& terms = tree.terms();
  const int h = mdp.horizon;
  std::vector<VarianceComponents> out(h);
  for (int t = 1; t <= h; ++t) {
    VarianceComponents& c = out[t - 1];
    const int col = t - 1;
    c.t = t;
    for (int level = 0; level <= 2 * (t - 1); ++level) c.v_state += terms[level](col);
    c.v_action = terms[2 * (t - 1) + 1](col);
    for (int k = t; k <= h - 1; ++k) c.v_dyn.push_back(terms[2 * k](col));
    for (int k = t + 1; k <= h; ++k) c.v_act.push_back(terms[2 * (k - 1) + 1](col));
    for (double v : c.v_dyn) c.v_future += v;
    for (double v : c.v_act) c.v_future += v;
  }
  return out;
}

VarianceComponents decompose_exact(const TabularMDP& mdp, const SoftmaxPolicy& policy,
                                   const ComponentEstimator& estimator, int t, double budget) {
  if (t < 1 || t > mdp.horizon) throw InputError("decompose_exact: t out of range");
  return decompose_exact_all(mdp, policy, estimator, budget)[t - 1];
}

EnumeratedVariance enumerated_variance(const TabularMDP& mdp, const SoftmaxPolicy& policy,
                                       const ComponentEstimator& estimator, double budget) {
  const int h = mdp.horizon;
  const int p_dim = policy.param_dim();
  MatrixXd mean = MatrixXd::Zero(p_dim, h);
  for_each_trajectory(
      mdp, policy, [&](const Trajectory& tr, double p) { mean += p * estimator(tr).per_t; }, budget);
  EnumeratedVariance out;
  out.per_t.assign(h, 0.0);
  out.mean = mean.rowwise().sum();
  for_each_trajectory(
      mdp, policy,
      [&](const Trajectory& tr, double p) {
        const MatrixXd d = estimator(tr).per_t - mean;
        for (int t = 0; t < h; ++t) out.per_t[t] += p * d.col(t).squaredNorm();
        out.total += p * d.rowwise().sum().squaredNorm();
      },
      budget);
  return out;
}

// ---------------------------------------------------------------- sampled

namespace {

// Delete-one jackknife standard error of a statistic of n items.
double jackknife_se(const std::vector<double>& loo) {
  const double n = static_cast<double>(loo.size());
  const double m = std::accumulate(loo.begin(), loo.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : loo) ss += (x - m) * (x - m);
  return std::sqrt((n - 1.0) / n * ss);
}

double trace_var(const std::vector<VectorXd>& xs) {
  const int n = static_cast<int>(xs.size());
  VectorXd m = VectorXd::Zero(xs[0].size());
  for (const auto& x : xs) m += x;
  m /= n;
  double ss = 0.0;
  for (const auto& x : xs) ss += (x - m).squaredNorm();
  return ss / (n - 1);
}

}  // namespace

VarianceComponents decompose_sampled(const Environment& env, const Policy& policy,
                                     const ComponentEstimator& estimator, int t, const NestedSampleSizes& n,
                                     std::uint64_t seed) {
  if (t < 1 || t > env.horizon()) throw InputError("decompose_sampled: t out of range");
  if (n.n_outer < 3) throw InputError("decompose_sampled: n_outer must be >= 3");
  if (n.n_mid < 2) throw InputError("decompose_sampled: n_mid must be >= 2");
  if (n.n_inner < 2) throw InputError("decompose_sampled: n_inner must be >= 2");
  if (n.n_baseline < 0) throw InputError("decompose_sampled: n_baseline must be >= 0");
  if (static_cast<double>(n.n_outer) * n.n_mid * n.n_inner > 1e8)
    throw CapacityError("decompose_sampled: sample budget exceeds 1e8 rollouts");

  const int p_dim = policy.param_dim();
  const int no = n.n_outer;
  std::vector<VectorXd> F(no, VectorXd::Zero(p_dim));
  std::vector<double> A(no, 0.0), Aadj(no, 0.0), B(no, 0.0);
  int alive = 0;

  for (int i = 0; i < no; ++i) {
    Rng roll_in = derive_stream(seed, {0x01ULL, static_cast<std::uint64_t>(i)});
    State s = env.initial_state(roll_in);
    bool ended = false;
    for (int k = 1; k < t; ++k) {
      const StepResult r = env.step(s, policy.sample(s, roll_in), roll_in);
      if (!r.next.values.allFinite()) throw NumericError("non-finite state during roll-in", k);
      s = r.next;
      if (r.done) {
        ended = true;
        break;
      }
    }
    if (ended) continue;  // G~_t = 0 for every draw
    ++alive;

    double b = 0.0;
    for (int k = 0; k < n.n_baseline; ++k) {
      Rng rb = derive_stream(seed, {0x04ULL, static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(k)});
      b += rollout_from(env, policy, s, nullptr, rb).total_cost();
    }
    if (n.n_baseline > 0) b /= n.n_baseline;

    std::vector<VectorXd> fbar(n.n_mid), fadj(n.n_mid);
    double s2_sum = 0.0;
    for (int j = 0; j < n.n_mid; ++j) {
      Rng rj = derive_stream(seed, {0x02ULL, static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(j)});
      const Action a = policy.sample(s, rj);
      std::vector<VectorXd> inner(n.n_inner);
      for (int k = 0; k < n.n_inner; ++k) {
        Rng rk = derive_stream(seed, {0x03ULL, static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(j),
                                      static_cast<std::uint64_t>(k)});
        const Trajectory tr = rollout_from(env, policy, s, &a, rk);
        inner[k] = estimator(tr).per_t.col(0);
      }
      VectorXd m = VectorXd::Zero(p_dim);
      for (const auto& x : inner) m += x;
      fbar[j] = m / n.n_inner;
      fadj[j] = n.n_baseline > 0 ? VectorXd(fbar[j] - b * policy.score(s, a)) : fbar[j];
      s2_sum += trace_var(inner);
    }
    VectorXd fm = VectorXd::Zero(p_dim);
    for (const auto& x : fadj) fm += x;
    F[i] = fm / n.n_mid;
    A[i] = trace_var(fbar);
    Aadj[i] = n.n_baseline > 0 ? trace_var(fadj) : A[i];
    B[i] = s2_sum / n.n_mid;
  }
  if (alive == 0)
    throw EstimationError("decompose_sampled: every outer rollout terminated before t = " + std::to_string(t));

  const double dn = no;
  const double sum_a = std::accumulate(A.begin(), A.end(), 0.0);
  const double sum_b = std::accumulate(B.begin(), B.end(), 0.0);
  const double sum_adj = std::accumulate(Aadj.begin(), Aadj.end(), 0.0);
  VectorXd s1 = VectorXd::Zero(p_dim);
  double s2 = 0.0;
  for (const auto& f : F) {
    s1 += f;
    s2 += f.squaredNorm();
  }
  auto var_f = [&](const VectorXd& sum, double sq, double count) {
    return (sq - sum.squaredNorm() / count) / (count - 1.0);
  };

  VarianceComponents c;
  c.t = t;
  c.v_future = sum_b / dn;
  c.v_action = (sum_a - sum_b / n.n_inner) / dn;
  c.v_state = var_f(s1, s2, dn) - sum_adj / dn / n.n_mid;

  std::vector<double> loo_s(no), loo_a(no), loo_f(no);
  for (int i = 0; i < no; ++i) {
    const double m = dn - 1.0;
    loo_f[i] = (sum_b - B[i]) / m;
    loo_a[i] = ((sum_a - A[i]) - (sum_b - B[i]) / n.n_inner) / m;
    loo_s[i] = var_f(s1 - F[i], s2 - F[i].squaredNorm(), m) - (sum_adj - Aadj[i]) / m / n.n_mid;
  }
  c.se_state = jackknife_se(loo_s);
  c.se_action = jackknife_se(loo_a);
  c.se_future = jackknife_se(loo_f);
  return c;
}

SigmaScan theorem1_scan(const Environment& env, const PolicyFactory& make_policy,
                           const std::vector<double>& sigmas, int t, const NestedSampleSizes& n,
                           std::uint64_t seed, const EstimatorFactory& make_estimator) {
  if (sigmas.size() < 2) throw InputError("theorem1_scan: need at least two sigma values");
  SigmaScan scan;
  for (double sigma : sigmas) {
    if (!(sigma > 0.0)) throw ParameterError("theorem1_scan: sigma must be positive");
    const auto policy = make_policy(sigma);
    const ComponentEstimator est = make_estimator(*policy);
    // Same seed at every sigma: common random numbers across the scan.
    scan.rows.push_back({sigma, decompose_sampled(env, *policy, est, t, n, seed)});
  }
  auto slope = [&](auto get) {
    std::vector<double> xs, ys;
    for (const auto& r : scan.rows) {
      const double v = get(r.components);
      if (!(v > 0.0)) return std::numeric_limits<double>::quiet_NaN();
      xs.push_back(std::log(r.sigma));
      ys.push_back(std::log(v));
    }
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / ys.size();
    double sxy = 0.0, sxx = 0.0;
    for (size_t i = 0; i < xs.size(); ++i) {
      sxy += (xs[i] - mx) * (ys[i] - my);
      sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    return sxy / sxx;
  };
  scan.slope_state = slope([](const VarianceComponents& c) { return c.v_state; });
  scan.slope_action = slope([](const VarianceComponents& c) { return c.v_action; });
  scan.slope_future = slope([](const VarianceComponents& c) { return c.v_future; });
  return scan;
}

// ---------------------------------------------------------------- chains

JointTable chain_joint(const ChainSpec& chain) {
  const int n = static_cast<int>(chain.variables.size());
  if (n == 0) throw InputError("chain: no variables");
  if (!chain.f) throw InputError("chain: missing target function");
  JointTable table;
  table.n_vars = n;
  for (const auto& v : chain.variables) {
    if (v.support < 1) throw InputError("chain: variable " + v.name + " has empty support");
    table.support.push_back(v.support);
  }
  std::vector<int> vals;
  std::function<void(int, double)> rec = [&](int k, double p) {
    if (k == n) {
      table.values.push_back(vals);
      table.prob.push_back(p);
      table.f.push_back(VectorXd::Constant(1, chain.f(vals)));
      return;
    }
    const auto q = chain.variables[k].conditional(vals);
    if (static_cast<int>(q.size()) != table.support[k])
      throw InputError("chain: conditional of " + chain.variables[k].name + " has wrong size");
    double sum = 0.0;
    for (double x : q) {
      if (x < 0.0) throw InputError("chain: negative probability for " + chain.variables[k].name);
      sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-12) throw InputError("chain: conditional of " + chain.variables[k].name + " not normalized");
    for (int x = 0; x < table.support[k]; ++x) {
      if (q[x] <= 0.0) continue;
      vals.push_back(x);
      rec(k + 1, p * q[x]);
      vals.pop_back();
    }
  };
  rec(0, 1.0);
  return table;
}

namespace {

using Key = std::vector<int>;

Key prefix_key(const std::vector<int>& values, const std::vector<int>& order, int len) {
  Key k(len);
  for (int i = 0; i < len; ++i) k[i] = values[order[i]];
  return k;
}

// Conditional means E[f | X_order[0..len)] keyed by the prefix values.
std::map<Key, VectorXd> group_means(const JointTable& table, const std::vector<int>& order, int len) {
  std::map<Key, std::pair<double, VectorXd>> acc;
  for (size_t o = 0; o < table.prob.size(); ++o) {
    auto [it, fresh] = acc.try_emplace(prefix_key(table.values[o], order, len), 0.0, VectorXd());
    it->second.first += table.prob[o];
    if (fresh)
      it->second.second = table.prob[o] * table.f[o];
    else
      it->second.second += table.prob[o] * table.f[o];
  }
  std::map<Key, VectorXd> out;
  for (auto& [k, v] : acc) out.emplace(k, v.second / v.first);
  return out;
}

void check_order(const JointTable& table, const std::vector<int>& order) {
  if (static_cast<int>(order.size()) != table.n_vars) throw InputError("ordering: wrong number of variables");
  std::vector<int> sorted = order;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < table.n_vars; ++i)
    if (sorted[i] != i) throw InputError("ordering: not a permutation of the variables");
}

}  // namespace

std::vector<double> decompose_joint(const JointTable& table, const std::vector<int>& order) {
  check_order(table, order);
  const int n = table.n_vars;
  std::vector<std::map<Key, VectorXd>> means(n + 1);
  for (int len = 0; len <= n; ++len) means[len] = group_means(table, order, len);
  std::vector<double> terms(n, 0.0);
  for (size_t o = 0; o < table.prob.size(); ++o) {
    const VectorXd* prev = &means[0].at(Key{});
    for (int j = 0; j < n; ++j) {
      const VectorXd& cur = means[j + 1].at(prefix_key(table.values[o], order, j + 1));
      terms[j] += table.prob[o] * (cur - *prev).squaredNorm();
      prev = &cur;
    }
  }
  return terms;
}

double joint_trace_variance(const JointTable& table) {
  VectorXd mean = VectorXd::Zero(table.f.at(0).size());
  for (size_t o = 0; o < table.prob.size(); ++o) mean += table.prob[o] * table.f[o];
  double v = 0.0;
  for (size_t o = 0; o < table.prob.size(); ++o) v += table.prob[o] * (table.f[o] - mean).squaredNorm();
  return v;
}

ChainDecomposition chain_decompose(const ChainSpec& chain) {
  const JointTable table = chain_joint(chain);
  std::vector<int> order(table.n_vars);
  std::iota(order.begin(), order.end(), 0);
  return {decompose_joint(table, order), joint_trace_variance(table)};
}

std::pair<double, double> conditional_variance_sides(const VectorXd& px, const VectorXd& py, const MatrixXd& f) {
  if (f.rows() != px.size() || f.cols() != py.size()) throw InputError("conditional_variance_sides: shape mismatch");
  if (std::abs(px.sum() - 1.0) > 1e-12 || std::abs(py.sum() - 1.0) > 1e-12 || (px.array() < 0).any() ||
      (py.array() < 0).any())
    throw InputError("conditional_variance_sides: marginals must be probability vectors");
  const VectorXd g = f * py;  // E_Y f(x, Y)
  const double gm = px.dot(g);
  const double lhs = px.dot((g.array() - gm).square().matrix());
  double rhs = 0.0;
  for (int y = 0; y < py.size(); ++y) {
    const double m = px.dot(f.col(y));
    rhs += py(y) * px.dot((f.col(y).array() - m).square().matrix());
  }
  return {lhs, rhs};
}

// ---------------------------------------------------------------- orderings

std::string OrderingSpec::to_string() const {
  std::ostringstream os;
  for (size_t i = 0; i < sequence.size(); ++i) os << (i ? " " : "") << (sequence[i].is_state ? 'S' : 'R') << sequence[i].step;
  return os.str();
}

bool is_feasible(const std::vector<OrderingVar>& seq, int t, int h) {
  const int n = 2 * (h - t + 1);
  if (static_cast<int>(seq.size()) != n) return false;
  if (!(seq[0] == OrderingVar{true, t})) return false;
  std::vector<int> pos_s(h + 1, -1), pos_r(h + 1, -1);
  for (int i = 0; i < n; ++i) {
    const auto& v = seq[i];
    if (v.step < t || v.step > h) return false;
    int& slot = v.is_state ? pos_s[v.step] : pos_r[v.step];
    if (slot >= 0) return false;
    slot = i;
  }
  for (int k = t; k <= h; ++k)
    for (int k2 = k + 1; k2 <= h; ++k2)
      if (pos_r[k] > pos_s[k2]) return false;
  return true;
}

OrderingSpec natural_ordering(int t, int h) {
  OrderingSpec o;
  for (int k = t; k <= h; ++k) {
    o.sequence.push_back({true, k});
    o.sequence.push_back({false, k});
  }
  o.feasible = is_feasible(o.sequence, t, h);
  return o;
}

OrderingSpec randomness_first_ordering(int t, int h) {
  OrderingSpec o;
  o.sequence.push_back({true, t});
  for (int k = t; k <= h; ++k) o.sequence.push_back({false, k});
  for (int k = t + 1; k <= h; ++k) o.sequence.push_back({true, k});
  o.feasible = is_feasible(o.sequence, t, h);
  return o;
}

std::vector<OrderingSpec> all_orderings(int t, int h) {
  if (t < 1 || h < t) throw InputError("all_orderings: need 1 <= t <= h");
  if (h - t + 1 > 4) throw CapacityError("all_orderings: window h - t + 1 must be <= 4");
  std::vector<OrderingVar> rest;
  for (int k = t; k <= h; ++k) {
    if (k > t) rest.push_back({true, k});
    rest.push_back({false, k});
  }
  // Permute indices so std::next_permutation sees a total order.
  std::vector<int> idx(rest.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<OrderingSpec> out;
  do {
    OrderingSpec o;
    o.sequence.push_back({true, t});
    for (int i : idx) o.sequence.push_back(rest[i]);
    o.feasible = is_feasible(o.sequence, t, h);
    out.push_back(std::move(o));
  } while (std::next_permutation(idx.begin(), idx.end()));
  return out;
}

std::vector<OrderingSpec> feasible_orderings(int t, int h) {
  std::vector<OrderingSpec> out;
  for (auto& o : all_orderings(t, h))
    if (o.feasible) out.push_back(std::move(o));
  return out;
}

SoftmaxPolicy FiniteReparamPolicy::induced_policy(int n_actions) const {
  MatrixXd logits(static_cast<int>(omega.size()), n_actions);
  for (size_t s = 0; s < omega.size(); ++s) {
    if (static_cast<int>(omega[s].size()) != n_r) throw InputError("reparam policy: omega row has wrong length");
    std::vector<int> count(n_actions, 0);
    for (int a : omega[s]) {
      if (a < 0 || a >= n_actions) throw InputError("reparam policy: action out of range");
      ++count[a];
    }
    for (int a = 0; a < n_actions; ++a) {
      if (count[a] == 0) throw InputError("reparam policy: every action needs positive probability");
      logits(static_cast<int>(s), a) = std::log(static_cast<double>(count[a]) / n_r);
    }
  }
  return SoftmaxPolicy(logits);
}

FiniteReparamPolicy random_reparam_policy(int n_states, int n_actions, int n_r, Rng& rng) {
  if (n_r < n_actions) throw InputError("random_reparam_policy: n_r must be >= n_actions");
  FiniteReparamPolicy p;
  p.n_r = n_r;
  std::uniform_int_distribution<int> pick(0, n_actions - 1);
  for (int s = 0; s < n_states; ++s) {
    std::vector<int> row(n_r);
    for (int r = 0; r < n_r; ++r) row[r] = r < n_actions ? r : pick(rng);
    std::shuffle(row.begin(), row.end(), rng);
    p.omega.push_back(row);
  }
  return p;
}

JointTable window_table(const TabularMDP& mdp, const FiniteReparamPolicy& rp, int t) {
  mdp.validate();
  const int h = mdp.horizon;
  if (t < 1 || t > h) throw InputError("window_table: t out of range");
  if (static_cast<int>(rp.omega.size()) != mdp.n_states) throw InputError("window_table: omega state count mismatch");
  const int w = h - t + 1;
  if (std::pow(static_cast<double>(mdp.n_states) * rp.n_r, w) > kDefaultEnumerationBudget)
    throw CapacityError("window_table: joint table exceeds enumeration budget");
  const SoftmaxPolicy pi = rp.induced_policy(mdp.n_actions);
  const VectorXd marg = state_marginals(mdp, pi)[t - 1];

  JointTable table;
  table.n_vars = 2 * w;
  table.support.assign(w, mdp.n_states);
  table.support.insert(table.support.end(), w, rp.n_r);
  std::vector<int> vals(2 * w, 0);
  VectorXd score0;
  std::function<void(int, int, double, double)> rec = [&](int k, int s, double p, double c) {
    vals[k - t] = s;
    for (int r = 0; r < rp.n_r; ++r) {
      const int a = rp.omega[s][r];
      vals[w + (k - t)] = r;
      const double pr = p / rp.n_r;
      if (k == t) score0 = pi.score(State::tabular(s, t), Action::discrete(a));
      const double c2 = c + mdp.cost(s, a);
      if (k == h) {
        table.values.push_back(vals);
        table.prob.push_back(pr);
        table.f.push_back(score0 * c2);
        continue;
      }
      for (int s2 = 0; s2 < mdp.n_states; ++s2) {
        const double q = mdp.p(s, a, s2);
        if (q > 0.0) rec(k + 1, s2, pr * q, c2);
      }
    }
  };
  for (int s = 0; s < mdp.n_states; ++s)
    if (marg(s) > 0.0) rec(t, s, marg(s), 0.0);
  return table;
}

std::vector<int> ordering_ids(const OrderingSpec& ordering, int t, int h) {
  const int w = h - t + 1;
  std::vector<int> ids;
  for (const auto& v : ordering.sequence) {
    if (v.step < t || v.step > h) throw InputError("ordering: step outside the window");
    ids.push_back(v.is_state ? v.step - t : w + v.step - t);
  }
  return ids;
}

double ordering_residue(const JointTable& table, const OrderingSpec& ordering, int t, int h) {
  if (!is_feasible(ordering.sequence, t, h))
    throw InputError("ordering " + ordering.to_string() + " is infeasible: R_k must precede S_{k+1..h}");
  if (h - t > 2) throw CapacityError("ordering_residue: window h - t must be <= 2");
  const std::vector<int> ids = ordering_ids(ordering, t, h);
  check_order(table, ids);
  const int n = table.n_vars;

  JointTable residual = table;
  for (int j = 0; j < n; ++j) {
    if (ordering.sequence[j].is_state) continue;
    const auto means = group_means(table, ids, j + 1);
    const int n_r = table.support[ids[j]];
    for (size_t o = 0; o < table.prob.size(); ++o) {
      Key key = prefix_key(table.values[o], ids, j + 1);
      const VectorXd& cur = means.at(key);
      VectorXd avg = VectorXd::Zero(cur.size());
      for (int r = 0; r < n_r; ++r) {
        key[j] = r;
        const auto it = means.find(key);
        if (it == means.end()) throw NumericError("ordering residue: missing randomness branch");
        avg += it->second;
      }
      residual.f[o] -= cur - avg / n_r;
    }
  }
  const std::vector<double> terms = decompose_joint(residual, ids);
  double total = 0.0;
  for (double x : terms) total += x;
  return total - terms[0];
}

double ordering_residue(const TabularMDP& mdp, const FiniteReparamPolicy& policy, const OrderingSpec& ordering,
                        int t) {
  return ordering_residue(window_table(mdp, policy, t), ordering, t, mdp.horizon);
}

VarianceBound variance_bound_check(const TabularMDP& mdp, const SoftmaxPolicy& policy) {
  const EnumeratedVariance ev = enumerated_variance(mdp, policy, [](const Trajectory& tr) { return pg_vanilla(tr); });
  VarianceBound b;
  b.lhs = ev.total;
  for (double v : ev.per_t) b.rhs += v;
  b.rhs *= mdp.horizon;
  b.holds = b.lhs <= b.rhs + 1e-10;
  return b;
}

}  // namespace trajcv
