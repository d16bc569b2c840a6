#include "trajcv/cli/commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <memory>

#include "trajcv/cartpole.hpp"
#include "trajcv/cli/config.hpp"
#include "trajcv/cli/output.hpp"
#include "trajcv/lqg.hpp"
#include "trajcv/oracle.hpp"
#include "trajcv/trainer.hpp"
#include "trajcv/variance.hpp"

namespace trajcv::cli {

namespace fs = std::filesystem;

const std::set<std::string>& allowed_keys() {
  static const std::set<std::string> keys = {
      "general.seed", "general.threads",
      "env.kind", "env.horizon",
      "cartpole.mass_cart", "cartpole.mass_pole", "cartpole.half_length", "cartpole.gravity", "cartpole.dt",
      "cartpole.threshold", "cartpole.start_offset", "cartpole.force_scale",
      "lqg.dim", "lqg.a", "lqg.b", "lqg.w", "lqg.q", "lqg.r", "lqg.init_cov",
      "policy.sigma", "policy.feature_degree", "policy.gain",
      "estimator.kinds", "estimator.qvariant", "estimator.qvariant_sa", "estimator.qvariant_trajcv",
      "estimator.expectation", "estimator.mc_samples", "estimator.crn",
      "estimator.chain_rule",
      "variance.t", "variance.sigmas", "variance.n_outer", "variance.n_mid", "variance.n_inner",
      "variance.n_baseline", "variance.estimator",
      "trainer.iterations", "trainer.rollouts", "trainer.kl_limit", "trainer.damping", "trainer.lr",
      "trainer.seeds", "trainer.critic_window", "trainer.value_time_feature", "trainer.biased_simulator",
      "trainer.simulator_factor", "trainer.upper_bound", "trainer.upper_bound_rollouts",
      "trainer.threshold_fraction", "trainer.critic_include_current",
      "tabular.n_states", "tabular.n_actions", "tabular.horizon", "tabular.deterministic", "tabular.policy_scale",
      "ordering.t", "ordering.n_r",
      "oracle.mdp_instances", "oracle.inequality_instances", "oracle.ordering_instances", "oracle.fault",
      "chain.variables", "chain.max_support",
  };
  return keys;
}

namespace {

struct Context {
  Config cfg;
  fs::path out;
  std::uint64_t seed = 0;
  int threads = 1;
};

// ---------------------------------------------------------------- builders

struct EnvBundle {
  std::string kind;
  std::unique_ptr<Environment> env;
  LqgConfig lqg;  // valid when kind == "lqg"
};

EnvBundle build_env(const Config& c, const std::string& default_kind) {
  EnvBundle b;
  b.kind = c.get_string("env.kind", default_kind);
  if (b.kind == "cartpole") {
    CartPoleConfig p;
    p.horizon = c.get_int("env.horizon", 200);
    p.mass_cart = c.get_double("cartpole.mass_cart", p.mass_cart);
    p.mass_pole = c.get_double("cartpole.mass_pole", p.mass_pole);
    p.half_length = c.get_double("cartpole.half_length", p.half_length);
    p.gravity = c.get_double("cartpole.gravity", p.gravity);
    p.dt = c.get_double("cartpole.dt", p.dt);
    p.threshold = c.get_double("cartpole.threshold", p.threshold);
    p.start_offset = c.get_double("cartpole.start_offset", p.start_offset);
    p.force_scale = c.get_double("cartpole.force_scale", 10.0);
    b.env = std::make_unique<CartPole>(p);
  } else if (b.kind == "lqg") {
    const int n = c.get_int("lqg.dim", 1);
    if (n < 1) throw ConfigError("lqg.dim must be >= 1");
    const MatrixXd I = MatrixXd::Identity(n, n);
    LqgConfig& l = b.lqg;
    l.horizon = c.get_int("env.horizon", 50);
    l.A = c.get_double("lqg.a", 0.9) * I;
    l.B = c.get_double("lqg.b", 0.2) * I;
    l.W = c.get_double("lqg.w", 0.1) * I;
    l.Q = c.get_double("lqg.q", 1.0) * I;
    l.R = c.get_double("lqg.r", 0.01) * I;
    l.init_cov = c.get_double("lqg.init_cov", 1.0) * I;
    b.env = std::make_unique<Lqg>(l);
  } else {
    throw ConfigError("env.kind must be cartpole or lqg here, got '" + b.kind + "'");
  }
  return b;
}

TabularMDP build_tabular(const Config& c, Rng& rng, bool default_deterministic = false) {
  RandomMdpOptions o;
  o.n_states = c.get_int("tabular.n_states", 3);
  o.n_actions = c.get_int("tabular.n_actions", 2);
  o.horizon = c.get_int("tabular.horizon", 3);
  o.deterministic = c.get_bool("tabular.deterministic", default_deterministic);
  if (o.n_states < 1 || o.n_actions < 1 || o.horizon < 1) throw ConfigError("tabular sizes must be >= 1");
  return random_tabular_mdp(o, rng);
}

// Linear Gaussian policy mu = -gain s for LQG, zero-initialized otherwise.
std::unique_ptr<GaussianPolicy> build_policy(const Config& c, const EnvBundle& e, double sigma) {
  const int ds = e.env->state_dim();
  const int da = e.env->action_space().dim;
  const FeatureMap fm{ds, c.get_int("policy.feature_degree", 1)};
  if (fm.degree < 1 || fm.degree > 2) throw ConfigError("policy.feature_degree must be 1 or 2");
  MatrixXd theta = MatrixXd::Zero(fm.dim(), da);
  if (e.kind == "lqg") {
    const double gain = c.get_double("policy.gain", 0.5);
    for (int i = 0; i < std::min(ds, da); ++i) theta(i, i) = -gain;
  }
  return std::make_unique<GaussianPolicy>(fm, theta, sigma);
}

// Sampled-decomposition estimator for a continuous task. LQG supports every
// estimator through its exact value and Q functions; cart-pole only vanilla.
EstimatorFactory continuous_estimator(const Config& c, const EnvBundle& e, EstimatorKind kind) {
  if (kind == EstimatorKind::vanilla) return [](const Policy&) -> ComponentEstimator { return pg_vanilla; };
  if (e.kind != "lqg") throw ConfigError("only the vanilla estimator can be decomposed on " + e.kind);
  const double gain = c.get_double("policy.gain", 0.5);
  const LqgConfig lqg = e.lqg;
  return [lqg, gain, kind](const Policy& p) -> ComponentEstimator {
    const GaussianPolicy& g = as_gaussian(p);
    const int n = lqg.state_dim();
    const MatrixXd K = -gain * MatrixXd::Identity(lqg.action_dim(), n);
    auto values = std::make_shared<std::vector<QuadraticForm>>(
        lqg_linear_policy_values(lqg, K, VectorXd::Zero(lqg.action_dim()), g.sigma()));
    if (kind == EstimatorKind::state_cv)
      return [values](const Trajectory& tr) {
        return pg_state_cv(tr, [&](const State& s) { return (*values)[s.time_index - 1](s.values); });
      };
    auto q = std::make_shared<LqgQFunction>(lqg, *values);
    auto pol = std::shared_ptr<GaussianPolicy>(new GaussianPolicy(g));
    std::shared_ptr<ActionControlVariate> cv = make_control_variate(*q, *pol, {});
    return [q, pol, cv, kind](const Trajectory& tr) {
      return kind == EstimatorKind::trajcv ? pg_trajcv(tr, *cv) : pg_state_action_cv(tr, *cv);
    };
  };
}

std::vector<EstimatorKind> estimator_kinds(const Config& c) {
  std::vector<EstimatorKind> out;
  for (const auto& n : c.get_strings("estimator.kinds", {"vanilla", "state", "sa", "trajcv"})) {
    try {
      out.push_back(parse_estimator(n));
    } catch (const InputError& e) {
      throw ConfigError(std::string("estimator.kinds: ") + e.what());
    }
  }
  if (out.empty()) throw ConfigError("estimator.kinds is empty");
  return out;
}

std::vector<std::string> component_row(const std::vector<std::string>& head, const VarianceComponents& v) {
  std::vector<std::string> r = head;
  for (double x : {v.v_state, v.v_action, v.v_future, v.se_state, v.se_action, v.se_future}) r.push_back(num(x));
  return r;
}

void write_resolved(const Context& ctx) { write_text_file(ctx.out / "resolved_config.ini", ctx.cfg.resolved()); }

NestedSampleSizes sample_sizes(const Config& c) {
  NestedSampleSizes n;
  n.n_outer = c.get_int("variance.n_outer", 2000);
  n.n_mid = c.get_int("variance.n_mid", 32);
  n.n_inner = c.get_int("variance.n_inner", 2);
  n.n_baseline = c.get_int("variance.n_baseline", 32);
  return n;
}

// ---------------------------------------------------------------- commands

int cmd_variance_scan(Context& ctx) {
  const Config& c = ctx.cfg;
  const EnvBundle e = build_env(c, "lqg");
  const int t = c.get_int("variance.t", 1);
  const auto sigmas = c.get_doubles("variance.sigmas", {3.0, 1.0, 0.3, 0.1});
  if (sigmas.empty()) throw ConfigError("variance.sigmas is empty");
  for (size_t i = 1; i < sigmas.size(); ++i)
    if (!(sigmas[i] < sigmas[i - 1])) throw ConfigError("variance.sigmas must be strictly descending");
  const EstimatorKind kind = parse_estimator(c.get_string("variance.estimator", "vanilla"));
  const NestedSampleSizes n = sample_sizes(c);
  const EstimatorFactory make_est = continuous_estimator(c, e, kind);
  const PolicyFactory make_pol = [&](double s) -> std::unique_ptr<Policy> { return build_policy(c, e, s); };

  std::vector<SigmaScanRow> rows;
  double slopes[3] = {0, 0, 0};
  if (sigmas.size() == 1) {
    const auto pol = make_pol(sigmas[0]);
    rows.push_back({sigmas[0], decompose_sampled(*e.env, *pol, make_est(*pol), t, n, ctx.seed)});
  } else {
    const SigmaScan scan = theorem1_scan(*e.env, make_pol, sigmas, t, n, ctx.seed, make_est);
    rows = scan.rows;
    slopes[0] = scan.slope_state;
    slopes[1] = scan.slope_action;
    slopes[2] = scan.slope_future;
  }

  CsvTable csv({"sigma", "t", "v_state", "v_action", "v_future", "se_state", "se_action", "se_future"});
  LinePlot plot{"Variance components vs sigma", "sigma", "trace of variance", true, true, {}};
  PlotSeries ps{"v_state", {}, {}, {}, {}}, pa{"v_action", {}, {}, {}, {}}, pf{"v_future", {}, {}, {}, {}};
  for (const auto& r : rows) {
    csv.add_row(component_row({num(r.sigma), std::to_string(t)}, r.components));
    for (PlotSeries* s : {&ps, &pa, &pf}) s->x.push_back(r.sigma);
    ps.y.push_back(std::max(r.components.v_state, 1e-300));
    pa.y.push_back(std::max(r.components.v_action, 1e-300));
    pf.y.push_back(std::max(r.components.v_future, 1e-300));
  }
  plot.series = {ps, pa, pf};
  write_text_file(ctx.out / "variance.csv", csv.str());
  write_text_file(ctx.out / "variance.svg", plot.svg());
  if (sigmas.size() > 1) {
    CsvTable sl({"component", "loglog_slope"});
    sl.add_row({"v_state", num(slopes[0])});
    sl.add_row({"v_action", num(slopes[1])});
    sl.add_row({"v_future", num(slopes[2])});
    write_text_file(ctx.out / "variance_slopes.csv", sl.str());
  }
  write_resolved(ctx);
  return kOk;
}

TrainConfig train_config(const Config& c) {
  TrainConfig t;
  const std::string ex = c.get_string("estimator.expectation", "closed_form");
  if (ex == "closed_form")
    t.expectation.kind = ExpectationMethod::Kind::closed_form;
  else if (ex == "monte_carlo")
    t.expectation.kind = ExpectationMethod::Kind::monte_carlo;
  else
    throw ConfigError("estimator.expectation must be closed_form or monte_carlo");
  t.expectation.n_samples = c.get_int("estimator.mc_samples", 1000);
  t.expectation.common_random_numbers = c.get_bool("estimator.crn", true);
  t.expectation.chain_rule = c.get_bool("estimator.chain_rule", false);
  t.rollouts = c.get_int("trainer.rollouts", 5);
  t.iterations = c.get_int("trainer.iterations", 300);
  t.kl_limit = c.get_double("trainer.kl_limit", 0.01);
  t.damping = c.get_double("trainer.damping", 1e-3);
  t.lr = c.get_double("trainer.lr", 1.0);
  t.sigma_init = c.get_double("policy.sigma", 1.0);
  t.feature_degree = c.get_int("policy.feature_degree", 1);
  t.critic_window = c.get_int("trainer.critic_window", 20);
  t.critic_include_current = c.get_bool("trainer.critic_include_current", false);
  t.value_time_feature = c.get_bool("trainer.value_time_feature", true);
  t.biased_simulator = c.get_bool("trainer.biased_simulator", false);
  t.simulator_factor = c.get_double("trainer.simulator_factor", 1.1);
  t.upper_bound = c.get_bool("trainer.upper_bound", false);
  t.upper_bound_rollouts = c.get_int("trainer.upper_bound_rollouts", 5000);
  try {
    t.validate();
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return t;
}

int cmd_train(Context& ctx) {
  const Config& c = ctx.cfg;
  const EnvBundle e = build_env(c, "cartpole");
  TrainConfig base = train_config(c);
  // estimator.qvariant sets both; the per-estimator keys take precedence.
  const std::string shared = c.has("estimator.qvariant") ? c.get_string("estimator.qvariant", "") : "";
  QVariant q_sa, q_traj;
  try {
    q_sa = parse_qvariant(c.get_string("estimator.qvariant_sa", shared.empty() ? "diff" : shared));
    q_traj = parse_qvariant(c.get_string("estimator.qvariant_trajcv", shared.empty() ? "next_gn" : shared));
  } catch (const InputError& e) {
    throw ConfigError(e.what());
  }
  base.threads = ctx.threads;
  const auto kinds = estimator_kinds(c);
  const int n_seeds = c.get_int("trainer.seeds", 8);
  if (n_seeds < 1) throw ConfigError("trainer.seeds must be >= 1");
  const double frac = c.get_double("trainer.threshold_fraction", 0.8);
  // Maximum reward: one per step on cart-pole; undefined elsewhere.
  const bool has_threshold = e.kind == "cartpole";
  const double threshold = frac * e.env->horizon();

  CsvTable summary({"estimator", "iteration", "reward_median", "reward_p25", "reward_p75"});
  CsvTable thresholds({"estimator", "seed", "iterations_to_threshold"});
  CsvTable medians({"estimator", "median_iterations_to_threshold"});
  CsvTable failures({"estimator", "seed", "error"});
  LinePlot plot{"Learning curves (median and 25-75% band over seeds)", "iteration", "reward", false, false, {}};

  for (EstimatorKind kind : kinds) {
    const std::string name = base.upper_bound ? "upper_bound" : to_string(kind);
    std::vector<LearningCurve> curves;
    std::vector<int> hits;
    for (int s = 0; s < n_seeds; ++s) {
      TrainConfig cfg = base;
      cfg.estimator = kind;
      cfg.qvariant = kind == EstimatorKind::trajcv ? q_traj : q_sa;
      cfg.seed = derive_stream(ctx.seed, {0x7e11ULL, static_cast<std::uint64_t>(s)})();
      try {
        LearningCurve curve = train(*e.env, cfg);
        CsvTable csv({"iteration", "reward_mean", "reward_p25", "reward_p75", "grad_norm", "sigma"});
        for (const auto& r : curve.rows)
          csv.add_row({std::to_string(r.iteration), num(r.reward_mean), num(r.reward_p25), num(r.reward_p75),
                       num(r.grad_norm), num(r.sigma)});
        write_text_file(ctx.out / "curves" / (name + "_seed" + std::to_string(s) + ".csv"), csv.str());
        if (has_threshold) {
          const int it = iterations_to_threshold(curve, threshold);
          hits.push_back(it);
          thresholds.add_row({name, std::to_string(s), std::to_string(it)});
        }
        curves.push_back(std::move(curve));
      } catch (const Error& err) {
        failures.add_row({name, std::to_string(s), std::string("\"") + err.what() + "\""});
        std::cerr << "train: " << name << " seed " << s << " failed: " << err.what() << "\n";
      }
    }
    if (has_threshold && !hits.empty()) {
      std::vector<double> h(hits.begin(), hits.end());
      medians.add_row({name, num(quantile(h, 0.5))});
    }
    if (curves.empty()) continue;
    size_t len = curves[0].rows.size();
    for (const auto& cv : curves) len = std::min(len, cv.rows.size());
    PlotSeries ps{name, {}, {}, {}, {}};
    for (size_t i = 0; i < len; ++i) {
      std::vector<double> r;
      for (const auto& cv : curves) r.push_back(cv.rows[i].reward_mean);
      const double med = quantile(r, 0.5), lo = quantile(r, 0.25), hi = quantile(r, 0.75);
      summary.add_row({name, std::to_string(i + 1), num(med), num(lo), num(hi)});
      ps.x.push_back(static_cast<double>(i + 1));
      ps.y.push_back(med);
      ps.lo.push_back(lo);
      ps.hi.push_back(hi);
    }
    plot.series.push_back(std::move(ps));
  }
  write_text_file(ctx.out / "summary.csv", summary.str());
  if (has_threshold) {
    write_text_file(ctx.out / "thresholds.csv", thresholds.str());
    write_text_file(ctx.out / "threshold_medians.csv", medians.str());
  }
  if (failures.rows()) write_text_file(ctx.out / "failures.csv", failures.str());
  write_text_file(ctx.out / "curves.svg", plot.svg());
  write_resolved(ctx);
  return failures.rows() ? kNumericError : kOk;
}

int cmd_decompose(Context& ctx) {
  const Config& c = ctx.cfg;
  const std::string kind = c.get_string("env.kind", "tabular");
  const auto kinds = estimator_kinds(c);
  CsvTable csv({"estimator", "t", "sigma", "v_state", "v_action", "v_future", "se_state", "se_action", "se_future"});
  if (kind == "tabular") {
    Rng rng = derive_stream(ctx.seed, {0xdec0ULL});
    const TabularMDP mdp = build_tabular(c, rng);
    const SoftmaxPolicy pi = random_softmax_policy(mdp.n_states, mdp.n_actions,
                                                   c.get_double("tabular.policy_scale", 1.0), rng);
    // Exact critics: v^pi for the state CV, q^pi for the action CVs.
    const TabularQ q(q_pi(mdp, pi));
    const auto v = v_pi(mdp, pi);
    const auto cv = make_control_variate(q, pi, {});
    const EstimatorInputs in{[&](const State& s) { return v[s.time_index - 1](s.tabular_index()); }, cv.get()};
    CsvTable fine({"estimator", "t", "term", "k", "value"});
    for (EstimatorKind k : kinds) {
      const auto comps = decompose_exact_all(mdp, pi, [&](const Trajectory& tr) { return estimate(k, tr, in); });
      for (const auto& comp : comps) {
        csv.add_row(component_row({to_string(k), std::to_string(comp.t), "nan"}, comp));
        for (size_t i = 0; i < comp.v_dyn.size(); ++i)
          fine.add_row({to_string(k), std::to_string(comp.t), "v_dyn", std::to_string(comp.t + 1 + i), num(comp.v_dyn[i])});
        for (size_t i = 0; i < comp.v_act.size(); ++i)
          fine.add_row({to_string(k), std::to_string(comp.t), "v_act", std::to_string(comp.t + 1 + i), num(comp.v_act[i])});
      }
    }
    write_text_file(ctx.out / "decompose_fine.csv", fine.str());
  } else {
    const EnvBundle e = build_env(c, kind);
    const double sigma = c.get_double("policy.sigma", 1.0);
    const int t = c.get_int("variance.t", 1);
    const NestedSampleSizes n = sample_sizes(c);
    const auto pol = build_policy(c, e, sigma);
    for (EstimatorKind k : kinds) {
      const ComponentEstimator est = continuous_estimator(c, e, k)(*pol);
      const VarianceComponents comp = decompose_sampled(*e.env, *pol, est, t, n, ctx.seed);
      csv.add_row(component_row({to_string(k), std::to_string(t), num(sigma)}, comp));
    }
  }
  write_text_file(ctx.out / "decompose.csv", csv.str());
  write_resolved(ctx);
  return kOk;
}

int cmd_ordering_demo(Context& ctx) {
  const Config& c = ctx.cfg;
  Rng rng = derive_stream(ctx.seed, {0x0dd0ULL});
  const int n_states = c.get_int("tabular.n_states", 2);
  const int n_actions = c.get_int("tabular.n_actions", 2);
  const int h = c.get_int("tabular.horizon", 3);
  const int t = c.get_int("ordering.t", std::max(1, h - 2));
  const int n_r = c.get_int("ordering.n_r", 3);
  if (t < 1 || t > h) throw ConfigError("ordering.t must lie in [1, tabular.horizon]");
  RandomMdpOptions o{n_states, n_actions, h, false};
  const TabularMDP mdp = random_tabular_mdp(o, rng);
  const FiniteReparamPolicy rp = random_reparam_policy(n_states, n_actions, n_r, rng);
  const JointTable table = window_table(mdp, rp, t);

  CsvTable csv({"ordering", "feasible", "residue"});
  double natural = ordering_residue(table, natural_ordering(t, h), t, h);
  double best = natural;
  for (const auto& ord : all_orderings(t, h)) {
    if (!ord.feasible) {
      bool rejected = false;
      try {
        ordering_residue(table, ord, t, h);
      } catch (const InputError&) {
        rejected = true;
      }
      csv.add_row({ord.to_string(), "false", rejected ? "rejected" : "accepted"});
      continue;
    }
    const double r = ordering_residue(table, ord, t, h);
    best = std::min(best, r);
    csv.add_row({ord.to_string(), "true", num(r)});
  }
  const SoftmaxPolicy pi = rp.induced_policy(n_actions);
  const VarianceComponents vc = decompose_exact(mdp, pi, [](const Trajectory& tr) { return pg_vanilla(tr); }, t);
  double dyn = 0.0;
  for (double v : vc.v_dyn) dyn += v;
  CsvTable sum({"natural_residue", "min_feasible_residue", "sum_v_dyn", "natural_is_min"});
  const bool is_min = natural <= best + 1e-12;
  sum.add_row({num(natural), num(best), num(dyn), is_min ? "true" : "false"});
  write_text_file(ctx.out / "orderings.csv", csv.str());
  write_text_file(ctx.out / "ordering_summary.csv", sum.str());
  write_resolved(ctx);
  return is_min ? kOk : kCheckFailure;
}

int cmd_oracle_suite(Context& ctx) {
  const Config& c = ctx.cfg;
  OracleOptions o;
  o.seed = ctx.seed;
  o.mdp_instances = c.get_int("oracle.mdp_instances", 20);
  o.inequality_instances = c.get_int("oracle.inequality_instances", 100);
  o.ordering_instances = c.get_int("oracle.ordering_instances", 20);
  try {
    o.fault = parse_fault(c.get_string("oracle.fault", "none"));
  } catch (const InputError& e) {
    throw ConfigError(e.what());
  }
  const auto results = run_oracle_suite(o);
  CsvTable csv({"check", "passed", "max_deviation", "tolerance", "instances"});
  bool all = true;
  for (const auto& r : results) {
    csv.add_row({r.name, r.passed ? "true" : "false", num(r.max_deviation), num(r.tolerance),
                 std::to_string(r.instances)});
    std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << " max_deviation=" << num(r.max_deviation) << "\n";
    all = all && r.passed;
  }
  write_text_file(ctx.out / "oracle_report.csv", csv.str());
  write_resolved(ctx);
  return all ? kOk : kCheckFailure;
}

int cmd_chain_demo(Context& ctx) {
  const Config& c = ctx.cfg;
  const int n = c.get_int("chain.variables", 5);
  const int max_support = c.get_int("chain.max_support", 3);
  if (n < 1 || n > 10) throw ConfigError("chain.variables must be in [1, 10]");
  if (max_support < 1 || max_support > 6) throw ConfigError("chain.max_support must be in [1, 6]");
  Rng rng = derive_stream(ctx.seed, {0xc4a1ULL});
  std::uniform_int_distribution<int> sup(std::min(2, max_support), max_support);
  ChainSpec chain;
  const std::uint64_t base = rng();
  auto hash = [base](std::uint64_t tag, const std::vector<int>& v) {
    std::uint64_t h = splitmix64(base ^ tag);
    for (int x : v) h = splitmix64(h ^ static_cast<std::uint64_t>(x + 1));
    return h;
  };
  for (int k = 0; k < n; ++k) {
    const int s = sup(rng);
    chain.variables.push_back({"X" + std::to_string(k + 1), s, [=](const std::vector<int>& prev) {
                                 Rng r(hash(static_cast<std::uint64_t>(k + 1), prev));
                                 std::uniform_real_distribution<double> u(0.05, 1.0);
                                 std::vector<double> p(s);
                                 double z = 0.0;
                                 for (auto& x : p) z += (x = u(r));
                                 for (auto& x : p) x /= z;
                                 return p;
                               }});
  }
  chain.f = [=](const std::vector<int>& v) {
    Rng r(hash(0xf0ULL, v));
    return std::uniform_real_distribution<double>(-1.0, 1.0)(r);
  };
  const ChainDecomposition d = chain_decompose(chain);
  CsvTable csv({"variable", "term"});
  double total = 0.0;
  for (int k = 0; k < n; ++k) {
    csv.add_row({chain.variables[k].name, num(d.terms[k])});
    total += d.terms[k];
  }
  CsvTable sum({"sum_terms", "total_variance"});
  sum.add_row({num(total), num(d.total_variance)});
  write_text_file(ctx.out / "chain.csv", csv.str());
  write_text_file(ctx.out / "chain_summary.csv", sum.str());
  write_resolved(ctx);
  return std::abs(total - d.total_variance) <= 1e-12 ? kOk : kCheckFailure;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"Trajectory-wise control variate experiments"};
  app.require_subcommand(1);
  std::string config_path, out_dir = "out";
  std::optional<std::uint64_t> seed;

  using Cmd = int (*)(Context&);
  const std::vector<std::pair<std::string, Cmd>> cmds = {
      {"variance-scan", cmd_variance_scan}, {"train", cmd_train},       {"decompose", cmd_decompose},
      {"ordering-demo", cmd_ordering_demo}, {"oracle-suite", cmd_oracle_suite}, {"chain-demo", cmd_chain_demo},
  };
  const std::map<std::string, std::string> about = {
      {"variance-scan", "sampled variance components over a sigma scan"},
      {"train", "learning curves for each estimator over several seeds"},
      {"decompose", "variance components of each estimator at one policy"},
      {"ordering-demo", "residue of every ordering of a small window"},
      {"oracle-suite", "enumeration-based self-checks"},
      {"chain-demo", "sequential variance decomposition of a random chain"},
  };
  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, fn] : cmds) {
    CLI::App* sub = app.add_subcommand(name, about.at(name));
    sub->add_option("--config", config_path, "config file (key = value lines with [sections])");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--seed", seed, "master seed (overrides general.seed)");
    subs[name] = sub;
  }

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }

  try {
    Context ctx;
    ctx.cfg = config_path.empty() ? Config() : Config::load(config_path, allowed_keys());
    if (seed) ctx.cfg.set("general.seed", std::to_string(*seed));
    ctx.seed = ctx.cfg.get_u64("general.seed", 0);
    ctx.threads = ctx.cfg.get_int("general.threads", 1);
    if (ctx.threads < 1) throw ConfigError("general.threads must be >= 1");
    ctx.out = out_dir;
    for (const auto& [name, fn] : cmds)
      if (subs[name]->parsed()) return fn(ctx);
    return kConfigError;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kNumericError;
  } catch (const EstimationError& e) {
    std::cerr << "estimation error: " << e.what() << "\n";
    return kNumericError;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  }
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args);
}

}  // namespace trajcv::cli
