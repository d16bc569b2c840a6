// Acceptance checks. "acceptance N" runs criterion N, no argument runs all.
// Each criterion prints one PASS/FAIL line; the exit code is nonzero if any
// selected criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>

#include "trajcv/cli/commands.hpp"
#include "trajcv/estimators.hpp"
#include "trajcv/oracle.hpp"
#include "trajcv/tabular.hpp"
#include "trajcv/variance.hpp"

using namespace trajcv;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

struct Criterion {
  const char* name;
  double budget_s;
  std::function<Outcome()> run;
};

constexpr std::uint64_t kSeed = 0;
constexpr int kMdpInstances = 20;

std::string fmt(double x) {
  char b[32];
  std::snprintf(b, sizeof b, "%.3g", x);
  return b;
}

// Estimators bound to a random instance's CV tables.
struct Bound {
  RandomInstance inst;
  std::unique_ptr<ActionControlVariate> cv;
  EstimatorInputs in;

  explicit Bound(RandomInstance i) : inst(std::move(i)) {
    cv = make_control_variate(inst.q, inst.policy, {});
    const auto* b = &inst.baseline;
    in.value = [b](const State& s) { return (*b)[s.time_index - 1](s.tabular_index()); };
    in.cv = cv.get();
  }
  ComponentEstimator est(EstimatorKind k) const {
    return [this, k](const Trajectory& tr) { return estimate(k, tr, in); };
  }
};

constexpr EstimatorKind kKinds[] = {EstimatorKind::vanilla, EstimatorKind::state_cv, EstimatorKind::state_action_cv,
                                    EstimatorKind::trajcv};

// Policy gradient theorem form: sum_t sum_s d_t(s) sum_a grad pi_s(a) q_t(s, a).
VectorXd pg_theorem_gradient(const TabularMDP& m, const SoftmaxPolicy& p) {
  const auto d = state_marginals(m, p);
  const auto q = q_pi(m, p);
  VectorXd g = VectorXd::Zero(p.param_dim());
  for (int t = 0; t < m.horizon; ++t)
    for (int s = 0; s < m.n_states; ++s) g += d[t](s) * p.probability_jacobian(s) * q[t].row(s).transpose();
  return g;
}

struct Moments {
  VectorXd mean;
  std::vector<double> var_t;  // Tr Var[G~_t]
  double var_total = 0.0;     // Tr Var[sum_t G~_t]
};

Moments enumerate_moments(const TabularMDP& m, const SoftmaxPolicy& p, const ComponentEstimator& est) {
  const auto trajs = enumerate_trajectories(m, p);
  MatrixXd mean = MatrixXd::Zero(p.param_dim(), m.horizon);
  for (const auto& [tr, w] : trajs) mean += w * est(tr).per_t;
  Moments out;
  out.mean = mean.rowwise().sum();
  out.var_t.assign(m.horizon, 0.0);
  for (const auto& [tr, w] : trajs) {
    const MatrixXd d = est(tr).per_t - mean;
    for (int t = 0; t < m.horizon; ++t) out.var_t[t] += w * d.col(t).squaredNorm();
    out.var_total += w * d.rowwise().sum().squaredNorm();
  }
  return out;
}

Outcome unbiasedness() {
  double worst = 0.0, worst_ref = 0.0;
  for (int i = 0; i < kMdpInstances; ++i) {
    const Bound b(random_instance(kSeed, i));
    const VectorXd g = exact_policy_gradient(b.inst.mdp, b.inst.policy);
    worst_ref = std::max(worst_ref, (g - pg_theorem_gradient(b.inst.mdp, b.inst.policy)).cwiseAbs().maxCoeff());
    for (EstimatorKind k : kKinds) {
      const Moments mo = enumerate_moments(b.inst.mdp, b.inst.policy, b.est(k));
      worst = std::max(worst, (mo.mean - g).cwiseAbs().maxCoeff());
    }
  }
  return {worst <= 1e-10 && worst_ref <= 1e-10,
          "max |E[estimate] - grad J| = " + fmt(worst) + ", gradient cross-check " + fmt(worst_ref)};
}

Outcome additivity() {
  double worst = 0.0, worst_fine = 0.0;
  for (int i = 0; i < kMdpInstances; ++i) {
    const Bound b(random_instance(kSeed, i));
    for (EstimatorKind k : kKinds) {
      const Moments mo = enumerate_moments(b.inst.mdp, b.inst.policy, b.est(k));
      const auto comps = decompose_exact_all(b.inst.mdp, b.inst.policy, b.est(k));
      for (const auto& c : comps) {
        const double total = mo.var_t[c.t - 1];
        worst = std::max(worst, std::abs(c.v_state + c.v_action + c.v_future - total));
        double fine = c.v_state + c.v_action;
        for (size_t j = 0; j < c.v_dyn.size(); ++j) fine += c.v_dyn[j] + c.v_act[j];
        worst_fine = std::max(worst_fine, std::abs(fine - total));
      }
    }
  }
  return {worst <= 1e-10 && worst_fine <= 1e-10,
          "three-term deviation " + fmt(worst) + ", fine deviation " + fmt(worst_fine)};
}

double max_diff(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return INFINITY;
  double d = 0.0;
  for (size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

Outcome locality() {
  double sa_dev = 0.0, tj_dev = 0.0;
  for (int i = 0; i < kMdpInstances; ++i) {
    const Bound b(random_instance(kSeed, i));
    const auto van = decompose_exact_all(b.inst.mdp, b.inst.policy, b.est(EstimatorKind::vanilla));
    const auto sa = decompose_exact_all(b.inst.mdp, b.inst.policy, b.est(EstimatorKind::state_action_cv));
    const auto tj = decompose_exact_all(b.inst.mdp, b.inst.policy, b.est(EstimatorKind::trajcv));
    for (size_t t = 0; t < van.size(); ++t) {
      sa_dev = std::max({sa_dev, std::abs(sa[t].v_state - van[t].v_state),
                         std::abs(sa[t].v_future - van[t].v_future), max_diff(sa[t].v_dyn, van[t].v_dyn),
                         max_diff(sa[t].v_act, van[t].v_act)});
      tj_dev = std::max({tj_dev, std::abs(tj[t].v_state - van[t].v_state), max_diff(tj[t].v_dyn, van[t].v_dyn)});
    }
  }
  return {sa_dev <= 1e-12 && tj_dev <= 1e-12,
          "state-action CV deviation " + fmt(sa_dev) + ", TrajCV deviation " + fmt(tj_dev)};
}

Outcome exact_q() {
  double tj_max = 0.0, sa_dev = 0.0, min_future = INFINITY;
  int positive = 0;
  bool ok = true;
  for (int i = 0; i < kMdpInstances; ++i) {
    const RandomInstance inst = random_instance(kSeed, i, true);
    const TabularQ q(q_pi(inst.mdp, inst.policy));
    const auto cv = make_control_variate(q, inst.policy, {});
    const auto van = decompose_exact_all(inst.mdp, inst.policy, pg_vanilla);
    const auto sa =
        decompose_exact_all(inst.mdp, inst.policy, [&](const Trajectory& tr) { return pg_state_action_cv(tr, *cv); });
    const auto tj = decompose_exact_all(inst.mdp, inst.policy, [&](const Trajectory& tr) { return pg_trajcv(tr, *cv); });
    for (size_t t = 0; t < van.size(); ++t) {
      tj_max = std::max({tj_max, std::abs(tj[t].v_action), std::abs(tj[t].v_future)});
      sa_dev = std::max(sa_dev, std::abs(sa[t].v_future - van[t].v_future));
      // Future actions matter when the vanilla future term is non-negligible.
      if (van[t].v_future > 1e-9) {
        ++positive;
        min_future = std::min(min_future, sa[t].v_future);
        ok = ok && sa[t].v_future > 0.0;
      }
    }
  }
  ok = ok && tj_max <= 1e-12 && sa_dev <= 1e-12 && positive > 0;
  return {ok, "TrajCV max |v_action|,|v_future| = " + fmt(tj_max) + ", state-action CV v_future deviation " +
                  fmt(sa_dev) + ", min positive v_future " + fmt(min_future) + " over " + std::to_string(positive) +
                  " steps"};
}

Outcome orderings() {
  int feasible = 0, rejected = 0, infeasible = 0, windows = 0;
  double worst_gap = 0.0, dyn_dev = 0.0;
  bool ok = true;
  for (int i = 0; i < kMdpInstances; ++i) {
    Rng rng = derive_stream(kSeed, {0x5eedULL, static_cast<std::uint64_t>(i)});
    RandomMdpOptions o;
    o.n_states = 2 + i % 2;
    o.n_actions = 2;
    o.horizon = 3;
    const TabularMDP mdp = random_tabular_mdp(o, rng);
    const FiniteReparamPolicy rp = random_reparam_policy(o.n_states, o.n_actions, 3, rng);
    const SoftmaxPolicy induced = rp.induced_policy(o.n_actions);
    for (int t = 1; t <= o.horizon; ++t) {
      ++windows;
      const double natural = ordering_residue(mdp, rp, natural_ordering(t, o.horizon), t);
      const VarianceComponents vc = decompose_exact(mdp, induced, pg_vanilla, t);
      double dyn = 0.0;
      for (double x : vc.v_dyn) dyn += x;
      dyn_dev = std::max(dyn_dev, std::abs(natural - dyn));
      for (const auto& ord : all_orderings(t, o.horizon)) {
        if (ord.feasible) {
          ++feasible;
          const double r = ordering_residue(mdp, rp, ord, t);
          worst_gap = std::min(worst_gap, r - natural);
        } else {
          ++infeasible;
          try {
            ordering_residue(mdp, rp, ord, t);
          } catch (const InputError&) {
            ++rejected;
          }
        }
      }
    }
  }
  ok = worst_gap >= -1e-10 && rejected == infeasible && dyn_dev <= 1e-10;
  return {ok, std::to_string(windows) + " windows, " + std::to_string(feasible) + " feasible orderings, " +
                  std::to_string(rejected) + "/" + std::to_string(infeasible) +
                  " infeasible rejected, min(residue - natural) = " + fmt(worst_gap) +
                  ", natural vs dynamics terms " + fmt(dyn_dev)};
}

Outcome inequality_and_bound() {
  Rng rng = derive_stream(kSeed, {0x1e44aULL});
  std::uniform_int_distribution<int> size(2, 4);
  std::uniform_real_distribution<double> u(0.05, 1.0), v(-3.0, 3.0);
  double worst_ineq = -INFINITY, lib_dev = 0.0;
  for (int i = 0; i < 100; ++i) {
    const int nx = size(rng), ny = size(rng);
    VectorXd px(nx), py(ny);
    for (auto& x : px) x = u(rng);
    for (auto& y : py) y = u(rng);
    px /= px.sum();
    py /= py.sum();
    MatrixXd f(nx, ny);
    for (int k = 0; k < f.size(); ++k) f.data()[k] = v(rng);
    // Var_X E_Y[f]
    const VectorXd ey = f * py;
    const double m = px.dot(ey);
    const double lhs = px.dot((ey.array() - m).square().matrix());
    // E_Y Var_X[f]
    double rhs = 0.0;
    for (int y = 0; y < ny; ++y) {
      const double mx = px.dot(f.col(y));
      rhs += py(y) * px.dot((f.col(y).array() - mx).square().matrix());
    }
    worst_ineq = std::max(worst_ineq, lhs - rhs);
    const auto [l2, r2] = conditional_variance_sides(px, py, f);
    lib_dev = std::max({lib_dev, std::abs(l2 - lhs), std::abs(r2 - rhs)});
  }
  double worst_bound = -INFINITY, bound_dev = 0.0;
  for (int i = 0; i < kMdpInstances; ++i) {
    const RandomInstance inst = random_instance(kSeed, i);
    const Moments mo = enumerate_moments(inst.mdp, inst.policy, pg_vanilla);
    double sum_t = 0.0;
    for (double x : mo.var_t) sum_t += x;
    const double rhs = inst.mdp.horizon * sum_t;
    worst_bound = std::max(worst_bound, mo.var_total - rhs);
    const VarianceBound vb = variance_bound_check(inst.mdp, inst.policy);
    bound_dev = std::max({bound_dev, std::abs(vb.lhs - mo.var_total), std::abs(vb.rhs - rhs)});
  }
  const bool ok = worst_ineq <= 1e-10 && worst_bound <= 1e-10 && lib_dev <= 1e-10 && bound_dev <= 1e-10;
  return {ok, "max(lhs - rhs): inequality " + fmt(worst_ineq) + ", bound " + fmt(worst_bound) +
                  "; library deviation " + fmt(std::max(lib_dev, bound_dev))};
}

// ---------------------------------------------------------------- CLI based

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("trajcv_acceptance_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::stringstream ss(slurp(p));
  std::string line;
  while (std::getline(ss, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string c;
    while (std::getline(ls, c, ',')) cells.push_back(c);
    rows.push_back(cells);
  }
  return rows;
}

int run_cli_with(const fs::path& dir, const std::string& cmd, const std::string& config, const fs::path& out) {
  const fs::path cfg = dir / (cmd + ".ini");
  std::ofstream(cfg) << config;
  return cli::run_cli({cmd, "--config", cfg.string(), "--out", out.string()});
}

Outcome lqg_scan() {
  const fs::path dir = fresh_dir("lqg");
  const int rc = run_cli_with(dir, "variance-scan",
                              "[env]\nkind = lqg\nhorizon = 50\n[variance]\nsigmas = 3, 1, 0.3, 0.1\n", dir / "out");
  if (rc != 0) return {false, "variance-scan exited with " + std::to_string(rc)};
  const auto rows = read_csv(dir / "out" / "variance.csv");
  if (rows.size() != 5) return {false, "expected 4 sigma rows"};
  std::vector<double> vs, va, vf, ss, sa, sf;
  for (size_t i = 1; i < rows.size(); ++i) {
    vs.push_back(std::stod(rows[i][2]));
    va.push_back(std::stod(rows[i][3]));
    vf.push_back(std::stod(rows[i][4]));
    ss.push_back(std::stod(rows[i][5]));
    sa.push_back(std::stod(rows[i][6]));
    sf.push_back(std::stod(rows[i][7]));
  }
  bool mono = true;
  for (size_t i = 1; i < va.size(); ++i) mono = mono && va[i] > va[i - 1] && vf[i] > vf[i - 1];
  const size_t last = va.size() - 1;
  const double state_hi = vs[last] + 4 * ss[last];
  const double ratio_a = (va[last] - 4 * sa[last]) / state_hi;
  const double ratio_f = (vf[last] - 4 * sf[last]) / state_hi;
  const double vmax = *std::max_element(vs.begin(), vs.end()), vmin = *std::min_element(vs.begin(), vs.end());
  const double spread = vmin > 0 ? vmax / vmin : INFINITY;
  std::string d = "v_state=";
  for (size_t i = 0; i < vs.size(); ++i) d += (i ? "/" : "") + fmt(vs[i]);
  d += " v_action=";
  for (size_t i = 0; i < va.size(); ++i) d += (i ? "/" : "") + fmt(va[i]);
  d += " v_future=";
  for (size_t i = 0; i < vf.size(); ++i) d += (i ? "/" : "") + fmt(vf[i]);
  d += "; 4-SE ratios at 0.1: " + fmt(ratio_a) + ", " + fmt(ratio_f) + "; v_state spread " + fmt(spread);
  return {mono && ratio_a >= 10 && ratio_f >= 10 && spread < 10, d};
}

Outcome cartpole() {
  const fs::path dir = fresh_dir("cartpole");
  const int rc = run_cli_with(dir, "train",
                              "[env]\nkind = cartpole\nhorizon = 200\n"
                              "[trainer]\nseeds = 8\nrollouts = 5\niterations = 300\nthreshold_fraction = 0.8\n"
                              "[estimator]\nkinds = vanilla, state, sa, trajcv\n",
                              dir / "out");
  if (rc != 0) return {false, "train exited with " + std::to_string(rc)};
  std::map<std::string, double> med;
  const auto rows = read_csv(dir / "out" / "threshold_medians.csv");
  for (size_t i = 1; i < rows.size(); ++i) med[rows[i][0]] = std::stod(rows[i][1]);
  for (const char* k : {"vanilla", "state", "sa", "trajcv"})
    if (!med.count(k)) return {false, std::string("missing median for ") + k};
  const bool ok = med["trajcv"] <= med["sa"] && med["sa"] <= med["state"] && med["state"] <= med["vanilla"] &&
                  med["trajcv"] < med["vanilla"];
  return {ok, "median iterations to 80%: trajcv " + fmt(med["trajcv"]) + ", sa " + fmt(med["sa"]) + ", state " +
                  fmt(med["state"]) + ", vanilla " + fmt(med["vanilla"])};
}

Outcome quadratic_q() {
  const int n = 1000000;
  Rng rng = derive_stream(kSeed, {0x9aadULL});
  const MatrixXd draws = standard_normal_draws(3, n, derive_stream(kSeed, {0x9aaeULL})());
  std::uniform_int_distribution<int> dim(1, 3), sdim(1, 2);
  std::uniform_real_distribution<double> sig(0.2, 2.0);
  double worst_z = 0.0, worst_rel = 0.0;
  for (int i = 0; i < 50; ++i) {
    const int da = dim(rng), ds = sdim(rng);
    const FeatureMap fm{ds, 1};
    MatrixXd theta(fm.dim(), da);
    for (int k = 0; k < theta.size(); ++k) theta.data()[k] = standard_normal(1, rng)(0);
    const double sigma = sig(rng);
    const GaussianPolicy pol(fm, theta, sigma);
    State s;
    s.values = standard_normal(ds, rng);
    QuadraticQ q;
    q.q0 = standard_normal(1, rng)(0);
    q.g = standard_normal(da, rng);
    MatrixXd h(da, da);
    for (int k = 0; k < h.size(); ++k) h.data()[k] = standard_normal(1, rng)(0);
    q.H = h + h.transpose();
    q.m = standard_normal(da, rng);

    const double e = expectation_quadratic(pol, s, q);
    const VectorXd g = grad_expectation_quadratic(pol, s, q);
    const VectorXd phi = fm(s.values);
    const VectorXd mu = theta.transpose() * phi;
    const int p = pol.param_dim();

    double sum = 0, sq = 0;
    VectorXd gs = VectorXd::Zero(p), gq = VectorXd::Zero(p), score(p);
    for (int j = 0; j < n; ++j) {
      const VectorXd z = draws.col(j).head(da);
      const VectorXd a = mu + std::sqrt(sigma) * z;
      const VectorXd d = a - q.m;
      const double qa = q.q0 + q.g.dot(d) + 0.5 * d.dot(q.H * d);
      sum += qa;
      sq += qa * qa;
      // d log N(a; theta^T phi, sigma I): phi (a - mu)^T / sigma, then sigma.
      const VectorXd r = (a - mu) / sigma;
      for (int f = 0; f < fm.dim(); ++f)
        for (int c = 0; c < da; ++c) score(f * da + c) = phi(f) * r(c);
      score(p - 1) = -0.5 * da / sigma + 0.5 * (a - mu).squaredNorm() / (sigma * sigma);
      const VectorXd x = score * qa;
      gs += x;
      gq += x.cwiseAbs2();
    }
    const double mean = sum / n, se = std::sqrt((sq / n - mean * mean) / n);
    worst_z = std::max(worst_z, std::abs(mean - e) / se);
    for (int k = 0; k < p; ++k) {
      const double gm = gs(k) / n, gse = std::sqrt((gq(k) / n - gm * gm) / n);
      worst_z = std::max(worst_z, std::abs(gm - g(k)) / gse);
    }
    VectorXd fd(p);
    const VectorXd th = pol.params();
    for (int k = 0; k < p; ++k) {
      const double step = 1e-6 * std::max(1.0, std::abs(th(k)));
      VectorXd up = th, dn = th;
      up(k) += step;
      dn(k) -= step;
      fd(k) = (expectation_quadratic(as_gaussian(*pol.with_params(up)), s, q) -
               expectation_quadratic(as_gaussian(*pol.with_params(dn)), s, q)) /
              (2 * step);
    }
    worst_rel = std::max(worst_rel, (fd - g).norm() / std::max(g.norm(), 1e-12));
  }
  return {worst_z <= 4.0 && worst_rel < 1e-4,
          "max |MC - closed form| / SE = " + fmt(worst_z) + ", max finite-difference rel err " + fmt(worst_rel)};
}

Outcome determinism() {
  const std::vector<std::pair<std::string, std::string>> runs = {
      {"variance-scan",
       "[env]\nkind = lqg\nhorizon = 10\n[variance]\nsigmas = 1, 0.3\nn_outer = 40\nn_mid = 4\nn_inner = 2\n"
       "n_baseline = 4\n"},
      {"train",
       "[env]\nkind = cartpole\nhorizon = 30\n[trainer]\nseeds = 2\niterations = 5\n"
       "[estimator]\nkinds = vanilla, state, sa, trajcv\n"},
      {"decompose", "[env]\nkind = tabular\n[estimator]\nkinds = vanilla, sa, trajcv\n"},
      {"ordering-demo", "[tabular]\nhorizon = 3\n"},
      {"oracle-suite", "[oracle]\nmdp_instances = 4\ninequality_instances = 10\nordering_instances = 3\n"},
      {"chain-demo", "[chain]\nvariables = 4\n"},
  };
  const fs::path dir = fresh_dir("determinism");
  std::string detail;
  bool ok = true;
  int files = 0;
  for (const auto& [cmd, cfg] : runs) {
    const fs::path a = dir / (cmd + "_a"), b = dir / (cmd + "_b");
    const int ra = run_cli_with(dir, cmd, cfg, a), rb = run_cli_with(dir, cmd, cfg, b);
    if (ra != 0 || rb != 0) {
      ok = false;
      detail += cmd + " exited with " + std::to_string(ra) + "/" + std::to_string(rb) + "; ";
      continue;
    }
    int here = 0;
    for (const auto& e : fs::recursive_directory_iterator(a)) {
      if (e.path().extension() != ".csv") continue;
      ++here;
      const fs::path other = b / fs::relative(e.path(), a);
      if (!fs::exists(other) || slurp(e.path()) != slurp(other)) {
        ok = false;
        detail += cmd + ": " + fs::relative(e.path(), a).string() + " differs; ";
      }
    }
    if (here == 0) {
      ok = false;
      detail += cmd + " wrote no CSV; ";
    }
    files += here;
  }
  return {ok, detail + std::to_string(files) + " CSV files compared across " + std::to_string(runs.size()) +
                  " subcommands"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all = {
      {"unbiasedness", 60, unbiasedness},
      {"decomposition additivity", 60, additivity},
      {"CV locality", 60, locality},
      {"exact-Q removal", 60, exact_q},
      {"natural ordering optimality", 300, orderings},
      {"conditional variance inequality and horizon bound", 60, inequality_and_bound},
      {"LQG variance scaling", 600, lqg_scan},
      {"cart-pole convergence ordering", 1800, cartpole},
      {"quadratic Q expectation", 120, quadratic_q},
      {"CLI determinism", 600, determinism},
  };
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));
  if (selected.empty())
    for (int i = 1; i <= static_cast<int>(all.size()); ++i) selected.push_back(i);

  bool all_pass = true;
  for (int id : selected) {
    if (id < 1 || id > static_cast<int>(all.size())) {
      std::printf("FAIL criterion %d: no such criterion\n", id);
      all_pass = false;
      continue;
    }
    const Criterion& c = all[id - 1];
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < c.budget_s;
    const bool pass = o.pass && in_time;
    std::printf("%s criterion %d: %s (%s; %.1f s of %.0f s)\n", pass ? "PASS" : "FAIL", id, c.name, o.detail.c_str(),
                secs, c.budget_s);
    std::fflush(stdout);
    all_pass = all_pass && pass;
  }
  return all_pass ? 0 : 1;
}
