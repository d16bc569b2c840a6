#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace trajcv {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Error taxonomy. Every failure the library raises derives from Error so the
// CLI can map it onto an exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InputError : public Error {
 public:
  using Error::Error;
};

class ParameterError : public Error {
 public:
  using Error::Error;
};

class CapacityError : public Error {
 public:
  using Error::Error;
};

class UnsupportedError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  NumericError(const std::string& what, int step = -1)
      : Error(step >= 0 ? what + " (step " + std::to_string(step) + ")" : what), step_(step) {}
  int step() const { return step_; }

 private:
  int step_;
};

class EstimationError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

struct State {
  VectorXd values;
  int time_index = 1;  // 1-based step t in [1, h]

  static State tabular(int index, int t) {
    State s;
    s.values = VectorXd::Constant(1, static_cast<double>(index));
    s.time_index = t;
    return s;
  }
  int tabular_index() const { return static_cast<int>(values(0)); }
};

struct Action {
  VectorXd values;           // continuous action, empty for discrete
  std::optional<int> index;  // discrete action index (0-based)

  static Action continuous(VectorXd v) { return Action{std::move(v), std::nullopt}; }
  static Action discrete(int i) { return Action{VectorXd(), i}; }
  bool is_discrete() const { return index.has_value(); }
};

struct ActionSpace {
  bool discrete = false;
  int dim = 0;        // continuous dimension
  int n_actions = 0;  // discrete cardinality
};

// One rollout. scores[t] holds N_t = grad log pi_{S_t}(A_t).
struct Trajectory {
  std::vector<State> states;
  std::vector<Action> actions;
  std::vector<double> costs;
  std::vector<VectorXd> scores;

  int length() const { return static_cast<int>(costs.size()); }
  bool empty() const { return costs.empty(); }

  // C_{t:T} for every 0-based t.
  std::vector<double> suffix_costs() const {
    std::vector<double> out(costs.size() + 1, 0.0);
    for (int t = length() - 1; t >= 0; --t) out[t] = out[t + 1] + costs[t];
    out.pop_back();
    return out;
  }
  double total_cost() const {
    double c = 0.0;
    for (double x : costs) c += x;
    return c;
  }
};

// Flat parameter-space gradient, with the per-step components G~_t kept as
// the columns of per_t.
struct GradEstimate {
  VectorXd total;
  MatrixXd per_t;  // param_dim x T

  int length() const { return static_cast<int>(per_t.cols()); }
};

inline bool all_finite(const VectorXd& v) { return v.allFinite(); }

}  // namespace trajcv
