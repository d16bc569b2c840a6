#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "trajcv/estimators.hpp"
#include "trajcv/tabular.hpp"

namespace trajcv {

struct CheckResult {
  std::string name;
  bool passed = false;
  double max_deviation = 0.0;
  double tolerance = 0.0;
  int instances = 0;
};

enum class Fault { none, cv_sign };
Fault parse_fault(const std::string& name);

struct OracleOptions {
  int mdp_instances = 20;
  int inequality_instances = 100;
  int ordering_instances = 20;
  std::uint64_t seed = 0;
  Fault fault = Fault::none;
};

// Wraps a CV and flips the sign of its grad E[Q^] term (test hook).
std::unique_ptr<ActionControlVariate> sign_flipped(std::unique_ptr<ActionControlVariate> inner);

// Random small instance used by the enumeration checks.
struct RandomInstance {
  TabularMDP mdp;
  SoftmaxPolicy policy;
  TabularQ q;
  std::vector<VectorXd> baseline;  // baseline[t-1](s)
};
RandomInstance random_instance(std::uint64_t seed, int index, bool deterministic = false);

// Unbiasedness, additivity, ordering residue, conditional-variance inequality and horizon bound.
std::vector<CheckResult> run_oracle_suite(const OracleOptions& opt);

}  // namespace trajcv
