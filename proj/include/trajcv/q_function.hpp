#pragma once

#include <optional>
#include <vector>

#include "trajcv/policy.hpp"

namespace trajcv {

struct QuadraticExpansion {
  QuadraticQ q;
  CenterSensitivity sensitivity;
};

// A state-action function q^(s, a) used as a control variate. Models that are
// quadratic in the action expose that representation so expectations over
// A_t | S_t can be taken in closed form.
class QFunction {
 public:
  virtual ~QFunction() = default;
  virtual double value(const State& s, const Action& a) const = 0;
  virtual std::optional<QuadraticExpansion> quadratic(const State&) const { return std::nullopt; }
};

// Time-indexed table q[t-1](s, a) for tabular problems.
class TabularQ final : public QFunction {
 public:
  explicit TabularQ(std::vector<MatrixXd> table) : table_(std::move(table)) {}
  double value(const State& s, const Action& a) const override {
    const auto t = static_cast<std::size_t>(s.time_index - 1);
    if (t >= table_.size()) return 0.0;
    return table_[t](s.tabular_index(), *a.index);
  }
  const std::vector<MatrixXd>& table() const { return table_; }

 private:
  std::vector<MatrixXd> table_;
};

// Fixed quadratic coefficients for every state.
class ConstantQuadraticQ final : public QFunction {
 public:
  explicit ConstantQuadraticQ(QuadraticQ q) : q_(std::move(q)) { q_.validate(); }
  double value(const State&, const Action& a) const override { return q_.evaluate(a.values); }
  std::optional<QuadraticExpansion> quadratic(const State&) const override {
    const int n = q_.dim();
    return QuadraticExpansion{q_, {VectorXd::Zero(n), VectorXd::Zero(n)}};
  }

 private:
  QuadraticQ q_;
};

}  // namespace trajcv
