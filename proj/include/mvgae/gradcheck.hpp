#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "mvgae/tape.hpp"

namespace mvgae {

/// Records a scalar objective on `tape` given the registered parameters.
/// Must be a pure function of the parameter values.
using ObjectiveBuilder = std::function<Var(Tape& tape, std::span<const Var> params)>;

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t worst_param = 0;
  std::size_t worst_entry = 0;
  std::size_t entries_checked = 0;
};

/// Compares tape gradients with central differences (f(p+e) - f(p-e)) / 2e,
/// entry by entry. Relative error uses max(|analytic|, |numeric|, 1e-8) as
/// the denominator.
GradCheckResult finite_diff_check(const ObjectiveBuilder& objective,
                                  std::span<const Matrix> params, double epsilon = 1e-5);

/// Tape gradients of `objective` at `params`.
std::vector<Matrix> tape_gradients(const ObjectiveBuilder& objective,
                                   std::span<const Matrix> params);

double evaluate_objective(const ObjectiveBuilder& objective, std::span<const Matrix> params);

}  // namespace mvgae
