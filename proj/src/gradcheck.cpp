#include "mvgae/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mvgae {

namespace {

Var record(Tape& tape, const ObjectiveBuilder& objective, std::span<const Matrix> params) {
  std::vector<Var> vars;
  vars.reserve(params.size());
  for (const auto& p : params) vars.push_back(tape.parameter(p));
  return objective(tape, vars);
}

}  // namespace

double evaluate_objective(const ObjectiveBuilder& objective, std::span<const Matrix> params) {
  Tape tape;
  return tape.value(record(tape, objective, params)).item();
}

std::vector<Matrix> tape_gradients(const ObjectiveBuilder& objective,
                                   std::span<const Matrix> params) {
  Tape tape;
  Var loss = record(tape, objective, params);
  return tape.backward(loss);
}

GradCheckResult finite_diff_check(const ObjectiveBuilder& objective,
                                  std::span<const Matrix> params, double epsilon) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("finite_diff_check: epsilon must be > 0");
  const std::vector<Matrix> analytic = tape_gradients(objective, params);
  std::vector<Matrix> probe(params.begin(), params.end());

  GradCheckResult result;
  for (std::size_t p = 0; p < probe.size(); ++p) {
    for (std::size_t k = 0; k < probe[p].size(); ++k) {
      const double original = probe[p].data()[k];
      probe[p].data()[k] = original + epsilon;
      const double plus = evaluate_objective(objective, probe);
      probe[p].data()[k] = original - epsilon;
      const double minus = evaluate_objective(objective, probe);
      probe[p].data()[k] = original;

      const double numeric = (plus - minus) / (2.0 * epsilon);
      const double exact = analytic[p].data()[k];
      const double denom = std::max({std::abs(exact), std::abs(numeric), 1e-8});
      const double err = std::abs(exact - numeric) / denom;
      if (err > result.max_relative_error) {
        result.max_relative_error = err;
        result.worst_param = p;
        result.worst_entry = k;
      }
      ++result.entries_checked;
    }
  }
  return result;
}

}  // namespace mvgae
