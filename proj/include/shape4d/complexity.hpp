#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>

namespace shape4d {

namespace detail {
inline void check_code_rate(double rate) {
  if (!(rate > 0.0 && rate <= 1.0)) throw std::invalid_argument("code rate must be in (0, 1]");
}
}  // namespace detail

/// Belief-propagation message updates per information bit, up to a constant:
/// iterations * dv / R * log2(M).
[[nodiscard]] inline double decoding_complexity(double rate, double dvAvg, double iterations, std::size_t order) {
  detail::check_code_rate(rate);
  return iterations * dvAvg / rate * std::log2(static_cast<double>(order));
}

/// Largest iteration count whose complexity stays within `budget`.
[[nodiscard]] inline std::size_t iterations_for_budget(double budget, double rate, double dvAvg, std::size_t order) {
  detail::check_code_rate(rate);
  const double per_iteration = dvAvg / rate * std::log2(static_cast<double>(order));
  if (!(per_iteration > 0.0)) throw std::invalid_argument("iterations_for_budget: degenerate parameters");
  return static_cast<std::size_t>(std::floor(budget / per_iteration + 1e-9));
}

}  // namespace shape4d
