#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string_view>

namespace spnseq {

enum class Semiring { SumProduct, MaxProduct };

inline constexpr double kLogZero = -std::numeric_limits<double>::infinity();

// log(exp(a) + exp(b)) without overflow.
inline double log_add(double a, double b) noexcept {
  if (a < b) std::swap(a, b);
  if (b == kLogZero) return a;
  return a + std::log1p(std::exp(b - a));
}

inline double log_sum_exp(std::span<const double> values) noexcept {
  double peak = kLogZero;
  for (double v : values) peak = std::max(peak, v);
  if (peak == kLogZero) return kLogZero;
  double total = 0.0;
  for (double v : values) total += std::exp(v - peak);
  return peak + std::log(total);
}

inline double max_value(std::span<const double> values) noexcept {
  double peak = kLogZero;
  for (double v : values) peak = std::max(peak, v);
  return peak;
}

// Reduction used by a sum node under the given semiring.
inline double semiring_reduce(Semiring semiring, std::span<const double> values) noexcept {
  return semiring == Semiring::SumProduct ? log_sum_exp(values) : max_value(values);
}

const char* to_string(Semiring semiring) noexcept;
Semiring semiring_from_string(const std::string_view name);

}  // namespace spnseq
