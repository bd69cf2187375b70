#include "caprisk/numeric.hpp"

#include <array>
#include <cmath>
#include <numbers>

#include <boost/math/distributions/normal.hpp>

#include "caprisk/error.hpp"

namespace caprisk {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

constexpr std::size_t kFactorialTableSize = 256;

std::array<double, kFactorialTableSize> make_log_factorial_table() {
  std::array<double, kFactorialTableSize> table{};
  table[0] = 0.0;
  for (std::size_t k = 1; k < kFactorialTableSize; ++k) {
    table[k] = table[k - 1] + std::log(static_cast<double>(k));
  }
  return table;
}

const std::array<double, kFactorialTableSize>& log_factorial_table() {
  static const auto table = make_log_factorial_table();
  return table;
}

}  // namespace

double normal_pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }

double normal_cdf(double z) { return 0.5 * std::erfc(-z * kInvSqrt2); }

double normal_sf(double z) { return 0.5 * std::erfc(z * kInvSqrt2); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw InputError("normal_quantile: p must lie in (0, 1)");
  }
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

double inverse_mills(double z) {
  // erfc underflows near z = 38; switch to the asymptotic continued fraction.
  if (z < 30.0) {
    return normal_pdf(z) / normal_sf(z);
  }
  return z + 1.0 / (z + 2.0 / (z + 3.0 / (z + 4.0 / z)));
}

double log_normal_sf(double z) {
  if (z < 30.0) {
    return std::log(normal_sf(z));
  }
  return -0.5 * z * z - 0.5 * std::log(2.0 * std::numbers::pi) - std::log(inverse_mills(z));
}

double log_factorial(std::uint64_t k) {
  if (k < kFactorialTableSize) {
    return log_factorial_table()[k];
  }
  // Stirling series; error below 1e-16 relative for k >= 256.
  const double x = static_cast<double>(k) + 1.0;
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  return (x - 0.5) * std::log(x) - x + 0.5 * std::log(2.0 * std::numbers::pi) +
         inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 / 1260.0));
}

void NeumaierSum::add(double x) noexcept {
  const double t = sum_ + x;
  if (std::fabs(sum_) >= std::fabs(x)) {
    compensation_ += (sum_ - t) + x;
  } else {
    compensation_ += (x - t) + sum_;
  }
  sum_ = t;
}

double compensated_sum(std::span<const double> values) noexcept {
  NeumaierSum acc;
  for (double v : values) acc.add(v);
  return acc.value();
}

double compensated_mean(std::span<const double> values) noexcept {
  if (values.empty()) return 0.0;
  return compensated_sum(values) / static_cast<double>(values.size());
}

}  // namespace caprisk
