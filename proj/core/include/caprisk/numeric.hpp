#pragma once

#include <cstdint>
#include <span>

namespace caprisk {

double normal_pdf(double z);
double normal_cdf(double z);
/// Upper tail 1 - Φ(z), accurate far into the right tail.
double normal_sf(double z);
/// Φ⁻¹(p) for p in (0, 1).
double normal_quantile(double p);
/// φ(z) / (1 - Φ(z)), the inverse Mills ratio of the upper tail.
double inverse_mills(double z);
/// log(1 - Φ(z)).
double log_normal_sf(double z);

/// log(k!) without touching the global signgam that std::lgamma writes.
double log_factorial(std::uint64_t k);

/// Compensated (Neumaier) summation.
class NeumaierSum {
 public:
  void add(double x) noexcept;
  double value() const noexcept { return sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

double compensated_sum(std::span<const double> values) noexcept;
double compensated_mean(std::span<const double> values) noexcept;

}  // namespace caprisk
