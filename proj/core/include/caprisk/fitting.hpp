#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace caprisk {

/// A positive severity observation. When `censored` is set, `value` is the
/// censoring threshold and the true severity is known only to be >= value.
struct CensoredSample {
  double value = 0.0;
  bool censored = false;
};

struct FitResult {
  double mu_hat = 0.0;
  double sigma_hat = 0.0;
  double log_likelihood = 0.0;
  bool converged = false;
  int iterations = 0;
  /// Max-norm of the log-likelihood gradient in (mu, log sigma) at the estimate.
  double gradient_norm = 0.0;
  /// sigma_hat was clamped to the 1e-8 floor (degenerate data).
  bool sigma_floored = false;
};

inline constexpr double kSigmaFloor = 1e-8;
inline constexpr int kMaxTobitIterations = 500;

/// Closed-form LogNormal MLE: mean and population (1/n) standard deviation
/// of the logs. Zero log-spread yields sigma at the floor, converged = false.
FitResult mle_lognormal(std::span<const double> values);

/// LogNormal MLE on the uncensored subset only (complete-case deletion).
FitResult naive_complete_case_fit(std::span<const CensoredSample> sample);

/// Censored (Tobit) LogNormal MLE over (mu, log sigma), started from the
/// naive fit. Non-convergence within kMaxTobitIterations is reported through
/// FitResult::converged, never silently.
FitResult mle_lognormal_censored(std::span<const CensoredSample> sample);

/// Log-likelihood of a right-censored LogNormal sample. Uncensored entries
/// contribute the log density, censored entries log(1 − Φ((log c − mu)/sigma)).
double censored_log_likelihood(std::span<const CensoredSample> sample, double mu,
                               double sigma);

/// Analytic gradient of censored_log_likelihood with respect to
/// (mu, log sigma).
std::array<double, 2> censored_log_likelihood_gradient(
    std::span<const CensoredSample> sample, double mu, double sigma);

struct TruncatedMoments {
  double mean_below = 0.0;
  double var_below = 0.0;
};

/// Mean and variance of a standard normal conditioned on Z < z.
TruncatedMoments truncated_normal_moments(double z);

struct BiasRow {
  double fraction = 0.0;
  double threshold = 0.0;
  double observed_censored_fraction = 0.0;
  double naive_mu_bias_pct = 0.0;
  double naive_sigma_bias_pct = 0.0;
  double tobit_mu_bias_pct = 0.0;
  double tobit_sigma_bias_pct = 0.0;
  /// Truncated-normal prediction of the naive biases.
  double oracle_mu_bias_pct = 0.0;
  double oracle_sigma_bias_pct = 0.0;
  bool tobit_converged = false;
};

/// For each censoring fraction f, draws n LogNormal(true_mu, true_sigma)
/// severities, censors them at the analytic (1 − f) quantile, and reports
/// signed percentage biases of the naive and Tobit estimators.
std::vector<BiasRow> censoring_bias_study(double true_mu, double true_sigma, std::uint64_t n,
                                          std::span<const double> fractions,
                                          std::uint64_t seed);

}  // namespace caprisk
