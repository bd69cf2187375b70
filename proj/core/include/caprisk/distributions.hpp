#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "caprisk/random.hpp"

namespace caprisk {

struct Moments {
  double mean = 0.0;
  double variance = 0.0;
};

// ---------------------------------------------------------------------------
// Frequency families (events per reset period)
// ---------------------------------------------------------------------------

struct Poisson {
  double lambda;

  explicit Poisson(double lambda);
  bool operator==(const Poisson&) const = default;
};

/// Failures before the r-th success: mean r(1-p)/p, variance r(1-p)/p².
/// r may be any positive real (sampled as a Gamma–Poisson mixture).
struct NegBinomial {
  double r;
  double p;

  NegBinomial(double r, double p);
  /// Dispersion r with p solved from the target mean, p = r / (r + mean).
  static NegBinomial from_mean(double mean, double r);
  bool operator==(const NegBinomial&) const = default;
};

struct Degenerate {
  std::uint64_t n;

  explicit Degenerate(std::uint64_t n) : n(n) {}
  bool operator==(const Degenerate&) const = default;
};

using FrequencyModel = std::variant<Poisson, NegBinomial, Degenerate>;

// ---------------------------------------------------------------------------
// Severity families (dollars per event)
// ---------------------------------------------------------------------------

/// Shape–scale parameterization: mean αθ.
struct Gamma {
  double shape;
  double scale;

  Gamma(double shape, double scale);
  bool operator==(const Gamma&) const = default;
};

/// log S ~ N(mu, sigma²).
struct LogNormal {
  double mu;
  double sigma;

  LogNormal(double mu, double sigma);
  /// mu chosen so that E[S] = mean.
  static LogNormal from_mean(double mean, double sigma);
  bool operator==(const LogNormal&) const = default;
};

using SeverityModel = std::variant<Gamma, LogNormal>;

struct CompoundSpec {
  FrequencyModel frequency;
  SeverityModel severity;

  bool operator==(const CompoundSpec&) const = default;
};

Moments frequency_moments(const FrequencyModel& model);
Moments severity_moments(const SeverityModel& model);
/// Wald identities: E = E[N]E[S], Var = E[N]Var(S) + Var(N)E[S]².
Moments compound_moments(const CompoundSpec& spec);

std::uint64_t sample_frequency(const FrequencyModel& model, RandomStream& stream);
double sample_severity(const SeverityModel& model, RandomStream& stream);
/// Uncapped aggregate: N from the frequency model, then N severities in
/// event order from the same stream. Zero when N = 0.
double sample_compound(const CompoundSpec& spec, RandomStream& stream);

// Primitive samplers, exposed for tests and benchmarks.
double sample_gamma(double shape, double scale, RandomStream& stream);
std::uint64_t sample_poisson(double lambda, RandomStream& stream);

// ---------------------------------------------------------------------------
// LLM token severity
// ---------------------------------------------------------------------------

struct TokenRateCard {
  double c_in = 0.0;
  std::map<std::string, double> c_out_by_model;
  std::map<std::string, double> c_tool_by_kind;

  /// Throws InputError if any rate is negative.
  void validate() const;
};

struct UsageEvent {
  std::uint64_t tokens_in = 0;
  std::uint64_t tokens_out = 0;
  std::string model_class;
  /// Multiset: a tool listed twice is charged twice.
  std::vector<std::string> tools_invoked;
};

/// c_in·tokens_in + c_out(model)·tokens_out + Σ c_tool over invoked tools.
/// Throws LookupError for an unknown model class or tool kind.
double token_severity(const TokenRateCard& card, const UsageEvent& event);

}  // namespace caprisk
