#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "caprisk/portfolio.hpp"

namespace caprisk {

/// One segment of a mixed population: NB frequency with the given mean and
/// dispersion, LogNormal severity with the given mean and log-scale sigma.
struct SegmentSpec {
  std::string label;
  double freq_mean = 0.0;
  double sev_mean = 0.0;
  double sev_sigma = 0.0;
  /// Population share; shares across segments sum to 1.
  double weight = 0.0;
  /// NB dispersion r.
  double dispersion = 1.0;

  double uncapped_mean() const { return freq_mean * sev_mean; }
};

struct MeanConstraintCheck {
  bool satisfied = false;
  /// Σ weight·freq_mean·sev_mean − target.
  double residual = 0.0;
};

/// Relative slack accepted by check_mean_constraint.
inline constexpr double kMeanConstraintSlack = 0.06;

/// Per-user uncapped mean of the mixture against a target;
/// satisfied iff |residual| / target <= kMeanConstraintSlack.
MeanConstraintCheck check_mean_constraint(std::span<const SegmentSpec> segments, double target);

/// Largest-remainder apportionment of n over the weights (sums to n exactly).
std::vector<std::uint64_t> apportion(std::span<const double> weights, std::uint64_t n);

struct MixedScenarioParams {
  std::string study_label;
  std::uint64_t n = 10000;
  double premium = 50.0;
  double cap = 1000.0;
  std::uint64_t replications = kDefaultReplications;
  std::uint64_t seed = kDefaultSeed;
  /// Expected per-user uncapped cost the segments must match.
  double target_mean = 30.0;
};

/// Hard-capped scenario with one cohort per segment. Nominal cohort sizes are
/// the apportioned weights; membership is redrawn per user every replication
/// (Composition::Random). Throws ConfigError when the mean constraint fails
/// or the weights do not sum to 1.
Scenario build_mixed_scenario(std::span<const SegmentSpec> segments,
                              const MixedScenarioParams& params);

}  // namespace caprisk
