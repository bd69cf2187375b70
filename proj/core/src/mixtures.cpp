#include "caprisk/mixtures.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "caprisk/error.hpp"

namespace caprisk {

MeanConstraintCheck check_mean_constraint(std::span<const SegmentSpec> segments, double target) {
  double mean = 0.0;
  for (const auto& s : segments) mean += s.weight * s.uncapped_mean();
  MeanConstraintCheck check;
  check.residual = mean - target;
  check.satisfied = target > 0.0 && std::fabs(check.residual) / target <= kMeanConstraintSlack;
  return check;
}

std::vector<std::uint64_t> apportion(std::span<const double> weights, std::uint64_t n) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(total > 0.0)) throw InputError("apportion: weights must sum to a positive value");
  std::vector<std::uint64_t> counts(weights.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::uint64_t assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] < 0.0) throw InputError("apportion: weights must be non-negative");
    const double quota = weights[i] / total * static_cast<double>(n);
    counts[i] = static_cast<std::uint64_t>(std::floor(quota));
    assigned += counts[i];
    remainders.emplace_back(quota - std::floor(quota), i);
  }
  // Largest remainder first; ties go to the earlier segment.
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < n; ++k, ++assigned) {
    ++counts[remainders[k % remainders.size()].second];
  }
  return counts;
}

Scenario build_mixed_scenario(std::span<const SegmentSpec> segments,
                              const MixedScenarioParams& params) {
  if (segments.empty()) throw ConfigError("mixed scenario: no segments");
  double weight_total = 0.0;
  for (const auto& s : segments) {
    if (!(s.weight >= 0.0 && s.weight <= 1.0)) {
      throw ConfigError("mixed scenario: segment '" + s.label + "' weight outside [0, 1]");
    }
    weight_total += s.weight;
  }
  if (std::fabs(weight_total - 1.0) > 1e-9) {
    throw ConfigError("mixed scenario: segment weights must sum to 1");
  }
  const MeanConstraintCheck check = check_mean_constraint(segments, params.target_mean);
  if (!check.satisfied) {
    throw ConfigError("mixed scenario: mean constraint violated (residual " +
                      std::to_string(check.residual) + ")");
  }

  std::vector<double> weights;
  for (const auto& s : segments) weights.push_back(s.weight);
  const std::vector<std::uint64_t> sizes = apportion(weights, params.n);

  Scenario scenario;
  scenario.study_label = params.study_label;
  scenario.replications = params.replications;
  scenario.master_seed = params.seed;
  scenario.composition = Composition::Random;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    if (sizes[i] == 0) continue;
    const SegmentSpec& s = segments[i];
    CohortSpec cohort{
        .label = s.label,
        .n = sizes[i],
        .premium = params.premium,
        .compound = {NegBinomial::from_mean(s.freq_mean, s.dispersion),
                     LogNormal::from_mean(s.sev_mean, s.sev_sigma)},
        .regime = HardCap(params.cap),
    };
    scenario.cohorts.push_back(std::move(cohort));
  }
  scenario.validate();
  return scenario;
}

}  // namespace caprisk
