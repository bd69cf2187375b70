#pragma once

#include <cstdint>
#include <vector>

#include "caprisk/portfolio.hpp"

namespace caprisk {

/// Proportional hazard on cap-hit history:
/// h = h0 · exp(beta1·[capped this period] + beta2·hit_count).
struct ChurnParams {
  double h0 = 0.02;
  double beta1 = 0.0;
  double beta2 = 0.0;

  void validate() const;
};

struct UserChurnState {
  bool active = true;
  std::uint64_t hit_count = 0;
};

double hazard(const ChurnParams& params, bool capped_now, std::uint64_t hit_count);

/// Probability of churning at the end of a unit-length period, 1 − exp(−h).
double churn_probability(double hazard_rate);

/// One period of the trajectory, averaged over replications. Users counted
/// in period t are those active during t; churn is applied at period end.
struct ChurnPeriod {
  std::uint64_t period = 0;
  double n_active = 0.0;
  /// n_active · premium.
  double premium_income = 0.0;
  /// Mean seller cost of active users in the period.
  double expected_loss = 0.0;
  double loss_ratio = 0.0;
  /// Mean cumulative hit count (including this period) among active users.
  double mean_hit_count = 0.0;
  /// Fraction of active users whose demand reached the cap this period.
  double cap_hit_rate = 0.0;
  /// Mean uncapped demand per active user.
  double mean_uncapped_demand = 0.0;
  /// Standard error of n_active across replications.
  double n_active_se = 0.0;
};

/// Multi-period evolution of a single hard-capped cohort with churn driven by
/// cap hits. Inactive users draw nothing and pay nothing. A user's demand is
/// i.i.d. across periods given the user; under an NB frequency the Gamma
/// intensity is fixed per user. Averages over scenario.replications runs.
std::vector<ChurnPeriod> evolve_portfolio(const Scenario& scenario, const ChurnParams& params,
                                          std::uint64_t periods, std::uint64_t seed,
                                          const RunOptions& options = {});

}  // namespace caprisk
