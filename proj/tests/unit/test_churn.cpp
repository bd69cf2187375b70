#include <gtest/gtest.h>

#include <cmath>

#include "caprisk/churn.hpp"
#include "caprisk/error.hpp"
#include "caprisk/scenarios.hpp"

namespace caprisk {
namespace {

Scenario small(std::string_view name, std::uint64_t n, std::uint64_t reps) {
  Scenario s = builtin(name);
  s.cohorts.front().n = n;
  s.replications = reps;
  return s;
}

TEST(Hazard, SpecExamples) {
  const ChurnParams null{0.02, 0.0, 0.0};
  for (std::uint64_t h : {0u, 1u, 7u}) {
    EXPECT_DOUBLE_EQ(hazard(null, true, h), 0.02);
    EXPECT_DOUBLE_EQ(hazard(null, false, h), 0.02);
  }
  EXPECT_NEAR(hazard({0.02, 0.7, 0.1}, true, 3), 0.0543656, 1e-7);
  const ChurnParams fatigue{0.02, 0.3, 0.1};
  for (std::uint64_t h = 0; h < 20; ++h) {
    EXPECT_LT(hazard(fatigue, false, h), hazard(fatigue, false, h + 1));
  }
  EXPECT_DOUBLE_EQ(churn_probability(0.02), -std::expm1(-0.02));
}

TEST(Evolve, Validation) {
  EXPECT_THROW(ChurnParams({0.0, 0.0, 0.0}).validate(), InputError);
  EXPECT_THROW(evolve_portfolio(small("baseline-nbln", 10, 2), {0.02, 0, 0}, 0, 1), InputError);
  EXPECT_THROW(evolve_portfolio(small("stress-p2", 10, 2), {0.02, 0, 0}, 3, 1), InputError);
  Scenario mixed = builtin("mixed-m1");
  mixed.replications = 2;
  EXPECT_THROW(evolve_portfolio(mixed, {0.02, 0, 0}, 3, 1), InputError);
}

TEST(Evolve, NoChurnKeepsEveryone) {
  const auto traj = evolve_portfolio(small("baseline-nbln", 500, 3), {1e-12, 0, 0}, 6, 1);
  for (const auto& p : traj) EXPECT_EQ(p.n_active, 500.0);
}

TEST(Evolve, PremiumIncomeIdentity) {
  const auto s = small("baseline-nbln", 300, 4);
  const auto traj = evolve_portfolio(s, {0.05, 0.5, 0.1}, 5, 2);
  for (const auto& p : traj) {
    EXPECT_DOUBLE_EQ(p.premium_income, p.n_active * s.cohorts.front().premium);
  }
}

TEST(Evolve, NullCoefficientSurvivalIsExponential) {
  const double h0 = 0.05;
  const auto traj = evolve_portfolio(small("baseline-nbln", 2000, 40), {h0, 0, 0}, 10, 3);
  for (const auto& p : traj) {
    // Active during period t means survived t - 1 period ends.
    const double expected = 2000.0 * std::exp(-h0 * static_cast<double>(p.period - 1));
    const double se = std::max(p.n_active_se, 1e-9);
    EXPECT_NEAR(p.n_active, expected, 3.0 * se + 1e-9) << "period " << p.period;
  }
}

TEST(Evolve, ReproducibleAcrossThreads) {
  const auto s = small("stress-p0", 200, 6);
  const auto a = evolve_portfolio(s, {0.02, 1.0, 0.2}, 4, 9, {1});
  const auto b = evolve_portfolio(s, {0.02, 1.0, 0.2}, 4, 9, {3});
  for (std::size_t t = 0; t < a.size(); ++t) {
    EXPECT_EQ(a[t].n_active, b[t].n_active);
    EXPECT_EQ(a[t].expected_loss, b[t].expected_loss);
  }
}

TEST(Evolve, HeavyUsersExitFirst) {
  const auto traj = evolve_portfolio(small("stress-p0", 2000, 10), {0.02, 1.0, 0.2}, 10, 4);
  EXPECT_LT(traj[9].mean_uncapped_demand, traj[0].mean_uncapped_demand);
}

TEST(Evolve, StressP0TrajectoryDeclines) {
  const auto traj = evolve_portfolio(small("stress-p0", 5000, 10), {0.02, 1.0, 0.2}, 12, 5);
  for (std::size_t t = 1; t < traj.size(); ++t) {
    EXPECT_LT(traj[t].n_active, traj[t - 1].n_active) << "period " << traj[t].period;
    EXPECT_LT(traj[t].loss_ratio, traj[t - 1].loss_ratio) << "period " << traj[t].period;
  }
}

TEST(Evolve, SurvivorHitCountBelowCounterfactual) {
  const auto s = small("stress-p0", 2000, 10);
  const auto churned = evolve_portfolio(s, {0.02, 1.0, 0.2}, 8, 6);
  const auto stayed = evolve_portfolio(s, {1e-12, 0.0, 0.0}, 8, 6);
  for (std::size_t t = 4; t < churned.size(); ++t) {
    // Hit counts are bounded by t; SE of a mean over >= 1e4 user-periods.
    const double se = static_cast<double>(t + 1) / std::sqrt(churned[t].n_active * 10.0);
    EXPECT_LE(churned[t].mean_hit_count, stayed[t].mean_hit_count + 3.0 * se);
  }
}

}  // namespace
}  // namespace caprisk
