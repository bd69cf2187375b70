#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "caprisk/churn.hpp"
#include "caprisk/csv.hpp"
#include "caprisk/fitting.hpp"
#include "caprisk/portfolio.hpp"

namespace caprisk {

/// Overrides applied to every built-in scenario a study runs.
struct StudyOptions {
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> replications;
  unsigned threads = 0;

  std::uint64_t effective_seed() const { return seed.value_or(kDefaultSeed); }
  RunOptions run_options() const { return RunOptions{threads}; }
};

Scenario apply_options(Scenario scenario, const StudyOptions& options);

// ---------------------------------------------------------------------------
// Reserve comparison: naive (analytic), Poisson–Gamma, NB–LogNormal
// ---------------------------------------------------------------------------

struct ReserveRow {
  std::string model;
  double expected_loss = 0.0;
  double var_99 = 0.0;
  double tvar_99 = 0.0;
  std::optional<double> loss_ratio;
  double margin_over_tvar = 0.0;
};

struct ReserveComparison {
  std::vector<ReserveRow> rows;
  /// Simulated summaries behind the poisson_gamma and nb_lognormal rows.
  std::vector<PortfolioSummary> simulated;
};

ReserveComparison reserve_comparison(const StudyOptions& options);
CsvTable reserve_comparison_table(const ReserveComparison& result);

/// 200 equal-width bins over the pooled range of the simulated loss samples;
/// density integrates to 1 per model.
CsvTable aggregate_distribution_table(std::span<const PortfolioSummary> summaries,
                                      std::span<const std::string> models,
                                      std::size_t bins = 200);

// ---------------------------------------------------------------------------
// Policy alternatives P0..P3 on the stress compound
// ---------------------------------------------------------------------------

struct PolicyRow {
  std::string policy;
  double expected_loss = 0.0;
  double tvar_99 = 0.0;
  std::optional<double> loss_ratio;
  /// Empty for regimes without a cap.
  std::optional<double> cap_hit;
  std::optional<double> margin;
  /// E[S_agg] over the portfolio.
  double mean_uncapped = 0.0;
};

std::vector<PolicyRow> policy_alternatives(const StudyOptions& options);
CsvTable policy_alternatives_table(std::span<const PolicyRow> rows);

// ---------------------------------------------------------------------------
// Overage contracts (light and heavy cohorts at three cost ratios)
// ---------------------------------------------------------------------------

struct VercelRow {
  std::string cohort;
  double kappa = 0.0;
  double e_s_agg = 0.0;
  double e_cost = 0.0;
  double premium = 0.0;
  double e_overage_rev = 0.0;
  double e_net_loss = 0.0;
  /// max over replications of |net − (cost − premium − overage)|.
  double max_identity_residual = 0.0;
};

std::vector<VercelRow> vercel_study(const StudyOptions& options);
CsvTable vercel_table(std::span<const VercelRow> rows);

// ---------------------------------------------------------------------------
// Mixed populations
// ---------------------------------------------------------------------------

struct MixedRow {
  std::string scenario;
  std::optional<double> pi_power;
  double e_l = 0.0;
  double var_99 = 0.0;
  double tvar_99 = 0.0;
  std::optional<double> cap_hit_power;
  std::optional<double> cap_hit_light;
};

std::vector<MixedRow> mixed_population(const StudyOptions& options);
CsvTable mixed_population_table(std::span<const MixedRow> rows);

// ---------------------------------------------------------------------------
// Censoring bias
// ---------------------------------------------------------------------------

inline constexpr double kCensoringFractions[] = {0.05, 0.20, 0.40};

std::vector<BiasRow> censoring_bias(const StudyOptions& options);
CsvTable censoring_bias_table(std::span<const BiasRow> rows);
/// Fixed-width text report of the same rows.
std::string censoring_bias_report(std::span<const BiasRow> rows);

// ---------------------------------------------------------------------------
// Portfolio size sweep
// ---------------------------------------------------------------------------

inline constexpr std::uint64_t kSweepSizes[] = {500, 1000, 2000, 5000, 10000, 20000, 50000, 100000};

SizeSweepResult size_sweep(const StudyOptions& options,
                           std::span<const std::uint64_t> sizes = kSweepSizes);
CsvTable size_sweep_table(const SizeSweepResult& result);

// ---------------------------------------------------------------------------
// Churn trajectory
// ---------------------------------------------------------------------------

struct ChurnStudyParams {
  std::string scenario = "stress-p0";
  ChurnParams hazard{0.02, 1.0, 0.2};
  std::uint64_t periods = 12;
  /// Trajectory replications when no override is given.
  std::uint64_t replications = 20;
};

std::vector<ChurnPeriod> churn_study(const StudyOptions& options, const ChurnStudyParams& params);
CsvTable churn_table(std::span<const ChurnPeriod> trajectory);

// ---------------------------------------------------------------------------
// Generic run summary
// ---------------------------------------------------------------------------

/// One row per cohort plus a final "portfolio" row.
CsvTable run_summary_table(const Scenario& scenario, const PortfolioSummary& summary);

}  // namespace caprisk
