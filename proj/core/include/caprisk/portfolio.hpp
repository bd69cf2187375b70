#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "caprisk/contracts.hpp"

namespace caprisk {

inline constexpr std::uint64_t kDefaultSeed = 20260515;
inline constexpr std::uint64_t kDefaultReplications = 2000;

/// How users are assigned to cohorts within a replication.
enum class Composition {
  /// Every replication has exactly n users per cohort.
  Fixed,
  /// Each of the Σn users independently joins cohort c with probability
  /// n_c / Σn, redrawn every replication (a mixed population).
  Random,
};

struct Scenario {
  std::string study_label;
  std::vector<CohortSpec> cohorts;
  std::uint64_t replications = kDefaultReplications;
  std::uint64_t master_seed = kDefaultSeed;
  std::vector<double> levels = {0.99, 0.999};
  Composition composition = Composition::Fixed;

  /// Throws InputError when the scenario cannot be simulated.
  void validate() const;
  std::uint64_t total_users() const;
  /// Σ n·P over cohorts (nominal sizes).
  double premium_income() const;

  bool operator==(const Scenario&) const = default;
};

/// Totals for one cohort in one replication.
struct CohortReplication {
  std::uint64_t users = 0;
  std::uint64_t cap_hits = 0;
  double seller_cost = 0.0;
  double uncapped = 0.0;
  double premium = 0.0;
  double overage_revenue = 0.0;
  double usage_revenue = 0.0;
  double net_loss = 0.0;
};

struct ReplicationResult {
  /// Portfolio loss L: Σ seller cost over users and cohorts.
  double loss = 0.0;
  double net_loss = 0.0;
  std::vector<CohortReplication> cohorts;
};

struct CohortSummary {
  std::string label;
  double mean_users = 0.0;
  /// Σ hits / Σ users over all replications.
  double cap_hit = 0.0;
  double expected_cost = 0.0;
  double mean_uncapped = 0.0;
  double mean_premium = 0.0;
  double mean_overage_revenue = 0.0;
  double mean_net_loss = 0.0;
  std::map<double, double> var_by_level;
  std::map<double, double> tvar_by_level;
};

struct PortfolioSummary {
  std::string study_label;
  /// L per replication, in replication order.
  std::vector<double> loss_samples;
  double expected_loss = 0.0;
  double premium_income = 0.0;
  /// expected_loss / premium_income; empty when premium income is zero.
  std::optional<double> loss_ratio;
  std::map<double, double> var_by_level;
  std::map<double, double> tvar_by_level;
  /// max(0, VaR_0.99 - premium income).
  double reserve = 0.0;
  /// premium income - TVaR_0.99.
  double margin_over_tvar = 0.0;
  std::map<std::string, double> cap_hit_by_cohort;
  double mean_overage_revenue = 0.0;
  double mean_net_loss = 0.0;
  double mean_uncapped = 0.0;
  std::vector<CohortSummary> cohorts;
  std::vector<ReplicationResult> replications;

  /// Reported level if present, otherwise computed from loss_samples.
  double var(double q) const;
  double tvar(double q) const;
};

struct RunOptions {
  /// Worker threads; 0 picks the hardware concurrency. Never affects results.
  unsigned threads = 0;
};

/// One replication. Stream path: master → study → cohort → rep_index.
ReplicationResult simulate_replication(const Scenario& scenario, std::uint64_t rep_index);

PortfolioSummary run_monte_carlo(const Scenario& scenario, const RunOptions& options = {});

/// Higher order statistic x_(⌈q·m⌉), no interpolation.
double empirical_var(std::span<const double> samples, double q);
/// Mean of the top ⌈(1−q)·m⌉ samples; always >= empirical_var.
double empirical_tvar(std::span<const double> samples, double q);

/// max(0, VaR_{1−alpha}(L) − premium income).
double reserve_requirement(const PortfolioSummary& summary, double alpha);

/// premium_income >= (1 + eta)·expected_loss.
bool premium_adequate(double expected_loss, double premium_income, double eta);

struct SweepPoint {
  std::uint64_t n = 0;
  double expected_loss = 0.0;
  double tvar = 0.0;
  /// (TVaR_level(L) − E[L]) / n.
  double per_user_tail_capital = 0.0;
};

struct SizeSweepResult {
  double level = 0.999;
  std::vector<SweepPoint> points;
  /// Least-squares slope of log(tail capital) against log(n); empty when
  /// any point has non-positive tail capital.
  std::optional<double> slope;
};

/// Reruns a single-cohort scenario at each size. Each size gets its own
/// study label "<label>/n=<n>" so the points are independent.
SizeSweepResult portfolio_size_sweep(const Scenario& base,
                                     std::span<const std::uint64_t> sizes,
                                     const RunOptions& options = {},
                                     double level = 0.999);

}  // namespace caprisk
