#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "caprisk/mixtures.hpp"
#include "caprisk/portfolio.hpp"

namespace caprisk {

/// Current scenario file schema.
inline constexpr int kScenarioSchemaVersion = 1;

/// Names accepted by builtin(), in registry order.
const std::vector<std::string>& builtin_names();

/// Named parameterization of a published study. Throws ConfigError listing
/// every valid name when `name` is unknown.
Scenario builtin(std::string_view name);

/// Segments of the mixed-population studies ("m1", "m2", "m3").
std::vector<SegmentSpec> mixed_segments(std::string_view variant);

// ---------------------------------------------------------------------------
// Scenario files
//
//   schema_version = 1
//
//   [study]
//   label = baseline-pg
//   reps = 2000
//   seed = 20260515
//   levels = 0.99, 0.999
//   composition = fixed          # or random
//
//   [cohort]                     # repeated, one block per cohort
//   label = main
//   n = 10000
//   premium = 50
//   frequency = poisson          # poisson | negative_binomial | degenerate
//   frequency.lambda = 5         # .r/.p for negative_binomial, .n for degenerate
//   severity = gamma             # gamma | lognormal
//   severity.shape = 2           # .mu/.sigma for lognormal
//   severity.scale = 3
//   regime = hard_cap            # hard_cap | soft_degrade | overage | no_cap | pay_per_use
//   regime.K = 1000              # .rho, .rate, .kappa as the regime requires
//
// '#' starts a comment. Unknown keys and sections are rejected.
// ---------------------------------------------------------------------------

std::string serialize_scenario(const Scenario& scenario);
/// Throws ConfigError (with line number) on syntax or validation errors.
Scenario parse_scenario(std::string_view text);
Scenario load_scenario(const std::filesystem::path& path);
void save_scenario(const Scenario& scenario, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Vercel-style overage calibration
// ---------------------------------------------------------------------------

/// E[max(0, S − K)] for S ~ LogNormal: mean·Φ(d1) − K·Φ(d2).
double lognormal_partial_expectation(const LogNormal& model, double K);

/// LogNormal total monthly consumption with E[S] = target_mean and
/// rate·E[max(0, S − K)] = target_overage_billed, solved by bisection on
/// sigma in [0.05, 5]. Throws CalibrationError when no root exists.
LogNormal calibrate_vercel_heavy(double target_mean, double target_overage_billed, double K,
                                 double rate);

struct VercelParams {
  std::uint64_t n = 10000;
  double premium = 20.0;
  double allowance = 1000.0;
  double rate = 0.15;
  double light_mean = 45.1;
  double light_sigma = 1.0;
  double heavy_mean = 1114.0;
  double heavy_overage_billed = 65.8;
};

}  // namespace caprisk
