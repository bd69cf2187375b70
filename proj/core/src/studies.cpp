#include "caprisk/studies.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "caprisk/error.hpp"
#include "caprisk/numeric.hpp"
#include "caprisk/scenarios.hpp"

namespace caprisk {

namespace {

constexpr double kReportLevel = 0.99;

std::string level_suffix(double q) {
  std::string s = format_number(q);
  if (s.rfind("0.", 0) == 0) s = s.substr(2);
  return s;
}

std::optional<double> ratio(double num, double den) {
  if (den == 0.0) return std::nullopt;
  return num / den;
}

PortfolioSummary run_builtin(std::string_view name, const StudyOptions& options) {
  return run_monte_carlo(apply_options(builtin(name), options), options.run_options());
}

std::string_view policy_name(std::size_t i) {
  static constexpr std::string_view names[] = {"P0", "P1", "P2", "P3"};
  return names[i];
}

}  // namespace

Scenario apply_options(Scenario scenario, const StudyOptions& options) {
  if (options.seed) scenario.master_seed = *options.seed;
  if (options.replications) scenario.replications = *options.replications;
  if (std::find(scenario.levels.begin(), scenario.levels.end(), kReportLevel) ==
      scenario.levels.end()) {
    scenario.levels.push_back(kReportLevel);
  }
  return scenario;
}

ReserveComparison reserve_comparison(const StudyOptions& options) {
  ReserveComparison result;

  const Scenario naive = builtin("baseline-naive");
  const CohortSpec& nc = naive.cohorts.front();
  const double mean = static_cast<double>(nc.n) * compound_moments(nc.compound).mean;
  const double premium = naive.premium_income();
  result.rows.push_back(ReserveRow{
      .model = "naive",
      .expected_loss = mean,
      .var_99 = mean,
      .tvar_99 = mean,
      .loss_ratio = ratio(mean, premium),
      .margin_over_tvar = premium - mean,
  });

  for (const auto& [model, name] : {std::pair{"poisson_gamma", "baseline-pg"},
                                    std::pair{"nb_lognormal", "baseline-nbln"}}) {
    PortfolioSummary s = run_builtin(name, options);
    result.rows.push_back(ReserveRow{
        .model = model,
        .expected_loss = s.expected_loss,
        .var_99 = s.var(kReportLevel),
        .tvar_99 = s.tvar(kReportLevel),
        .loss_ratio = s.loss_ratio,
        .margin_over_tvar = s.premium_income - s.tvar(kReportLevel),
    });
    result.simulated.push_back(std::move(s));
  }
  return result;
}

CsvTable reserve_comparison_table(const ReserveComparison& result) {
  CsvTable t({"model", "expected_loss", "var_99", "tvar_99", "loss_ratio", "margin_over_tvar"});
  for (const auto& r : result.rows) {
    t.add_row({r.model, format_number(r.expected_loss), format_number(r.var_99),
               format_number(r.tvar_99), format_number(r.loss_ratio),
               format_number(r.margin_over_tvar)});
  }
  return t;
}

CsvTable aggregate_distribution_table(std::span<const PortfolioSummary> summaries,
                                      std::span<const std::string> models, std::size_t bins) {
  if (summaries.size() != models.size()) {
    throw InputError("aggregate_distribution_table: one model name per summary required");
  }
  if (bins == 0) throw InputError("aggregate_distribution_table: bins must be >= 1");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& s : summaries) {
    for (double x : s.loss_samples) {
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
  }
  CsvTable t({"model", "bin_left", "bin_right", "density"});
  if (!(lo <= hi)) return t;
  if (hi == lo) hi = lo + 1.0;
  const double width = (hi - lo) / static_cast<double>(bins);

  for (std::size_t m = 0; m < summaries.size(); ++m) {
    const auto& samples = summaries[m].loss_samples;
    std::vector<std::uint64_t> counts(bins, 0);
    for (double x : samples) {
      auto b = static_cast<std::size_t>((x - lo) / width);
      counts[std::min(b, bins - 1)] += 1;
    }
    const double total = static_cast<double>(samples.size());
    for (std::size_t b = 0; b < bins; ++b) {
      const double left = lo + width * static_cast<double>(b);
      const double right = b + 1 == bins ? hi : lo + width * static_cast<double>(b + 1);
      const double density =
          total == 0.0 ? 0.0 : static_cast<double>(counts[b]) / (total * width);
      t.add_row({models[m], format_number(left), format_number(right), format_number(density)});
    }
  }
  return t;
}

std::vector<PolicyRow> policy_alternatives(const StudyOptions& options) {
  std::vector<PolicyRow> rows;
  for (std::size_t i = 0; i < 4; ++i) {
    const std::string name = "stress-p" + std::to_string(i);
    const Scenario scenario = apply_options(builtin(name), options);
    const PortfolioSummary s = run_monte_carlo(scenario, options.run_options());
    const auto& cohort = scenario.cohorts.front();
    PolicyRow row;
    row.policy = std::string(policy_name(i));
    row.expected_loss = s.expected_loss;
    row.tvar_99 = s.tvar(kReportLevel);
    row.loss_ratio = s.loss_ratio;
    if (regime_has_cap(cohort.regime)) row.cap_hit = s.cohorts.front().cap_hit;
    if (s.premium_income > 0.0) row.margin = s.premium_income - row.tvar_99;
    row.mean_uncapped = s.mean_uncapped;
    rows.push_back(std::move(row));
  }
  return rows;
}

CsvTable policy_alternatives_table(std::span<const PolicyRow> rows) {
  CsvTable t({"policy", "expected_loss", "tvar_99", "loss_ratio", "cap_hit", "margin"});
  for (const auto& r : rows) {
    t.add_row({r.policy, format_number(r.expected_loss), format_number(r.tvar_99),
               format_number(r.loss_ratio), format_number(r.cap_hit), format_number(r.margin)});
  }
  return t;
}

std::vector<VercelRow> vercel_study(const StudyOptions& options) {
  std::vector<VercelRow> rows;
  for (const char* cohort : {"light", "heavy"}) {
    for (const char* k : {"0.25", "0.50", "1.00"}) {
      const std::string name = std::string("vercel-") + cohort + "-k" + k;
      const Scenario scenario = apply_options(builtin(name), options);
      const PortfolioSummary s = run_monte_carlo(scenario, options.run_options());
      VercelRow row;
      row.cohort = cohort;
      row.kappa = std::get<Overage>(scenario.cohorts.front().regime).kappa;
      row.e_s_agg = s.mean_uncapped;
      row.e_cost = s.expected_loss;
      row.premium = s.premium_income;
      row.e_overage_rev = s.mean_overage_revenue;
      row.e_net_loss = s.mean_net_loss;
      for (const auto& rep : s.replications) {
        double premium = 0.0;
        double overage = 0.0;
        for (const auto& c : rep.cohorts) {
          premium += c.premium;
          overage += c.overage_revenue;
        }
        row.max_identity_residual = std::max(
            row.max_identity_residual, std::fabs(rep.net_loss - (rep.loss - premium - overage)));
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

CsvTable vercel_table(std::span<const VercelRow> rows) {
  CsvTable t({"cohort", "kappa", "e_s_agg", "e_cost", "premium", "e_overage_rev", "e_net_loss"});
  for (const auto& r : rows) {
    t.add_row({r.cohort, format_number(r.kappa), format_number(r.e_s_agg), format_number(r.e_cost),
               format_number(r.premium), format_number(r.e_overage_rev),
               format_number(r.e_net_loss)});
  }
  return t;
}

std::vector<MixedRow> mixed_population(const StudyOptions& options) {
  std::vector<MixedRow> rows;
  const std::pair<const char*, const char*> entries[] = {
      {"H", "mixed-h"}, {"M1", "mixed-m1"}, {"M2", "mixed-m2"}, {"M3", "mixed-m3"}};
  for (const auto& [label, name] : entries) {
    const Scenario scenario = apply_options(builtin(name), options);
    const PortfolioSummary s = run_monte_carlo(scenario, options.run_options());
    MixedRow row;
    row.scenario = label;
    row.e_l = s.expected_loss;
    row.var_99 = s.var(kReportLevel);
    row.tvar_99 = s.tvar(kReportLevel);
    if (scenario.cohorts.size() > 1) {
      for (const auto& seg : mixed_segments(std::string(name).substr(6))) {
        if (seg.label == "power") row.pi_power = seg.weight;
      }
      row.cap_hit_power = s.cap_hit_by_cohort.at("power");
      row.cap_hit_light = s.cap_hit_by_cohort.at("light");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

CsvTable mixed_population_table(std::span<const MixedRow> rows) {
  CsvTable t({"scenario", "pi_power", "e_l", "var_99", "tvar_99", "cap_hit_power",
              "cap_hit_light"});
  for (const auto& r : rows) {
    t.add_row({r.scenario, format_number(r.pi_power), format_number(r.e_l),
               format_number(r.var_99), format_number(r.tvar_99), format_number(r.cap_hit_power),
               format_number(r.cap_hit_light)});
  }
  return t;
}

std::vector<BiasRow> censoring_bias(const StudyOptions& options) {
  const Scenario scenario = builtin("censoring-bias");
  const CohortSpec& c = scenario.cohorts.front();
  const auto& ln = std::get<LogNormal>(c.compound.severity);
  return censoring_bias_study(ln.mu, ln.sigma, c.n, kCensoringFractions,
                              options.effective_seed());
}

CsvTable censoring_bias_table(std::span<const BiasRow> rows) {
  CsvTable t({"fraction", "threshold", "observed_censored_fraction", "naive_mu_bias_pct",
              "naive_sigma_bias_pct", "tobit_mu_bias_pct", "tobit_sigma_bias_pct",
              "oracle_mu_bias_pct", "oracle_sigma_bias_pct", "tobit_converged"});
  for (const auto& r : rows) {
    t.add_row({format_number(r.fraction), format_number(r.threshold),
               format_number(r.observed_censored_fraction), format_number(r.naive_mu_bias_pct),
               format_number(r.naive_sigma_bias_pct), format_number(r.tobit_mu_bias_pct),
               format_number(r.tobit_sigma_bias_pct), format_number(r.oracle_mu_bias_pct),
               format_number(r.oracle_sigma_bias_pct), r.tobit_converged ? "1" : "0"});
  }
  return t;
}

std::string censoring_bias_report(std::span<const BiasRow> rows) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "%9s %12s %12s %12s %12s %12s %12s\n", "censored",
                "naive_mu%", "naive_sig%", "tobit_mu%", "tobit_sig%", "oracle_mu%",
                "oracle_sig%");
  out << line;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%8.1f%% %12.2f %12.2f %12.2f %12.2f %12.2f %12.2f\n",
                  100.0 * r.fraction, r.naive_mu_bias_pct, r.naive_sigma_bias_pct,
                  r.tobit_mu_bias_pct, r.tobit_sigma_bias_pct, r.oracle_mu_bias_pct,
                  r.oracle_sigma_bias_pct);
    out << line;
  }
  return out.str();
}

SizeSweepResult size_sweep(const StudyOptions& options, std::span<const std::uint64_t> sizes) {
  return portfolio_size_sweep(apply_options(builtin("size-sweep"), options), sizes,
                              options.run_options(), 0.999);
}

CsvTable size_sweep_table(const SizeSweepResult& result) {
  CsvTable t({"n", "per_user_tail_capital"});
  for (const auto& p : result.points) {
    t.add_row({format_number(p.n), format_number(p.per_user_tail_capital)});
  }
  return t;
}

std::vector<ChurnPeriod> churn_study(const StudyOptions& options,
                                     const ChurnStudyParams& params) {
  Scenario scenario = builtin(params.scenario);
  scenario.replications = params.replications;
  scenario = apply_options(std::move(scenario), options);
  return evolve_portfolio(scenario, params.hazard, params.periods, options.effective_seed(),
                          options.run_options());
}

CsvTable churn_table(std::span<const ChurnPeriod> trajectory) {
  CsvTable t({"period", "n_active", "premium_income", "expected_loss", "loss_ratio",
              "mean_hit_count"});
  for (const auto& p : trajectory) {
    t.add_row({format_number(p.period), format_number(p.n_active),
               format_number(p.premium_income), format_number(p.expected_loss),
               format_number(ratio(p.expected_loss, p.premium_income)),
               format_number(p.mean_hit_count)});
  }
  return t;
}

CsvTable run_summary_table(const Scenario& scenario, const PortfolioSummary& summary) {
  std::vector<std::string> header = {"scope", "mean_users", "expected_loss", "premium_income",
                                     "loss_ratio"};
  for (double q : scenario.levels) header.push_back("var_" + level_suffix(q));
  for (double q : scenario.levels) header.push_back("tvar_" + level_suffix(q));
  for (const char* h : {"reserve", "margin_over_tvar", "cap_hit", "mean_uncapped",
                        "mean_overage_revenue", "mean_net_loss"}) {
    header.emplace_back(h);
  }
  CsvTable t(std::move(header));

  auto level_cells = [&](const std::map<double, double>& by_level, std::vector<std::string>& row) {
    for (double q : scenario.levels) {
      auto it = by_level.find(q);
      row.push_back(it == by_level.end() ? std::string(kNotAvailable) : format_number(it->second));
    }
  };

  double users = 0.0;
  double hits = 0.0;
  bool any_cap = false;
  for (std::size_t c = 0; c < summary.cohorts.size(); ++c) {
    const CohortSummary& cs = summary.cohorts[c];
    const bool capped = regime_has_cap(scenario.cohorts[c].regime);
    std::vector<std::string> row = {cs.label, format_number(cs.mean_users),
                                    format_number(cs.expected_cost),
                                    format_number(cs.mean_premium),
                                    format_number(ratio(cs.expected_cost, cs.mean_premium))};
    level_cells(cs.var_by_level, row);
    level_cells(cs.tvar_by_level, row);
    row.emplace_back(kNotAvailable);
    row.emplace_back(kNotAvailable);
    row.push_back(capped ? format_number(cs.cap_hit) : std::string(kNotAvailable));
    row.push_back(format_number(cs.mean_uncapped));
    row.push_back(format_number(cs.mean_overage_revenue));
    row.push_back(format_number(cs.mean_net_loss));
    t.add_row(std::move(row));
    users += cs.mean_users;
    if (capped) {
      any_cap = true;
      hits += cs.cap_hit * cs.mean_users;
    }
  }

  std::vector<std::string> row = {"portfolio", format_number(users),
                                  format_number(summary.expected_loss),
                                  format_number(summary.premium_income),
                                  format_number(summary.loss_ratio)};
  level_cells(summary.var_by_level, row);
  level_cells(summary.tvar_by_level, row);
  row.push_back(format_number(summary.reserve));
  row.push_back(format_number(summary.margin_over_tvar));
  row.push_back(any_cap && users > 0.0 ? format_number(hits / users)
                                       : std::string(kNotAvailable));
  row.push_back(format_number(summary.mean_uncapped));
  row.push_back(format_number(summary.mean_overage_revenue));
  row.push_back(format_number(summary.mean_net_loss));
  t.add_row(std::move(row));
  return t;
}

}  // namespace caprisk
