#include "caprisk/churn.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "caprisk/error.hpp"
#include "caprisk/numeric.hpp"

namespace caprisk {

namespace {

struct PeriodTotals {
  std::uint64_t active = 0;
  std::uint64_t hits = 0;
  std::uint64_t hit_count_sum = 0;
  double cost = 0.0;
  double uncapped = 0.0;
};

// An NB frequency is a Gamma–Poisson mixture. The Gamma intensity is drawn
// once per user, so each period's count is still NB marginally while heavy
// users stay heavy from one period to the next.
std::vector<double> user_intensities(const CohortSpec& cohort, const RandomStream& rep_stream) {
  const auto* nb = std::get_if<NegBinomial>(&cohort.compound.frequency);
  if (nb == nullptr) return {};
  RandomStream stream = rep_stream.child("intensity");
  std::vector<double> out(cohort.n);
  for (auto& x : out) x = sample_gamma(nb->r, (1.0 - nb->p) / nb->p, stream);
  return out;
}

double period_demand(const CohortSpec& cohort, const std::vector<double>& intensities,
                     std::size_t user, RandomStream& stream) {
  if (intensities.empty()) return sample_compound(cohort.compound, stream);
  const std::uint64_t n = sample_poisson(intensities[user], stream);
  NeumaierSum total;
  for (std::uint64_t j = 0; j < n; ++j) total.add(sample_severity(cohort.compound.severity, stream));
  return total.value();
}

std::vector<PeriodTotals> run_one(const CohortSpec& cohort, const HardCap& cap,
                                  const ChurnParams& params, std::uint64_t periods,
                                  const RandomStream& rep_stream) {
  std::vector<UserChurnState> users(cohort.n);
  const std::vector<double> intensities = user_intensities(cohort, rep_stream);
  std::vector<PeriodTotals> totals(periods);
  for (std::uint64_t t = 0; t < periods; ++t) {
    RandomStream stream = rep_stream.child(t);
    NeumaierSum cost, uncapped;
    PeriodTotals& pt = totals[t];
    for (std::size_t i = 0; i < users.size(); ++i) {
      UserChurnState& user = users[i];
      if (!user.active) continue;
      const double s = period_demand(cohort, intensities, i, stream);
      const PerUserOutcome out = apply_regime(s, cap, cohort.premium);
      if (out.capped) ++user.hit_count;
      ++pt.active;
      pt.hits += out.capped ? 1 : 0;
      pt.hit_count_sum += user.hit_count;
      cost.add(out.seller_cost);
      uncapped.add(s);
      const double p = churn_probability(hazard(params, out.capped, user.hit_count));
      if (stream.uniform() < p) user.active = false;
    }
    pt.cost = cost.value();
    pt.uncapped = uncapped.value();
  }
  return totals;
}

}  // namespace

void ChurnParams::validate() const {
  if (!(std::isfinite(h0) && h0 > 0.0)) throw InputError("churn: h0 must be > 0");
  if (!std::isfinite(beta1) || !std::isfinite(beta2)) {
    throw InputError("churn: beta coefficients must be finite");
  }
}

double hazard(const ChurnParams& params, bool capped_now, std::uint64_t hit_count) {
  return params.h0 * std::exp(params.beta1 * (capped_now ? 1.0 : 0.0) +
                              params.beta2 * static_cast<double>(hit_count));
}

double churn_probability(double hazard_rate) { return -std::expm1(-hazard_rate); }

std::vector<ChurnPeriod> evolve_portfolio(const Scenario& scenario, const ChurnParams& params,
                                          std::uint64_t periods, std::uint64_t seed,
                                          const RunOptions& options) {
  scenario.validate();
  params.validate();
  if (periods < 1) throw InputError("evolve_portfolio: periods must be >= 1");
  if (scenario.cohorts.size() != 1) {
    throw InputError("evolve_portfolio: scenario must have exactly one cohort");
  }
  const CohortSpec& cohort = scenario.cohorts.front();
  const auto* cap = std::get_if<HardCap>(&cohort.regime);
  if (cap == nullptr) throw InputError("evolve_portfolio: cohort must use a hard cap");

  const std::uint64_t reps = scenario.replications;
  const RandomStream root =
      RandomStream(seed).child(scenario.study_label).child("churn").child(cohort.label);
  std::vector<std::vector<PeriodTotals>> runs(reps);

  // Replications are independent; each derives its own stream.
  {
    unsigned threads = options.threads == 0 ? std::max(1u, std::thread::hardware_concurrency())
                                            : options.threads;
    threads = static_cast<unsigned>(std::min<std::uint64_t>(threads, reps));
    std::atomic<std::uint64_t> next{0};
    auto work = [&] {
      for (std::uint64_t r = next.fetch_add(1); r < reps; r = next.fetch_add(1)) {
        runs[r] = run_one(cohort, *cap, params, periods, root.child(r));
      }
    };
    std::vector<std::jthread> workers;
    for (unsigned t = 1; t < threads; ++t) workers.emplace_back(work);
    work();
  }

  std::vector<ChurnPeriod> trajectory(periods);
  for (std::uint64_t t = 0; t < periods; ++t) {
    NeumaierSum active, active_sq, cost, uncapped;
    std::uint64_t active_total = 0, hits = 0, hit_count_sum = 0;
    for (const auto& run : runs) {
      const PeriodTotals& pt = run[t];
      const double a = static_cast<double>(pt.active);
      active.add(a);
      active_sq.add(a * a);
      cost.add(pt.cost);
      uncapped.add(pt.uncapped);
      active_total += pt.active;
      hits += pt.hits;
      hit_count_sum += pt.hit_count_sum;
    }
    const double m = static_cast<double>(reps);
    ChurnPeriod& row = trajectory[t];
    row.period = t + 1;
    row.n_active = active.value() / m;
    row.premium_income = row.n_active * cohort.premium;
    row.expected_loss = cost.value() / m;
    row.loss_ratio = row.premium_income > 0.0 ? row.expected_loss / row.premium_income : 0.0;
    const double denom = static_cast<double>(std::max<std::uint64_t>(active_total, 1));
    row.mean_hit_count = static_cast<double>(hit_count_sum) / denom;
    row.cap_hit_rate = static_cast<double>(hits) / denom;
    row.mean_uncapped_demand = uncapped.value() / denom;
    const double var = std::max(0.0, active_sq.value() / m - row.n_active * row.n_active);
    row.n_active_se = reps > 1 ? std::sqrt(var * m / (m - 1.0) / m) : 0.0;
  }
  return trajectory;
}

}  // namespace caprisk
