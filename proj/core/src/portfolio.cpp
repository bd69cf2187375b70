#include "caprisk/portfolio.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <set>
#include <thread>

#include "caprisk/error.hpp"
#include "caprisk/numeric.hpp"

namespace caprisk {

namespace {

// Absorbs representation error in q·m, e.g. 0.99 · 2000 = 1980.0000000000002.
constexpr double kRankSlack = 1e-9;

constexpr std::string_view kCompositionLabel = "__composition__";

std::size_t var_rank(std::size_t m, double q) {
  const auto k = static_cast<std::size_t>(std::ceil(q * static_cast<double>(m) - kRankSlack));
  return std::clamp<std::size_t>(k, 1, m);
}

std::size_t tail_count(std::size_t m, double q) {
  const double t = std::ceil((1.0 - q) * static_cast<double>(m) - kRankSlack);
  return t < 1.0 ? 0 : std::min(m, static_cast<std::size_t>(t));
}

void check_level(double q) {
  if (!(q > 0.0 && q < 1.0)) {
    throw InputError("risk level must lie in (0, 1), got " + std::to_string(q));
  }
}

double var_sorted(std::span<const double> sorted, double q) {
  return sorted[var_rank(sorted.size(), q) - 1];
}

double tvar_sorted(std::span<const double> sorted, double q) {
  const std::size_t t = tail_count(sorted.size(), q);
  if (t == 0) {
    throw InputError("empirical_tvar: level leaves no tail samples");
  }
  return compensated_mean(sorted.subspan(sorted.size() - t));
}

std::vector<std::uint64_t> draw_composition(const Scenario& scenario, std::uint64_t rep) {
  std::vector<std::uint64_t> counts(scenario.cohorts.size(), 0);
  if (scenario.composition == Composition::Fixed) {
    for (std::size_t c = 0; c < counts.size(); ++c) counts[c] = scenario.cohorts[c].n;
    return counts;
  }
  const std::uint64_t total = scenario.total_users();
  std::vector<double> cumulative;
  cumulative.reserve(counts.size());
  double acc = 0.0;
  for (const auto& cohort : scenario.cohorts) {
    acc += static_cast<double>(cohort.n) / static_cast<double>(total);
    cumulative.push_back(acc);
  }
  cumulative.back() = 1.0;
  RandomStream stream = RandomStream(scenario.master_seed)
                            .child(scenario.study_label)
                            .child(kCompositionLabel)
                            .child(rep);
  for (std::uint64_t i = 0; i < total; ++i) {
    const double u = stream.uniform();
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    const auto c = static_cast<std::size_t>(
        std::min<std::ptrdiff_t>(it - cumulative.begin(),
                                 static_cast<std::ptrdiff_t>(counts.size()) - 1));
    ++counts[c];
  }
  return counts;
}

template <class Fn>
void parallel_for(std::uint64_t count, unsigned threads, Fn&& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::uint64_t>(threads, count));
  if (threads <= 1) {
    for (std::uint64_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> workers;
    workers.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) {
      workers.emplace_back([&] {
        for (;;) {
          const std::uint64_t i = next.fetch_add(1);
          if (i >= count) return;
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            next.store(count);
            return;
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

void fill_levels(std::span<const double> sorted, std::span<const double> levels,
                 std::map<double, double>& var_out, std::map<double, double>& tvar_out) {
  for (double q : levels) {
    var_out[q] = var_sorted(sorted, q);
    tvar_out[q] = tvar_sorted(sorted, q);
  }
}

}  // namespace

void Scenario::validate() const {
  if (study_label.empty()) throw InputError("scenario: study label must not be empty");
  if (cohorts.empty()) throw InputError("scenario: at least one cohort is required");
  if (replications < 2) throw InputError("scenario: replications must be >= 2");
  std::set<std::string> labels;
  for (const auto& cohort : cohorts) {
    cohort.validate();
    if (!labels.insert(cohort.label).second) {
      throw InputError("scenario: duplicate cohort label '" + cohort.label + "'");
    }
  }
  if (total_users() == 0) throw InputError("scenario: total portfolio size must be > 0");
  for (double q : levels) check_level(q);
  if (composition == Composition::Random) {
    const double premium = cohorts.front().premium;
    for (const auto& cohort : cohorts) {
      if (cohort.premium != premium) {
        throw InputError("scenario: random composition requires a shared premium");
      }
    }
  }
}

std::uint64_t Scenario::total_users() const {
  std::uint64_t total = 0;
  for (const auto& cohort : cohorts) total += cohort.n;
  return total;
}

double Scenario::premium_income() const {
  NeumaierSum sum;
  for (const auto& cohort : cohorts) sum.add(static_cast<double>(cohort.n) * cohort.premium);
  return sum.value();
}

double PortfolioSummary::var(double q) const {
  if (auto it = var_by_level.find(q); it != var_by_level.end()) return it->second;
  return empirical_var(loss_samples, q);
}

double PortfolioSummary::tvar(double q) const {
  if (auto it = tvar_by_level.find(q); it != tvar_by_level.end()) return it->second;
  return empirical_tvar(loss_samples, q);
}

ReplicationResult simulate_replication(const Scenario& scenario, std::uint64_t rep_index) {
  if (rep_index >= scenario.replications) {
    throw InputError("simulate_replication: replication index out of range");
  }
  const std::vector<std::uint64_t> counts = draw_composition(scenario, rep_index);
  const RandomStream study = RandomStream(scenario.master_seed).child(scenario.study_label);

  ReplicationResult result;
  result.cohorts.resize(scenario.cohorts.size());
  NeumaierSum loss;
  NeumaierSum net;
  for (std::size_t c = 0; c < scenario.cohorts.size(); ++c) {
    const CohortSpec& cohort = scenario.cohorts[c];
    RandomStream stream = study.child(cohort.label).child(rep_index);
    NeumaierSum cost, uncapped, overage, usage;
    std::uint64_t hits = 0;
    for (std::uint64_t i = 0; i < counts[c]; ++i) {
      const double s = sample_compound(cohort.compound, stream);
      const PerUserOutcome out = apply_regime(s, cohort.regime, cohort.premium);
      cost.add(out.seller_cost);
      uncapped.add(s);
      overage.add(out.overage_billed);
      if (std::holds_alternative<PayPerUse>(cohort.regime)) usage.add(out.user_billed);
      hits += out.capped ? 1 : 0;
    }
    CohortReplication& agg = result.cohorts[c];
    agg.users = counts[c];
    agg.cap_hits = hits;
    agg.seller_cost = cost.value();
    agg.uncapped = uncapped.value();
    agg.premium = static_cast<double>(counts[c]) * cohort.premium;
    agg.overage_revenue = overage.value();
    agg.usage_revenue = usage.value();
    agg.net_loss = agg.seller_cost - (agg.premium + agg.overage_revenue + agg.usage_revenue);
    loss.add(agg.seller_cost);
    net.add(agg.net_loss);
  }
  result.loss = loss.value();
  result.net_loss = net.value();
  return result;
}

PortfolioSummary run_monte_carlo(const Scenario& scenario, const RunOptions& options) {
  scenario.validate();
  const std::uint64_t m = scenario.replications;

  PortfolioSummary summary;
  summary.study_label = scenario.study_label;
  summary.replications.resize(m);
  parallel_for(m, options.threads, [&](std::uint64_t r) {
    summary.replications[r] = simulate_replication(scenario, r);
  });

  summary.loss_samples.reserve(m);
  std::vector<double> net_samples;
  net_samples.reserve(m);
  for (const auto& rep : summary.replications) {
    summary.loss_samples.push_back(rep.loss);
    net_samples.push_back(rep.net_loss);
  }

  std::vector<double> sorted = summary.loss_samples;
  std::sort(sorted.begin(), sorted.end());

  summary.expected_loss = compensated_mean(summary.loss_samples);
  summary.premium_income = scenario.premium_income();
  if (summary.premium_income > 0.0) {
    summary.loss_ratio = summary.expected_loss / summary.premium_income;
  }
  fill_levels(sorted, scenario.levels, summary.var_by_level, summary.tvar_by_level);
  summary.reserve = std::max(0.0, var_sorted(sorted, 0.99) - summary.premium_income);
  summary.margin_over_tvar = summary.premium_income - tvar_sorted(sorted, 0.99);
  summary.mean_net_loss = compensated_mean(net_samples);

  NeumaierSum overage_total, uncapped_total;
  for (std::size_t c = 0; c < scenario.cohorts.size(); ++c) {
    CohortSummary cs;
    cs.label = scenario.cohorts[c].label;
    std::vector<double> cost(m), uncapped(m), premium(m), overage(m), net(m), users(m);
    std::uint64_t hits = 0, user_total = 0;
    for (std::uint64_t r = 0; r < m; ++r) {
      const CohortReplication& cr = summary.replications[r].cohorts[c];
      cost[r] = cr.seller_cost;
      uncapped[r] = cr.uncapped;
      premium[r] = cr.premium;
      overage[r] = cr.overage_revenue;
      net[r] = cr.net_loss;
      users[r] = static_cast<double>(cr.users);
      hits += cr.cap_hits;
      user_total += cr.users;
    }
    cs.mean_users = compensated_mean(users);
    cs.cap_hit = user_total == 0 ? 0.0
                                 : static_cast<double>(hits) / static_cast<double>(user_total);
    cs.expected_cost = compensated_mean(cost);
    cs.mean_uncapped = compensated_mean(uncapped);
    cs.mean_premium = compensated_mean(premium);
    cs.mean_overage_revenue = compensated_mean(overage);
    cs.mean_net_loss = compensated_mean(net);
    std::sort(cost.begin(), cost.end());
    fill_levels(cost, scenario.levels, cs.var_by_level, cs.tvar_by_level);

    summary.cap_hit_by_cohort[cs.label] = cs.cap_hit;
    overage_total.add(cs.mean_overage_revenue);
    uncapped_total.add(cs.mean_uncapped);
    summary.cohorts.push_back(std::move(cs));
  }
  summary.mean_overage_revenue = overage_total.value();
  summary.mean_uncapped = uncapped_total.value();
  return summary;
}

double empirical_var(std::span<const double> samples, double q) {
  check_level(q);
  if (samples.empty()) throw InputError("empirical_var: empty sample list");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  return var_sorted(sorted, q);
}

double empirical_tvar(std::span<const double> samples, double q) {
  check_level(q);
  if (samples.empty()) throw InputError("empirical_tvar: empty sample list");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  return tvar_sorted(sorted, q);
}

double reserve_requirement(const PortfolioSummary& summary, double alpha) {
  return std::max(0.0, summary.var(1.0 - alpha) - summary.premium_income);
}

bool premium_adequate(double expected_loss, double premium_income, double eta) {
  if (!(premium_income >= 0.0)) {
    throw InputError("premium_adequate: premium income must be >= 0");
  }
  return premium_income >= (1.0 + eta) * expected_loss;
}

SizeSweepResult portfolio_size_sweep(const Scenario& base,
                                     std::span<const std::uint64_t> sizes,
                                     const RunOptions& options, double level) {
  if (base.cohorts.size() != 1) {
    throw InputError("portfolio_size_sweep: base scenario must have exactly one cohort");
  }
  if (sizes.empty()) throw InputError("portfolio_size_sweep: sizes must not be empty");
  check_level(level);

  SizeSweepResult result;
  result.level = level;
  for (std::uint64_t n : sizes) {
    if (n == 0) throw InputError("portfolio_size_sweep: sizes must be positive");
    Scenario scenario = base;
    scenario.cohorts.front().n = n;
    scenario.study_label = base.study_label + "/n=" + std::to_string(n);
    scenario.levels = {level};
    const PortfolioSummary summary = run_monte_carlo(scenario, options);
    SweepPoint point;
    point.n = n;
    point.expected_loss = summary.expected_loss;
    point.tvar = summary.tvar(level);
    point.per_user_tail_capital =
        (point.tvar - point.expected_loss) / static_cast<double>(n);
    result.points.push_back(point);
  }

  bool all_positive = true;
  for (const auto& p : result.points) all_positive &= p.per_user_tail_capital > 0.0;
  if (all_positive && result.points.size() >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double k = static_cast<double>(result.points.size());
    for (const auto& p : result.points) {
      const double x = std::log(static_cast<double>(p.n));
      const double y = std::log(p.per_user_tail_capital);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    const double denom = k * sxx - sx * sx;
    if (denom > 0.0) result.slope = (k * sxy - sx * sy) / denom;
  }
  return result;
}

}  // namespace caprisk
