#include "caprisk/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "caprisk/error.hpp"
#include "caprisk/numeric.hpp"
#include "caprisk/random.hpp"

namespace caprisk {

namespace {

constexpr double kGradientTolerance = 1e-8;
constexpr double kLikelihoodTolerance = 1e-12;
// The likelihood-change stopping rule only counts as convergence when the
// gradient is already small.
constexpr double kLooseGradientTolerance = 1e-5;
const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

struct Evaluation {
  double ll = 0.0;
  std::array<double, 2> grad{};
  // Hessian in (mu, tau = log sigma): [0][0], [0][1], [1][1].
  double h_mm = 0.0, h_mt = 0.0, h_tt = 0.0;
};

Evaluation evaluate(std::span<const CensoredSample> sample, double mu, double tau,
                    bool with_hessian) {
  const double sigma = std::exp(tau);
  Evaluation e;
  NeumaierSum ll;
  for (const auto& obs : sample) {
    const double z = (std::log(obs.value) - mu) / sigma;
    if (!obs.censored) {
      ll.add(-std::log(obs.value) - tau - kHalfLog2Pi - 0.5 * z * z);
      e.grad[0] += z / sigma;
      e.grad[1] += z * z - 1.0;
      if (with_hessian) {
        e.h_mm += -1.0 / (sigma * sigma);
        e.h_mt += -2.0 * z / sigma;
        e.h_tt += -2.0 * z * z;
      }
    } else {
      const double lambda = inverse_mills(z);
      ll.add(log_normal_sf(z));
      e.grad[0] += lambda / sigma;
      e.grad[1] += lambda * z;
      if (with_hessian) {
        const double dlambda = lambda * (lambda - z);
        e.h_mm += -dlambda / (sigma * sigma);
        e.h_mt += -(dlambda * z + lambda) / sigma;
        e.h_tt += -z * (dlambda * z + lambda);
      }
    }
  }
  e.ll = ll.value();
  return e;
}

double max_norm(const std::array<double, 2>& g) {
  return std::max(std::fabs(g[0]), std::fabs(g[1]));
}

void require_positive(double v) {
  if (!(std::isfinite(v) && v > 0.0)) {
    throw InputError("severity values must be finite and > 0");
  }
}

}  // namespace

FitResult mle_lognormal(std::span<const double> values) {
  if (values.size() < 2) throw InputError("mle_lognormal: need at least 2 values");
  NeumaierSum sum;
  for (double v : values) {
    require_positive(v);
    sum.add(std::log(v));
  }
  const double n = static_cast<double>(values.size());
  const double mu = sum.value() / n;
  NeumaierSum ss;
  for (double v : values) {
    const double d = std::log(v) - mu;
    ss.add(d * d);
  }
  FitResult fit;
  fit.mu_hat = mu;
  fit.sigma_hat = std::sqrt(ss.value() / n);
  fit.iterations = 0;
  if (!(fit.sigma_hat > kSigmaFloor)) {
    fit.sigma_hat = kSigmaFloor;
    fit.sigma_floored = true;
    fit.converged = false;
  } else {
    fit.converged = true;
  }
  // Closed-form log-likelihood at the estimate.
  fit.log_likelihood = -sum.value() - n * std::log(fit.sigma_hat) - n * kHalfLog2Pi -
                       0.5 * ss.value() / (fit.sigma_hat * fit.sigma_hat);
  return fit;
}

FitResult naive_complete_case_fit(std::span<const CensoredSample> sample) {
  std::vector<double> observed;
  observed.reserve(sample.size());
  for (const auto& obs : sample) {
    require_positive(obs.value);
    if (!obs.censored) observed.push_back(obs.value);
  }
  if (observed.size() < 2) {
    throw InputError("naive_complete_case_fit: need at least 2 uncensored values");
  }
  return mle_lognormal(observed);
}

double censored_log_likelihood(std::span<const CensoredSample> sample, double mu,
                               double sigma) {
  if (!(sigma > 0.0)) throw InputError("censored_log_likelihood: sigma must be > 0");
  return evaluate(sample, mu, std::log(sigma), false).ll;
}

std::array<double, 2> censored_log_likelihood_gradient(
    std::span<const CensoredSample> sample, double mu, double sigma) {
  if (!(sigma > 0.0)) throw InputError("censored_log_likelihood: sigma must be > 0");
  return evaluate(sample, mu, std::log(sigma), false).grad;
}

FitResult mle_lognormal_censored(std::span<const CensoredSample> sample) {
  if (sample.size() < 2) throw InputError("mle_lognormal_censored: need at least 2 values");
  std::size_t uncensored = 0;
  for (const auto& obs : sample) {
    require_positive(obs.value);
    uncensored += obs.censored ? 0 : 1;
  }
  if (uncensored == 0) {
    throw InputError("mle_lognormal_censored: need at least 1 uncensored value");
  }

  double mu = 0.0;
  double tau = 0.0;
  if (uncensored >= 2) {
    const FitResult start = naive_complete_case_fit(sample);
    mu = start.mu_hat;
    tau = start.sigma_floored ? 0.0 : std::log(start.sigma_hat);
  } else {
    for (const auto& obs : sample) {
      if (!obs.censored) mu = std::log(obs.value);
    }
  }

  FitResult fit;
  Evaluation cur = evaluate(sample, mu, tau, true);
  int iter = 0;
  for (; iter < kMaxTobitIterations; ++iter) {
    const double gnorm = max_norm(cur.grad);
    if (gnorm < kGradientTolerance) {
      fit.converged = true;
      break;
    }

    // Newton direction when the Hessian is negative definite, otherwise a
    // scaled gradient step.
    double d_mu, d_tau;
    const double det = cur.h_mm * cur.h_tt - cur.h_mt * cur.h_mt;
    if (cur.h_mm < 0.0 && det > 0.0) {
      d_mu = -(cur.h_tt * cur.grad[0] - cur.h_mt * cur.grad[1]) / det;
      d_tau = -(-cur.h_mt * cur.grad[0] + cur.h_mm * cur.grad[1]) / det;
    } else {
      const double scale = 1.0 / static_cast<double>(sample.size());
      d_mu = scale * cur.grad[0] * std::exp(2.0 * tau);
      d_tau = scale * cur.grad[1];
    }
    const double sigma = std::exp(tau);
    const double shrink = std::max({1.0, std::fabs(d_mu) / (5.0 * sigma), std::fabs(d_tau) / 2.0});
    d_mu /= shrink;
    d_tau /= shrink;

    double step = 1.0;
    Evaluation next;
    bool accepted = false;
    for (int halving = 0; halving < 60; ++halving) {
      next = evaluate(sample, mu + step * d_mu, tau + step * d_tau, true);
      if (std::isfinite(next.ll) && next.ll >= cur.ll) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    const double change = next.ll - cur.ll;
    mu += step * d_mu;
    tau += step * d_tau;
    cur = next;
    if (change < kLikelihoodTolerance && max_norm(cur.grad) < kLooseGradientTolerance) {
      fit.converged = true;
      ++iter;
      break;
    }
  }

  fit.mu_hat = mu;
  fit.sigma_hat = std::exp(tau);
  if (fit.sigma_hat < kSigmaFloor) {
    fit.sigma_hat = kSigmaFloor;
    fit.sigma_floored = true;
    fit.converged = false;
  }
  fit.log_likelihood = cur.ll;
  fit.iterations = iter;
  fit.gradient_norm = max_norm(cur.grad);
  return fit;
}

TruncatedMoments truncated_normal_moments(double z) {
  // Conditioned below z: mirror of the upper-tail Mills ratio at -z.
  const double ratio = inverse_mills(-z);  // φ(z) / Φ(z)
  return {-ratio, 1.0 - z * ratio - ratio * ratio};
}

std::vector<BiasRow> censoring_bias_study(double true_mu, double true_sigma, std::uint64_t n,
                                          std::span<const double> fractions,
                                          std::uint64_t seed) {
  if (n < 1000) throw InputError("censoring_bias_study: n must be >= 1000");
  if (!(true_sigma > 0.0) || true_mu == 0.0) {
    throw InputError("censoring_bias_study: need sigma > 0 and mu != 0 for relative bias");
  }
  const RandomStream root = RandomStream(seed).child("censoring-bias");
  std::vector<BiasRow> rows;
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    const double f = fractions[i];
    if (!(f > 0.0 && f < 1.0)) {
      throw InputError("censoring_bias_study: fractions must lie in (0, 1)");
    }
    const double z = normal_quantile(1.0 - f);
    const double threshold = std::exp(true_mu + true_sigma * z);

    RandomStream stream = root.child(static_cast<std::uint64_t>(i));
    std::vector<CensoredSample> sample(n);
    std::uint64_t censored = 0;
    for (auto& obs : sample) {
      const double v = std::exp(true_mu + true_sigma * stream.normal());
      if (v >= threshold) {
        obs = {threshold, true};
        ++censored;
      } else {
        obs = {v, false};
      }
    }

    const FitResult naive = naive_complete_case_fit(sample);
    const FitResult tobit = mle_lognormal_censored(sample);
    const TruncatedMoments tm = truncated_normal_moments(z);

    BiasRow row;
    row.fraction = f;
    row.threshold = threshold;
    row.observed_censored_fraction = static_cast<double>(censored) / static_cast<double>(n);
    row.naive_mu_bias_pct = 100.0 * (naive.mu_hat - true_mu) / true_mu;
    row.naive_sigma_bias_pct = 100.0 * (naive.sigma_hat - true_sigma) / true_sigma;
    row.tobit_mu_bias_pct = 100.0 * (tobit.mu_hat - true_mu) / true_mu;
    row.tobit_sigma_bias_pct = 100.0 * (tobit.sigma_hat - true_sigma) / true_sigma;
    row.oracle_mu_bias_pct = 100.0 * true_sigma * tm.mean_below / true_mu;
    row.oracle_sigma_bias_pct = 100.0 * (std::sqrt(tm.var_below) - 1.0);
    row.tobit_converged = tobit.converged;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace caprisk
