#include "caprisk/distributions.hpp"

#include <cmath>
#include <string>

#include "caprisk/error.hpp"
#include "caprisk/numeric.hpp"

namespace caprisk {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

bool positive_finite(double x) { return std::isfinite(x) && x > 0.0; }

// Hörmann's transformed rejection with squeeze (PTRS), valid for lambda >= 10.
std::uint64_t poisson_ptrs(double lambda, RandomStream& stream) {
  const double slam = std::sqrt(lambda);
  const double loglam = std::log(lambda);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double u = stream.uniform() - 0.5;
    const double v = stream.uniform();
    const double us = 0.5 - std::fabs(u);
    const double k = std::floor((2.0 * a / us + b) * u + lambda + 0.43);
    if (us >= 0.07 && v <= vr) {
      return static_cast<std::uint64_t>(k);
    }
    if (k < 0.0 || (us < 0.013 && v > us)) {
      continue;
    }
    const auto ki = static_cast<std::uint64_t>(k);
    if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
        -lambda + k * loglam - log_factorial(ki)) {
      return ki;
    }
  }
}

std::uint64_t poisson_inversion(double lambda, RandomStream& stream) {
  const double u = stream.uniform();
  double p = std::exp(-lambda);
  double cdf = p;
  std::uint64_t k = 0;
  while (u > cdf) {
    ++k;
    p *= lambda / static_cast<double>(k);
    if (p <= 0.0) break;
    cdf += p;
  }
  return k;
}

}  // namespace

Poisson::Poisson(double lambda) : lambda(lambda) {
  if (!positive_finite(lambda)) {
    throw InputError("Poisson: lambda must be > 0, got " + std::to_string(lambda));
  }
}

NegBinomial::NegBinomial(double r, double p) : r(r), p(p) {
  if (!positive_finite(r)) {
    throw InputError("NegBinomial: r must be > 0, got " + std::to_string(r));
  }
  if (!(p > 0.0 && p < 1.0)) {
    throw InputError("NegBinomial: p must lie in (0, 1), got " + std::to_string(p));
  }
}

NegBinomial NegBinomial::from_mean(double mean, double r) {
  if (!positive_finite(mean)) {
    throw InputError("NegBinomial::from_mean: mean must be > 0");
  }
  return NegBinomial(r, r / (r + mean));
}

Gamma::Gamma(double shape, double scale) : shape(shape), scale(scale) {
  if (!positive_finite(shape)) {
    throw InputError("Gamma: shape must be > 0, got " + std::to_string(shape));
  }
  if (!positive_finite(scale)) {
    throw InputError("Gamma: scale must be > 0, got " + std::to_string(scale));
  }
}

LogNormal::LogNormal(double mu, double sigma) : mu(mu), sigma(sigma) {
  if (!std::isfinite(mu)) {
    throw InputError("LogNormal: mu must be finite");
  }
  if (!positive_finite(sigma)) {
    throw InputError("LogNormal: sigma must be > 0, got " + std::to_string(sigma));
  }
}

LogNormal LogNormal::from_mean(double mean, double sigma) {
  if (!positive_finite(mean)) {
    throw InputError("LogNormal::from_mean: mean must be > 0");
  }
  return LogNormal(std::log(mean) - 0.5 * sigma * sigma, sigma);
}

Moments frequency_moments(const FrequencyModel& model) {
  return std::visit(
      Overloaded{
          [](const Poisson& m) { return Moments{m.lambda, m.lambda}; },
          [](const NegBinomial& m) {
            const double q = 1.0 - m.p;
            return Moments{m.r * q / m.p, m.r * q / (m.p * m.p)};
          },
          [](const Degenerate& m) { return Moments{static_cast<double>(m.n), 0.0}; },
      },
      model);
}

Moments severity_moments(const SeverityModel& model) {
  return std::visit(
      Overloaded{
          [](const Gamma& m) {
            return Moments{m.shape * m.scale, m.shape * m.scale * m.scale};
          },
          [](const LogNormal& m) {
            const double s2 = m.sigma * m.sigma;
            const double mean = std::exp(m.mu + 0.5 * s2);
            return Moments{mean, mean * mean * std::expm1(s2)};
          },
      },
      model);
}

Moments compound_moments(const CompoundSpec& spec) {
  const Moments n = frequency_moments(spec.frequency);
  const Moments s = severity_moments(spec.severity);
  return {n.mean * s.mean, n.mean * s.variance + n.variance * s.mean * s.mean};
}

double sample_gamma(double shape, double scale, RandomStream& stream) {
  if (shape < 1.0) {
    // Boost the shape by one and correct with U^{1/shape}.
    const double g = sample_gamma(shape + 1.0, 1.0, stream);
    return scale * g * std::pow(stream.uniform_open(), 1.0 / shape);
  }
  // Marsaglia–Tsang.
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = stream.normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = stream.uniform_open();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return scale * d * v;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return scale * d * v;
  }
}

std::uint64_t sample_poisson(double lambda, RandomStream& stream) {
  if (lambda <= 0.0) return 0;
  return lambda < 10.0 ? poisson_inversion(lambda, stream)
                       : poisson_ptrs(lambda, stream);
}

std::uint64_t sample_frequency(const FrequencyModel& model, RandomStream& stream) {
  return std::visit(
      Overloaded{
          [&](const Poisson& m) { return sample_poisson(m.lambda, stream); },
          [&](const NegBinomial& m) {
            const double rate = sample_gamma(m.r, (1.0 - m.p) / m.p, stream);
            return sample_poisson(rate, stream);
          },
          [](const Degenerate& m) { return m.n; },
      },
      model);
}

double sample_severity(const SeverityModel& model, RandomStream& stream) {
  return std::visit(
      Overloaded{
          [&](const Gamma& m) { return sample_gamma(m.shape, m.scale, stream); },
          [&](const LogNormal& m) {
            return std::exp(m.mu + m.sigma * stream.normal());
          },
      },
      model);
}

double sample_compound(const CompoundSpec& spec, RandomStream& stream) {
  const std::uint64_t n = sample_frequency(spec.frequency, stream);
  if (n == 0) return 0.0;
  return std::visit(
      Overloaded{
          [&](const Gamma& m) {
            double total = 0.0;
            for (std::uint64_t j = 0; j < n; ++j) {
              total += sample_gamma(m.shape, m.scale, stream);
            }
            return total;
          },
          [&](const LogNormal& m) {
            double total = 0.0;
            for (std::uint64_t j = 0; j < n; ++j) {
              total += std::exp(m.mu + m.sigma * stream.normal());
            }
            return total;
          },
      },
      spec.severity);
}

void TokenRateCard::validate() const {
  if (!(c_in >= 0.0)) throw InputError("TokenRateCard: c_in must be >= 0");
  for (const auto& [model, rate] : c_out_by_model) {
    if (!(rate >= 0.0)) {
      throw InputError("TokenRateCard: c_out for '" + model + "' must be >= 0");
    }
  }
  for (const auto& [tool, rate] : c_tool_by_kind) {
    if (!(rate >= 0.0)) {
      throw InputError("TokenRateCard: c_tool for '" + tool + "' must be >= 0");
    }
  }
}

double token_severity(const TokenRateCard& card, const UsageEvent& event) {
  const auto out = card.c_out_by_model.find(event.model_class);
  if (out == card.c_out_by_model.end()) {
    throw LookupError("token_severity: unknown model class '" + event.model_class + "'");
  }
  double cost = card.c_in * static_cast<double>(event.tokens_in) +
                out->second * static_cast<double>(event.tokens_out);
  for (const auto& tool : event.tools_invoked) {
    const auto it = card.c_tool_by_kind.find(tool);
    if (it == card.c_tool_by_kind.end()) {
      throw LookupError("token_severity: unknown tool kind '" + tool + "'");
    }
    cost += it->second;
  }
  return cost;
}

}  // namespace caprisk
