#include "caprisk/contracts.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "caprisk/error.hpp"

namespace caprisk {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

void require_cap(double K, const char* regime) {
  if (!(std::isfinite(K) && K > 0.0)) {
    throw InputError(std::string(regime) + ": K must be > 0, got " + std::to_string(K));
  }
}

void require_kappa(double kappa, const char* regime) {
  if (!(kappa > 0.0 && kappa <= 1.0)) {
    throw InputError(std::string(regime) + ": kappa must lie in (0, 1], got " +
                     std::to_string(kappa));
  }
}

}  // namespace

HardCap::HardCap(double K) : K(K) { require_cap(K, "HardCap"); }

SoftDegrade::SoftDegrade(double K, double rho) : K(K), rho(rho) {
  require_cap(K, "SoftDegrade");
  if (!(rho > 0.0 && rho < 1.0)) {
    throw InputError("SoftDegrade: rho must lie in (0, 1), got " + std::to_string(rho));
  }
}

Overage::Overage(double K, double rate, double kappa) : K(K), rate(rate), kappa(kappa) {
  require_cap(K, "Overage");
  if (!(std::isfinite(rate) && rate >= 0.0)) {
    throw InputError("Overage: rate must be >= 0, got " + std::to_string(rate));
  }
  require_kappa(kappa, "Overage");
}

NoCap::NoCap(double kappa) : kappa(kappa) { require_kappa(kappa, "NoCap"); }

PayPerUse::PayPerUse(double kappa) : kappa(kappa) { require_kappa(kappa, "PayPerUse"); }

PerUserOutcome apply_regime(double s_agg, const ContractRegime& regime, double premium) {
  if (!(std::isfinite(s_agg) && s_agg >= 0.0)) {
    throw InputError("apply_regime: aggregate draw must be finite and >= 0");
  }
  PerUserOutcome out = std::visit(
      Overloaded{
          [&](const HardCap& r) {
            PerUserOutcome o;
            o.seller_cost = std::min(r.K, s_agg);
            o.user_billed = premium;
            o.capped = s_agg >= r.K;
            return o;
          },
          [&](const SoftDegrade& r) {
            PerUserOutcome o;
            o.seller_cost = std::min(r.K, s_agg) + r.rho * std::max(0.0, s_agg - r.K);
            o.user_billed = premium;
            o.capped = s_agg >= r.K;
            return o;
          },
          [&](const Overage& r) {
            PerUserOutcome o;
            o.seller_cost = r.kappa * s_agg;
            o.overage_billed = r.rate * std::max(0.0, s_agg - r.K);
            o.user_billed = premium + o.overage_billed;
            o.capped = s_agg >= r.K;
            return o;
          },
          [&](const NoCap& r) {
            PerUserOutcome o;
            o.seller_cost = r.kappa * s_agg;
            o.user_billed = premium;
            return o;
          },
          [&](const PayPerUse& r) {
            PerUserOutcome o;
            o.seller_cost = r.kappa * s_agg;
            o.user_billed = s_agg;
            return o;
          },
      },
      regime);
  out.net_loss = out.seller_cost - out.user_billed;
  return out;
}

bool regime_has_cap(const ContractRegime& regime) {
  return std::holds_alternative<HardCap>(regime) ||
         std::holds_alternative<SoftDegrade>(regime) ||
         std::holds_alternative<Overage>(regime);
}

double regime_cap(const ContractRegime& regime) {
  return std::visit(
      Overloaded{
          [](const HardCap& r) { return r.K; },
          [](const SoftDegrade& r) { return r.K; },
          [](const Overage& r) { return r.K; },
          [](const auto&) { return std::numeric_limits<double>::infinity(); },
      },
      regime);
}

std::string regime_name(const ContractRegime& regime) {
  return std::visit(
      Overloaded{
          [](const HardCap&) { return std::string("hard_cap"); },
          [](const SoftDegrade&) { return std::string("soft_degrade"); },
          [](const Overage&) { return std::string("overage"); },
          [](const NoCap&) { return std::string("no_cap"); },
          [](const PayPerUse&) { return std::string("pay_per_use"); },
      },
      regime);
}

void CohortSpec::validate() const {
  if (label.empty()) throw InputError("cohort: label must not be empty");
  if (n == 0) throw InputError("cohort '" + label + "': n must be > 0");
  if (!(std::isfinite(premium) && premium >= 0.0)) {
    throw InputError("cohort '" + label + "': premium must be >= 0");
  }
  if (std::holds_alternative<PayPerUse>(regime) && premium != 0.0) {
    throw InputError("cohort '" + label + "': pay_per_use requires premium = 0");
  }
}

}  // namespace caprisk
