#pragma once

#include <cstdint>
#include <string>
#include <variant>

#include "caprisk/distributions.hpp"

namespace caprisk {

/// Service halts at K (seller cost units).
struct HardCap {
  double K;

  explicit HardCap(double K);
  bool operator==(const HardCap&) const = default;
};

/// Above K the user is served at a cheaper class costing rho per unit.
struct SoftDegrade {
  double K;
  double rho;

  SoftDegrade(double K, double rho);
  bool operator==(const SoftDegrade&) const = default;
};

/// Included allowance K (retail dollars) with overage billed at `rate` per
/// retail dollar above K. The seller's cost is kappa per retail dollar.
struct Overage {
  double K;
  double rate;
  double kappa;

  Overage(double K, double rate, double kappa);
  bool operator==(const Overage&) const = default;
};

/// Flat-rate subscription with no cap.
struct NoCap {
  double kappa;

  explicit NoCap(double kappa = 1.0);
  bool operator==(const NoCap&) const = default;
};

/// User pays retail for realized usage; no premium.
struct PayPerUse {
  double kappa;

  explicit PayPerUse(double kappa = 1.0);
  bool operator==(const PayPerUse&) const = default;
};

using ContractRegime = std::variant<HardCap, SoftDegrade, Overage, NoCap, PayPerUse>;

struct PerUserOutcome {
  double seller_cost = 0.0;
  /// Premium plus any overage or usage charges.
  double user_billed = 0.0;
  bool capped = false;
  /// seller_cost - user_billed; positive means the seller loses money.
  double net_loss = 0.0;
  /// Overage charge alone (Overage regime), zero otherwise.
  double overage_billed = 0.0;
};

/// Per-user accounting for one period. Cap hits count ties (s_agg >= K).
/// Throws InputError for a negative or non-finite draw.
PerUserOutcome apply_regime(double s_agg, const ContractRegime& regime, double premium);

/// Cap level of the regime, if it has one.
bool regime_has_cap(const ContractRegime& regime);
double regime_cap(const ContractRegime& regime);

std::string regime_name(const ContractRegime& regime);

struct CohortSpec {
  std::string label;
  std::uint64_t n = 0;
  double premium = 0.0;
  CompoundSpec compound;
  ContractRegime regime;

  /// Throws InputError: n must be positive, premium non-negative and zero
  /// under PayPerUse, label non-empty.
  void validate() const;
  bool operator==(const CohortSpec&) const = default;
};

}  // namespace caprisk
