#include <gtest/gtest.h>

#include <cmath>

#include "caprisk/contracts.hpp"
#include "caprisk/error.hpp"
#include "test_support.hpp"

namespace caprisk {
namespace {

TEST(ApplyRegime, HardCapExamples) {
  const auto hit = apply_regime(1800.0, HardCap(1000.0), 50.0);
  EXPECT_DOUBLE_EQ(hit.seller_cost, 1000.0);
  EXPECT_TRUE(hit.capped);
  EXPECT_DOUBLE_EQ(hit.net_loss, 950.0);
  EXPECT_DOUBLE_EQ(hit.user_billed, 50.0);

  const auto empty = apply_regime(0.0, HardCap(1000.0), 50.0);
  EXPECT_DOUBLE_EQ(empty.seller_cost, 0.0);
  EXPECT_FALSE(empty.capped);
  EXPECT_DOUBLE_EQ(empty.net_loss, -50.0);

  EXPECT_TRUE(apply_regime(1000.0, HardCap(1000.0), 50.0).capped);  // ties count
}

TEST(ApplyRegime, OverageExample) {
  const auto o = apply_regime(5000.0, Overage(1000.0, 0.15, 0.25), 20.0);
  EXPECT_DOUBLE_EQ(o.seller_cost, 1250.0);
  EXPECT_DOUBLE_EQ(o.overage_billed, 600.0);
  EXPECT_DOUBLE_EQ(o.user_billed, 620.0);
  EXPECT_DOUBLE_EQ(o.net_loss, 630.0);
  EXPECT_TRUE(o.capped);
}

TEST(ApplyRegime, SoftDegradeExample) {
  EXPECT_DOUBLE_EQ(apply_regime(2000.0, SoftDegrade(1000.0, 0.3), 50.0).seller_cost, 1300.0);
}

TEST(ApplyRegime, NoCapAndPayPerUse) {
  const auto nc = apply_regime(2500.0, NoCap(1.0), 50.0);
  EXPECT_DOUBLE_EQ(nc.seller_cost, 2500.0);
  EXPECT_FALSE(nc.capped);
  const auto ppu = apply_regime(2500.0, PayPerUse(0.4), 0.0);
  EXPECT_DOUBLE_EQ(ppu.seller_cost, 1000.0);
  EXPECT_DOUBLE_EQ(ppu.user_billed, 2500.0);
  EXPECT_DOUBLE_EQ(ppu.net_loss, (0.4 - 1.0) * 2500.0);
}

TEST(ApplyRegime, RejectsBadInputs) {
  EXPECT_THROW(apply_regime(-1.0, HardCap(10.0), 0.0), InputError);
  EXPECT_THROW(apply_regime(std::nan(""), HardCap(10.0), 0.0), InputError);
  EXPECT_THROW(HardCap(0.0), InputError);
  EXPECT_THROW(SoftDegrade(10.0, 1.5), InputError);
  EXPECT_THROW(Overage(10.0, -0.1, 1.0), InputError);
  EXPECT_THROW(NoCap(1.5), InputError);
  EXPECT_THROW(SoftDegrade(10.0, 0.0), InputError);
}

ContractRegime random_regime(testing::Gen& g) {
  const double K = g.log_uniform(1.0, 10000.0);
  switch (g.integer(0, 4)) {
    case 0: return HardCap(K);
    case 1: return SoftDegrade(K, g.uniform(0.01, 0.99));
    case 2: return Overage(K, g.uniform(0.0, 2.0), g.uniform(0.01, 1.0));
    case 3: return NoCap(g.uniform(0.01, 1.0));
    default: return PayPerUse(g.uniform(0.01, 1.0));
  }
}

TEST(RegimeProperties, AccountingIdentity) {
  testing::Gen g(1);
  for (int i = 0; i < 5000; ++i) {
    const auto regime = random_regime(g);
    const double premium = std::holds_alternative<PayPerUse>(regime) ? 0.0 : g.uniform(0.0, 100.0);
    const double s = g.coin() ? g.log_uniform(1e-3, 1e5) : 0.0;
    const auto o = apply_regime(s, regime, premium);
    EXPECT_NEAR(o.net_loss + o.user_billed, o.seller_cost, 1e-9 * (1.0 + o.seller_cost));
  }
}

TEST(RegimeProperties, HardCapMonotoneAndFlatAboveCap) {
  testing::Gen g(2);
  for (int i = 0; i < 200; ++i) {
    const HardCap cap(g.log_uniform(1.0, 1e4));
    double prev = -1.0;
    for (int k = 0; k <= 100; ++k) {
      const double s = cap.K * 3.0 * k / 100.0;
      const double cost = apply_regime(s, cap, 0.0).seller_cost;
      EXPECT_GE(cost, prev);
      if (s >= cap.K) EXPECT_DOUBLE_EQ(cost, cap.K);
      prev = cost;
    }
  }
}

TEST(RegimeProperties, SoftDegradeLimits) {
  testing::Gen g(3);
  for (int i = 0; i < 2000; ++i) {
    const double K = g.log_uniform(1.0, 1e4);
    const double s = g.log_uniform(1e-3, 1e5);
    // rho is confined to (0, 1); approach both ends.
    EXPECT_NEAR(apply_regime(s, SoftDegrade(K, 1e-12), 10.0).seller_cost,
                apply_regime(s, HardCap(K), 10.0).seller_cost, 1e-9 * (1.0 + s));
    EXPECT_NEAR(apply_regime(s, SoftDegrade(K, 1.0 - 1e-12), 10.0).seller_cost,
                apply_regime(s, NoCap(1.0), 10.0).seller_cost, 1e-9 * (1.0 + s));
    EXPECT_EQ(apply_regime(s, SoftDegrade(K, 0.5), 10.0).capped, s >= K);
  }
}

TEST(RegimeProperties, OverageKinkAtK) {
  testing::Gen g(4);
  for (int i = 0; i < 500; ++i) {
    const Overage o(g.log_uniform(10.0, 1e4), g.uniform(0.0, 1.0), g.uniform(0.05, 1.0));
    const double h = 1e-3 * o.K;
    auto net = [&](double s) { return apply_regime(s, o, 20.0).net_loss; };
    const double below = (net(o.K) - net(o.K - h)) / h;
    const double above = (net(o.K + h) - net(o.K)) / h;
    EXPECT_NEAR(below, o.kappa, 1e-6);
    EXPECT_NEAR(above, o.kappa - o.rate, 1e-6);
    // Continuity at the kink.
    EXPECT_NEAR(net(o.K * (1 + 1e-12)), net(o.K), 1e-6 * o.K);
  }
}

TEST(Regime, Names) {
  EXPECT_EQ(regime_name(HardCap(1.0)), "hard_cap");
  EXPECT_EQ(regime_name(SoftDegrade(1.0, 0.5)), "soft_degrade");
  EXPECT_EQ(regime_name(Overage(1.0, 0.1, 1.0)), "overage");
  EXPECT_EQ(regime_name(NoCap()), "no_cap");
  EXPECT_EQ(regime_name(PayPerUse()), "pay_per_use");
  EXPECT_TRUE(regime_has_cap(Overage(5.0, 0.1, 1.0)));
  EXPECT_FALSE(regime_has_cap(NoCap()));
  EXPECT_DOUBLE_EQ(regime_cap(SoftDegrade(7.0, 0.1)), 7.0);
}

TEST(CohortSpec, Validation) {
  CohortSpec c{"main", 10, 50.0, {Poisson(5.0), Gamma(2.0, 3.0)}, HardCap(1000.0)};
  EXPECT_NO_THROW(c.validate());
  c.n = 0;
  EXPECT_THROW(c.validate(), InputError);
  c.n = 10;
  c.regime = PayPerUse();
  EXPECT_THROW(c.validate(), InputError);  // PayPerUse carries no premium
  c.premium = 0.0;
  EXPECT_NO_THROW(c.validate());
}

}  // namespace
}  // namespace caprisk
