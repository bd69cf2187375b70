#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "caprisk/distributions.hpp"
#include "caprisk/error.hpp"
#include "test_support.hpp"

namespace caprisk {
namespace {

using testing::sample_stats;
using testing::se_variance;

constexpr int kDraws = 1000000;

TEST(FrequencyMoments, SpecExamples) {
  const auto p = frequency_moments(Poisson(5.0));
  EXPECT_DOUBLE_EQ(p.mean, 5.0);
  EXPECT_DOUBLE_EQ(p.variance, 5.0);

  const auto nb = frequency_moments(NegBinomial(1.0, 0.07));
  EXPECT_NEAR(nb.mean, 13.285714285714286, 1e-12);
  EXPECT_NEAR(nb.variance, 189.79591836734696, 1e-9);
  EXPECT_NEAR(nb.variance / nb.mean, 14.285714285714286, 1e-12);

  const auto d = frequency_moments(Degenerate(1));
  EXPECT_DOUBLE_EQ(d.mean, 1.0);
  EXPECT_DOUBLE_EQ(d.variance, 0.0);
}

TEST(SeverityMoments, SpecExamples) {
  const auto g = severity_moments(Gamma(2.0, 3.0));
  EXPECT_DOUBLE_EQ(g.mean, 6.0);
  EXPECT_DOUBLE_EQ(g.variance, 18.0);
  EXPECT_NEAR(severity_moments(LogNormal(-0.311, 1.5)).mean, 2.2569177, 1e-6);
  EXPECT_NEAR(severity_moments(LogNormal(0.0, 1.0)).mean, std::exp(0.5), 1e-14);
  const auto ln = severity_moments(LogNormal(0.3, 0.7));
  EXPECT_NEAR(ln.variance, ln.mean * ln.mean * (std::exp(0.49) - 1.0), 1e-12);
}

TEST(CompoundMoments, SpecExamples) {
  EXPECT_DOUBLE_EQ(compound_moments({Poisson(5.0), Gamma(2.0, 3.0)}).mean, 30.0);
  // 38 · exp(0.996 + 2) = 760.2035
  EXPECT_NEAR(compound_moments({NegBinomial(2.0, 0.05), LogNormal(0.996, 2.0)}).mean, 760.2035,
              1e-3);
  const auto nbln = compound_moments({NegBinomial(1.0, 0.07), LogNormal(-0.311, 1.5)});
  EXPECT_NEAR(nbln.mean, 29.98476, 1e-4);
  EXPECT_NEAR(nbln.variance, 1541.15, 0.01);
  const auto deg = compound_moments({Degenerate(4), Gamma(2.0, 3.0)});
  EXPECT_DOUBLE_EQ(deg.mean, 24.0);
  EXPECT_DOUBLE_EQ(deg.variance, 72.0);
}

TEST(CompoundMoments, PoissonGammaSecondMomentIdentity) {
  testing::Gen gen(99);
  for (int i = 0; i < 200; ++i) {
    const double lambda = gen.log_uniform(0.01, 100.0);
    const double a = gen.log_uniform(0.1, 10.0);
    const double th = gen.log_uniform(0.01, 100.0);
    const auto m = compound_moments({Poisson(lambda), Gamma(a, th)});
    EXPECT_NEAR(m.variance, lambda * a * (a + 1.0) * th * th, 1e-12 * m.variance);
  }
}

TEST(Distributions, ValidatingConstructors) {
  EXPECT_THROW(Poisson(-1.0), InputError);
  EXPECT_THROW(NegBinomial(0.0, 0.5), InputError);
  EXPECT_THROW(NegBinomial(1.0, 1.2), InputError);
  EXPECT_THROW(NegBinomial(1.0, 0.0), InputError);
  EXPECT_THROW(Gamma(0.0, 1.0), InputError);
  EXPECT_THROW(Gamma(1.0, -1.0), InputError);
  EXPECT_THROW(LogNormal(0.0, 0.0), InputError);
  EXPECT_THROW(LogNormal(std::nan(""), 1.0), InputError);
}

TEST(Distributions, FromMeanHelpers) {
  const auto nb = NegBinomial::from_mean(13.0, 2.0);
  EXPECT_NEAR(frequency_moments(nb).mean, 13.0, 1e-12);
  EXPECT_DOUBLE_EQ(nb.r, 2.0);
  const auto ln = LogNormal::from_mean(7.0, 1.5);
  EXPECT_NEAR(severity_moments(ln).mean, 7.0, 1e-12);
}

TEST(SampleFrequency, Degenerate) {
  RandomStream s(1);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(sample_frequency(Degenerate(1), s), 1u);
}

struct FamilyCase {
  const char* name;
  std::vector<double> draws;
  Moments truth;
};

std::vector<double> draw_frequency(const FrequencyModel& m, std::uint64_t seed) {
  RandomStream s(seed);
  std::vector<double> xs(kDraws);
  for (auto& x : xs) x = static_cast<double>(sample_frequency(m, s));
  return xs;
}

std::vector<double> draw_severity(const SeverityModel& m, std::uint64_t seed) {
  RandomStream s(seed);
  std::vector<double> xs(kDraws);
  for (auto& x : xs) x = sample_severity(m, s);
  return xs;
}

// Every family: mean and variance within 4 SE of the closed forms. The
// LogNormal cases keep sigma small enough for the fourth moment to exist in
// practice.
TEST(Sampling, EveryFamilyMatchesClosedFormMoments) {
  const FrequencyModel freqs[] = {Poisson(0.3), Poisson(5.0), Poisson(9.99), Poisson(10.0),
                                  Poisson(250.0), NegBinomial(1.0, 0.07), NegBinomial(2.0, 0.05),
                                  NegBinomial(0.4, 0.3)};
  std::uint64_t seed = 100;
  for (const auto& f : freqs) {
    const auto xs = draw_frequency(f, ++seed);
    const auto st = sample_stats(xs);
    const auto truth = frequency_moments(f);
    EXPECT_NEAR(st.mean, truth.mean, 4.0 * st.se_mean()) << "frequency case " << seed;
    EXPECT_NEAR(st.variance, truth.variance, 4.0 * se_variance(xs, st)) << "frequency case " << seed;
  }
  const SeverityModel sevs[] = {Gamma(2.0, 3.0), Gamma(0.3, 1.0), Gamma(50.0, 0.1),
                                LogNormal(-0.311, 0.8), LogNormal(1.0, 0.5)};
  for (const auto& m : sevs) {
    const auto xs = draw_severity(m, ++seed);
    const auto st = sample_stats(xs);
    const auto truth = severity_moments(m);
    EXPECT_NEAR(st.mean, truth.mean, 4.0 * st.se_mean()) << "severity case " << seed;
    EXPECT_NEAR(st.variance, truth.variance, 4.0 * se_variance(xs, st)) << "severity case " << seed;
  }
}

TEST(Sampling, PoissonMeanSpecExample) {
  const auto xs = draw_frequency(Poisson(5.0), 2026);
  const auto st = sample_stats(xs);
  EXPECT_NEAR(st.mean, 5.0, 3.0 * std::sqrt(5.0 / kDraws));
}

TEST(Sampling, NegBinomialDispersionSpecExample) {
  const auto xs = draw_frequency(NegBinomial(1.0, 0.07), 2027);
  const auto st = sample_stats(xs);
  // Delta-method SE of var/mean.
  const double ratio = st.variance / st.mean;
  const double se = ratio * std::sqrt(std::pow(se_variance(xs, st) / st.variance, 2) +
                                      std::pow(st.se_mean() / st.mean, 2));
  EXPECT_NEAR(ratio, 1.0 / 0.07, 3.0 * se);
}

TEST(Sampling, CompoundMeansSpecExamples) {
  for (const auto& [spec, seed] : {std::pair{CompoundSpec{Poisson(5.0), Gamma(2.0, 3.0)}, 1u},
                                   std::pair{CompoundSpec{NegBinomial(1.0, 0.07),
                                                          LogNormal(-0.311, 1.5)},
                                             2u}}) {
    RandomStream s(seed);
    std::vector<double> xs(kDraws);
    for (auto& x : xs) x = sample_compound(spec, s);
    const auto st = sample_stats(xs);
    const auto truth = compound_moments(spec);
    EXPECT_NEAR(st.mean, truth.mean, 3.0 * std::sqrt(truth.variance / kDraws));
  }
}

TEST(Sampling, CompoundMomentsWithinFourSe) {
  const CompoundSpec specs[] = {{Poisson(5.0), Gamma(2.0, 3.0)},
                                {NegBinomial(2.0, 0.3), Gamma(1.5, 2.0)},
                                {Poisson(12.0), LogNormal(0.0, 0.6)}};
  std::uint64_t seed = 500;
  for (const auto& spec : specs) {
    RandomStream s(++seed);
    std::vector<double> xs(kDraws);
    for (auto& x : xs) x = sample_compound(spec, s);
    const auto st = sample_stats(xs);
    const auto truth = compound_moments(spec);
    EXPECT_NEAR(st.mean, truth.mean, 4.0 * st.se_mean());
    EXPECT_NEAR(st.variance, truth.variance, 4.0 * se_variance(xs, st));
  }
}

TEST(Sampling, DegenerateZeroCompoundIsZero) {
  RandomStream s(5);
  for (int i = 0; i < 100; ++i) {
    EXPECT_EQ(sample_compound({Degenerate(0), LogNormal(0.0, 1.0)}, s), 0.0);
  }
}

TEST(Sampling, DegenerateOneCompoundMatchesSeverity) {
  const SeverityModel sev = LogNormal(0.5, 1.2);
  RandomStream a(77), b(78);
  std::vector<double> xa(100000), xb(100000);
  for (auto& x : xa) x = sample_compound({Degenerate(1), sev}, a);
  for (auto& x : xb) x = sample_severity(sev, b);
  // 1% critical value for two samples of 1e5: 1.628·sqrt(2/1e5).
  EXPECT_LT(testing::ks_statistic(xa, xb), 1.628 * std::sqrt(2.0 / 100000.0));
}

TEST(Sampling, DeterministicPerSeed) {
  const CompoundSpec spec{NegBinomial(1.0, 0.07), LogNormal(-0.311, 1.5)};
  RandomStream a(9), b(9);
  for (int i = 0; i < 10000; ++i) ASSERT_EQ(sample_compound(spec, a), sample_compound(spec, b));
}

TokenRateCard card() {
  TokenRateCard c;
  c.c_in = 1e-6;
  c.c_out_by_model = {{"sonnet", 5e-6}, {"opus", 25e-6}};
  c.c_tool_by_kind = {{"web_search", 0.01}};
  return c;
}

TEST(TokenSeverity, SpecExamples) {
  EXPECT_DOUBLE_EQ(token_severity(card(), {0, 0, "sonnet", {}}), 0.0);
  const double opus = token_severity(card(), {1000, 2000, "opus", {}});
  const double sonnet = token_severity(card(), {1000, 2000, "sonnet", {}});
  EXPECT_NEAR(opus, 0.051, 1e-15);
  EXPECT_NEAR(sonnet, 0.011, 1e-15);
  EXPECT_NEAR((opus - 0.001) / (sonnet - 0.001), 5.0, 1e-12);
}

TEST(TokenSeverity, ToolsAreAMultisetAndUnknownsThrow) {
  EXPECT_NEAR(token_severity(card(), {0, 0, "opus", {"web_search", "web_search"}}), 0.02, 1e-15);
  EXPECT_THROW(token_severity(card(), {1, 1, "haiku", {}}), LookupError);
  EXPECT_THROW(token_severity(card(), {1, 1, "opus", {"shell"}}), LookupError);
}

TEST(TokenSeverity, LinearInTokenCounts) {
  testing::Gen gen(3);
  for (int i = 0; i < 100; ++i) {
    const UsageEvent e{gen.integer(0, 100000), gen.integer(0, 100000),
                       gen.coin() ? "opus" : "sonnet", {}};
    const UsageEvent twice{2 * e.tokens_in, 2 * e.tokens_out, e.model_class, {}};
    EXPECT_NEAR(token_severity(card(), twice), 2.0 * token_severity(card(), e), 1e-15);
  }
}

}  // namespace
}  // namespace caprisk
