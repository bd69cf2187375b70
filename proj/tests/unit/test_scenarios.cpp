#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include "caprisk/error.hpp"
#include "caprisk/scenarios.hpp"

namespace caprisk {
namespace {

TEST(Builtin, BaselineNbLogNormal) {
  const auto s = builtin("baseline-nbln");
  ASSERT_EQ(s.cohorts.size(), 1u);
  const auto& c = s.cohorts.front();
  EXPECT_EQ(c.n, 10000u);
  EXPECT_EQ(c.premium, 50.0);
  EXPECT_EQ(c.compound.frequency, FrequencyModel(NegBinomial(1.0, 0.07)));
  EXPECT_EQ(c.compound.severity, SeverityModel(LogNormal(-0.311, 1.5)));
  EXPECT_EQ(c.regime, ContractRegime(HardCap(1000.0)));
  EXPECT_EQ(s.replications, 2000u);
  EXPECT_EQ(s.master_seed, 20260515u);
}

TEST(Builtin, StressP1DiffersOnlyInCap) {
  const auto p0 = builtin("stress-p0");
  const auto p1 = builtin("stress-p1");
  EXPECT_EQ(p0.cohorts.front().compound, p1.cohorts.front().compound);
  EXPECT_EQ(p1.cohorts.front().regime, ContractRegime(HardCap(5000.0)));
  EXPECT_EQ(builtin("stress-p2").cohorts.front().regime, ContractRegime(NoCap(1.0)));
  EXPECT_EQ(builtin("stress-p3").cohorts.front().premium, 0.0);
}

TEST(Builtin, UnknownNameListsRegistry) {
  try {
    builtin("nonsense");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    for (const auto& name : builtin_names()) EXPECT_NE(what.find(name), std::string::npos) << name;
  }
}

TEST(Builtin, RegistryCoversEveryStudy) {
  const auto& names = builtin_names();
  for (const char* n :
       {"baseline-naive", "baseline-pg", "baseline-nbln", "stress-p0", "stress-p1", "stress-p2",
        "stress-p3", "vercel-light-k0.25", "vercel-light-k0.50", "vercel-light-k1.00",
        "vercel-heavy-k0.25", "vercel-heavy-k0.50", "vercel-heavy-k1.00", "mixed-h", "mixed-m1",
        "mixed-m2", "mixed-m3", "censoring-bias", "size-sweep"}) {
    EXPECT_NE(std::find(names.begin(), names.end(), n), names.end()) << n;
  }
}

TEST(ScenarioFile, EveryBuiltinRoundTrips) {
  for (const auto& name : builtin_names()) {
    const auto original = builtin(name);
    const auto text = serialize_scenario(original);
    EXPECT_EQ(parse_scenario(text), original) << name;
    EXPECT_EQ(serialize_scenario(parse_scenario(text)), text) << name;
  }
}

TEST(ScenarioFile, SaveAndLoad) {
  const auto path = std::filesystem::temp_directory_path() / "caprisk_unit_scenario.cfg";
  save_scenario(builtin("baseline-pg"), path);
  EXPECT_EQ(load_scenario(path), builtin("baseline-pg"));
  std::filesystem::remove(path);
  EXPECT_THROW(load_scenario(path), ConfigError);
}

std::string pg_with(const std::string& from, const std::string& to) {
  std::string text = serialize_scenario(builtin("baseline-pg"));
  const auto pos = text.find(from);
  EXPECT_NE(pos, std::string::npos) << from;
  text.replace(pos, from.size(), to);
  return text;
}

std::string nb_config(const std::string& p) {
  return "schema_version = 1\n[study]\nlabel = x\n[cohort]\nlabel = a\nn = 10\npremium = 5\n"
         "frequency = negative_binomial\nfrequency.r = 1\nfrequency.p = " + p + "\n"
         "severity = gamma\nseverity.shape = 2\nseverity.scale = 3\n"
         "regime = hard_cap\nregime.K = 100\n";
}

TEST(ScenarioFile, RangeErrorNamesFieldAndLine) {
  try {
    parse_scenario(nb_config("1.2"));
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("frequency.p"), std::string::npos) << e.what();
    EXPECT_EQ(e.line(), 10u);
  }
  EXPECT_NO_THROW(parse_scenario(nb_config("0.2")));
}

TEST(ScenarioFile, MissingRegime) {
  std::string text = serialize_scenario(builtin("baseline-pg"));
  const auto pos = text.find("regime = hard_cap");
  text.erase(pos);
  try {
    parse_scenario(text);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("regime required"), std::string::npos) << e.what();
  }
}

TEST(ScenarioFile, RejectsMalformedInput) {
  EXPECT_THROW(parse_scenario(pg_with("label = main", "label = main\ncolour = red")), ConfigError);
  EXPECT_THROW(parse_scenario(pg_with("[study]", "[studdy]")), ConfigError);
  EXPECT_THROW(parse_scenario(pg_with("reps = 2000", "reps = many")), ConfigError);
  EXPECT_THROW(parse_scenario(pg_with("schema_version = 1", "schema_version = 9")), ConfigError);
  EXPECT_THROW(parse_scenario(pg_with("frequency = poisson", "frequency = binomial")), ConfigError);
  EXPECT_THROW(parse_scenario(pg_with("n = 10000", "n = 0")), ConfigError);
  EXPECT_THROW(parse_scenario(pg_with("n = 10000", "n = 1\nn = 2")), ConfigError);
  EXPECT_THROW(parse_scenario(pg_with("levels = 0.99, 0.999", "levels = 0.99, 2")), ConfigError);
  EXPECT_THROW(parse_scenario(""), ConfigError);
}

TEST(ScenarioFile, CommentsAndDefaults) {
  const auto s = parse_scenario(
      "# minimal\nschema_version = 1\n\n[study]\nlabel = tiny  # inline\n\n[cohort]\n"
      "label = a\nn = 3\npremium = 1\nfrequency = degenerate\nfrequency.n = 2\n"
      "severity = lognormal\nseverity.mu = 0\nseverity.sigma = 1\n"
      "regime = overage\nregime.K = 10\nregime.rate = 0.1\nregime.kappa = 0.5\n");
  EXPECT_EQ(s.study_label, "tiny");
  EXPECT_EQ(s.replications, 2000u);
  EXPECT_EQ(s.master_seed, 20260515u);
  EXPECT_EQ(s.cohorts.front().regime, ContractRegime(Overage(10.0, 0.1, 0.5)));
}

TEST(VercelCalibration, PartialExpectationIdentity) {
  const LogNormal m(1.0, 0.8);
  RandomStream s(5);
  double acc = 0.0;
  const int n = 1000000;
  for (int i = 0; i < n; ++i) acc += std::max(0.0, sample_severity(m, s) - 5.0);
  EXPECT_NEAR(acc / n, lognormal_partial_expectation(m, 5.0), 0.01 * lognormal_partial_expectation(m, 5.0));
}

TEST(VercelCalibration, HeavyCohortMatchesTargetsByMonteCarlo) {
  const auto m = calibrate_vercel_heavy(1114.0, 65.8, 1000.0, 0.15);
  EXPECT_NEAR(m.sigma, 0.93219, 1e-4);
  EXPECT_NEAR(m.mu, 6.58122, 1e-4);
  RandomStream s(20260515);
  double total = 0.0, overage = 0.0;
  const int n = 1000000;
  for (int i = 0; i < n; ++i) {
    const double x = sample_severity(m, s);
    total += x;
    overage += 0.15 * std::max(0.0, x - 1000.0);
  }
  EXPECT_NEAR(total / n, 1114.0, 0.005 * 1114.0);
  EXPECT_NEAR(overage / n, 65.8, 0.01 * 65.8);
}

TEST(VercelCalibration, LightCohortOverageIsNegligible) {
  const auto light = LogNormal::from_mean(45.1, 1.0);
  EXPECT_LT(0.15 * lognormal_partial_expectation(light, 1000.0), 0.5);
}

TEST(VercelCalibration, Errors) {
  EXPECT_THROW(calibrate_vercel_heavy(1114.0, 0.15 * 1114.0, 1000.0, 0.15), CalibrationError);
  EXPECT_THROW(calibrate_vercel_heavy(1114.0, 1.0, 1000.0, 0.15), CalibrationError);
  try {
    calibrate_vercel_heavy(1114.0, 1.0, 1000.0, 0.15);
  } catch (const CalibrationError& e) {
    EXPECT_NE(std::string(e.what()).find("achievable"), std::string::npos);
  }
  EXPECT_THROW(calibrate_vercel_heavy(-1.0, 1.0, 1000.0, 0.15), CalibrationError);
}

}  // namespace
}  // namespace caprisk
