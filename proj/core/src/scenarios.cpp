#include "caprisk/scenarios.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <initializer_list>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "caprisk/csv.hpp"
#include "caprisk/error.hpp"
#include "caprisk/numeric.hpp"

namespace caprisk {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

constexpr std::uint64_t kDefaultUsers = 10000;
constexpr double kBaselinePremium = 50.0;
constexpr double kBaselineCap = 1000.0;

Scenario single_cohort(std::string label, CompoundSpec compound, ContractRegime regime,
                       double premium, std::uint64_t n = kDefaultUsers) {
  Scenario s;
  s.study_label = label;
  s.cohorts.push_back(CohortSpec{
      .label = "main",
      .n = n,
      .premium = premium,
      .compound = std::move(compound),
      .regime = std::move(regime),
  });
  return s;
}

CompoundSpec poisson_gamma() { return {Poisson(5.0), Gamma(2.0, 3.0)}; }
CompoundSpec nb_lognormal() { return {NegBinomial(1.0, 0.07), LogNormal(-0.311, 1.5)}; }
CompoundSpec stress_compound() { return {NegBinomial(2.0, 0.05), LogNormal(0.996, 2.0)}; }

Scenario vercel(std::string label, bool heavy, double kappa) {
  const VercelParams p;
  const LogNormal severity =
      heavy ? calibrate_vercel_heavy(p.heavy_mean, p.heavy_overage_billed, p.allowance, p.rate)
            : LogNormal::from_mean(p.light_mean, p.light_sigma);
  Scenario s = single_cohort(std::move(label), {Degenerate(1), severity},
                             Overage(p.allowance, p.rate, kappa), p.premium, p.n);
  s.cohorts.front().label = heavy ? "heavy" : "light";
  return s;
}

Scenario mixed(std::string label, std::string_view variant) {
  const auto segments = mixed_segments(variant);
  MixedScenarioParams params;
  params.study_label = std::move(label);
  return build_mixed_scenario(segments, params);
}

using Factory = std::function<Scenario()>;

const std::vector<std::pair<std::string, Factory>>& registry() {
  static const std::vector<std::pair<std::string, Factory>> entries = {
      // The naive row is analytic; its scenario carries the matched-mean
      // Poisson–Gamma parameters from which E[N]·E[S] is taken.
      {"baseline-naive",
       [] { return single_cohort("baseline-naive", poisson_gamma(), HardCap(kBaselineCap), kBaselinePremium); }},
      {"baseline-pg",
       [] { return single_cohort("baseline-pg", poisson_gamma(), HardCap(kBaselineCap), kBaselinePremium); }},
      {"baseline-nbln",
       [] { return single_cohort("baseline-nbln", nb_lognormal(), HardCap(kBaselineCap), kBaselinePremium); }},
      {"stress-p0",
       [] { return single_cohort("stress-p0", stress_compound(), HardCap(1000.0), kBaselinePremium); }},
      {"stress-p1",
       [] { return single_cohort("stress-p1", stress_compound(), HardCap(5000.0), kBaselinePremium); }},
      {"stress-p2",
       [] { return single_cohort("stress-p2", stress_compound(), NoCap(1.0), kBaselinePremium); }},
      {"stress-p3",
       [] { return single_cohort("stress-p3", stress_compound(), PayPerUse(1.0), 0.0); }},
      {"vercel-light-k0.25", [] { return vercel("vercel-light-k0.25", false, 0.25); }},
      {"vercel-light-k0.50", [] { return vercel("vercel-light-k0.50", false, 0.50); }},
      {"vercel-light-k1.00", [] { return vercel("vercel-light-k1.00", false, 1.00); }},
      {"vercel-heavy-k0.25", [] { return vercel("vercel-heavy-k0.25", true, 0.25); }},
      {"vercel-heavy-k0.50", [] { return vercel("vercel-heavy-k0.50", true, 0.50); }},
      {"vercel-heavy-k1.00", [] { return vercel("vercel-heavy-k1.00", true, 1.00); }},
      {"mixed-h",
       [] { return single_cohort("mixed-h", nb_lognormal(), HardCap(kBaselineCap), kBaselinePremium); }},
      {"mixed-m1", [] { return mixed("mixed-m1", "m1"); }},
      {"mixed-m2", [] { return mixed("mixed-m2", "m2"); }},
      {"mixed-m3", [] { return mixed("mixed-m3", "m3"); }},
      // Severity parameters and sample size for the censoring study.
      {"censoring-bias",
       [] {
         Scenario s = single_cohort("censoring-bias", {Degenerate(1), LogNormal(2.6, 1.3)},
                                    NoCap(1.0), 0.0, 50000);
         s.cohorts.front().label = "severity";
         return s;
       }},
      {"size-sweep",
       [] { return single_cohort("size-sweep", nb_lognormal(), HardCap(kBaselineCap), kBaselinePremium); }},
  };
  return entries;
}

// ---------------------------------------------------------------------------
// Parsing helpers
// ---------------------------------------------------------------------------

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

struct Entry {
  std::string value;
  std::size_t line = 0;
};

struct Section {
  std::string name;
  std::size_t line = 0;
  std::map<std::string, Entry> entries;
};

double parse_double(const std::string& key, const Entry& e) {
  double v = 0.0;
  const char* begin = e.value.data();
  const char* end = begin + e.value.size();
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
    throw ConfigError(key + ": expected a number, got '" + e.value + "'", e.line);
  }
  return v;
}

std::uint64_t parse_uint(const std::string& key, const Entry& e) {
  std::uint64_t v = 0;
  const char* begin = e.value.data();
  const char* end = begin + e.value.size();
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + e.value + "'", e.line);
  }
  return v;
}

class SectionReader {
 public:
  explicit SectionReader(const Section& section) : section_(section) {}

  const Entry& require(const std::string& key) {
    used_.insert(key);
    auto it = section_.entries.find(key);
    if (it == section_.entries.end()) {
      throw ConfigError("[" + section_.name + "] " + key + " required", section_.line);
    }
    return it->second;
  }

  const Entry* optional(const std::string& key) {
    used_.insert(key);
    auto it = section_.entries.find(key);
    return it == section_.entries.end() ? nullptr : &it->second;
  }

  double number(const std::string& key) { return parse_double(key, require(key)); }
  std::uint64_t integer(const std::string& key) { return parse_uint(key, require(key)); }

  std::size_t line_of(const std::string& key) const {
    auto it = section_.entries.find(key);
    return it == section_.entries.end() ? section_.line : it->second.line;
  }

  /// Rejects keys outside the section's vocabulary before anything is read.
  void reject_foreign(std::initializer_list<std::string_view> vocabulary) const {
    for (const auto& [key, entry] : section_.entries) {
      if (std::find(vocabulary.begin(), vocabulary.end(), key) == vocabulary.end()) {
        throw ConfigError("[" + section_.name + "] unknown key '" + key + "'", entry.line);
      }
    }
  }

  /// Rejects keys present but not consumed (e.g. frequency.r with a Poisson).
  void reject_unknown() const {
    for (const auto& [key, entry] : section_.entries) {
      if (!used_.contains(key)) {
        throw ConfigError("[" + section_.name + "] unknown key '" + key + "'", entry.line);
      }
    }
  }

 private:
  const Section& section_;
  std::set<std::string> used_;
};

// Runs a model constructor, re-raising InputError as a ConfigError that names
// the offending key and line.
template <class Fn>
auto construct(SectionReader& r, const std::string& key, Fn&& fn) {
  try {
    return fn();
  } catch (const InputError& e) {
    throw ConfigError(key + ": " + e.what(), r.line_of(key));
  }
}

FrequencyModel read_frequency(SectionReader& r) {
  const std::string kind = r.require("frequency").value;
  if (kind == "poisson") {
    const double lambda = r.number("frequency.lambda");
    return construct(r, "frequency.lambda", [&] { return FrequencyModel(Poisson(lambda)); });
  }
  if (kind == "negative_binomial") {
    const double nb_r = r.number("frequency.r");
    const double p = r.number("frequency.p");
    construct(r, "frequency.r", [&] { return NegBinomial(nb_r, 0.5); });
    return construct(r, "frequency.p", [&] { return FrequencyModel(NegBinomial(nb_r, p)); });
  }
  if (kind == "degenerate") {
    return Degenerate(r.integer("frequency.n"));
  }
  throw ConfigError("frequency: unknown kind '" + kind + "'", r.line_of("frequency"));
}

SeverityModel read_severity(SectionReader& r) {
  const std::string kind = r.require("severity").value;
  if (kind == "gamma") {
    const double shape = r.number("severity.shape");
    const double scale = r.number("severity.scale");
    construct(r, "severity.shape", [&] { return Gamma(shape, 1.0); });
    return construct(r, "severity.scale", [&] { return SeverityModel(Gamma(shape, scale)); });
  }
  if (kind == "lognormal") {
    const double mu = r.number("severity.mu");
    const double sigma = r.number("severity.sigma");
    return construct(r, "severity.sigma", [&] { return SeverityModel(LogNormal(mu, sigma)); });
  }
  throw ConfigError("severity: unknown kind '" + kind + "'", r.line_of("severity"));
}

ContractRegime read_regime(SectionReader& r) {
  const std::string kind = r.require("regime").value;
  if (kind == "hard_cap") {
    const double K = r.number("regime.K");
    return construct(r, "regime.K", [&] { return ContractRegime(HardCap(K)); });
  }
  if (kind == "soft_degrade") {
    const double K = r.number("regime.K");
    const double rho = r.number("regime.rho");
    construct(r, "regime.K", [&] { return HardCap(K); });
    return construct(r, "regime.rho", [&] { return ContractRegime(SoftDegrade(K, rho)); });
  }
  if (kind == "overage") {
    const double K = r.number("regime.K");
    const double rate = r.number("regime.rate");
    const double kappa = r.number("regime.kappa");
    construct(r, "regime.K", [&] { return HardCap(K); });
    construct(r, "regime.kappa", [&] { return NoCap(kappa); });
    return construct(r, "regime.rate", [&] { return ContractRegime(Overage(K, rate, kappa)); });
  }
  if (kind == "no_cap") {
    const double kappa = r.number("regime.kappa");
    return construct(r, "regime.kappa", [&] { return ContractRegime(NoCap(kappa)); });
  }
  if (kind == "pay_per_use") {
    const double kappa = r.number("regime.kappa");
    return construct(r, "regime.kappa", [&] { return ContractRegime(PayPerUse(kappa)); });
  }
  throw ConfigError("regime: unknown kind '" + kind + "'", r.line_of("regime"));
}

std::vector<double> parse_levels(const Entry& e) {
  std::vector<double> levels;
  std::string_view rest = e.value;
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    const std::string item(trim(rest.substr(0, comma)));
    levels.push_back(parse_double("levels", Entry{item, e.line}));
    if (comma == std::string_view::npos) break;
    rest = rest.substr(comma + 1);
  }
  if (levels.empty()) throw ConfigError("levels: at least one level required", e.line);
  return levels;
}

}  // namespace

const std::vector<std::string>& builtin_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [name, factory] : registry()) out.push_back(name);
    return out;
  }();
  return names;
}

Scenario builtin(std::string_view name) {
  for (const auto& [entry, factory] : registry()) {
    if (entry == name) return factory();
  }
  std::string message = "unknown scenario '" + std::string(name) + "'; valid names:";
  for (const auto& n : builtin_names()) message += " " + n;
  throw ConfigError(message);
}

std::vector<SegmentSpec> mixed_segments(std::string_view variant) {
  // Light segments: E[N] = 5, sigma = 0.8, NB dispersion 1. Power segments:
  // sigma = 1.5, NB dispersion 2. Weights solve the $30 mean constraint.
  auto light = [](double sev_mean, double weight) {
    return SegmentSpec{"light", 5.0, sev_mean, 0.8, weight, 1.0};
  };
  auto power = [](double freq_mean, double sev_mean, double weight) {
    return SegmentSpec{"power", freq_mean, sev_mean, 1.5, weight, 2.0};
  };
  if (variant == "m1") return {light(2.0, 0.90), power(30.0, 7.0, 0.10)};
  if (variant == "m2") return {light(2.0, 0.80), power(22.0, 5.0, 0.20)};
  if (variant == "m3") return {light(3.0, 0.95), power(45.0, 7.0, 0.05)};
  throw ConfigError("unknown mixed-population variant '" + std::string(variant) + "'");
}

std::string serialize_scenario(const Scenario& scenario) {
  std::ostringstream out;
  out << "schema_version = " << kScenarioSchemaVersion << "\n\n";
  out << "[study]\n";
  out << "label = " << scenario.study_label << "\n";
  out << "reps = " << scenario.replications << "\n";
  out << "seed = " << scenario.master_seed << "\n";
  out << "levels = ";
  for (std::size_t i = 0; i < scenario.levels.size(); ++i) {
    out << (i ? ", " : "") << format_number(scenario.levels[i]);
  }
  out << "\n";
  out << "composition = "
      << (scenario.composition == Composition::Fixed ? "fixed" : "random") << "\n";

  for (const auto& c : scenario.cohorts) {
    out << "\n[cohort]\n";
    out << "label = " << c.label << "\n";
    out << "n = " << c.n << "\n";
    out << "premium = " << format_number(c.premium) << "\n";
    std::visit(Overloaded{
                   [&](const Poisson& m) {
                     out << "frequency = poisson\nfrequency.lambda = " << format_number(m.lambda)
                         << "\n";
                   },
                   [&](const NegBinomial& m) {
                     out << "frequency = negative_binomial\nfrequency.r = " << format_number(m.r)
                         << "\nfrequency.p = " << format_number(m.p) << "\n";
                   },
                   [&](const Degenerate& m) {
                     out << "frequency = degenerate\nfrequency.n = " << m.n << "\n";
                   },
               },
               c.compound.frequency);
    std::visit(Overloaded{
                   [&](const Gamma& m) {
                     out << "severity = gamma\nseverity.shape = " << format_number(m.shape)
                         << "\nseverity.scale = " << format_number(m.scale) << "\n";
                   },
                   [&](const LogNormal& m) {
                     out << "severity = lognormal\nseverity.mu = " << format_number(m.mu)
                         << "\nseverity.sigma = " << format_number(m.sigma) << "\n";
                   },
               },
               c.compound.severity);
    out << "regime = " << regime_name(c.regime) << "\n";
    std::visit(Overloaded{
                   [&](const HardCap& r) { out << "regime.K = " << format_number(r.K) << "\n"; },
                   [&](const SoftDegrade& r) {
                     out << "regime.K = " << format_number(r.K)
                         << "\nregime.rho = " << format_number(r.rho) << "\n";
                   },
                   [&](const Overage& r) {
                     out << "regime.K = " << format_number(r.K)
                         << "\nregime.rate = " << format_number(r.rate)
                         << "\nregime.kappa = " << format_number(r.kappa) << "\n";
                   },
                   [&](const NoCap& r) {
                     out << "regime.kappa = " << format_number(r.kappa) << "\n";
                   },
                   [&](const PayPerUse& r) {
                     out << "regime.kappa = " << format_number(r.kappa) << "\n";
                   },
               },
               c.regime);
  }
  return out.str();
}

Scenario parse_scenario(std::string_view text) {
  std::optional<Entry> schema;
  std::vector<Section> sections;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("malformed section header", line_no);
      const std::string name(trim(line.substr(1, line.size() - 2)));
      if (name != "study" && name != "cohort") {
        throw ConfigError("unknown section [" + name + "]", line_no);
      }
      sections.push_back(Section{name, line_no, {}});
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError("expected 'key = value'", line_no);
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (key.empty()) throw ConfigError("empty key", line_no);
    if (sections.empty()) {
      if (key != "schema_version") {
        throw ConfigError("unknown top-level key '" + key + "'", line_no);
      }
      schema = Entry{value, line_no};
      continue;
    }
    auto& entries = sections.back().entries;
    if (entries.contains(key)) throw ConfigError("duplicate key '" + key + "'", line_no);
    entries.emplace(key, Entry{value, line_no});
  }

  if (!schema) throw ConfigError("schema_version required");
  if (parse_uint("schema_version", *schema) != kScenarioSchemaVersion) {
    throw ConfigError("unsupported schema_version " + schema->value, schema->line);
  }

  Scenario scenario;
  bool have_study = false;
  for (const auto& section : sections) {
    SectionReader r(section);
    if (section.name == "study") {
      if (have_study) throw ConfigError("duplicate [study] section", section.line);
      have_study = true;
      r.reject_foreign({"label", "reps", "seed", "levels", "composition"});
      scenario.study_label = r.require("label").value;
      if (const Entry* e = r.optional("reps")) scenario.replications = parse_uint("reps", *e);
      if (const Entry* e = r.optional("seed")) scenario.master_seed = parse_uint("seed", *e);
      if (const Entry* e = r.optional("levels")) scenario.levels = parse_levels(*e);
      if (const Entry* e = r.optional("composition")) {
        if (e->value == "fixed") {
          scenario.composition = Composition::Fixed;
        } else if (e->value == "random") {
          scenario.composition = Composition::Random;
        } else {
          throw ConfigError("composition: expected 'fixed' or 'random'", e->line);
        }
      }
      r.reject_unknown();
      continue;
    }
    r.reject_foreign({"label", "n", "premium", "frequency", "frequency.lambda", "frequency.r",
                      "frequency.p", "frequency.n", "severity", "severity.shape",
                      "severity.scale", "severity.mu", "severity.sigma", "regime", "regime.K",
                      "regime.rho", "regime.rate", "regime.kappa"});
    CohortSpec cohort{
        .label = r.require("label").value,
        .n = r.integer("n"),
        .premium = r.number("premium"),
        .compound = {read_frequency(r), read_severity(r)},
        .regime = read_regime(r),
    };
    r.reject_unknown();
    try {
      cohort.validate();
    } catch (const InputError& e) {
      throw ConfigError(e.what(), section.line);
    }
    scenario.cohorts.push_back(std::move(cohort));
  }
  if (!have_study) throw ConfigError("[study] section required");
  try {
    scenario.validate();
  } catch (const InputError& e) {
    throw ConfigError(e.what());
  }
  return scenario;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open scenario file '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_scenario(buffer.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void save_scenario(const Scenario& scenario, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write scenario file '" + path.string() + "'");
  out << serialize_scenario(scenario);
  if (!out) throw ConfigError("write failed for '" + path.string() + "'");
}

double lognormal_partial_expectation(const LogNormal& model, double K) {
  const double mean = std::exp(model.mu + 0.5 * model.sigma * model.sigma);
  if (K <= 0.0) return mean - K;
  const double logK = std::log(K);
  const double d1 = (model.mu + model.sigma * model.sigma - logK) / model.sigma;
  const double d2 = (model.mu - logK) / model.sigma;
  return mean * normal_cdf(d1) - K * normal_cdf(d2);
}

LogNormal calibrate_vercel_heavy(double target_mean, double target_overage_billed, double K,
                                 double rate) {
  if (!(target_mean > 0.0 && target_overage_billed > 0.0 && K > 0.0 && rate > 0.0)) {
    throw CalibrationError("calibrate_vercel_heavy: targets, K and rate must be positive");
  }
  if (target_overage_billed >= rate * target_mean) {
    throw CalibrationError(
        "calibrate_vercel_heavy: overage target must be below rate * mean (" +
        std::to_string(rate * target_mean) + ")");
  }
  auto overage = [&](double sigma) {
    return rate * lognormal_partial_expectation(LogNormal::from_mean(target_mean, sigma), K);
  };
  double lo = 0.05;
  double hi = 5.0;
  const double f_lo = overage(lo) - target_overage_billed;
  const double f_hi = overage(hi) - target_overage_billed;
  if (f_lo > 0.0 || f_hi < 0.0) {
    throw CalibrationError("calibrate_vercel_heavy: no root for sigma in [0.05, 5]; achievable "
                           "overage per user is [" +
                           std::to_string(overage(lo)) + ", " + std::to_string(overage(hi)) +
                           "]");
  }
  double mid = 0.5 * (lo + hi);
  for (int i = 0; i < 200; ++i) {
    mid = 0.5 * (lo + hi);
    const double f = overage(mid) - target_overage_billed;
    if (std::fabs(f) <= 1e-6 * target_overage_billed) break;
    (f < 0.0 ? lo : hi) = mid;
  }
  return LogNormal::from_mean(target_mean, mid);
}

}  // namespace caprisk
