// caprisk: reproduces the capped-subscription risk studies as CSV files.
//
//   caprisk <study> [--seed N] [--reps N] [--out DIR] [--threads N]
//   caprisk run <scenario-file> [--seed-override N] [--reps-override N]
//   caprisk list | export <name>
//
// Each study writes output/<study>/{*.csv, manifest.txt}.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "caprisk/error.hpp"
#include "caprisk/scenarios.hpp"
#include "caprisk/studies.hpp"
#include "caprisk/version.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

/// File-system problems: bad output directory, unreadable input.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct StageError : std::runtime_error {
  StageError(const std::string& stage, const std::string& what)
      : std::runtime_error("stage '" + stage + "' failed: " + what) {}
};

template <class Fn>
auto stage(const std::string& name, Fn&& fn) {
  try {
    return fn();
  } catch (const IoError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string sanitize(std::string_view label) {
  std::string out;
  for (char c : label) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '-' || c == '_' || c == '.';
    out += ok ? c : '_';
  }
  return out.empty() ? "study" : out;
}

struct CommonFlags {
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> reps;
  std::string out = "output";
  unsigned threads = 0;

  caprisk::StudyOptions study_options() const { return {seed, reps, threads}; }
};

/// Collects the files of one study and writes its manifest last.
class OutputSet {
 public:
  OutputSet(const CommonFlags& flags, std::string study) : study_(std::move(study)) {
    dir_ = fs::path(flags.out) / sanitize(study_);
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec || !fs::is_directory(dir_)) {
      throw IoError("cannot create output directory '" + dir_.string() + "': " + ec.message());
    }
    start_ = utc_now();
  }

  void write(const std::string& file, const caprisk::CsvTable& table) {
    const fs::path path = dir_ / file;
    try {
      table.write(path);
    } catch (const std::exception& e) {
      throw IoError(e.what());
    }
    outputs_.push_back(path.string());
    std::cout << "wrote " << path.string() << "\n";
  }

  void set(const std::string& key, const std::string& value) { extra_.emplace_back(key, value); }

  void finish(const std::string& seed, const std::string& replications) {
    const fs::path path = dir_ / "manifest.txt";
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << "study = " << study_ << "\n";
    out << "seed = " << seed << "\n";
    out << "replications = " << replications << "\n";
    out << "start = " << start_ << "\n";
    out << "end = " << utc_now() << "\n";
    out << "outputs = ";
    for (std::size_t i = 0; i < outputs_.size(); ++i) out << (i ? ", " : "") << outputs_[i];
    out << "\n";
    out << "version = " << caprisk::kVersion << "\n";
    for (const auto& [k, v] : extra_) out << k << " = " << v << "\n";
    out.flush();
    if (!out) throw IoError("cannot write manifest '" + path.string() + "'");
  }

 private:
  std::string study_;
  fs::path dir_;
  std::string start_;
  std::vector<std::string> outputs_;
  std::vector<std::pair<std::string, std::string>> extra_;
};

std::string reps_text(const CommonFlags& f) {
  return std::to_string(f.reps.value_or(caprisk::kDefaultReplications));
}

std::string seed_text(const CommonFlags& f) {
  return std::to_string(f.seed.value_or(caprisk::kDefaultSeed));
}

void add_common(CLI::App* sub, CommonFlags& flags, bool with_reps = true) {
  sub->add_option("--seed", flags.seed, "Master seed (default 20260515)");
  if (with_reps) {
    sub->add_option("--reps", flags.reps, "Monte Carlo replications")
        ->check(CLI::Range(std::uint64_t{2}, std::uint64_t{100000000}));
  }
  sub->add_option("--out", flags.out, "Output root directory")->capture_default_str();
  sub->add_option("--threads", flags.threads, "Worker threads (0 = all cores)")
      ->capture_default_str();
}

void cmd_reserve_comparison(const CommonFlags& f) {
  OutputSet out(f, "reserve-comparison");
  const auto result = stage("simulate", [&] { return caprisk::reserve_comparison(f.study_options()); });
  out.write("tab_reserve_comparison.csv", caprisk::reserve_comparison_table(result));
  out.finish(seed_text(f), reps_text(f));
}

void cmd_aggregate_distribution(const CommonFlags& f) {
  OutputSet out(f, "aggregate-distribution");
  const auto result = stage("simulate", [&] { return caprisk::reserve_comparison(f.study_options()); });
  const std::vector<std::string> models = {"poisson_gamma", "nb_lognormal"};
  const auto table = stage("histogram", [&] {
    return caprisk::aggregate_distribution_table(result.simulated, models);
  });
  out.write("fig_aggregate_cost_distribution.csv", table);
  out.finish(seed_text(f), reps_text(f));
}

void cmd_policy_alternatives(const CommonFlags& f) {
  OutputSet out(f, "policy-alternatives");
  const auto rows = stage("simulate", [&] { return caprisk::policy_alternatives(f.study_options()); });
  out.write("tab_policy_alternatives.csv", caprisk::policy_alternatives_table(rows));
  out.finish(seed_text(f), reps_text(f));
}

void cmd_vercel(const CommonFlags& f) {
  OutputSet out(f, "vercel");
  const auto rows = stage("simulate", [&] { return caprisk::vercel_study(f.study_options()); });
  out.write("tab_vercel.csv", caprisk::vercel_table(rows));
  out.finish(seed_text(f), reps_text(f));
}

void cmd_mixed_population(const CommonFlags& f) {
  OutputSet out(f, "mixed-population");
  const auto rows = stage("simulate", [&] { return caprisk::mixed_population(f.study_options()); });
  out.write("tab_mixed_population.csv", caprisk::mixed_population_table(rows));
  out.finish(seed_text(f), reps_text(f));
}

void cmd_censoring_bias(const CommonFlags& f) {
  OutputSet out(f, "censoring-bias");
  const auto rows = stage("estimate", [&] { return caprisk::censoring_bias(f.study_options()); });
  std::cout << caprisk::censoring_bias_report(rows);
  out.write("tab_censoring_bias.csv", caprisk::censoring_bias_table(rows));
  out.finish(seed_text(f), "n/a");
}

void cmd_size_sweep(const CommonFlags& f) {
  OutputSet out(f, "size-sweep");
  const auto result = stage("simulate", [&] { return caprisk::size_sweep(f.study_options()); });
  out.write("fig_reserve_by_portfolio_size.csv", caprisk::size_sweep_table(result));
  out.set("level", caprisk::format_number(result.level));
  out.set("slope", caprisk::format_number(result.slope));
  out.finish(seed_text(f), reps_text(f));
}

struct ChurnFlags {
  caprisk::ChurnStudyParams params;
};

void cmd_churn(const CommonFlags& f, const ChurnFlags& c) {
  OutputSet out(f, "churn");
  const auto trajectory = stage("evolve", [&] { return caprisk::churn_study(f.study_options(), c.params); });
  out.write("churn_trajectory.csv", caprisk::churn_table(trajectory));
  out.set("scenario", c.params.scenario);
  out.set("h0", caprisk::format_number(c.params.hazard.h0));
  out.set("beta1", caprisk::format_number(c.params.hazard.beta1));
  out.set("beta2", caprisk::format_number(c.params.hazard.beta2));
  out.set("periods", std::to_string(c.params.periods));
  out.finish(seed_text(f), std::to_string(f.reps.value_or(c.params.replications)));
}

void cmd_run(const CommonFlags& f, const std::string& file) {
  if (!fs::exists(file)) throw IoError("scenario file not found: " + file);
  caprisk::Scenario scenario;
  try {
    scenario = caprisk::load_scenario(file);
  } catch (const caprisk::ConfigError& e) {
    throw IoError(e.what());
  }
  if (f.seed) scenario.master_seed = *f.seed;
  if (f.reps) scenario.replications = *f.reps;
  OutputSet out(f, scenario.study_label);
  const auto summary = stage("simulate", [&] {
    return caprisk::run_monte_carlo(scenario, caprisk::RunOptions{f.threads});
  });
  out.write("run_summary.csv", caprisk::run_summary_table(scenario, summary));
  out.set("scenario_file", file);
  out.finish(std::to_string(scenario.master_seed), std::to_string(scenario.replications));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Capped-subscription portfolio risk studies"};
  app.set_version_flag("--version", std::string(caprisk::kVersion));
  app.require_subcommand(1);

  CommonFlags flags;
  std::vector<std::pair<CLI::App*, std::function<void()>>> commands;

  auto study = [&](const char* name, const char* help, void (*fn)(const CommonFlags&)) {
    CLI::App* sub = app.add_subcommand(name, help);
    add_common(sub, flags);
    commands.emplace_back(sub, [fn, &flags] { fn(flags); });
  };
  study("reserve-comparison", "Naive, Poisson-Gamma and NB-LogNormal reserves", cmd_reserve_comparison);
  study("policy-alternatives", "Hard caps, no cap and pay-per-use on the stress compound",
        cmd_policy_alternatives);
  study("vercel", "Overage contracts for light and heavy cohorts", cmd_vercel);
  study("mixed-population", "Homogeneous versus light/power mixtures", cmd_mixed_population);
  study("size-sweep", "Per-user tail capital against portfolio size", cmd_size_sweep);
  study("aggregate-distribution", "Histogram data of simulated portfolio loss",
        cmd_aggregate_distribution);

  CLI::App* censor = app.add_subcommand("censoring-bias", "Naive and Tobit severity fits under censoring");
  add_common(censor, flags, false);
  commands.emplace_back(censor, [&flags] { cmd_censoring_bias(flags); });

  ChurnFlags churn_flags;
  CLI::App* churn = app.add_subcommand("churn", "Multi-period evolution with cap-driven churn");
  add_common(churn, flags);
  churn->add_option("--scenario", churn_flags.params.scenario, "Built-in hard-capped scenario")
      ->capture_default_str();
  churn->add_option("--h0", churn_flags.params.hazard.h0, "Baseline hazard per period")
      ->capture_default_str();
  churn->add_option("--beta1", churn_flags.params.hazard.beta1, "Post-hit hazard coefficient")
      ->capture_default_str();
  churn->add_option("--beta2", churn_flags.params.hazard.beta2, "Per-hit fatigue coefficient")
      ->capture_default_str();
  churn->add_option("--periods", churn_flags.params.periods, "Number of periods")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  commands.emplace_back(churn, [&] { cmd_churn(flags, churn_flags); });

  std::string scenario_file;
  CLI::App* run = app.add_subcommand("run", "Run a scenario file and write a summary CSV");
  run->add_option("file", scenario_file, "Scenario file")->required();
  run->add_option("--seed-override", flags.seed, "Replace the file's seed");
  run->add_option("--reps-override", flags.reps, "Replace the file's replication count")
      ->check(CLI::Range(std::uint64_t{2}, std::uint64_t{100000000}));
  run->add_option("--out", flags.out, "Output root directory")->capture_default_str();
  run->add_option("--threads", flags.threads, "Worker threads (0 = all cores)");
  commands.emplace_back(run, [&] { cmd_run(flags, scenario_file); });

  CLI::App* list = app.add_subcommand("list", "List built-in scenario names");
  commands.emplace_back(list, [] {
    for (const auto& name : caprisk::builtin_names()) std::cout << name << "\n";
  });

  std::string export_name;
  std::string export_file;
  CLI::App* exp = app.add_subcommand("export", "Write a built-in scenario as a scenario file");
  exp->add_option("name", export_name, "Built-in scenario name")->required();
  exp->add_option("--file", export_file, "Destination (default stdout)");
  commands.emplace_back(exp, [&] {
    const auto scenario = stage("lookup", [&] { return caprisk::builtin(export_name); });
    if (export_file.empty()) {
      std::cout << caprisk::serialize_scenario(scenario);
    } else {
      try {
        caprisk::save_scenario(scenario, export_file);
      } catch (const std::exception& e) {
        throw IoError(e.what());
      }
    }
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    for (const auto& [sub, fn] : commands) {
      if (sub->parsed()) fn();
    }
  } catch (const IoError& e) {
    std::cerr << "caprisk: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "caprisk: " << e.what() << "\n";
    return kExitFailure;
  }
  return 0;
}
