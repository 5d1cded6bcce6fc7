// infertest: run test-inference campaigns against the simulated platform.
//
//   infertest run --config campaign.json [--seed N] [--days N] [--out DIR]
//   infertest validate --config campaign.json
//   infertest report --ledger out/ledger.json [--out DIR]

#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "infertest/campaign.hpp"
#include "infertest/metrics.hpp"
#include "infertest/pipeline.hpp"

namespace fs = std::filesystem;
using namespace infertest;

namespace {

void print_problems(const ConfigCheck& check) {
  for (const auto& w : check.warnings) std::cerr << "warning: " << w << '\n';
  for (const auto& e : check.errors) std::cerr << "error: " << e << '\n';
}

int cmd_run(const fs::path& config, std::optional<std::uint64_t> seed, std::optional<std::uint32_t> days,
            std::optional<fs::path> out) {
  ConfigCheck check = validate_config(config);
  print_problems(check);
  if (!check.ok()) return 2;

  CampaignConfig cfg = *check.config;
  if (seed) cfg.seed = *seed;
  if (days) cfg.days = *days;
  if (out) cfg.output_dir = *out;
  if (!cfg.output_dir) {
    std::cerr << "error: output_dir: not set in the config and no --out given\n";
    return 2;
  }

  CampaignResult result;
  try {
    result = run_campaign(cfg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';

  double mu = 0.0, nu = 0.0;
  for (const auto& row : result.coverage) {
    mu += row.mu;
    nu += row.nu;
  }
  if (!result.coverage.empty()) {
    mu /= static_cast<double>(result.coverage.size());
    nu /= static_cast<double>(result.coverage.size());
  }
  const auto& f = result.funnel;
  std::cout << "days " << cfg.days << ", seed " << cfg.seed << '\n'
            << "tests: exploration " << f.exploration.tests << ", staging " << f.staging.tests << ", deployment "
            << f.deployment.tests << '\n'
            << "mean coverage: mu " << format_rate(mu) << ", nu " << format_rate(nu) << '\n'
            << "reports written to " << cfg.output_dir->string() << '\n';
  return 0;
}

int cmd_validate(const fs::path& config) {
  const ConfigCheck check = validate_config(config);
  print_problems(check);
  if (!check.ok()) return 2;
  std::cout << config.string() << ": ok\n";
  return 0;
}

void print_table(const FrequencyTable& t) {
  std::cout << "  " << t.category << '\n';
  for (const auto& [label, count] : t.rows) std::cout << "    " << count << '\t' << label << '\n';
}

int cmd_report(const fs::path& ledger_path, std::optional<fs::path> out) {
  nlohmann::json j;
  PhaseLedger ledger;
  ViolationMap v;
  try {
    std::ifstream in(ledger_path);
    if (!in) throw std::runtime_error("cannot read file");
    j = nlohmann::json::parse(in);
    ledger = PhaseLedger::from_json(j);
    // Snapshots carry each key's violation type; rebuild the map from them.
    for (const auto& e : j.at("entries"))
      if (e.contains("violation_type"))
        v.add(test_key_from_json(e).report_tags, e.at("violation_type").get<std::string>());
  } catch (const std::exception& e) {
    std::cerr << "error: " << ledger_path.string() << ": " << e.what() << '\n';
    return 1;
  }

  const FunnelSummary funnel = phase_funnel(ledger);
  write_funnel_csv(std::cout, funnel);
  for (auto [phase, name] : {std::pair{Phase::exploration, "exploration"}, std::pair{Phase::staging, "staging"},
                             std::pair{Phase::deployed, "deployment"}}) {
    const auto report = distribution_report(phase, ledger, v);
    std::cout << '\n' << name << '\n';
    for (const auto* t : {&report.content_type, &report.violation_type, &report.decision, &report.actions})
      print_table(*t);
    if (out) {
      fs::create_directories(*out);
      std::ofstream file(*out / (std::string("distribution_") + name + ".csv"));
      write_distribution_csv(file, report);
    }
  }
  if (out) {
    std::ofstream file(*out / "funnel.csv");
    write_funnel_csv(file, funnel);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Infer integrity tests from production logs and run them on a simulated platform"};
  app.require_subcommand(1);

  fs::path config, ledger;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint32_t> days;
  std::optional<fs::path> out, report_out;

  auto* run = app.add_subcommand("run", "Run a campaign and write its reports");
  run->add_option("--config", config, "Campaign config (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "Override the campaign seed");
  run->add_option("--days", days, "Override the number of days");
  run->add_option("--out", out, "Override the output directory");

  auto* validate = app.add_subcommand("validate", "Check a campaign config and its input files");
  validate->add_option("--config", config, "Campaign config (JSON)")->required();

  auto* report = app.add_subcommand("report", "Summarize a ledger snapshot");
  report->add_option("--ledger", ledger, "ledger.json written by run")->required()->check(CLI::ExistingFile);
  report->add_option("--out", report_out, "Also write funnel and distribution CSVs here");

  CLI11_PARSE(app, argc, argv);

  if (*run) return cmd_run(config, seed, days, out);
  if (*validate) return cmd_validate(config);
  return cmd_report(ledger, report_out);
}
