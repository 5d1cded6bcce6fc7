#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "infertest/generator.hpp"
#include "infertest/metrics.hpp"
#include "infertest/pipeline.hpp"
#include "infertest/platform.hpp"

namespace infertest {

/// Raised for unreadable or malformed campaign inputs. The message names the
/// offending key or path.
class CampaignError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class CampaignMode {
  guided,  // exploration, staging and deployment
  manual,  // a fixed hand-picked suite run every day
};

struct NoiseSettings {
  double default_flake = 0.0;
  DeviationMode mode = DeviationMode::drop_action;
  /// Per-rule flake probabilities; its seed is derived from the campaign seed.
  std::optional<FlakeMixture> mixture;
};

struct CampaignConfig {
  std::uint64_t seed = 0;
  std::uint32_t days = 30;
  /// Nothing is written when unset.
  std::optional<std::filesystem::path> output_dir;
  CampaignMode mode = CampaignMode::guided;
  std::size_t manual_suite_size = 5;

  std::optional<std::filesystem::path> rules_path;
  std::optional<std::filesystem::path> violation_map_path;
  std::optional<std::filesystem::path> faults_path;
  /// Replaces the generator when set.
  std::optional<std::filesystem::path> production_logs_path;
  /// Added to the faults loaded from `faults_path`.
  FaultSchedule faults;

  /// Used when no rule table is given.
  CatalogSpec catalog;
  /// Empty alphabets are filled from the catalog or the rule table.
  GeneratorConfig generator = [] {
    GeneratorConfig g;
    g.datapoints_per_day = 500;
    return g;
  }();
  NoiseSettings noise;
  PlatformOptions platform;
  std::uint32_t horizon_steps = 100;

  PipelineConfig pipeline;
  CoverageUniverseSource coverage_universe = CoverageUniverseSource::production;
  /// Production day t logs the rule outcomes of day t - lag.
  std::uint32_t production_lag_days = 1;
};

struct ConfigCheck {
  std::optional<CampaignConfig> config;
  std::vector<std::string> errors;
  std::vector<std::string> warnings;

  bool ok() const noexcept { return errors.empty(); }
};

/// Parses a config document. Relative paths resolve against `base_dir`.
/// Collects every problem rather than stopping at the first.
ConfigCheck parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
/// Reads the file, parses it and checks that every referenced input loads.
ConfigCheck validate_config(const std::filesystem::path& path);

/// Resolved inputs of a campaign.
struct CampaignInputs {
  RuleTable rules;
  ViolationMap violations;
  FaultSchedule faults;
  GeneratorConfig generator;
  std::optional<ProductionLogStore> production;
};

/// Loads files and fills defaults. Throws CampaignError.
CampaignInputs load_inputs(const CampaignConfig& cfg);

/// Problems with the resolved inputs: rules that are not total over the
/// generator alphabet, bad generator settings.
std::vector<std::string> check_inputs(const CampaignInputs& inputs);

struct DaySummary {
  Datestamp day;
  std::size_t production = 0;
  std::size_t explored = 0;
  std::size_t staged = 0;
  std::size_t promoted = 0;
  std::size_t deployed = 0;
  std::size_t suite_failures = 0;
};

struct CampaignResult {
  std::vector<CoverageRow> coverage;
  std::vector<DaySummary> days;
  std::vector<SampleRecord> samples;
  std::vector<SuiteReport> suites;
  FunnelSummary funnel;
  PhaseLedger ledger;
  WWLogStore ww;
  ProductionLogStore production;
  ViolationMap violations;
  std::vector<std::string> warnings;
};

/// The `size` most frequent distinct test keys of `day`, most frequent
/// first; ties by key order.
std::vector<InferredTest> manual_suite(const ProductionLogStore& production, Datestamp day,
                                       std::size_t size);

/// Runs the day loop and, when an output directory is set, writes the report
/// bundle. Throws CampaignError on input or output failures.
CampaignResult run_campaign(const CampaignConfig& cfg);

/// Writes coverage.csv, funnel.csv, distribution_<phase>.csv, days.csv,
/// samples.csv, suite.csv, ledger.json and ww_log.jsonl into `dir`.
void write_reports(const std::filesystem::path& dir, const CampaignResult& result);

}  // namespace infertest
