#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "infertest/kmodes.hpp"
#include "infertest/log_model.hpp"
#include "infertest/platform.hpp"
#include "infertest/sampling.hpp"
#include "infertest/test_template.hpp"

namespace infertest {

// Lifecycle of a test key. Transitions only move forward.
enum class Phase { exploration = 0, staging = 1, deployed = 2, retired = 3 };

std::string_view to_string(Phase p);
std::optional<Phase> phase_from_string(std::string_view s);

struct LedgerEntry {
  Phase state = Phase::exploration;
  std::uint64_t runs = 0;
  std::uint64_t passes = 0;
  Datestamp first_seen;
  std::optional<Datestamp> staged_on;
  std::optional<Datestamp> deployed_on;

  /// passes / runs; nullopt before the first run.
  std::optional<double> pass_rate() const;
  bool operator==(const LedgerEntry&) const = default;
};

class PhaseLedger {
 public:
  /// Counts one execution; unknown keys enter the exploration phase.
  void record_run(const TestKey& key, Datestamp day, bool passed);
  /// Moves `key` forward to `to`. Throws std::logic_error for unknown keys or
  /// backward moves; moving to the current state is a no-op.
  void advance(const TestKey& key, Phase to, Datestamp day);

  const LedgerEntry* find(const TestKey& key) const;
  const std::map<TestKey, LedgerEntry>& entries() const noexcept { return entries_; }
  /// Keys that exploration must skip: deployed and retired.
  std::set<TestKey> retired_keys() const;

  /// Array of entries. With a violation map, each entry also records its
  /// violation type so reports can be rebuilt from the snapshot alone.
  nlohmann::json to_json(const ViolationMap* v = nullptr) const;
  static PhaseLedger from_json(const nlohmann::json& j);

 private:
  std::map<TestKey, LedgerEntry> entries_;
};

class UndefinedRateError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Run count of `key` within a log slice.
std::uint64_t compute_eta(const TestKey& key, std::span<const WWLogEntry> scope);
std::uint64_t compute_eta(const TestKey& key, const WWLogStore& store);
/// Pass rate of `key` within a log slice. Throws UndefinedRateError when the
/// key never ran there.
double compute_rho(const TestKey& key, std::span<const WWLogEntry> scope);
double compute_rho(const TestKey& key, const WWLogStore& store);

enum class StatsScope { day, cumulative };
enum class Phi3Source { production, ww_logs };

struct KPolicy {
  std::optional<std::size_t> fixed_k;
  std::size_t elbow_min = 1;
  std::size_t elbow_max = 8;
  double elbow_epsilon = 0.1;
};

struct PipelineConfig {
  ScoreWeights weights;
  std::size_t sample_size = 100;
  /// Exploration samples N tests per day in rounds of this size; each round
  /// is scored against the WW entries of the rounds before it.
  std::size_t exploration_batch_size = 1;
  KPolicy k_policy;
  std::size_t kmodes_restarts = 8;
  std::uint32_t cluster_window_days = 1;
  std::uint64_t n_s = 10;
  double p_s = 0.90;
  std::uint64_t n_d = 50;
  double p_d = 0.95;
  std::size_t staging_reruns = 5;
  StatsScope staging_scope = StatsScope::cumulative;
  Phi3Source phi3_source = Phi3Source::production;
  std::uint64_t seed = 0;
  std::size_t parallelism = 1;

  /// Throws std::invalid_argument on the first violated invariant.
  void validate() const;
};

/// Keys in the day-t WW slice with eta > n_s and rho > p_s, both computed
/// over `cfg.staging_scope`.
std::set<TestKey> tests_of_interest(Datestamp t, const WWLogStore& ww, const PipelineConfig& cfg);

/// One exploration execution, for the daily sample report.
struct SampleRecord {
  Datestamp day;
  std::size_t round = 0;
  ScoredCandidate scored;
  Verdict verdict = Verdict::fail;
};

struct ExplorationResult {
  std::vector<InferredTest> executed;
  std::vector<WWLogEntry> entries;
  std::vector<SampleRecord> samples;
  std::optional<ClusterModel> clusters;
  std::vector<std::string> warnings;
};

struct StagingResult {
  std::vector<TestKey> keys;
  std::vector<WWLogEntry> entries;
};

struct PromotionResult {
  std::vector<InferredTest> promoted;
  /// Keys whose emission failed; they stay in staging.
  std::vector<std::pair<TestKey, std::string>> emission_failures;
};

struct SuiteResult {
  TestKey key;
  Verdict verdict = Verdict::fail;
  std::string trace_summary;
};

struct SuiteReport {
  Datestamp day;
  std::vector<SuiteResult> results;

  std::vector<SuiteResult> failures() const;
  std::size_t failure_count() const;
};

/// Writes a production-ready test; throws on failure.
using TestEmitter = std::function<void(const InferredTest&, const EmittedTestStats&)>;

/// Seed tags separating the execution streams of the phases.
enum class ExecutionPhase : std::uint64_t { exploration = 1, staging = 2, suite = 3, fixed_suite = 4 };

std::uint64_t execution_seed(std::uint64_t campaign_seed, ExecutionPhase phase, Datestamp day,
                             const TestKey& key, std::uint64_t ordinal);

/// Executes each test on its own fresh platform. Results are in input order
/// regardless of `parallelism`.
std::vector<ExecutionTrace> execute_batch(const SimulationEnvironment& env,
                                          std::span<const InferredTest> tests, Datestamp day,
                                          std::span<const std::uint64_t> seeds,
                                          std::size_t parallelism);

/// Executes every deployed test once on day t.
SuiteReport run_deployed_suite(std::span<const InferredTest> deployed, const SimulationEnvironment& env,
                               Datestamp t, std::uint64_t campaign_seed, std::size_t parallelism = 1);

/// Exploration, staging and deployment over shared WW logs and ledger.
class Pipeline {
 public:
  Pipeline(PipelineConfig cfg, const SimulationEnvironment& env, ViolationMap violations,
           TestEmitter emitter = {});

  ExplorationResult run_exploration_day(Datestamp t, const ProductionLogStore& production);
  std::set<TestKey> tests_of_interest(Datestamp t) const;
  /// Tests of interest plus staged keys still above the staging bar.
  std::vector<TestKey> staging_set(Datestamp t) const;
  StagingResult run_staging(Datestamp t, std::span<const TestKey> keys);
  StagingResult run_staging(Datestamp t);
  PromotionResult promote_to_deployment(Datestamp t);
  SuiteReport run_deployed_suite(Datestamp t) const;

  /// Executes a fixed list of tests once each and records them like
  /// exploration runs. Used for hand-written baseline suites.
  std::vector<WWLogEntry> run_fixed_suite(Datestamp t, std::span<const InferredTest> tests);

  const PipelineConfig& config() const noexcept { return cfg_; }
  const WWLogStore& ww() const noexcept { return ww_; }
  const PhaseLedger& ledger() const noexcept { return ledger_; }
  const ViolationMap& violations() const noexcept { return violations_; }
  const std::map<TestKey, InferredTest>& deployed() const noexcept { return deployed_; }
  /// Manual retirement of a deployed test from the suite.
  void retire(const TestKey& key, Datestamp t);

 private:
  InferredTest test_for(const TestKey& key, Datestamp t) const;
  WWLogEntry record(const InferredTest& test, Datestamp t, Verdict verdict);

  PipelineConfig cfg_;
  const SimulationEnvironment* env_;
  ViolationMap violations_;
  TestEmitter emitter_;
  WWLogStore ww_;
  PhaseLedger ledger_;
  std::map<TestKey, Datapoint> sources_;
  std::map<TestKey, InferredTest> deployed_;
};

}  // namespace infertest
