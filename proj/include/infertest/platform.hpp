#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "infertest/activity.hpp"
#include "infertest/log_model.hpp"
#include "infertest/random.hpp"

namespace infertest {

class PlatformError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The correct enforcement outcome for each (c, r, d). Lookups of unknown
/// keys yield no rule; the enforcement engine then executes nothing.
class RuleTable {
 public:
  void set(RuleKey key, ActionList actions);
  const ActionList* find(const RuleKey& key) const;
  std::size_t size() const noexcept { return rules_.size(); }
  bool has_content_type(std::string_view c) const;
  const std::map<RuleKey, ActionList>& rules() const noexcept { return rules_; }

  /// JSON array of {content_type, report_tags, decision, actions}.
  static RuleTable from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  static RuleTable load(const std::filesystem::path& path);

 private:
  std::map<RuleKey, ActionList> rules_;
  std::set<std::string, std::less<>> content_types_;
};

enum class DeviationMode { drop_action, substitute_action };

/// Replace or drop one action (or add a spurious one when the list is
/// empty). The result always differs from the input as a multiset.
ActionList deviate_actions(const ActionList& actions, DeviationMode mode, Rng& rng);

/// Two-component mixture of per-rule flake probabilities. Each rule's draw is
/// a pure function of (seed, rule key).
struct FlakeMixture {
  double reliable_fraction = 0.2;
  double reliable_low = 0.0;
  double reliable_high = 0.02;
  double flaky_low = 0.3;
  double flaky_high = 0.9;
  std::uint64_t seed = 0;
};

class NoiseModel {
 public:
  NoiseModel() = default;
  explicit NoiseModel(double default_flake, DeviationMode mode = DeviationMode::drop_action)
      : default_flake_(default_flake), mode_(mode) {}

  void set_flake(RuleKey key, double p);
  void set_mixture(FlakeMixture m) { mixture_ = m; }
  void set_mode(DeviationMode m) { mode_ = m; }

  double flake_probability(const RuleKey& key) const;
  DeviationMode mode() const noexcept { return mode_; }

 private:
  double default_flake_ = 0.0;
  DeviationMode mode_ = DeviationMode::drop_action;
  std::map<RuleKey, double> overrides_;
  std::optional<FlakeMixture> mixture_;
};

enum class FaultKind {
  mutate_actions,        // enforcement executes `mutated_actions`
  suppress_enforcement,  // enforcement never happens
  drop_review_job,       // reports for (c, r) never create a review job
};

struct Fault {
  Datestamp activation;
  RuleKey target;
  FaultKind kind = FaultKind::mutate_actions;
  ActionList mutated_actions;

  bool active_on(Datestamp day) const noexcept { return day >= activation; }
};

class FaultSchedule {
 public:
  void add(Fault f);
  bool empty() const noexcept { return faults_.empty(); }
  const std::vector<Fault>& faults() const noexcept { return faults_; }

  /// The action-affecting fault in force for `key` on `day`, if any. The
  /// latest activation wins; among equal activations, the last added.
  const Fault* enforcement_fault(const RuleKey& key, Datestamp day) const;
  bool drops_review_job(std::string_view content_type, const TagList& tags, Datestamp day) const;

  /// JSON array of {day, content_type, report_tags, decision,
  /// mutated_actions (array, or null for suppression), kind (optional)}.
  static FaultSchedule from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  static FaultSchedule load(const std::filesystem::path& path);

 private:
  std::vector<Fault> faults_;
};

/// Rule outcome after faults for `day`; nullopt when enforcement is
/// suppressed.
std::optional<ActionList> effective_actions(const RuleTable& rules, const FaultSchedule& faults,
                                            const RuleKey& key, Datestamp day);

struct PlatformOptions {
  std::uint32_t review_latency_steps = 2;
  std::uint32_t enforcement_latency_steps = 1;
};

/// One isolated instance of the simulated content platform. Time advances in
/// discrete steps; review jobs and enforcement appear after their latencies.
class Platform {
 public:
  Platform(const RuleTable& rules, const NoiseModel& noise, const FaultSchedule& faults,
           Datestamp day, std::uint64_t seed, PlatformOptions options = {});

  ContentId post_content(std::string_view content_type);
  ReportId report_content(ContentId content, const TagList& tags);
  /// Closes the job and schedules enforcement. Returns the actions that will
  /// execute, or nullopt when enforcement is suppressed.
  std::optional<ActionList> respond_review(JobId job, std::string_view decision);

  void step();
  std::uint64_t now() const noexcept { return now_; }

  std::optional<JobId> review_job(ReportId report) const;
  std::optional<ActionList> executed_actions(ContentId content) const;
  /// Jobs queued or open (not yet answered).
  std::size_t queued_jobs() const noexcept;
  bool job_open(JobId job) const;

 private:
  struct ContentRecord {
    std::string type;
    std::optional<ActionList> executed;
  };
  struct ReportRecord {
    ContentId content;
    TagList tags;
    std::optional<JobId> job;
  };
  struct JobRecord {
    ReportId report;
    bool open = true;
  };
  struct Event {
    std::uint64_t due;
    std::uint64_t seq;
    enum class Kind { create_job, enforce } kind;
    std::uint64_t target;  // report id or content id
    ActionList actions;
  };

  void fire(Event& e);

  const RuleTable* rules_;
  const NoiseModel* noise_;
  const FaultSchedule* faults_;
  Datestamp day_;
  Rng rng_;
  PlatformOptions options_;
  std::uint64_t now_ = 0;
  std::uint64_t seq_ = 0;
  std::vector<ContentRecord> contents_;
  std::vector<ReportRecord> reports_;
  std::vector<JobRecord> jobs_;
  std::vector<Event> pending_;
};

/// Everything needed to stand up fresh platform instances.
struct SimulationEnvironment {
  RuleTable rules;
  NoiseModel noise;
  FaultSchedule faults;
  PlatformOptions platform;
  std::uint32_t horizon_steps = 100;

  Platform make_platform(Datestamp day, std::uint64_t seed) const {
    return Platform(rules, noise, faults, day, seed, platform);
  }
};

/// Runs the activity on a fresh platform for `day`. Observations not
/// produced within the step horizon are recorded as absent.
ExecutionTrace execute_activity(const SimulationEnvironment& env, const TestActivity& activity,
                                Datestamp day, std::uint64_t seed);

}  // namespace infertest
