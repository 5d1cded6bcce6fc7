#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "infertest/log_model.hpp"
#include "infertest/platform.hpp"

namespace infertest {

/// Synthetic production traffic. Each alphabet is listed in rank order and
/// sampled with probability proportional to 1 / rank^exponent.
struct GeneratorConfig {
  std::vector<std::string> content_types;
  std::vector<TagList> report_tag_sets;
  std::vector<std::string> decisions;
  double content_exponent = 1.0;
  double tag_exponent = 1.0;
  double decision_exponent = 1.0;
  std::size_t datapoints_per_day = 0;
  /// Fraction of datapoints whose logged actions deviate from the rules.
  double anomaly_fraction = 0.0;
  std::uint64_t seed = 0;

  /// Throws ValidationError naming the first bad field.
  void validate() const;
};

/// Rank-frequency weights 1 / rank^exponent, rank starting at 1.
std::vector<double> rank_frequency_weights(std::size_t n, double exponent);

/// Day-t production datapoints. Actions come from `rules` after `faults`
/// in force on `effective_day`; suppressed enforcement logs an empty list.
std::vector<Datapoint> generate_production_logs(const GeneratorConfig& cfg, const RuleTable& rules,
                                                Datestamp t, const FaultSchedule& faults = {},
                                                std::optional<Datestamp> effective_day = {});

/// Sizes for a synthesized universe of content types, violation types and
/// decisions.
struct CatalogSpec {
  std::size_t content_types = 8;
  std::size_t violation_types = 40;
  std::size_t decisions = 4;
};

struct Catalog {
  std::vector<std::string> content_types;
  std::vector<TagList> report_tag_sets;
  std::vector<std::string> decisions;
  ViolationMap violations;
  RuleTable rules;
};

/// Deterministic catalog with a rule for every (c, r, d) combination.
Catalog synthesize_catalog(const CatalogSpec& spec);

/// Actions the synthesized rules attach to a decision string.
ActionList default_actions_for(const std::string& decision);

}  // namespace infertest
