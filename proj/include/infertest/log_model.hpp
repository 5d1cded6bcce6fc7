#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace infertest {

/// Index of a simulated day.
struct Datestamp {
  std::uint32_t value = 0;

  constexpr auto operator<=>(const Datestamp&) const = default;

  constexpr std::optional<Datestamp> previous() const {
    if (value == 0) return std::nullopt;
    return Datestamp{value - 1};
  }
  constexpr Datestamp next() const { return Datestamp{value + 1}; }
};

/// Report tags in canonical form: lowercased, sorted, unique.
using TagList = std::vector<std::string>;
/// Enforcement actions as a sorted multiset representative.
using ActionList = std::vector<std::string>;

/// Input rejected during canonicalization or file parsing. `field()` names
/// the offending field.
class ValidationError : public std::runtime_error {
 public:
  ValidationError(std::string field, const std::string& what)
      : std::runtime_error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// One production log record (t, c, r, d, a). Only produced by
/// `canonicalize`, so every instance is canonical.
struct Datapoint {
  Datestamp day;
  std::string content_type;
  TagList report_tags;
  std::string decision;
  ActionList actions;

  bool operator==(const Datapoint&) const = default;
};

/// A datapoint-like record as read from a log, before validation.
struct RawDatapoint {
  std::optional<std::int64_t> day;
  std::optional<std::string> content_type;
  std::optional<std::vector<std::string>> report_tags;
  std::optional<std::string> decision;
  std::optional<std::vector<std::string>> actions;
};

TagList canonical_tags(std::span<const std::string> tags);
ActionList canonical_actions(std::span<const std::string> actions);

Datapoint canonicalize(const RawDatapoint& raw);
Datapoint canonicalize(const Datapoint& dp);

/// "a|b|c" rendering used as the violation-map key and in reports.
std::string join_labels(std::span<const std::string> labels, char sep = '|');

/// Identity of a test across days: (c, r, d, a) with the day dropped.
struct TestKey {
  std::string content_type;
  TagList report_tags;
  std::string decision;
  ActionList actions;

  auto operator<=>(const TestKey&) const = default;

  static TestKey of(const Datapoint& dp);
  std::uint64_t stable_hash() const;
  /// 16 hex digits of `stable_hash`, used for file names.
  std::string hex_id() const;
};

/// The (c, r, d) part of a key: what the enforcement rules are keyed on.
struct RuleKey {
  std::string content_type;
  TagList report_tags;
  std::string decision;

  auto operator<=>(const RuleKey&) const = default;

  static RuleKey of(const Datapoint& dp);
  static RuleKey of(const TestKey& key);
};

/// Maps canonical report-tag lists to violation types. Total: unmapped lists
/// get the default label.
class ViolationMap {
 public:
  static constexpr std::string_view kDefaultLabel = "UNMAPPED";
  static constexpr std::string_view kDefaultKey = "__default__";

  ViolationMap() = default;
  explicit ViolationMap(std::string default_label) : default_label_(std::move(default_label)) {}

  void add(const TagList& tags, std::string label);
  const std::string& operator()(const TagList& tags) const;
  const std::string& default_label() const noexcept { return default_label_; }
  std::size_t size() const noexcept { return by_tags_.size(); }

  /// Object keyed by joined tags plus "__default__".
  static ViolationMap from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  static ViolationMap load(const std::filesystem::path& path);

 private:
  std::map<std::string, std::string, std::less<>> by_tags_;
  std::string default_label_{kDefaultLabel};
};

const std::string& violation_type(const TagList& tags, const ViolationMap& map);

/// One recorded execution of an inferred test.
struct WWLogEntry {
  TestKey key;
  Datestamp day;
  bool passed = false;

  bool operator==(const WWLogEntry&) const = default;
};

/// Append-only production log, partitioned by day. Single writer; readers
/// holding a day span must not overlap an append to that day.
class ProductionLogStore {
 public:
  void append(Datapoint dp);
  void append(std::span<const Datapoint> dps);

  std::span<const Datapoint> day(Datestamp t) const;
  std::vector<Datestamp> days() const;
  std::size_t size() const noexcept { return size_; }

  template <typename F>
  void for_each(F&& f) const {
    for (const auto& [d, dps] : by_day_)
      for (const auto& dp : dps) f(dp);
  }

  /// Line-delimited JSON, one datapoint per line.
  static ProductionLogStore read_jsonl(std::istream& in);
  static ProductionLogStore load(const std::filesystem::path& path);
  void write_jsonl(std::ostream& out) const;

 private:
  std::map<Datestamp, std::vector<Datapoint>> by_day_;
  std::size_t size_ = 0;
};

/// Cumulative per-key counters kept alongside the WW log.
struct RunCounts {
  std::uint64_t runs = 0;
  std::uint64_t passes = 0;
  bool operator==(const RunCounts&) const = default;
};

/// Append-only log of test executions.
class WWLogStore {
 public:
  void append(WWLogEntry entry);

  /// Entries recorded on day t, in append order.
  std::span<const WWLogEntry> day_slice(Datestamp t) const;
  std::vector<Datestamp> days() const;
  std::size_t size() const noexcept { return size_; }

  /// Counts over the whole store.
  RunCounts totals(const TestKey& key) const;
  const std::map<TestKey, RunCounts>& totals() const noexcept { return totals_; }

  template <typename F>
  void for_each(F&& f) const {
    for (const auto& [d, entries] : by_day_)
      for (const auto& e : entries) f(e);
  }

  static WWLogStore read_jsonl(std::istream& in);
  void write_jsonl(std::ostream& out) const;

 private:
  std::map<Datestamp, std::vector<WWLogEntry>> by_day_;
  std::map<TestKey, RunCounts> totals_;
  std::size_t size_ = 0;
};

std::span<const WWLogEntry> day_slice(const WWLogStore& store, Datestamp t);

nlohmann::json to_json(const Datapoint& dp);
Datapoint datapoint_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TestKey& key);
TestKey test_key_from_json(const nlohmann::json& j);

}  // namespace infertest
