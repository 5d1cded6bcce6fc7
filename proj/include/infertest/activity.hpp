#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>

#include "infertest/log_model.hpp"

namespace infertest {

// Steps of the user-report flow. Post, Report and Respond are stimuli issued
// by bots; ObserveReviewJob and ObserveActions are observations of the
// system under test.
struct Post {
  std::string content_type;
  bool operator==(const Post&) const = default;
};
struct Report {
  TagList report_tags;
  bool operator==(const Report&) const = default;
};
struct ObserveReviewJob {
  bool operator==(const ObserveReviewJob&) const = default;
};
struct Respond {
  std::string decision;
  bool operator==(const Respond&) const = default;
};
struct ObserveActions {
  bool operator==(const ObserveActions&) const = default;
};

using Step = std::variant<Post, Report, ObserveReviewJob, Respond, ObserveActions>;

constexpr bool is_stimulus(const Step& s) {
  return std::holds_alternative<Post>(s) || std::holds_alternative<Report>(s) ||
         std::holds_alternative<Respond>(s);
}

/// The fixed five-step activity: post, report, observe job, respond, observe
/// actions. Well-formed by construction.
class TestActivity {
 public:
  TestActivity(std::string content_type, TagList report_tags, std::string decision)
      : steps_{Post{std::move(content_type)}, Report{std::move(report_tags)}, ObserveReviewJob{},
               Respond{std::move(decision)}, ObserveActions{}} {}

  const std::array<Step, 5>& steps() const noexcept { return steps_; }
  const std::string& content_type() const { return std::get<Post>(steps_[0]).content_type; }
  const TagList& report_tags() const { return std::get<Report>(steps_[1]).report_tags; }
  const std::string& decision() const { return std::get<Respond>(steps_[3]).decision; }

  bool operator==(const TestActivity&) const = default;

 private:
  std::array<Step, 5> steps_;
};

enum class ContentId : std::uint64_t {};
enum class ReportId : std::uint64_t {};
enum class JobId : std::uint64_t {};

/// What one execution of an activity produced. Stimuli are recorded as
/// issued; the two observation slots are empty when nothing was observed
/// within the step horizon.
struct ExecutionTrace {
  std::optional<ContentId> content;
  std::string content_type;
  std::optional<ReportId> report;
  TagList report_tags;
  std::optional<JobId> review_job;       // observation: review job created
  std::optional<std::string> decision;   // stimulus: only issued once a job exists
  std::optional<ActionList> actions;     // observation: executed actions
  std::uint32_t steps = 0;

  bool operator==(const ExecutionTrace&) const = default;

  /// One-line description for suite reports.
  std::string summary() const;
};

}  // namespace infertest
