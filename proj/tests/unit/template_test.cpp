#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "infertest/test_template.hpp"

namespace infertest {
namespace {

Datapoint live_video() {
  return canonicalize(RawDatapoint{4, "LiveVideo", {{"unauthorized sales"}}, "delete", {{"Delete"}}});
}

TEST(Instantiate, LiveVideoBecomesFiveSteps) {
  const InferredTest t = instantiate(live_video());
  const auto& s = t.activity.steps();
  EXPECT_EQ(std::get<Post>(s[0]).content_type, "LiveVideo");
  EXPECT_EQ(std::get<Report>(s[1]).report_tags, TagList{"unauthorized sales"});
  EXPECT_TRUE(std::holds_alternative<ObserveReviewJob>(s[2]));
  EXPECT_EQ(std::get<Respond>(s[3]).decision, "delete");
  EXPECT_TRUE(std::holds_alternative<ObserveActions>(s[4]));
  EXPECT_EQ(t.oracle.expected, ActionList{"Delete"});
  EXPECT_EQ(t.key, TestKey::of(live_video()));
  EXPECT_EQ(t.source, live_video());
}

TEST(Instantiate, StimuliAndObservationsAlternateAsExpected) {
  const auto& s = instantiate(live_video()).activity.steps();
  const bool expected[] = {true, true, false, true, false};
  for (std::size_t i = 0; i < s.size(); ++i) EXPECT_EQ(is_stimulus(s[i]), expected[i]) << i;
}

TEST(Instantiate, DayDoesNotChangeTheTest) {
  Datapoint later = live_video();
  later.day = Datestamp{40};
  EXPECT_EQ(instantiate(later).activity, instantiate(live_video()).activity);
  EXPECT_EQ(instantiate(later).oracle, instantiate(live_video()).oracle);
}

ExecutionTrace trace(bool job, std::optional<ActionList> actions) {
  ExecutionTrace t;
  t.content = ContentId{0};
  t.content_type = "LiveVideo";
  t.report = ReportId{0};
  t.report_tags = {"unauthorized sales"};
  if (job) {
    t.review_job = JobId{0};
    t.decision = "delete";
  }
  t.actions = std::move(actions);
  return t;
}

// Every combination of job present, actions present and actions matching.
TEST(DefiniteOracle, TruthTable) {
  const DefiniteOracle o{{"Checkpoint", "Delete"}};
  struct Case {
    bool job;
    std::optional<ActionList> actions;
    Verdict want;
  };
  const Case cases[] = {
      {false, std::nullopt, Verdict::fail},
      {false, ActionList{"Checkpoint", "Delete"}, Verdict::fail},
      {false, ActionList{"Warn"}, Verdict::fail},
      {true, std::nullopt, Verdict::fail},
      {true, ActionList{"Checkpoint", "Delete"}, Verdict::pass},
      {true, ActionList{"Delete", "Checkpoint"}, Verdict::pass},
      {true, ActionList{"Delete"}, Verdict::fail},
      {true, ActionList{"Checkpoint", "Delete", "Delete"}, Verdict::fail},
  };
  for (const auto& c : cases) EXPECT_EQ(o.evaluate(trace(c.job, c.actions)), c.want);
  EXPECT_EQ(evaluate(o, trace(true, ActionList{"Checkpoint", "Delete"})), Verdict::pass);
}

TEST(DefiniteOracle, EmptyExpectationNeedsAnObservedEmptyList) {
  const DefiniteOracle o{{}};
  EXPECT_EQ(o.evaluate(trace(true, ActionList{})), Verdict::pass);
  EXPECT_EQ(o.evaluate(trace(true, std::nullopt)), Verdict::fail);
  EXPECT_EQ(o.evaluate(trace(true, ActionList{"Delete"})), Verdict::fail);
}

TEST(Emit, RecordRoundTrips) {
  const InferredTest t = instantiate(live_video());
  // The source day travels as first_seen_day.
  const EmittedTestStats stats{57, 0.98, Datestamp{4}};
  const LoadedTest back = load_test_record(emit_test_record(t, stats));
  EXPECT_EQ(back.test, t);
  EXPECT_EQ(back.stats, stats);
}

TEST(Emit, FileRoundTripsAndIsNamedByKey) {
  const auto dir = std::filesystem::temp_directory_path() / "infertest_template_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const InferredTest t = instantiate(live_video());
  const EmittedTestStats stats{51, 1.0, Datestamp{4}};
  const auto path = write_test_file(dir, t, stats);
  EXPECT_EQ(path.filename(), t.key.hex_id() + ".json");
  const LoadedTest back = load_test_file(path);
  EXPECT_EQ(back.test, t);
  EXPECT_EQ(back.stats, stats);

  std::ifstream in(path);
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  EXPECT_EQ(text, emit_test_file(t, stats));
  EXPECT_EQ(text.back(), '\n');
  std::filesystem::remove_all(dir);
}

TEST(Emit, RejectsWrongSchemaVersion) {
  auto j = emit_test_record(instantiate(live_video()), {});
  j["schema_version"] = kTestSchemaVersion + 1;
  EXPECT_ANY_THROW(load_test_record(j));
}

}  // namespace
}  // namespace infertest
