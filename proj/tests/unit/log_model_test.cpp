#include <algorithm>
#include <random>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "infertest/log_model.hpp"
#include "support/oracles.hpp"

namespace infertest {
namespace {

RawDatapoint raw(std::int64_t day, std::string c, std::vector<std::string> r, std::string d,
                 std::vector<std::string> a) {
  return {day, std::move(c), std::move(r), std::move(d), std::move(a)};
}

TEST(Canonicalize, LowercasesAndDedupsTags) {
  const Datapoint dp = canonicalize(raw(3, "Photo", {"Spam", "spam"}, "delete", {"Delete"}));
  EXPECT_EQ(dp, (Datapoint{Datestamp{3}, "Photo", {"spam"}, "delete", {"Delete"}}));
}

TEST(Canonicalize, LiveVideoExampleUnchanged) {
  const Datapoint dp = canonicalize(raw(1, "LiveVideo", {"unauthorized sales"}, "delete", {"Delete"}));
  EXPECT_EQ(dp.content_type, "LiveVideo");
  EXPECT_EQ(dp.report_tags, TagList{"unauthorized sales"});
  EXPECT_EQ(dp.decision, "delete");
  EXPECT_EQ(dp.actions, ActionList{"Delete"});
}

TEST(Canonicalize, ActionsStayAMultiset) {
  const Datapoint dp = canonicalize(raw(0, "Photo", {"b", "a"}, "x", {"Warn", "Delete", "Warn"}));
  EXPECT_EQ(dp.report_tags, (TagList{"a", "b"}));
  EXPECT_EQ(dp.actions, (ActionList{"Delete", "Warn", "Warn"}));
}

TEST(Canonicalize, EmptyActionsAllowed) {
  EXPECT_TRUE(canonicalize(raw(0, "Photo", {"spam"}, "ignore", {})).actions.empty());
}

TEST(Canonicalize, RejectsMissingOrEmptyFieldsByName) {
  auto field_of = [](const RawDatapoint& r) {
    try {
      canonicalize(r);
    } catch (const ValidationError& e) {
      return e.field();
    }
    return std::string("<accepted>");
  };
  RawDatapoint ok = raw(0, "Photo", {"spam"}, "delete", {"Delete"});

  auto r = ok;
  r.day.reset();
  EXPECT_EQ(field_of(r), "day");
  r = ok;
  r.day = -1;
  EXPECT_EQ(field_of(r), "day");
  r = ok;
  r.content_type = "";
  EXPECT_EQ(field_of(r), "content_type");
  r = ok;
  r.report_tags = std::vector<std::string>{};
  EXPECT_EQ(field_of(r), "report_tags");
  r = ok;
  r.decision.reset();
  EXPECT_EQ(field_of(r), "decision");
  r = ok;
  r.actions.reset();
  EXPECT_EQ(field_of(r), "actions");
  EXPECT_EQ(field_of(ok), "<accepted>");
}

TEST(Canonicalize, IdempotentAndOrderInsensitive) {
  const std::vector<std::string> pool{"Spam", "spam", "Nudity", "violence", "HATE speech", "b", "A"};
  const std::vector<std::string> actions{"Delete", "Warn", "Checkpoint", "Warn"};
  testing::for_each_seed(200, 1000, [&](std::uint64_t, std::mt19937_64& rng) {
    std::vector<std::string> tags(pool.begin(), pool.begin() + 1 + rng() % (pool.size() - 1));
    std::vector<std::string> acts(actions.begin(), actions.begin() + rng() % (actions.size() + 1));
    const Datapoint x = canonicalize(raw(rng() % 50, "Photo", tags, "delete", acts));
    EXPECT_EQ(canonicalize(x), x);

    std::shuffle(tags.begin(), tags.end(), rng);
    std::shuffle(acts.begin(), acts.end(), rng);
    const Datapoint y = canonicalize(raw(x.day.value, "Photo", tags, "delete", acts));
    EXPECT_EQ(x, y);
    EXPECT_TRUE(std::is_sorted(y.report_tags.begin(), y.report_tags.end()));
    EXPECT_EQ(std::adjacent_find(y.report_tags.begin(), y.report_tags.end()), y.report_tags.end());
  });
}

TEST(TestKey, IgnoresDay) {
  const Datapoint a = canonicalize(raw(1, "Photo", {"spam"}, "delete", {"Delete"}));
  const Datapoint b = canonicalize(raw(9, "Photo", {"SPAM"}, "delete", {"Delete"}));
  EXPECT_EQ(TestKey::of(a), TestKey::of(b));
  EXPECT_EQ(TestKey::of(a).hex_id(), TestKey::of(b).hex_id());
}

TEST(TestKey, HashSeparatesFieldBoundaries) {
  const TestKey a{"ab", {"c"}, "d", {}};
  const TestKey b{"a", {"bc"}, "d", {}};
  EXPECT_NE(a.stable_hash(), b.stable_hash());
  EXPECT_EQ(a.hex_id().size(), 16u);
}

TEST(TestKey, HashIsStableAcrossBuilds) {
  // Emitted file names depend on this value.
  const TestKey k{"LiveVideo", {"unauthorized sales"}, "delete", {"Delete"}};
  EXPECT_EQ(k.hex_id(), "e1e0a58c96648ba7");
}

ViolationMap sample_map() {
  ViolationMap v;
  v.add({"nudity"}, "Pornography");
  v.add({"nudity sexual activity"}, "Pornography");
  v.add({"unauthorized sales"}, "UnauthorizedSales");
  return v;
}

TEST(ViolationMap, MapsTagsToTypes) {
  const ViolationMap v = sample_map();
  EXPECT_EQ(v({"nudity"}), "Pornography");
  EXPECT_EQ(violation_type({"nudity sexual activity"}, v), "Pornography");
  EXPECT_EQ(v({"zzz-unknown"}), "UNMAPPED");
}

TEST(ViolationMap, JsonRoundTripKeepsDefault) {
  const auto j = nlohmann::json::parse(R"({"a|b": "X", "nudity": "Pornography", "__default__": "Other"})");
  const ViolationMap v = ViolationMap::from_json(j);
  EXPECT_EQ(v({"a", "b"}), "X");
  EXPECT_EQ(v({"nudity"}), "Pornography");
  EXPECT_EQ(v({"q"}), "Other");
  EXPECT_EQ(ViolationMap::from_json(v.to_json())({"q"}), "Other");
}

TEST(ViolationMap, RejectsNonStringLabels) {
  EXPECT_THROW(ViolationMap::from_json(nlohmann::json::parse(R"({"a": 3})")), ValidationError);
}

WWLogEntry entry(const char* c, std::uint32_t day, bool passed) {
  return {TestKey{c, {"spam"}, "delete", {"Delete"}}, Datestamp{day}, passed};
}

TEST(WWLogStore, EmptyStoreHasEmptySlices) {
  WWLogStore s;
  EXPECT_TRUE(s.day_slice(Datestamp{0}).empty());
  EXPECT_TRUE(day_slice(s, Datestamp{7}).empty());
}

TEST(WWLogStore, SliceReturnsExactlyThatDay) {
  WWLogStore s;
  s.append(entry("A", 1, true));
  s.append(entry("B", 1, false));
  s.append(entry("C", 2, true));
  const auto slice = s.day_slice(Datestamp{1});
  ASSERT_EQ(slice.size(), 2u);
  EXPECT_EQ(slice[0].key.content_type, "A");
  EXPECT_EQ(slice[1].key.content_type, "B");
}

TEST(WWLogStore, SlicesPartitionTheStore) {
  testing::for_each_seed(50, 7, [](std::uint64_t, std::mt19937_64& rng) {
    WWLogStore s;
    const std::size_t n = rng() % 60;
    for (std::size_t i = 0; i < n; ++i)
      s.append(entry(rng() % 2 ? "A" : "B", static_cast<std::uint32_t>(rng() % 6), rng() % 2));
    std::size_t total = 0;
    for (auto d : s.days()) {
      for (const auto& e : s.day_slice(d)) EXPECT_EQ(e.day, d);
      total += s.day_slice(d).size();
    }
    EXPECT_EQ(total, s.size());
    RunCounts sum;
    for (const auto& [k, c] : s.totals()) {
      sum.runs += c.runs;
      sum.passes += c.passes;
    }
    EXPECT_EQ(sum.runs, n);
  });
}

TEST(WWLogStore, AppendLeavesEarlierEntriesUntouched) {
  WWLogStore s;
  s.append(entry("A", 1, true));
  const WWLogEntry before = s.day_slice(Datestamp{1})[0];
  for (int i = 0; i < 100; ++i) s.append(entry("B", 1, false));
  EXPECT_EQ(s.day_slice(Datestamp{1})[0], before);
}

TEST(WWLogStore, JsonlRoundTrip) {
  WWLogStore s;
  s.append(entry("A", 1, true));
  s.append(entry("B", 3, false));
  std::stringstream buf;
  s.write_jsonl(buf);
  const WWLogStore t = WWLogStore::read_jsonl(buf);
  EXPECT_EQ(t.size(), 2u);
  EXPECT_EQ(t.totals(entry("A", 0, true).key), (RunCounts{1, 1}));
  EXPECT_EQ(t.day_slice(Datestamp{3})[0].passed, false);
}

TEST(ProductionLogStore, ReadsJsonlAndCanonicalizes) {
  std::stringstream in(
      R"({"day": 2, "content_type": "Photo", "report_tags": ["Spam"], "decision": "delete", "actions": ["Delete"]})"
      "\n\n"
      R"({"day": 0, "content_type": "Video", "report_tags": ["b", "a"], "decision": "ignore", "actions": []})"
      "\n");
  const ProductionLogStore s = ProductionLogStore::read_jsonl(in);
  EXPECT_EQ(s.size(), 2u);
  ASSERT_EQ(s.day(Datestamp{2}).size(), 1u);
  EXPECT_EQ(s.day(Datestamp{2})[0].report_tags, TagList{"spam"});
  EXPECT_EQ(s.day(Datestamp{0})[0].report_tags, (TagList{"a", "b"}));
  EXPECT_TRUE(s.day(Datestamp{1}).empty());
}

TEST(ProductionLogStore, BadLineNamesLineAndField) {
  std::stringstream in(
      R"({"day": 2, "content_type": "Photo", "report_tags": ["spam"], "decision": "delete", "actions": ["Delete"]})"
      "\n"
      R"({"day": 2, "content_type": "", "report_tags": ["spam"], "decision": "delete", "actions": []})"
      "\n");
  try {
    ProductionLogStore::read_jsonl(in);
    FAIL() << "accepted an empty content type";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("content_type"), std::string::npos) << e.what();
  }
}

TEST(ProductionLogStore, WriteReadRoundTrip) {
  ProductionLogStore s;
  s.append(canonicalize(raw(0, "Photo", {"spam"}, "delete", {"Delete"})));
  s.append(canonicalize(raw(4, "Video", {"nudity"}, "ignore", {})));
  std::stringstream buf;
  s.write_jsonl(buf);
  const ProductionLogStore t = ProductionLogStore::read_jsonl(buf);
  EXPECT_EQ(t.size(), 2u);
  EXPECT_EQ(t.day(Datestamp{4})[0], s.day(Datestamp{4})[0]);
}

TEST(Datestamp, PreviousIsUndefinedOnDayZero) {
  EXPECT_FALSE(Datestamp{0}.previous());
  EXPECT_EQ(Datestamp{5}.previous(), Datestamp{4});
  EXPECT_LT(Datestamp{1}, Datestamp{2});
}

}  // namespace
}  // namespace infertest
