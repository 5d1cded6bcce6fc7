#include <cmath>
#include <map>
#include <random>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "infertest/generator.hpp"
#include "infertest/platform.hpp"
#include "support/oracles.hpp"

namespace infertest {
namespace {

RuleTable one_rule() {
  RuleTable rules;
  rules.set(RuleKey{"LiveVideo", {"unauthorized sales"}, "delete"}, {"Delete"});
  rules.set(RuleKey{"Photo", {"spam"}, "ignore"}, {});
  return rules;
}

const TestActivity kLiveVideo{"LiveVideo", {"unauthorized sales"}, "delete"};

SimulationEnvironment env_with(RuleTable rules, FaultSchedule faults = {}, double flake = 0.0) {
  SimulationEnvironment env;
  env.rules = std::move(rules);
  env.faults = std::move(faults);
  env.noise = NoiseModel(flake);
  return env;
}

TEST(Platform, PostRejectsEmptyAndUnknownTypes) {
  const RuleTable rules = one_rule();
  const NoiseModel noise;
  const FaultSchedule faults;
  Platform p(rules, noise, faults, Datestamp{0}, 1);
  EXPECT_THROW(p.post_content(""), PlatformError);
  EXPECT_THROW(p.post_content("Hologram"), PlatformError);
  EXPECT_NO_THROW(p.post_content("Photo"));
}

TEST(Platform, ReportRejectsUnknownContent) {
  const RuleTable rules = one_rule();
  const NoiseModel noise;
  const FaultSchedule faults;
  Platform p(rules, noise, faults, Datestamp{0}, 1);
  EXPECT_THROW(p.report_content(ContentId{5}, {"spam"}), PlatformError);
}

TEST(Platform, RespondRejectsUnknownAndClosedJobs) {
  const RuleTable rules = one_rule();
  const NoiseModel noise;
  const FaultSchedule faults;
  Platform p(rules, noise, faults, Datestamp{0}, 1);
  EXPECT_THROW(p.respond_review(JobId{0}, "delete"), PlatformError);

  const auto c = p.post_content("LiveVideo");
  const auto r = p.report_content(c, {"unauthorized sales"});
  EXPECT_FALSE(p.review_job(r));
  EXPECT_EQ(p.queued_jobs(), 1u);
  p.step();
  p.step();
  ASSERT_TRUE(p.review_job(r));
  const JobId job = *p.review_job(r);
  EXPECT_TRUE(p.job_open(job));
  EXPECT_EQ(p.respond_review(job, "delete"), ActionList{"Delete"});
  EXPECT_FALSE(p.job_open(job));
  EXPECT_THROW(p.respond_review(job, "delete"), PlatformError);
}

TEST(Platform, EnforcementAppearsAfterItsLatency) {
  const RuleTable rules = one_rule();
  const NoiseModel noise;
  const FaultSchedule faults;
  Platform p(rules, noise, faults, Datestamp{0}, 1, PlatformOptions{3, 2});
  const auto c = p.post_content("LiveVideo");
  const auto r = p.report_content(c, {"unauthorized sales"});
  for (int i = 0; i < 2; ++i) p.step();
  EXPECT_FALSE(p.review_job(r));
  p.step();
  ASSERT_TRUE(p.review_job(r));
  p.respond_review(*p.review_job(r), "delete");
  p.step();
  EXPECT_FALSE(p.executed_actions(c));
  p.step();
  EXPECT_EQ(p.executed_actions(c), ActionList{"Delete"});
}

TEST(Execution, ZeroNoiseFollowsTheRule) {
  const auto env = env_with(one_rule());
  const ExecutionTrace t = execute_activity(env, kLiveVideo, Datestamp{0}, 9);
  ASSERT_TRUE(t.review_job);
  EXPECT_EQ(t.decision, "delete");
  EXPECT_EQ(t.actions, ActionList{"Delete"});
  EXPECT_EQ(t.steps, 3u);
}

TEST(Execution, ZeroNoiseIsSeedIndependent) {
  const auto env = env_with(one_rule());
  const ExecutionTrace first = execute_activity(env, kLiveVideo, Datestamp{3}, 0);
  testing::for_each_seed(50, 100, [&](std::uint64_t seed, std::mt19937_64&) {
    EXPECT_EQ(execute_activity(env, kLiveVideo, Datestamp{3}, seed), first);
  });
}

TEST(Execution, SameSeedSameTraceUnderNoise) {
  const auto env = env_with(one_rule(), {}, 0.5);
  testing::for_each_seed(50, 1, [&](std::uint64_t seed, std::mt19937_64&) {
    EXPECT_EQ(execute_activity(env, kLiveVideo, Datestamp{0}, seed),
              execute_activity(env, kLiveVideo, Datestamp{0}, seed));
  });
}

TEST(Execution, FlakeRateMatchesProbability) {
  const auto env = env_with(one_rule(), {}, 0.3);
  int deviated = 0;
  const int n = 4000;
  for (int s = 0; s < n; ++s)
    if (execute_activity(env, kLiveVideo, Datestamp{0}, s).actions != ActionList{"Delete"}) ++deviated;
  const double sd = std::sqrt(0.3 * 0.7 / n);
  EXPECT_NEAR(deviated / double(n), 0.3, 5 * sd);
}

TEST(Execution, MissingRuleExecutesNothing) {
  const auto env = env_with(one_rule());
  const ExecutionTrace t = execute_activity(env, TestActivity{"Photo", {"violence"}, "delete"}, Datestamp{0}, 1);
  ASSERT_TRUE(t.review_job);
  EXPECT_EQ(t.actions, ActionList{});
}

TEST(Execution, UnknownContentTypeStopsAtPost) {
  const auto env = env_with(one_rule());
  const ExecutionTrace t = execute_activity(env, TestActivity{"Hologram", {"spam"}, "delete"}, Datestamp{0}, 1);
  EXPECT_FALSE(t.content);
  EXPECT_FALSE(t.review_job);
  EXPECT_FALSE(t.actions);
}

Fault fault(std::uint32_t day, FaultKind kind, ActionList mutated = {}) {
  return Fault{Datestamp{day}, RuleKey{"LiveVideo", {"unauthorized sales"}, "delete"}, kind, std::move(mutated)};
}

TEST(Faults, MutationAppliesFromActivationDay) {
  FaultSchedule faults;
  faults.add(fault(5, FaultKind::mutate_actions, {"Warn"}));
  const auto env = env_with(one_rule(), faults);
  EXPECT_EQ(execute_activity(env, kLiveVideo, Datestamp{4}, 1).actions, ActionList{"Delete"});
  EXPECT_EQ(execute_activity(env, kLiveVideo, Datestamp{5}, 1).actions, ActionList{"Warn"});
  EXPECT_EQ(execute_activity(env, kLiveVideo, Datestamp{9}, 1).actions, ActionList{"Warn"});
}

TEST(Faults, SuppressionLeavesActionsUnobserved) {
  FaultSchedule faults;
  faults.add(fault(0, FaultKind::suppress_enforcement));
  const auto env = env_with(one_rule(), faults);
  const ExecutionTrace t = execute_activity(env, kLiveVideo, Datestamp{0}, 1);
  EXPECT_TRUE(t.review_job);
  EXPECT_FALSE(t.actions);
  EXPECT_EQ(t.steps, env.horizon_steps);
}

TEST(Faults, DroppedReviewJobIsNeverObserved) {
  FaultSchedule faults;
  faults.add(fault(0, FaultKind::drop_review_job));
  const auto env = env_with(one_rule(), faults);
  const ExecutionTrace t = execute_activity(env, kLiveVideo, Datestamp{0}, 1);
  EXPECT_TRUE(t.report);
  EXPECT_FALSE(t.review_job);
  EXPECT_FALSE(t.decision);
  EXPECT_FALSE(t.actions);
}

TEST(Faults, LatestActivationWins) {
  FaultSchedule faults;
  faults.add(fault(2, FaultKind::mutate_actions, {"Warn"}));
  faults.add(fault(1, FaultKind::mutate_actions, {"Restrict"}));
  const RuleKey key{"LiveVideo", {"unauthorized sales"}, "delete"};
  EXPECT_EQ(faults.enforcement_fault(key, Datestamp{0}), nullptr);
  EXPECT_EQ(faults.enforcement_fault(key, Datestamp{1})->mutated_actions, ActionList{"Restrict"});
  EXPECT_EQ(faults.enforcement_fault(key, Datestamp{3})->mutated_actions, ActionList{"Warn"});
}

TEST(Faults, JsonRoundTrip) {
  const auto j = nlohmann::json::parse(R"([
    {"day": 3, "content_type": "LiveVideo", "report_tags": ["unauthorized sales"], "decision": "delete",
     "mutated_actions": ["Warn"]},
    {"day": 4, "content_type": "Photo", "report_tags": ["spam"], "decision": "ignore", "mutated_actions": null},
    {"day": 5, "content_type": "Photo", "report_tags": ["spam"], "decision": "ignore", "mutated_actions": [],
     "kind": "drop_review_job"}])");
  const FaultSchedule f = FaultSchedule::from_json(j);
  ASSERT_EQ(f.faults().size(), 3u);
  EXPECT_EQ(f.faults()[1].kind, FaultKind::suppress_enforcement);
  EXPECT_EQ(f.faults()[2].kind, FaultKind::drop_review_job);
  EXPECT_EQ(FaultSchedule::from_json(f.to_json()).faults().size(), 3u);
  EXPECT_EQ(FaultSchedule::from_json(f.to_json()).to_json(), f.to_json());
}

TEST(Faults, RejectsUnknownKind) {
  const auto j = nlohmann::json::parse(
      R"([{"day": 1, "content_type": "Photo", "report_tags": ["spam"], "decision": "x", "mutated_actions": [],
           "kind": "explode"}])");
  EXPECT_THROW(FaultSchedule::from_json(j), ValidationError);
}

TEST(Deviation, AlwaysChangesTheMultiset) {
  const std::vector<ActionList> inputs{{}, {"Delete"}, {"Checkpoint", "Delete"}, {"Warn", "Warn"}};
  testing::for_each_seed(200, 5, [&](std::uint64_t, std::mt19937_64& rng) {
    for (const auto& a : inputs)
      for (auto mode : {DeviationMode::drop_action, DeviationMode::substitute_action})
        EXPECT_NE(canonical_actions(deviate_actions(a, mode, rng)), a);
  });
}

TEST(Noise, MixtureDrawIsStablePerRule) {
  NoiseModel a, b;
  a.set_mixture(FlakeMixture{.seed = 11});
  b.set_mixture(FlakeMixture{.seed = 11});
  const RuleKey k{"Photo", {"spam"}, "delete"};
  EXPECT_EQ(a.flake_probability(k), b.flake_probability(k));
  int reliable = 0;
  for (int i = 0; i < 2000; ++i) {
    const double p = a.flake_probability(RuleKey{"Photo", {"tag " + std::to_string(i)}, "delete"});
    const bool low = p >= 0.0 && p <= 0.02;
    EXPECT_TRUE(low || (p >= 0.3 && p <= 0.9)) << p;
    reliable += low;
  }
  EXPECT_NEAR(reliable / 2000.0, 0.2, 5 * std::sqrt(0.2 * 0.8 / 2000));
}

TEST(Noise, OverrideBeatsMixture) {
  NoiseModel n(0.1);
  const RuleKey k{"Photo", {"spam"}, "delete"};
  EXPECT_EQ(n.flake_probability(k), 0.1);
  n.set_mixture(FlakeMixture{});
  n.set_flake(k, 0.75);
  EXPECT_EQ(n.flake_probability(k), 0.75);
}

TEST(Rules, JsonRoundTrip) {
  const RuleTable r = one_rule();
  const RuleTable back = RuleTable::from_json(r.to_json());
  EXPECT_EQ(back.rules(), r.rules());
  EXPECT_TRUE(back.has_content_type("Photo"));
  EXPECT_FALSE(back.has_content_type("Video"));
}

GeneratorConfig small_generator(std::size_t per_day, double exponent) {
  const Catalog cat = synthesize_catalog(CatalogSpec{4, 5, 3});
  GeneratorConfig g;
  g.content_types = cat.content_types;
  g.report_tag_sets = cat.report_tag_sets;
  g.decisions = cat.decisions;
  g.content_exponent = g.tag_exponent = g.decision_exponent = exponent;
  g.datapoints_per_day = per_day;
  g.seed = 3;
  return g;
}

TEST(Generator, ProducesTheRequestedCountOnTheRightDay) {
  const Catalog cat = synthesize_catalog(CatalogSpec{4, 5, 3});
  const auto dps = generate_production_logs(small_generator(123, 1.0), cat.rules, Datestamp{7});
  ASSERT_EQ(dps.size(), 123u);
  for (const auto& dp : dps) {
    EXPECT_EQ(dp.day, Datestamp{7});
    EXPECT_EQ(canonicalize(dp), dp);
  }
}

TEST(Generator, ZeroExponentIsUniform) {
  const Catalog cat = synthesize_catalog(CatalogSpec{4, 5, 3});
  const auto g = small_generator(20000, 0.0);
  std::map<std::string, int> counts;
  for (const auto& dp : generate_production_logs(g, cat.rules, Datestamp{0})) ++counts[dp.content_type];
  ASSERT_EQ(counts.size(), 4u);
  const double p = 0.25, n = 20000, sd = std::sqrt(n * p * (1 - p));
  for (const auto& [c, k] : counts) EXPECT_NEAR(k, n * p, 5 * sd) << c;
}

TEST(Generator, RankFrequencyWeights) {
  const auto w = rank_frequency_weights(3, 1.0);
  ASSERT_EQ(w.size(), 3u);
  EXPECT_DOUBLE_EQ(w[0], 1.0);
  EXPECT_DOUBLE_EQ(w[1], 0.5);
  EXPECT_DOUBLE_EQ(w[2], 1.0 / 3.0);
  for (double x : rank_frequency_weights(5, 0.0)) EXPECT_DOUBLE_EQ(x, 1.0);
}

TEST(Generator, NoAnomaliesMeansActionsFollowRules) {
  const Catalog cat = synthesize_catalog(CatalogSpec{4, 5, 3});
  for (const auto& dp : generate_production_logs(small_generator(500, 1.0), cat.rules, Datestamp{2}))
    EXPECT_EQ(dp.actions, *cat.rules.find(RuleKey::of(dp)));
}

TEST(Generator, FaultsShowUpOnTheEffectiveDay) {
  const Catalog cat = synthesize_catalog(CatalogSpec{1, 1, 1});
  const RuleKey key = cat.rules.rules().begin()->first;
  FaultSchedule faults;
  faults.add(Fault{Datestamp{3}, key, FaultKind::mutate_actions, {"Warn"}});
  GeneratorConfig one = small_generator(40, 1.0);
  one.content_types = cat.content_types;
  one.report_tag_sets = cat.report_tag_sets;
  one.decisions = cat.decisions;
  const auto before = generate_production_logs(one, cat.rules, Datestamp{3}, faults, Datestamp{2});
  const auto after = generate_production_logs(one, cat.rules, Datestamp{4}, faults, Datestamp{3});
  std::size_t hit = 0;
  for (const auto& dp : before) EXPECT_NE(dp.actions, ActionList{"Warn"});
  for (const auto& dp : after) {
    if (RuleKey::of(dp) != key) continue;
    EXPECT_EQ(dp.actions, ActionList{"Warn"});
    ++hit;
  }
  EXPECT_GT(hit, 0u);
}

TEST(Generator, DeterministicPerSeedAndDay) {
  const Catalog cat = synthesize_catalog(CatalogSpec{4, 5, 3});
  const auto g = small_generator(200, 1.0);
  EXPECT_EQ(generate_production_logs(g, cat.rules, Datestamp{1}), generate_production_logs(g, cat.rules, Datestamp{1}));
  EXPECT_NE(generate_production_logs(g, cat.rules, Datestamp{1}), generate_production_logs(g, cat.rules, Datestamp{2}));
}

TEST(Generator, ValidateNamesBadField) {
  auto g = small_generator(10, 1.0);
  g.anomaly_fraction = 1.5;
  try {
    g.validate();
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.field(), "generator.anomaly_fraction");
  }
}

TEST(Catalog, RulesAreTotal) {
  const Catalog cat = synthesize_catalog(CatalogSpec{3, 20, 6});
  EXPECT_EQ(cat.rules.size(), cat.content_types.size() * cat.report_tag_sets.size() * cat.decisions.size());
  EXPECT_EQ(cat.violations({"nudity"}), "Pornography");
  EXPECT_EQ(default_actions_for("delete and checkpoint"), (ActionList{"Checkpoint", "Delete"}));
  EXPECT_EQ(default_actions_for("ignore"), ActionList{});
}

}  // namespace
}  // namespace infertest
