#include "infertest/generator.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <random>
#include <string_view>

namespace infertest {

namespace {

constexpr std::array<std::string_view, 12> kContentTypes = {
    "Photo", "Video", "StatusUpdate", "Comment", "LiveVideo", "Story",
    "Reel",  "Link",  "Event",        "GroupPost", "Marketplace", "Album"};

struct ViolationSeed {
  std::string_view label;
  std::vector<std::string_view> tag_sets;  // one tag per set
};

const std::vector<ViolationSeed>& violation_seeds() {
  static const std::vector<ViolationSeed> seeds = {
      {"Spam", {"spam", "fake engagement"}},
      {"Bullying", {"bullying"}},
      {"Pornography", {"nudity", "nudity sexual activity"}},
      {"HateSpeech", {"hate speech"}},
      {"Violence", {"violence"}},
      {"UnauthorizedSales", {"unauthorized sales"}},
      {"Fraud", {"scam"}},
      {"Impersonation", {"fake account"}},
      {"SelfInjury", {"self injury"}},
      {"Terrorism", {"terrorism"}},
      {"Misinformation", {"false information"}},
      {"IntellectualProperty", {"copyright"}},
      {"Harassment", {"harassment"}},
      {"DrugSales", {"drug sales"}},
      {"FirearmSales", {"firearm sales"}},
      {"ChildSafety", {"child safety"}},
  };
  return seeds;
}

struct DecisionSeed {
  std::string_view decision;
  std::vector<std::string_view> actions;
};

constexpr std::size_t kDecisionSeeds = 6;
const std::array<DecisionSeed, kDecisionSeeds>& decision_seeds() {
  static const std::array<DecisionSeed, kDecisionSeeds> seeds = {{
      {"delete", {"Delete"}},
      {"ignore", {}},
      {"delete and checkpoint", {"Delete", "Checkpoint"}},
      {"warn", {"Warn"}},
      {"restrict", {"Restrict"}},
      {"disable account", {"Disable"}},
  }};
  return seeds;
}

std::string numbered(const char* prefix, std::size_t i) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s%02zu", prefix, i);
  return buf;
}

void require(bool ok, const char* field, const char* what) {
  if (!ok) throw ValidationError(field, what);
}

}  // namespace

void GeneratorConfig::validate() const {
  require(!content_types.empty(), "generator.content_types", "must not be empty");
  require(!report_tag_sets.empty(), "generator.report_tag_sets", "must not be empty");
  require(!decisions.empty(), "generator.decisions", "must not be empty");
  require(content_exponent >= 0.0 && std::isfinite(content_exponent), "generator.content_exponent",
          "must be >= 0");
  require(tag_exponent >= 0.0 && std::isfinite(tag_exponent), "generator.tag_exponent",
          "must be >= 0");
  require(decision_exponent >= 0.0 && std::isfinite(decision_exponent),
          "generator.decision_exponent", "must be >= 0");
  require(anomaly_fraction >= 0.0 && anomaly_fraction <= 1.0, "generator.anomaly_fraction",
          "must be in [0, 1]");
  for (const auto& tags : report_tag_sets)
    require(!tags.empty(), "generator.report_tag_sets", "tag sets must not be empty");
}

std::vector<double> rank_frequency_weights(std::size_t n, double exponent) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = 1.0 / std::pow(static_cast<double>(i + 1), exponent);
  return w;
}

std::vector<Datapoint> generate_production_logs(const GeneratorConfig& cfg, const RuleTable& rules,
                                                Datestamp t, const FaultSchedule& faults,
                                                std::optional<Datestamp> effective_day) {
  std::vector<Datapoint> out;
  if (cfg.datapoints_per_day == 0) return out;
  cfg.validate();

  Rng rng(derive_seed(cfg.seed, {t.value}));
  auto make = [](std::size_t n, double e) {
    const auto w = rank_frequency_weights(n, e);
    return std::discrete_distribution<std::size_t>(w.begin(), w.end());
  };
  auto content = make(cfg.content_types.size(), cfg.content_exponent);
  auto tags = make(cfg.report_tag_sets.size(), cfg.tag_exponent);
  auto decision = make(cfg.decisions.size(), cfg.decision_exponent);
  std::bernoulli_distribution anomaly(cfg.anomaly_fraction);
  const Datestamp rule_day = effective_day.value_or(t);

  out.reserve(cfg.datapoints_per_day);
  for (std::size_t i = 0; i < cfg.datapoints_per_day; ++i) {
    // Braced initialization fixes the draw order: content, tags, decision.
    Datapoint dp = canonicalize(RawDatapoint{t.value, cfg.content_types[content(rng)],
                                             cfg.report_tag_sets[tags(rng)],
                                             cfg.decisions[decision(rng)], std::vector<std::string>{}});
    dp.actions = effective_actions(rules, faults, RuleKey::of(dp), rule_day).value_or(ActionList{});
    if (anomaly(rng)) dp.actions = deviate_actions(dp.actions, DeviationMode::substitute_action, rng);
    out.push_back(std::move(dp));
  }
  return out;
}

ActionList default_actions_for(const std::string& decision) {
  for (const auto& seed : decision_seeds())
    if (seed.decision == decision)
      return canonical_actions(std::vector<std::string>(seed.actions.begin(), seed.actions.end()));
  // "decision NN" -> ["ActionNN"]
  if (decision.rfind("decision ", 0) == 0) return {"Action" + decision.substr(9)};
  return {};
}

Catalog synthesize_catalog(const CatalogSpec& spec) {
  Catalog cat;
  for (std::size_t i = 0; i < spec.content_types; ++i)
    cat.content_types.push_back(i < kContentTypes.size() ? std::string(kContentTypes[i])
                                                         : numbered("ContentType", i));

  const auto& seeds = violation_seeds();
  for (std::size_t v = 0; v < spec.violation_types; ++v) {
    if (v < seeds.size()) {
      for (auto tag : seeds[v].tag_sets) {
        TagList tl{std::string(tag)};
        cat.report_tag_sets.push_back(tl);
        cat.violations.add(tl, std::string(seeds[v].label));
      }
    } else {
      TagList tl{numbered("violation ", v)};
      cat.report_tag_sets.push_back(tl);
      cat.violations.add(tl, numbered("Violation", v));
    }
  }

  for (std::size_t d = 0; d < spec.decisions; ++d)
    cat.decisions.push_back(d < kDecisionSeeds ? std::string(decision_seeds()[d].decision)
                                               : numbered("decision ", d));

  for (const auto& c : cat.content_types)
    for (const auto& r : cat.report_tag_sets)
      for (const auto& d : cat.decisions) cat.rules.set(RuleKey{c, r, d}, default_actions_for(d));
  return cat;
}

}  // namespace infertest
