#include "infertest/campaign.hpp"

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <type_traits>
#include <utility>

#include <nlohmann/json.hpp>

#include "infertest/random.hpp"
#include "infertest/test_template.hpp"

namespace infertest {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// --- Config reading --------------------------------------------------------

template <typename T>
constexpr const char* type_name() {
  if constexpr (std::is_same_v<T, bool>) return "a boolean";
  else if constexpr (std::is_unsigned_v<T>) return "a non-negative integer";
  else if constexpr (std::is_floating_point_v<T>) return "a number";
  else return "a string";
}

template <typename T>
bool read_value(const json& v, T& out) {
  if constexpr (std::is_same_v<T, bool>) {
    if (!v.is_boolean()) return false;
    out = v.get<bool>();
  } else if constexpr (std::is_unsigned_v<T>) {
    // Documents built in code hold small integers as signed values.
    if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0)) return false;
    const auto x = v.get<std::uint64_t>();
    if (x > std::numeric_limits<T>::max()) return false;
    out = static_cast<T>(x);
  } else if constexpr (std::is_floating_point_v<T>) {
    if (!v.is_number()) return false;
    out = v.get<double>();
  } else {
    if (!v.is_string()) return false;
    out = v.get<std::string>();
  }
  return true;
}

// A view of one JSON object that records problems instead of throwing.
class Section {
 public:
  Section(const json* j, std::string path, std::vector<std::string>& errors)
      : j_(j), path_(std::move(path)), errors_(&errors) {
    if (j_ && !j_->is_object()) {
      error(path_, "must be an object");
      j_ = nullptr;
    }
  }

  std::string where(std::string_view key) const {
    return path_.empty() ? std::string(key) : path_ + "." + std::string(key);
  }
  void error(const std::string& where, const std::string& what) { errors_->push_back(where + ": " + what); }

  const json* find(std::string_view key) const {
    if (!j_) return nullptr;
    auto it = j_->find(key);
    return it == j_->end() ? nullptr : &*it;
  }

  Section child(std::string_view key) { return Section(find(key), where(key), *errors_); }

  template <typename T>
  void get(std::string_view key, T& out) {
    if (const json* v = find(key); v && !read_value(*v, out))
      error(where(key), std::string("expected ") + type_name<T>());
  }

  template <typename T>
  void get(std::string_view key, std::optional<T>& out) {
    if (const json* v = find(key)) {
      T x{};
      if (read_value(*v, x))
        out = std::move(x);
      else
        error(where(key), std::string("expected ") + type_name<T>());
    }
  }

  template <typename E>
  void get_enum(std::string_view key, E& out, std::initializer_list<std::pair<std::string_view, E>> names) {
    const json* v = find(key);
    if (!v) return;
    std::string allowed;
    for (const auto& [name, value] : names) {
      if (v->is_string() && v->get<std::string>() == name) {
        out = value;
        return;
      }
      allowed += (allowed.empty() ? "" : ", ") + std::string(name);
    }
    error(where(key), "expected one of " + allowed);
  }

  void get_path(std::string_view key, std::optional<fs::path>& out, const fs::path& base) {
    std::optional<std::string> s;
    get(key, s);
    if (s) out = resolve(*s, base);
  }

  void get_strings(std::string_view key, std::vector<std::string>& out) {
    const json* v = find(key);
    if (!v) return;
    if (!v->is_array() || !std::all_of(v->begin(), v->end(), [](const json& x) { return x.is_string(); })) {
      error(where(key), "expected an array of strings");
      return;
    }
    out = v->get<std::vector<std::string>>();
  }

  void reject_unknown(std::initializer_list<std::string_view> known) {
    if (!j_) return;
    for (const auto& [k, _] : j_->items())
      if (std::find(known.begin(), known.end(), k) == known.end()) error(where(k), "unknown key");
  }

  static fs::path resolve(const std::string& s, const fs::path& base) {
    fs::path p(s);
    return p.is_relative() && !base.empty() ? base / p : p;
  }

 private:
  const json* j_;
  std::string path_;
  std::vector<std::string>* errors_;
};

void check_unit(std::vector<std::string>& errors, const std::string& where, double x) {
  if (!(x >= 0.0 && x <= 1.0)) errors.push_back(where + ": must be in [0, 1]");
}

void check_invariants(const CampaignConfig& c, ConfigCheck& out) {
  auto& errors = out.errors;
  auto& warnings = out.warnings;
  const auto& p = c.pipeline;

  const auto& w = p.weights;
  if (!(w.alpha >= 0.0 && w.beta >= 0.0 && w.gamma >= 0.0))
    errors.push_back("pipeline: alpha, beta and gamma must be non-negative");
  if (std::abs(w.alpha + w.beta + w.gamma - 1.0) > 1e-9) {
    std::ostringstream s;
    s << "pipeline: weight sum rule violated, alpha + beta + gamma must equal 1 (got "
      << w.alpha + w.beta + w.gamma << ")";
    errors.push_back(s.str());
  }
  check_unit(errors, "pipeline.p_s", p.p_s);
  check_unit(errors, "pipeline.p_d", p.p_d);
  if (p.n_s < 1) errors.push_back("pipeline.n_s: must be >= 1");
  if (p.n_d < 1) errors.push_back("pipeline.n_d: must be >= 1");
  if (p.n_d < p.n_s) warnings.push_back("pipeline: n_d < n_s, deployment bar is below the staging bar");
  if (p.p_d < p.p_s) warnings.push_back("pipeline: p_d < p_s, deployment bar is below the staging bar");
  if (p.exploration_batch_size < 1) errors.push_back("pipeline.exploration_batch_size: must be >= 1");
  if (p.cluster_window_days < 1) errors.push_back("pipeline.cluster_window_days: must be >= 1");
  if (p.kmodes_restarts < 1) errors.push_back("pipeline.kmodes_restarts: must be >= 1");
  if (p.k_policy.fixed_k && *p.k_policy.fixed_k < 1) errors.push_back("pipeline.k: must be >= 1");
  if (p.k_policy.elbow_min < 1) errors.push_back("pipeline.elbow_k_min: must be >= 1");
  if (p.k_policy.elbow_min > p.k_policy.elbow_max)
    errors.push_back("pipeline.elbow_k_max: must be >= elbow_k_min");
  if (!(p.k_policy.elbow_epsilon >= 0.0)) errors.push_back("pipeline.elbow_epsilon: must be >= 0");
  if (p.sample_size == 0 && c.mode == CampaignMode::guided)
    warnings.push_back("pipeline.sample_size: 0, exploration will never run");
  if (p.parallelism < 1) errors.push_back("pipeline.parallelism: must be >= 1");

  check_unit(errors, "noise.default_flake", c.noise.default_flake);
  if (const auto& m = c.noise.mixture) {
    check_unit(errors, "noise.mixture.reliable_fraction", m->reliable_fraction);
    check_unit(errors, "noise.mixture.reliable_low", m->reliable_low);
    check_unit(errors, "noise.mixture.reliable_high", m->reliable_high);
    check_unit(errors, "noise.mixture.flaky_low", m->flaky_low);
    check_unit(errors, "noise.mixture.flaky_high", m->flaky_high);
    if (m->reliable_low > m->reliable_high) errors.push_back("noise.mixture: reliable_low > reliable_high");
    if (m->flaky_low > m->flaky_high) errors.push_back("noise.mixture: flaky_low > flaky_high");
  }

  const auto& g = c.generator;
  if (!c.production_logs_path && g.datapoints_per_day == 0)
    errors.push_back("generator.datapoints_per_day: must be >= 1");
  for (auto [name, x] : {std::pair{"content_exponent", g.content_exponent},
                         std::pair{"tag_exponent", g.tag_exponent},
                         std::pair{"decision_exponent", g.decision_exponent}})
    if (!(x >= 0.0)) errors.push_back(std::string("generator.") + name + ": must be >= 0");
  check_unit(errors, "generator.anomaly_fraction", g.anomaly_fraction);
  for (const auto& r : g.report_tag_sets)
    if (r.empty()) errors.push_back("generator.report_tag_sets: tag sets must be non-empty");

  if (!c.rules_path) {
    if (c.catalog.content_types < 1) errors.push_back("catalog.content_types: must be >= 1");
    if (c.catalog.violation_types < 1) errors.push_back("catalog.violation_types: must be >= 1");
    if (c.catalog.decisions < 1) errors.push_back("catalog.decisions: must be >= 1");
  }
  if (c.mode == CampaignMode::manual && c.manual_suite_size < 1)
    errors.push_back("manual_suite_size: must be >= 1");
  if (c.horizon_steps < c.platform.review_latency_steps + c.platform.enforcement_latency_steps)
    warnings.push_back("platform.horizon_steps: shorter than the review and enforcement latencies, "
                       "every test will fail");
}

// --- Output ----------------------------------------------------------------

template <typename F>
void write_file(const fs::path& path, F&& body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CampaignError(path.string() + ": cannot open for writing");
  body(out);
  out.flush();
  if (!out) throw CampaignError(path.string() + ": write failed");
}

const char* verdict_name(Verdict v) { return v == Verdict::pass ? "pass" : "fail"; }

std::string actions_label(const ActionList& a) { return a.empty() ? "<none>" : join_labels(a); }

}  // namespace

// --- Config ----------------------------------------------------------------

ConfigCheck parse_config(const json& j, const fs::path& base_dir) {
  ConfigCheck out;
  CampaignConfig c;
  std::vector<std::string>& errors = out.errors;
  Section root(&j, "", errors);
  root.reject_unknown({"seed", "days", "output_dir", "mode", "manual_suite_size", "rules", "violation_map",
                       "faults", "production_logs", "catalog", "generator", "noise", "platform", "pipeline",
                       "coverage_universe", "production_lag_days"});

  root.get("seed", c.seed);
  root.get("days", c.days);
  root.get_path("output_dir", c.output_dir, base_dir);
  root.get_enum("mode", c.mode, {{"guided", CampaignMode::guided}, {"manual", CampaignMode::manual}});
  root.get("manual_suite_size", c.manual_suite_size);
  root.get_path("rules", c.rules_path, base_dir);
  root.get_path("violation_map", c.violation_map_path, base_dir);
  root.get_path("production_logs", c.production_logs_path, base_dir);
  if (const json* f = root.find("faults")) {
    if (f->is_string()) {
      c.faults_path = Section::resolve(f->get<std::string>(), base_dir);
    } else if (f->is_array()) {
      try {
        c.faults = FaultSchedule::from_json(*f);
      } catch (const std::exception& e) {
        errors.push_back(std::string("faults: ") + e.what());
      }
    } else {
      errors.push_back("faults: expected a path or an array of faults");
    }
  }
  root.get_enum("coverage_universe", c.coverage_universe,
                {{"production", CoverageUniverseSource::production},
                 {"ww_logs", CoverageUniverseSource::ww_logs}});
  root.get("production_lag_days", c.production_lag_days);

  Section cat = root.child("catalog");
  cat.reject_unknown({"content_types", "violation_types", "decisions"});
  cat.get("content_types", c.catalog.content_types);
  cat.get("violation_types", c.catalog.violation_types);
  cat.get("decisions", c.catalog.decisions);

  Section gen = root.child("generator");
  gen.reject_unknown({"datapoints_per_day", "content_exponent", "tag_exponent", "decision_exponent",
                      "anomaly_fraction", "content_types", "report_tag_sets", "decisions"});
  gen.get("datapoints_per_day", c.generator.datapoints_per_day);
  gen.get("content_exponent", c.generator.content_exponent);
  gen.get("tag_exponent", c.generator.tag_exponent);
  gen.get("decision_exponent", c.generator.decision_exponent);
  gen.get("anomaly_fraction", c.generator.anomaly_fraction);
  gen.get_strings("content_types", c.generator.content_types);
  gen.get_strings("decisions", c.generator.decisions);
  if (const json* sets = gen.find("report_tag_sets")) {
    bool ok = sets->is_array();
    if (ok) {
      for (const auto& s : *sets) {
        if (!s.is_array() || !std::all_of(s.begin(), s.end(), [](const json& x) { return x.is_string(); })) {
          ok = false;
          break;
        }
        const auto tags = s.get<std::vector<std::string>>();
        c.generator.report_tag_sets.push_back(canonical_tags(tags));
      }
    }
    if (!ok) errors.push_back("generator.report_tag_sets: expected an array of string arrays");
  }

  Section noise = root.child("noise");
  noise.reject_unknown({"default_flake", "mode", "mixture"});
  noise.get("default_flake", c.noise.default_flake);
  noise.get_enum("mode", c.noise.mode,
                 {{"drop_action", DeviationMode::drop_action},
                  {"substitute_action", DeviationMode::substitute_action}});
  if (noise.find("mixture")) {
    FlakeMixture m;
    Section mix = noise.child("mixture");
    mix.reject_unknown({"reliable_fraction", "reliable_low", "reliable_high", "flaky_low", "flaky_high"});
    mix.get("reliable_fraction", m.reliable_fraction);
    mix.get("reliable_low", m.reliable_low);
    mix.get("reliable_high", m.reliable_high);
    mix.get("flaky_low", m.flaky_low);
    mix.get("flaky_high", m.flaky_high);
    c.noise.mixture = m;
  }

  Section plat = root.child("platform");
  plat.reject_unknown({"review_latency_steps", "enforcement_latency_steps", "horizon_steps"});
  plat.get("review_latency_steps", c.platform.review_latency_steps);
  plat.get("enforcement_latency_steps", c.platform.enforcement_latency_steps);
  plat.get("horizon_steps", c.horizon_steps);

  Section pipe = root.child("pipeline");
  auto& p = c.pipeline;
  pipe.reject_unknown({"alpha", "beta", "gamma", "sample_size", "exploration_batch_size", "k", "elbow_k_min",
                       "elbow_k_max", "elbow_epsilon", "kmodes_restarts", "cluster_window_days", "n_s", "p_s",
                       "n_d", "p_d", "staging_reruns", "staging_scope", "phi3_source", "parallelism"});
  pipe.get("alpha", p.weights.alpha);
  pipe.get("beta", p.weights.beta);
  pipe.get("gamma", p.weights.gamma);
  pipe.get("sample_size", p.sample_size);
  pipe.get("exploration_batch_size", p.exploration_batch_size);
  if (const json* k = pipe.find("k")) {
    if (k->is_string() && k->get<std::string>() == "elbow")
      p.k_policy.fixed_k.reset();
    else if (std::size_t n = 0; read_value(*k, n))
      p.k_policy.fixed_k = n;
    else
      errors.push_back("pipeline.k: expected a positive integer or \"elbow\"");
  }
  pipe.get("elbow_k_min", p.k_policy.elbow_min);
  pipe.get("elbow_k_max", p.k_policy.elbow_max);
  pipe.get("elbow_epsilon", p.k_policy.elbow_epsilon);
  pipe.get("kmodes_restarts", p.kmodes_restarts);
  pipe.get("cluster_window_days", p.cluster_window_days);
  pipe.get("n_s", p.n_s);
  pipe.get("p_s", p.p_s);
  pipe.get("n_d", p.n_d);
  pipe.get("p_d", p.p_d);
  pipe.get("staging_reruns", p.staging_reruns);
  pipe.get_enum("staging_scope", p.staging_scope,
                {{"cumulative", StatsScope::cumulative}, {"day", StatsScope::day}});
  pipe.get_enum("phi3_source", p.phi3_source,
                {{"production", Phi3Source::production}, {"ww_logs", Phi3Source::ww_logs}});
  pipe.get("parallelism", p.parallelism);

  check_invariants(c, out);
  if (out.ok()) out.config = std::move(c);
  return out;
}

ConfigCheck validate_config(const fs::path& path) {
  ConfigCheck out;
  std::ifstream in(path);
  if (!in) {
    out.errors.push_back(path.string() + ": cannot read config file");
    return out;
  }
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    out.errors.push_back(path.string() + ": " + e.what());
    return out;
  }
  out = parse_config(j, path.parent_path());
  if (!out.config) return out;
  try {
    const auto inputs = load_inputs(*out.config);
    for (auto& problem : check_inputs(inputs)) out.errors.push_back(std::move(problem));
  } catch (const CampaignError& e) {
    out.errors.push_back(e.what());
  }
  if (!out.ok()) out.config.reset();
  return out;
}

// --- Inputs ----------------------------------------------------------------

CampaignInputs load_inputs(const CampaignConfig& cfg) {
  auto load = [](const char* what, const fs::path& p, auto&& loader) {
    try {
      return loader(p);
    } catch (const std::exception& e) {
      throw CampaignError(std::string(what) + ": " + p.string() + ": " + e.what());
    }
  };

  CampaignInputs in;
  std::optional<Catalog> catalog;
  if (!cfg.rules_path || !cfg.violation_map_path) catalog = synthesize_catalog(cfg.catalog);

  in.rules = cfg.rules_path ? load("rules", *cfg.rules_path, RuleTable::load) : catalog->rules;
  if (cfg.violation_map_path)
    in.violations = load("violation_map", *cfg.violation_map_path, ViolationMap::load);
  else if (!cfg.rules_path)
    in.violations = catalog->violations;
  if (cfg.faults_path) in.faults = load("faults", *cfg.faults_path, FaultSchedule::load);
  for (const auto& f : cfg.faults.faults()) in.faults.add(f);
  if (cfg.production_logs_path)
    in.production = load("production_logs", *cfg.production_logs_path, ProductionLogStore::load);

  in.generator = cfg.generator;
  in.generator.seed = stream_seed(cfg.seed, SeedStream::generator);
  if (!cfg.rules_path) {
    if (in.generator.content_types.empty()) in.generator.content_types = catalog->content_types;
    if (in.generator.report_tag_sets.empty()) in.generator.report_tag_sets = catalog->report_tag_sets;
    if (in.generator.decisions.empty()) in.generator.decisions = catalog->decisions;
    return in;
  }
  // Alphabets not configured come from the rule table, in key order.
  std::set<std::string> cs, ds;
  std::set<TagList> rs;
  const bool fill_c = in.generator.content_types.empty();
  const bool fill_r = in.generator.report_tag_sets.empty();
  const bool fill_d = in.generator.decisions.empty();
  for (const auto& [key, _] : in.rules.rules()) {
    if (fill_c && cs.insert(key.content_type).second) in.generator.content_types.push_back(key.content_type);
    if (fill_r && rs.insert(key.report_tags).second) in.generator.report_tag_sets.push_back(key.report_tags);
    if (fill_d && ds.insert(key.decision).second) in.generator.decisions.push_back(key.decision);
  }
  return in;
}

std::vector<std::string> check_inputs(const CampaignInputs& in) {
  std::vector<std::string> problems;
  if (in.production) return problems;
  try {
    in.generator.validate();
  } catch (const ValidationError& e) {
    problems.push_back("generator." + e.field() + ": " + e.what());
    return problems;
  }
  std::size_t missing = 0, total = 0;
  std::optional<RuleKey> example;
  for (const auto& c : in.generator.content_types)
    for (const auto& r : in.generator.report_tag_sets)
      for (const auto& d : in.generator.decisions) {
        ++total;
        RuleKey key{c, r, d};
        if (!in.rules.find(key)) {
          ++missing;
          if (!example) example = key;
        }
      }
  if (missing) {
    problems.push_back("rules: not total over the generator alphabet, " + std::to_string(missing) + " of " +
                       std::to_string(total) + " (content_type, report_tags, decision) combinations have no rule, "
                       "e.g. (" + example->content_type + ", " + join_labels(example->report_tags) + ", " +
                       example->decision + ")");
  }
  return problems;
}

// --- Day loop --------------------------------------------------------------

std::vector<InferredTest> manual_suite(const ProductionLogStore& production, Datestamp day, std::size_t size) {
  std::map<TestKey, std::pair<std::size_t, const Datapoint*>> counts;
  for (const auto& dp : production.day(day)) {
    auto& [n, first] = counts[TestKey::of(dp)];
    if (n++ == 0) first = &dp;
  }
  std::vector<std::pair<TestKey, std::pair<std::size_t, const Datapoint*>>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second.first > b.second.first; });
  std::vector<InferredTest> suite;
  for (std::size_t i = 0; i < std::min(size, ranked.size()); ++i)
    suite.push_back(instantiate(*ranked[i].second.second));
  return suite;
}

CampaignResult run_campaign(const CampaignConfig& cfg) {
  CampaignInputs inputs = load_inputs(cfg);
  if (auto problems = check_inputs(inputs); !problems.empty()) throw CampaignError(problems.front());

  SimulationEnvironment env;
  env.rules = std::move(inputs.rules);
  env.faults = std::move(inputs.faults);
  env.platform = cfg.platform;
  env.horizon_steps = cfg.horizon_steps;
  env.noise = NoiseModel(cfg.noise.default_flake, cfg.noise.mode);
  if (cfg.noise.mixture) {
    FlakeMixture m = *cfg.noise.mixture;
    m.seed = stream_seed(cfg.seed, SeedStream::noise);
    env.noise.set_mixture(m);
  }

  PipelineConfig pc = cfg.pipeline;
  pc.seed = cfg.seed;
  try {
    pc.validate();
  } catch (const std::invalid_argument& e) {
    throw CampaignError(std::string("pipeline: ") + e.what());
  }

  TestEmitter emitter;
  if (cfg.output_dir) {
    const fs::path tests_dir = *cfg.output_dir / "tests";
    std::error_code ec;
    fs::create_directories(tests_dir, ec);
    if (ec) throw CampaignError(tests_dir.string() + ": " + ec.message());
    emitter = [tests_dir](const InferredTest& test, const EmittedTestStats& stats) {
      write_test_file(tests_dir, test, stats);
    };
  }

  CampaignResult result;
  result.violations = inputs.violations;
  Pipeline pipeline(pc, env, std::move(inputs.violations), std::move(emitter));
  const ViolationMap& v = pipeline.violations();
  if (inputs.production) result.production = std::move(*inputs.production);

  CoverageUniverse universe;
  std::vector<InferredTest> fixed;
  for (std::uint32_t d = 0; d < cfg.days; ++d) {
    const Datestamp t{d};
    if (!inputs.production) {
      const Datestamp effective{d >= cfg.production_lag_days ? d - cfg.production_lag_days : 0};
      result.production.append(generate_production_logs(inputs.generator, env.rules, t, env.faults, effective));
    }

    DaySummary day{t};
    day.production = result.production.day(t).size();
    if (cfg.mode == CampaignMode::manual) {
      if (fixed.empty()) fixed = manual_suite(result.production, t, cfg.manual_suite_size);
      day.explored = pipeline.run_fixed_suite(t, fixed).size();
    } else {
      auto explored = pipeline.run_exploration_day(t, result.production);
      day.explored = explored.entries.size();
      for (auto& w : explored.warnings) result.warnings.push_back(std::move(w));
      result.samples.insert(result.samples.end(), explored.samples.begin(), explored.samples.end());

      day.staged = pipeline.run_staging(t).keys.size();

      auto promoted = pipeline.promote_to_deployment(t);
      day.promoted = promoted.promoted.size();
      for (const auto& [key, why] : promoted.emission_failures)
        result.warnings.push_back("day " + std::to_string(d) + ": emitting " + key.hex_id() + " failed: " + why);

      auto suite = pipeline.run_deployed_suite(t);
      day.deployed = suite.results.size();
      day.suite_failures = suite.failure_count();
      result.suites.push_back(std::move(suite));
    }
    result.days.push_back(day);

    auto widen = [&](const std::string& c, const TagList& r) {
      auto p = categorical_point(c, r, v);
      universe.violation_types.insert(p.violation_type);
      universe.pairs.insert(std::move(p));
    };
    if (cfg.coverage_universe == CoverageUniverseSource::production)
      for (const auto& dp : result.production.day(t)) widen(dp.content_type, dp.report_tags);
    else
      for (const auto& e : pipeline.ww().day_slice(t)) widen(e.key.content_type, e.key.report_tags);

    if (universe.violation_types.empty())
      result.warnings.push_back("day " + std::to_string(d) + ": coverage undefined, empty universe");
    else
      result.coverage.push_back(coverage_row(t, pipeline.ww(), v, universe));
  }

  result.ledger = pipeline.ledger();
  result.ww = pipeline.ww();
  result.funnel = phase_funnel(result.ledger);
  if (cfg.output_dir) write_reports(*cfg.output_dir, result);
  return result;
}

void write_reports(const fs::path& dir, const CampaignResult& r) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw CampaignError(dir.string() + ": " + ec.message());

  write_file(dir / "coverage.csv", [&](std::ostream& out) { write_coverage_csv(out, r.coverage); });
  write_file(dir / "funnel.csv", [&](std::ostream& out) { write_funnel_csv(out, r.funnel); });
  for (auto [phase, name] : {std::pair{Phase::exploration, "exploration"}, std::pair{Phase::staging, "staging"},
                             std::pair{Phase::deployed, "deployment"}}) {
    write_file(dir / (std::string("distribution_") + name + ".csv"), [&](std::ostream& out) {
      write_distribution_csv(out, distribution_report(phase, r.ledger, r.violations));
    });
  }

  write_file(dir / "days.csv", [&](std::ostream& out) {
    out << "day,production,explored,staged,promoted,deployed,suite_failures\n";
    for (const auto& d : r.days)
      out << d.day.value << ',' << d.production << ',' << d.explored << ',' << d.staged << ',' << d.promoted
          << ',' << d.deployed << ',' << d.suite_failures << '\n';
  });

  write_file(dir / "samples.csv", [&](std::ostream& out) {
    out << "day,round,id,content_type,violation_type,decision,actions,phi1,phi2,phi3,phi,verdict\n";
    for (const auto& s : r.samples) {
      const Datapoint& x = s.scored.datapoint;
      out << s.day.value << ',' << s.round << ',' << TestKey::of(x).hex_id() << ',' << csv_field(x.content_type)
          << ',' << csv_field(r.violations(x.report_tags)) << ',' << csv_field(x.decision) << ','
          << csv_field(actions_label(x.actions)) << ',' << format_rate(s.scored.phi1) << ','
          << format_rate(s.scored.phi2) << ',' << format_rate(s.scored.phi3) << ',' << format_rate(s.scored.phi)
          << ',' << verdict_name(s.verdict) << '\n';
    }
  });

  write_file(dir / "suite.csv", [&](std::ostream& out) {
    out << "day,id,verdict,trace\n";
    for (const auto& report : r.suites)
      for (const auto& res : report.results)
        out << report.day.value << ',' << res.key.hex_id() << ',' << verdict_name(res.verdict) << ','
            << csv_field(res.trace_summary) << '\n';
  });

  write_file(dir / "ledger.json", [&](std::ostream& out) { out << r.ledger.to_json(&r.violations).dump(2) << '\n'; });
  write_file(dir / "ww_log.jsonl", [&](std::ostream& out) { r.ww.write_jsonl(out); });
}

}  // namespace infertest
