#include "infertest/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

#include <nlohmann/json.hpp>

#include "infertest/random.hpp"

namespace infertest {

// --- Phases and ledger -----------------------------------------------------

std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::exploration: return "exploration";
    case Phase::staging: return "staging";
    case Phase::deployed: return "deployed";
    case Phase::retired: return "retired";
  }
  return "unknown";
}

std::optional<Phase> phase_from_string(std::string_view s) {
  for (Phase p : {Phase::exploration, Phase::staging, Phase::deployed, Phase::retired})
    if (to_string(p) == s) return p;
  return std::nullopt;
}

std::optional<double> LedgerEntry::pass_rate() const {
  if (runs == 0) return std::nullopt;
  return static_cast<double>(passes) / static_cast<double>(runs);
}

void PhaseLedger::record_run(const TestKey& key, Datestamp day, bool passed) {
  auto [it, inserted] = entries_.try_emplace(key);
  if (inserted) it->second.first_seen = day;
  ++it->second.runs;
  if (passed) ++it->second.passes;
}

void PhaseLedger::advance(const TestKey& key, Phase to, Datestamp day) {
  auto it = entries_.find(key);
  if (it == entries_.end()) throw std::logic_error("ledger: unknown key " + key.hex_id());
  LedgerEntry& e = it->second;
  if (to < e.state)
    throw std::logic_error("ledger: cannot move " + key.hex_id() + " from " +
                           std::string(to_string(e.state)) + " back to " + std::string(to_string(to)));
  if (to == e.state) return;
  if (to >= Phase::staging && !e.staged_on) e.staged_on = day;
  if (to >= Phase::deployed && !e.deployed_on) e.deployed_on = day;
  e.state = to;
}

const LedgerEntry* PhaseLedger::find(const TestKey& key) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? nullptr : &it->second;
}

std::set<TestKey> PhaseLedger::retired_keys() const {
  std::set<TestKey> out;
  for (const auto& [k, e] : entries_)
    if (e.state >= Phase::deployed) out.insert(k);
  return out;
}

nlohmann::json PhaseLedger::to_json(const ViolationMap* v) const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& [k, e] : entries_) {
    nlohmann::json j = infertest::to_json(k);
    j["id"] = k.hex_id();
    if (v) j["violation_type"] = (*v)(k.report_tags);
    j["state"] = std::string(to_string(e.state));
    j["runs"] = e.runs;
    j["passes"] = e.passes;
    j["first_seen_day"] = e.first_seen.value;
    j["staged_day"] = e.staged_on ? nlohmann::json(e.staged_on->value) : nlohmann::json();
    j["deployed_day"] = e.deployed_on ? nlohmann::json(e.deployed_on->value) : nlohmann::json();
    arr.push_back(std::move(j));
  }
  return {{"entries", arr}};
}

PhaseLedger PhaseLedger::from_json(const nlohmann::json& j) {
  PhaseLedger ledger;
  for (const auto& r : j.at("entries")) {
    const TestKey key = test_key_from_json(r);
    LedgerEntry e;
    const auto state = phase_from_string(r.at("state").get<std::string>());
    if (!state) throw ValidationError("state", "unknown phase");
    e.state = *state;
    e.runs = r.at("runs").get<std::uint64_t>();
    e.passes = r.at("passes").get<std::uint64_t>();
    e.first_seen = Datestamp{r.at("first_seen_day").get<std::uint32_t>()};
    if (auto s = r.find("staged_day"); s != r.end() && !s->is_null())
      e.staged_on = Datestamp{s->get<std::uint32_t>()};
    if (auto d = r.find("deployed_day"); d != r.end() && !d->is_null())
      e.deployed_on = Datestamp{d->get<std::uint32_t>()};
    ledger.entries_.insert_or_assign(key, e);
  }
  return ledger;
}

// --- Run statistics --------------------------------------------------------

std::uint64_t compute_eta(const TestKey& key, std::span<const WWLogEntry> scope) {
  return static_cast<std::uint64_t>(
      std::count_if(scope.begin(), scope.end(), [&](const WWLogEntry& e) { return e.key == key; }));
}

std::uint64_t compute_eta(const TestKey& key, const WWLogStore& store) {
  return store.totals(key).runs;
}

double compute_rho(const TestKey& key, std::span<const WWLogEntry> scope) {
  std::uint64_t runs = 0, passes = 0;
  for (const auto& e : scope) {
    if (e.key != key) continue;
    ++runs;
    if (e.passed) ++passes;
  }
  if (runs == 0) throw UndefinedRateError("pass rate undefined: key " + key.hex_id() + " has no runs");
  return static_cast<double>(passes) / static_cast<double>(runs);
}

double compute_rho(const TestKey& key, const WWLogStore& store) {
  const RunCounts c = store.totals(key);
  if (c.runs == 0) throw UndefinedRateError("pass rate undefined: key " + key.hex_id() + " has no runs");
  return static_cast<double>(c.passes) / static_cast<double>(c.runs);
}

void PipelineConfig::validate() const {
  weights.validate();
  if (n_s < 1) throw std::invalid_argument("n_s must be >= 1");
  if (n_d < 1) throw std::invalid_argument("n_d must be >= 1");
  if (!(p_s >= 0.0 && p_s <= 1.0)) throw std::invalid_argument("p_s must be in [0, 1]");
  if (!(p_d >= 0.0 && p_d <= 1.0)) throw std::invalid_argument("p_d must be in [0, 1]");
  if (exploration_batch_size < 1) throw std::invalid_argument("exploration_batch_size must be >= 1");
  if (cluster_window_days < 1) throw std::invalid_argument("cluster_window_days must be >= 1");
  if (k_policy.fixed_k && *k_policy.fixed_k < 1) throw std::invalid_argument("k must be >= 1");
  if (!k_policy.fixed_k && k_policy.elbow_min > k_policy.elbow_max)
    throw std::invalid_argument("elbow k range is empty");
}

std::set<TestKey> tests_of_interest(Datestamp t, const WWLogStore& ww, const PipelineConfig& cfg) {
  const auto slice = ww.day_slice(t);
  std::map<TestKey, RunCounts> day_counts;
  for (const auto& e : slice) {
    auto& c = day_counts[e.key];
    ++c.runs;
    if (e.passed) ++c.passes;
  }
  std::set<TestKey> out;
  for (const auto& [key, day] : day_counts) {
    const RunCounts c = cfg.staging_scope == StatsScope::day ? day : ww.totals(key);
    const double rho = static_cast<double>(c.passes) / static_cast<double>(c.runs);
    if (c.runs > cfg.n_s && rho > cfg.p_s) out.insert(key);
  }
  return out;
}

// --- Execution -------------------------------------------------------------

std::uint64_t execution_seed(std::uint64_t campaign_seed, ExecutionPhase phase, Datestamp day,
                             const TestKey& key, std::uint64_t ordinal) {
  return derive_seed(stream_seed(campaign_seed, SeedStream::execution),
                     {static_cast<std::uint64_t>(phase), day.value, key.stable_hash(), ordinal});
}

std::vector<ExecutionTrace> execute_batch(const SimulationEnvironment& env,
                                          std::span<const InferredTest> tests, Datestamp day,
                                          std::span<const std::uint64_t> seeds,
                                          std::size_t parallelism) {
  std::vector<ExecutionTrace> traces(tests.size());
  auto run = [&](std::size_t i) { traces[i] = execute_activity(env, tests[i].activity, day, seeds[i]); };

  const std::size_t workers = std::min(std::max<std::size_t>(1, parallelism), tests.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < tests.size(); ++i) run(i);
    return traces;
  }
  std::atomic<std::size_t> next{0};
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < tests.size(); i = next++) run(i);
      });
  }
  return traces;
}

std::vector<SuiteResult> SuiteReport::failures() const {
  std::vector<SuiteResult> out;
  for (const auto& r : results)
    if (r.verdict == Verdict::fail) out.push_back(r);
  return out;
}

std::size_t SuiteReport::failure_count() const {
  return static_cast<std::size_t>(std::count_if(
      results.begin(), results.end(), [](const SuiteResult& r) { return r.verdict == Verdict::fail; }));
}

SuiteReport run_deployed_suite(std::span<const InferredTest> deployed, const SimulationEnvironment& env,
                               Datestamp t, std::uint64_t campaign_seed, std::size_t parallelism) {
  std::vector<std::uint64_t> seeds;
  for (const auto& test : deployed)
    seeds.push_back(execution_seed(campaign_seed, ExecutionPhase::suite, t, test.key, 0));
  const auto traces = execute_batch(env, deployed, t, seeds, parallelism);

  SuiteReport report{t, {}};
  for (std::size_t i = 0; i < deployed.size(); ++i)
    report.results.push_back(
        {deployed[i].key, deployed[i].oracle.evaluate(traces[i]), traces[i].summary()});
  return report;
}

// --- Pipeline --------------------------------------------------------------

Pipeline::Pipeline(PipelineConfig cfg, const SimulationEnvironment& env, ViolationMap violations,
                   TestEmitter emitter)
    : cfg_(std::move(cfg)), env_(&env), violations_(std::move(violations)), emitter_(std::move(emitter)) {
  cfg_.validate();
}

InferredTest Pipeline::test_for(const TestKey& key, Datestamp t) const {
  if (auto it = sources_.find(key); it != sources_.end()) return instantiate(it->second);
  return instantiate(Datapoint{t, key.content_type, key.report_tags, key.decision, key.actions});
}

WWLogEntry Pipeline::record(const InferredTest& test, Datestamp t, Verdict verdict) {
  WWLogEntry entry{test.key, t, verdict == Verdict::pass};
  ww_.append(entry);
  ledger_.record_run(test.key, t, entry.passed);
  sources_.try_emplace(test.key, test.source);
  return entry;
}

ExplorationResult Pipeline::run_exploration_day(Datestamp t, const ProductionLogStore& production) {
  ExplorationResult result;
  const auto today = production.day(t);
  if (today.empty()) {
    result.warnings.push_back("day " + std::to_string(t.value) + ": no production logs");
    return result;
  }
  if (cfg_.sample_size == 0) return result;

  const auto retired = ledger_.retired_keys();
  auto eligible = [&](const Datapoint& dp) { return retired.empty() || !retired.count(TestKey::of(dp)); };

  std::vector<Datapoint> pool;
  for (const auto& dp : today)
    if (eligible(dp)) pool.push_back(dp);
  if (pool.empty()) return result;

  // Cluster the candidate pool of the trailing window ending today.
  std::vector<CategoricalPoint> points;
  for (std::uint32_t back = 0; back < cfg_.cluster_window_days && back <= t.value; ++back)
    for (const auto& dp : production.day(Datestamp{t.value - back}))
      if (eligible(dp)) points.push_back(categorical_point(dp.content_type, dp.report_tags, violations_));

  KModesOptions fit{cfg_.kmodes_restarts, 100, derive_seed(stream_seed(cfg_.seed, SeedStream::clustering), {t.value})};
  if (cfg_.k_policy.fixed_k) {
    const std::size_t k = std::min(*cfg_.k_policy.fixed_k, distinct_count(points));
    result.clusters = kmodes_fit(points, k, fit);
  } else {
    ElbowOptions elbow{cfg_.k_policy.elbow_min, cfg_.k_policy.elbow_max, cfg_.k_policy.elbow_epsilon, fit};
    result.clusters = elbow_select_k(points, elbow).model;
  }
  const ClusterModel& model = *result.clusters;

  AnomalyIndex anomalies;
  if (const auto prev = t.previous()) {
    anomalies = cfg_.phi3_source == Phi3Source::production
                    ? AnomalyIndex(*prev, production.day(*prev))
                    : AnomalyIndex(*prev, ww_.day_slice(*prev));
  }

  DayCoverageCounts counts(violations_, &model);
  counts.add(ww_.day_slice(t));

  std::size_t remaining = cfg_.sample_size;
  std::size_t ordinal = 0;
  for (std::size_t round = 0; remaining > 0 && !pool.empty(); ++round) {
    const std::size_t batch = std::min(cfg_.exploration_batch_size, remaining);
    const auto scored = score_candidates(pool, cfg_.weights, counts, model, violations_, anomalies);
    const auto picks = sample_top_n(
        scored, batch, derive_seed(stream_seed(cfg_.seed, SeedStream::sampler), {t.value, round}));

    std::vector<InferredTest> tests;
    std::vector<std::uint64_t> seeds;
    for (std::size_t i : picks) {
      tests.push_back(instantiate(pool[i]));
      seeds.push_back(execution_seed(cfg_.seed, ExecutionPhase::exploration, t, tests.back().key, ordinal++));
    }
    const auto traces = execute_batch(*env_, tests, t, seeds, cfg_.parallelism);

    for (std::size_t j = 0; j < picks.size(); ++j) {
      const Verdict verdict = tests[j].oracle.evaluate(traces[j]);
      result.entries.push_back(record(tests[j], t, verdict));
      counts.add(tests[j].key);
      result.samples.push_back({t, round, scored[picks[j]], verdict});
      result.executed.push_back(tests[j]);
    }

    std::vector<std::size_t> drop(picks.begin(), picks.end());
    std::sort(drop.rbegin(), drop.rend());
    for (std::size_t i : drop) pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(i));
    remaining -= picks.size();
  }
  return result;
}

std::set<TestKey> Pipeline::tests_of_interest(Datestamp t) const {
  return infertest::tests_of_interest(t, ww_, cfg_);
}

std::vector<TestKey> Pipeline::staging_set(Datestamp t) const {
  std::set<TestKey> keys = tests_of_interest(t);
  for (const auto& [key, e] : ledger_.entries()) {
    if (e.state != Phase::staging) continue;
    const RunCounts c = ww_.totals(key);
    if (c.runs > cfg_.n_s && static_cast<double>(c.passes) / static_cast<double>(c.runs) > cfg_.p_s)
      keys.insert(key);
  }
  std::vector<TestKey> out;
  for (const auto& k : keys) {
    const LedgerEntry* e = ledger_.find(k);
    if (!e || e->state < Phase::deployed) out.push_back(k);
  }
  return out;
}

StagingResult Pipeline::run_staging(Datestamp t, std::span<const TestKey> keys) {
  StagingResult result;
  std::vector<TestKey> sorted(keys.begin(), keys.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

  std::vector<InferredTest> tests;
  std::vector<std::uint64_t> seeds;
  for (const auto& key : sorted) {
    const InferredTest test = test_for(key, t);
    for (std::size_t r = 0; r < cfg_.staging_reruns; ++r) {
      tests.push_back(test);
      seeds.push_back(execution_seed(cfg_.seed, ExecutionPhase::staging, t, key, r));
    }
  }
  const auto traces = execute_batch(*env_, tests, t, seeds, cfg_.parallelism);
  for (std::size_t i = 0; i < tests.size(); ++i)
    result.entries.push_back(record(tests[i], t, tests[i].oracle.evaluate(traces[i])));
  for (const auto& key : sorted) {
    if (ledger_.find(key)) ledger_.advance(key, Phase::staging, t);
  }
  result.keys = std::move(sorted);
  return result;
}

StagingResult Pipeline::run_staging(Datestamp t) {
  const auto keys = staging_set(t);
  return run_staging(t, keys);
}

PromotionResult Pipeline::promote_to_deployment(Datestamp t) {
  PromotionResult result;
  std::vector<TestKey> ready;
  for (const auto& [key, e] : ledger_.entries()) {
    if (e.state != Phase::staging) continue;
    const RunCounts c = ww_.totals(key);
    if (c.runs > cfg_.n_d && static_cast<double>(c.passes) / static_cast<double>(c.runs) > cfg_.p_d)
      ready.push_back(key);
  }
  for (const auto& key : ready) {
    const InferredTest test = test_for(key, t);
    const RunCounts c = ww_.totals(key);
    const EmittedTestStats stats{c.runs, static_cast<double>(c.passes) / static_cast<double>(c.runs),
                                 ledger_.find(key)->first_seen};
    if (emitter_) {
      try {
        emitter_(test, stats);
      } catch (const std::exception& e) {
        result.emission_failures.emplace_back(key, e.what());
        continue;
      }
    }
    ledger_.advance(key, Phase::deployed, t);
    deployed_.insert_or_assign(key, test);
    result.promoted.push_back(test);
  }
  return result;
}

SuiteReport Pipeline::run_deployed_suite(Datestamp t) const {
  std::vector<InferredTest> tests;
  for (const auto& [key, test] : deployed_) tests.push_back(test);
  return infertest::run_deployed_suite(tests, *env_, t, cfg_.seed, cfg_.parallelism);
}

std::vector<WWLogEntry> Pipeline::run_fixed_suite(Datestamp t, std::span<const InferredTest> tests) {
  std::vector<std::uint64_t> seeds;
  for (std::size_t i = 0; i < tests.size(); ++i)
    seeds.push_back(execution_seed(cfg_.seed, ExecutionPhase::fixed_suite, t, tests[i].key, i));
  const auto traces = execute_batch(*env_, tests, t, seeds, cfg_.parallelism);
  std::vector<WWLogEntry> out;
  for (std::size_t i = 0; i < tests.size(); ++i)
    out.push_back(record(tests[i], t, tests[i].oracle.evaluate(traces[i])));
  return out;
}

void Pipeline::retire(const TestKey& key, Datestamp t) {
  ledger_.advance(key, Phase::retired, t);
  deployed_.erase(key);
}

}  // namespace infertest
