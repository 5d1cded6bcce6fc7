#include "infertest/platform.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace infertest {

namespace {

constexpr std::array<std::string_view, 5> kSubstitutePool = {"Checkpoint", "Delete", "Disable",
                                                             "Restrict", "Warn"};

std::uint64_t rule_hash(const RuleKey& key) {
  return TestKey{key.content_type, key.report_tags, key.decision, {}}.stable_hash();
}

double unit_interval(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

std::vector<std::string> strings_of(const nlohmann::json& j, const std::string& field) {
  if (!j.is_array()) throw ValidationError(field, "expected an array of strings");
  std::vector<std::string> out;
  for (const auto& e : j) {
    if (!e.is_string()) throw ValidationError(field, "expected an array of strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

std::string string_of(const nlohmann::json& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string()) throw ValidationError(where + "." + key, "expected a string");
  return it->get<std::string>();
}

nlohmann::json load_json(const std::filesystem::path& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw ValidationError(path.string(), std::string("cannot open ") + what);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path.string(), e.what());
  }
}

}  // namespace

// --- RuleTable -------------------------------------------------------------

void RuleTable::set(RuleKey key, ActionList actions) {
  key.report_tags = canonical_tags(key.report_tags);
  content_types_.insert(key.content_type);
  rules_.insert_or_assign(std::move(key), canonical_actions(actions));
}

const ActionList* RuleTable::find(const RuleKey& key) const {
  auto it = rules_.find(key);
  return it == rules_.end() ? nullptr : &it->second;
}

bool RuleTable::has_content_type(std::string_view c) const {
  return content_types_.find(c) != content_types_.end();
}

RuleTable RuleTable::from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw ValidationError("rules", "expected a JSON array");
  RuleTable table;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& r = j[i];
    const std::string where = "rules[" + std::to_string(i) + "]";
    if (!r.is_object()) throw ValidationError(where, "expected an object");
    RawDatapoint raw{0, string_of(r, "content_type", where),
                     strings_of(r.value("report_tags", nlohmann::json()), where + ".report_tags"),
                     string_of(r, "decision", where),
                     strings_of(r.value("actions", nlohmann::json()), where + ".actions")};
    Datapoint dp;
    try {
      dp = canonicalize(raw);
    } catch (const ValidationError& e) {
      throw ValidationError(where + "." + e.field(), e.what());
    }
    table.set(RuleKey::of(dp), dp.actions);
  }
  return table;
}

nlohmann::json RuleTable::to_json() const {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& [k, a] : rules_) {
    j.push_back({{"content_type", k.content_type},
                 {"report_tags", k.report_tags},
                 {"decision", k.decision},
                 {"actions", a}});
  }
  return j;
}

RuleTable RuleTable::load(const std::filesystem::path& path) {
  return from_json(load_json(path, "rule table"));
}

// --- Noise -----------------------------------------------------------------

ActionList deviate_actions(const ActionList& actions, DeviationMode mode, Rng& rng) {
  ActionList out = actions;
  if (out.empty()) {
    std::uniform_int_distribution<std::size_t> pick(0, kSubstitutePool.size() - 1);
    out.emplace_back(kSubstitutePool[pick(rng)]);
    return out;
  }
  std::uniform_int_distribution<std::size_t> index(0, out.size() - 1);
  const std::size_t i = index(rng);
  if (mode == DeviationMode::drop_action) {
    out.erase(out.begin() + static_cast<std::ptrdiff_t>(i));
  } else {
    std::vector<std::string_view> choices;
    for (auto s : kSubstitutePool)
      if (s != out[i]) choices.push_back(s);
    std::uniform_int_distribution<std::size_t> pick(0, choices.size() - 1);
    out[i] = std::string(choices[pick(rng)]);
  }
  return canonical_actions(out);
}

void NoiseModel::set_flake(RuleKey key, double p) {
  key.report_tags = canonical_tags(key.report_tags);
  overrides_.insert_or_assign(std::move(key), p);
}

double NoiseModel::flake_probability(const RuleKey& key) const {
  if (auto it = overrides_.find(key); it != overrides_.end()) return it->second;
  if (!mixture_) return default_flake_;
  const std::uint64_t h = derive_seed(mixture_->seed, {rule_hash(key)});
  const double component = unit_interval(splitmix64(h));
  const double position = unit_interval(splitmix64(h ^ 0x5bd1e995ULL));
  if (component < mixture_->reliable_fraction)
    return mixture_->reliable_low + position * (mixture_->reliable_high - mixture_->reliable_low);
  return mixture_->flaky_low + position * (mixture_->flaky_high - mixture_->flaky_low);
}

// --- Faults ----------------------------------------------------------------

void FaultSchedule::add(Fault f) {
  f.target.report_tags = canonical_tags(f.target.report_tags);
  f.mutated_actions = canonical_actions(f.mutated_actions);
  faults_.push_back(std::move(f));
}

const Fault* FaultSchedule::enforcement_fault(const RuleKey& key, Datestamp day) const {
  const Fault* best = nullptr;
  for (const auto& f : faults_) {
    if (f.kind == FaultKind::drop_review_job || !f.active_on(day) || f.target != key) continue;
    if (!best || f.activation >= best->activation) best = &f;
  }
  return best;
}

bool FaultSchedule::drops_review_job(std::string_view content_type, const TagList& tags,
                                     Datestamp day) const {
  return std::any_of(faults_.begin(), faults_.end(), [&](const Fault& f) {
    return f.kind == FaultKind::drop_review_job && f.active_on(day) &&
           f.target.content_type == content_type && f.target.report_tags == tags;
  });
}

FaultSchedule FaultSchedule::from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw ValidationError("faults", "expected a JSON array");
  FaultSchedule schedule;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& r = j[i];
    const std::string where = "faults[" + std::to_string(i) + "]";
    if (!r.is_object()) throw ValidationError(where, "expected an object");
    auto day = r.find("day");
    if (day == r.end() || !day->is_number_integer() || day->get<std::int64_t>() < 0)
      throw ValidationError(where + ".day", "expected a non-negative integer");

    Fault f;
    f.activation = Datestamp{day->get<std::uint32_t>()};
    f.target.content_type = string_of(r, "content_type", where);
    f.target.report_tags =
        canonical_tags(strings_of(r.value("report_tags", nlohmann::json()), where + ".report_tags"));
    if (f.target.report_tags.empty())
      throw ValidationError(where + ".report_tags", "empty tag list");

    const std::string kind = r.value("kind", std::string());
    if (kind == "drop_review_job") {
      f.kind = FaultKind::drop_review_job;
      f.target.decision = r.value("decision", std::string());
    } else if (!kind.empty() && kind != "enforcement") {
      throw ValidationError(where + ".kind", "unknown fault kind '" + kind + "'");
    } else {
      f.target.decision = string_of(r, "decision", where);
      auto mutated = r.find("mutated_actions");
      if (mutated == r.end())
        throw ValidationError(where + ".mutated_actions", "missing (use null for suppression)");
      if (mutated->is_null()) {
        f.kind = FaultKind::suppress_enforcement;
      } else {
        f.kind = FaultKind::mutate_actions;
        f.mutated_actions = strings_of(*mutated, where + ".mutated_actions");
      }
    }
    schedule.add(std::move(f));
  }
  return schedule;
}

nlohmann::json FaultSchedule::to_json() const {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& f : faults_) {
    nlohmann::json r = {{"day", f.activation.value},
                        {"content_type", f.target.content_type},
                        {"report_tags", f.target.report_tags},
                        {"decision", f.target.decision}};
    switch (f.kind) {
      case FaultKind::mutate_actions: r["mutated_actions"] = f.mutated_actions; break;
      case FaultKind::suppress_enforcement: r["mutated_actions"] = nullptr; break;
      case FaultKind::drop_review_job:
        r["mutated_actions"] = nullptr;
        r["kind"] = "drop_review_job";
        break;
    }
    j.push_back(std::move(r));
  }
  return j;
}

FaultSchedule FaultSchedule::load(const std::filesystem::path& path) {
  return from_json(load_json(path, "fault file"));
}

std::optional<ActionList> effective_actions(const RuleTable& rules, const FaultSchedule& faults,
                                            const RuleKey& key, Datestamp day) {
  if (const Fault* f = faults.enforcement_fault(key, day)) {
    if (f->kind == FaultKind::suppress_enforcement) return std::nullopt;
    return f->mutated_actions;
  }
  if (const ActionList* a = rules.find(key)) return *a;
  return ActionList{};
}

// --- Platform --------------------------------------------------------------

Platform::Platform(const RuleTable& rules, const NoiseModel& noise, const FaultSchedule& faults,
                   Datestamp day, std::uint64_t seed, PlatformOptions options)
    : rules_(&rules), noise_(&noise), faults_(&faults), day_(day), rng_(seed), options_(options) {}

ContentId Platform::post_content(std::string_view content_type) {
  if (content_type.empty()) throw PlatformError("post_content: empty content type");
  if (!rules_->has_content_type(content_type))
    throw PlatformError("post_content: unknown content type '" + std::string(content_type) + "'");
  contents_.push_back(ContentRecord{std::string(content_type), std::nullopt});
  return ContentId{contents_.size() - 1};
}

ReportId Platform::report_content(ContentId content, const TagList& tags) {
  const auto idx = static_cast<std::size_t>(content);
  if (idx >= contents_.size()) throw PlatformError("report_content: unknown content id");
  reports_.push_back(ReportRecord{content, canonical_tags(tags), std::nullopt});
  const auto report = static_cast<std::uint64_t>(reports_.size() - 1);
  if (!faults_->drops_review_job(contents_[idx].type, reports_.back().tags, day_)) {
    pending_.push_back(Event{now_ + options_.review_latency_steps, seq_++, Event::Kind::create_job,
                             report, {}});
    if (options_.review_latency_steps == 0) step();
  }
  return ReportId{report};
}

std::optional<ActionList> Platform::respond_review(JobId job, std::string_view decision) {
  const auto idx = static_cast<std::size_t>(job);
  if (idx >= jobs_.size()) throw PlatformError("respond_review: unknown job");
  if (!jobs_[idx].open) throw PlatformError("respond_review: job already closed");
  jobs_[idx].open = false;

  const ReportRecord& report = reports_[static_cast<std::size_t>(jobs_[idx].report)];
  const ContentRecord& content = contents_[static_cast<std::size_t>(report.content)];
  const RuleKey key{content.type, report.tags, std::string(decision)};

  auto actions = effective_actions(*rules_, *faults_, key, day_);
  if (!actions) return std::nullopt;

  std::bernoulli_distribution flake(std::clamp(noise_->flake_probability(key), 0.0, 1.0));
  if (flake(rng_)) *actions = deviate_actions(*actions, noise_->mode(), rng_);

  pending_.push_back(Event{now_ + options_.enforcement_latency_steps, seq_++, Event::Kind::enforce,
                           static_cast<std::uint64_t>(report.content), *actions});
  if (options_.enforcement_latency_steps == 0) step();
  return actions;
}

void Platform::fire(Event& e) {
  switch (e.kind) {
    case Event::Kind::create_job: {
      jobs_.push_back(JobRecord{ReportId{e.target}, true});
      reports_[e.target].job = JobId{jobs_.size() - 1};
      break;
    }
    case Event::Kind::enforce:
      contents_[e.target].executed = std::move(e.actions);
      break;
  }
}

void Platform::step() {
  // Zero-latency events fire without advancing the clock.
  if (std::none_of(pending_.begin(), pending_.end(), [&](const Event& e) { return e.due <= now_; }))
    ++now_;
  std::vector<Event> due;
  auto split = std::stable_partition(pending_.begin(), pending_.end(),
                                     [&](const Event& e) { return e.due > now_; });
  std::move(split, pending_.end(), std::back_inserter(due));
  pending_.erase(split, pending_.end());
  std::sort(due.begin(), due.end(), [](const Event& a, const Event& b) {
    return a.due != b.due ? a.due < b.due : a.seq < b.seq;
  });
  for (auto& e : due) fire(e);
}

std::optional<JobId> Platform::review_job(ReportId report) const {
  const auto idx = static_cast<std::size_t>(report);
  if (idx >= reports_.size()) return std::nullopt;
  return reports_[idx].job;
}

std::optional<ActionList> Platform::executed_actions(ContentId content) const {
  const auto idx = static_cast<std::size_t>(content);
  if (idx >= contents_.size()) return std::nullopt;
  return contents_[idx].executed;
}

std::size_t Platform::queued_jobs() const noexcept {
  const auto queued = std::count_if(pending_.begin(), pending_.end(), [](const Event& e) {
    return e.kind == Event::Kind::create_job;
  });
  const auto open = std::count_if(jobs_.begin(), jobs_.end(), [](const JobRecord& j) { return j.open; });
  return static_cast<std::size_t>(queued + open);
}

bool Platform::job_open(JobId job) const {
  const auto idx = static_cast<std::size_t>(job);
  return idx < jobs_.size() && jobs_[idx].open;
}

// --- Execution -------------------------------------------------------------

ExecutionTrace execute_activity(const SimulationEnvironment& env, const TestActivity& activity,
                                Datestamp day, std::uint64_t seed) {
  ExecutionTrace trace;
  Platform platform = env.make_platform(day, seed);

  trace.content_type = activity.content_type();
  try {
    trace.content = platform.post_content(activity.content_type());
  } catch (const PlatformError&) {
    return trace;
  }
  trace.report_tags = activity.report_tags();
  trace.report = platform.report_content(*trace.content, activity.report_tags());

  auto within_horizon = [&] { return trace.steps < env.horizon_steps; };

  while (!platform.review_job(*trace.report) && within_horizon()) {
    platform.step();
    ++trace.steps;
  }
  trace.review_job = platform.review_job(*trace.report);
  if (!trace.review_job) return trace;

  trace.decision = activity.decision();
  platform.respond_review(*trace.review_job, activity.decision());

  while (!platform.executed_actions(*trace.content) && within_horizon()) {
    platform.step();
    ++trace.steps;
  }
  trace.actions = platform.executed_actions(*trace.content);
  return trace;
}

std::string ExecutionTrace::summary() const {
  std::ostringstream out;
  out << "post(" << content_type << ")";
  if (!content) return out.str() + " rejected";
  out << " report(" << join_labels(report_tags) << ")";
  out << " job:" << (review_job ? "observed" : "absent");
  if (decision) out << " respond(" << *decision << ")";
  out << " actions:";
  if (actions)
    out << "[" << join_labels(*actions, ',') << "]";
  else
    out << "absent";
  out << " steps:" << steps;
  return out.str();
}

}  // namespace infertest
