#include "infertest/log_model.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>

#include <nlohmann/json.hpp>

#include "infertest/random.hpp"

namespace infertest {

namespace {

std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> string_array(const nlohmann::json& j, const char* field) {
  if (!j.is_array()) throw ValidationError(field, "expected an array of strings");
  std::vector<std::string> out;
  out.reserve(j.size());
  for (const auto& e : j) {
    if (!e.is_string()) throw ValidationError(field, "expected an array of strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

}  // namespace

TagList canonical_tags(std::span<const std::string> tags) {
  TagList out;
  out.reserve(tags.size());
  for (const auto& t : tags) out.push_back(lowercase(trim(t)));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

ActionList canonical_actions(std::span<const std::string> actions) {
  ActionList out(actions.begin(), actions.end());
  std::sort(out.begin(), out.end());
  return out;
}

Datapoint canonicalize(const RawDatapoint& raw) {
  if (!raw.day) throw ValidationError("day", "missing");
  if (*raw.day < 0 || *raw.day > static_cast<std::int64_t>(UINT32_MAX))
    throw ValidationError("day", "must be a non-negative day index");
  if (!raw.content_type) throw ValidationError("content_type", "missing");
  if (!raw.report_tags) throw ValidationError("report_tags", "missing");
  if (!raw.decision) throw ValidationError("decision", "missing");
  if (!raw.actions) throw ValidationError("actions", "missing");

  Datapoint dp;
  dp.day = Datestamp{static_cast<std::uint32_t>(*raw.day)};
  dp.content_type = trim(*raw.content_type);
  if (dp.content_type.empty()) throw ValidationError("content_type", "empty");
  dp.report_tags = canonical_tags(*raw.report_tags);
  if (dp.report_tags.empty()) throw ValidationError("report_tags", "empty tag list");
  if (dp.report_tags.front().empty()) throw ValidationError("report_tags", "empty tag");
  dp.decision = trim(*raw.decision);
  if (dp.decision.empty()) throw ValidationError("decision", "empty");
  dp.actions = canonical_actions(*raw.actions);
  return dp;
}

Datapoint canonicalize(const Datapoint& dp) {
  return canonicalize(RawDatapoint{dp.day.value, dp.content_type, dp.report_tags, dp.decision,
                                   dp.actions});
}

std::string join_labels(std::span<const std::string> labels, char sep) {
  std::string out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (i) out.push_back(sep);
    out += labels[i];
  }
  return out;
}

TestKey TestKey::of(const Datapoint& dp) {
  return TestKey{dp.content_type, dp.report_tags, dp.decision, dp.actions};
}

std::uint64_t TestKey::stable_hash() const {
  // Length-prefixed fields keep the encoding unambiguous.
  std::uint64_t h = fnv1a64("testkey/v1");
  auto mix = [&h](std::string_view s) {
    h = fnv1a64(std::to_string(s.size()), h);
    h = fnv1a64(":", h);
    h = fnv1a64(s, h);
  };
  mix(content_type);
  h = fnv1a64(std::to_string(report_tags.size()), h);
  for (const auto& t : report_tags) mix(t);
  mix(decision);
  h = fnv1a64(std::to_string(actions.size()), h);
  for (const auto& a : actions) mix(a);
  return h;
}

std::string TestKey::hex_id() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(stable_hash()));
  return buf;
}

RuleKey RuleKey::of(const Datapoint& dp) {
  return RuleKey{dp.content_type, dp.report_tags, dp.decision};
}

RuleKey RuleKey::of(const TestKey& key) {
  return RuleKey{key.content_type, key.report_tags, key.decision};
}

// ---------------------------------------------------------------------------

void ViolationMap::add(const TagList& tags, std::string label) {
  by_tags_.insert_or_assign(join_labels(canonical_tags(tags)), std::move(label));
}

const std::string& ViolationMap::operator()(const TagList& tags) const {
  if (auto it = by_tags_.find(join_labels(tags)); it != by_tags_.end()) return it->second;
  return default_label_;
}

ViolationMap ViolationMap::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("violation_map", "expected a JSON object");
  ViolationMap m;
  for (const auto& [key, value] : j.items()) {
    if (!value.is_string()) throw ValidationError("violation_map." + key, "label must be a string");
    if (key == kDefaultKey) {
      m.default_label_ = value.get<std::string>();
      continue;
    }
    // Keys are written joined; split and re-canonicalize so hand-written files
    // with unsorted or mixed-case tags still match.
    TagList tags;
    std::size_t start = 0;
    while (true) {
      const auto bar = key.find('|', start);
      tags.push_back(key.substr(start, bar == std::string::npos ? std::string::npos : bar - start));
      if (bar == std::string::npos) break;
      start = bar + 1;
    }
    m.add(tags, value.get<std::string>());
  }
  return m;
}

nlohmann::json ViolationMap::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : by_tags_) j[k] = v;
  j[std::string(kDefaultKey)] = default_label_;
  return j;
}

ViolationMap ViolationMap::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(path.string(), "cannot open violation map");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path.string(), e.what());
  }
  return from_json(j);
}

const std::string& violation_type(const TagList& tags, const ViolationMap& map) {
  return map(tags);
}

// ---------------------------------------------------------------------------

void ProductionLogStore::append(Datapoint dp) {
  by_day_[dp.day].push_back(std::move(dp));
  ++size_;
}

void ProductionLogStore::append(std::span<const Datapoint> dps) {
  for (const auto& dp : dps) append(dp);
}

std::span<const Datapoint> ProductionLogStore::day(Datestamp t) const {
  if (auto it = by_day_.find(t); it != by_day_.end()) return it->second;
  return {};
}

std::vector<Datestamp> ProductionLogStore::days() const {
  std::vector<Datestamp> out;
  for (const auto& [d, _] : by_day_) out.push_back(d);
  return out;
}

ProductionLogStore ProductionLogStore::read_jsonl(std::istream& in) {
  ProductionLogStore store;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      store.append(datapoint_from_json(nlohmann::json::parse(line)));
    } catch (const ValidationError& e) {
      throw ValidationError("line " + std::to_string(lineno) + "." + e.field(), e.what());
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("line " + std::to_string(lineno), e.what());
    }
  }
  return store;
}

ProductionLogStore ProductionLogStore::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(path.string(), "cannot open production log");
  return read_jsonl(in);
}

void ProductionLogStore::write_jsonl(std::ostream& out) const {
  for_each([&out](const Datapoint& dp) { out << to_json(dp).dump() << '\n'; });
}

// ---------------------------------------------------------------------------

void WWLogStore::append(WWLogEntry entry) {
  auto& counts = totals_[entry.key];
  ++counts.runs;
  if (entry.passed) ++counts.passes;
  by_day_[entry.day].push_back(std::move(entry));
  ++size_;
}

std::span<const WWLogEntry> WWLogStore::day_slice(Datestamp t) const {
  if (auto it = by_day_.find(t); it != by_day_.end()) return it->second;
  return {};
}

std::vector<Datestamp> WWLogStore::days() const {
  std::vector<Datestamp> out;
  for (const auto& [d, _] : by_day_) out.push_back(d);
  return out;
}

RunCounts WWLogStore::totals(const TestKey& key) const {
  if (auto it = totals_.find(key); it != totals_.end()) return it->second;
  return {};
}

WWLogStore WWLogStore::read_jsonl(std::istream& in) {
  WWLogStore store;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto j = nlohmann::json::parse(line);
    store.append(WWLogEntry{test_key_from_json(j.at("key")),
                            Datestamp{j.at("day").get<std::uint32_t>()}, j.at("passed").get<bool>()});
  }
  return store;
}

void WWLogStore::write_jsonl(std::ostream& out) const {
  for_each([&out](const WWLogEntry& e) {
    nlohmann::json j;
    j["day"] = e.day.value;
    j["key"] = to_json(e.key);
    j["passed"] = e.passed;
    out << j.dump() << '\n';
  });
}

std::span<const WWLogEntry> day_slice(const WWLogStore& store, Datestamp t) {
  return store.day_slice(t);
}

// ---------------------------------------------------------------------------

nlohmann::json to_json(const Datapoint& dp) {
  nlohmann::json j;
  j["day"] = dp.day.value;
  j["content_type"] = dp.content_type;
  j["report_tags"] = dp.report_tags;
  j["decision"] = dp.decision;
  j["actions"] = dp.actions;
  return j;
}

Datapoint datapoint_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("record", "expected a JSON object");
  RawDatapoint raw;
  if (auto it = j.find("day"); it != j.end()) {
    if (!it->is_number_integer()) throw ValidationError("day", "expected an integer");
    raw.day = it->get<std::int64_t>();
  }
  if (auto it = j.find("content_type"); it != j.end()) {
    if (!it->is_string()) throw ValidationError("content_type", "expected a string");
    raw.content_type = it->get<std::string>();
  }
  if (auto it = j.find("report_tags"); it != j.end()) raw.report_tags = string_array(*it, "report_tags");
  if (auto it = j.find("decision"); it != j.end()) {
    if (!it->is_string()) throw ValidationError("decision", "expected a string");
    raw.decision = it->get<std::string>();
  }
  if (auto it = j.find("actions"); it != j.end()) raw.actions = string_array(*it, "actions");
  return canonicalize(raw);
}

nlohmann::json to_json(const TestKey& key) {
  nlohmann::json j;
  j["content_type"] = key.content_type;
  j["report_tags"] = key.report_tags;
  j["decision"] = key.decision;
  j["actions"] = key.actions;
  return j;
}

TestKey test_key_from_json(const nlohmann::json& j) {
  auto with_day = j;
  with_day["day"] = 0;
  return TestKey::of(datapoint_from_json(with_day));
}

}  // namespace infertest
