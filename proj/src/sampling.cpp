#include "infertest/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "infertest/random.hpp"

namespace infertest {

namespace {

constexpr double kTieTolerance = 1e-12;

double normalized_novelty(std::size_t count, std::size_t max_count) {
  if (max_count == 0) return 1.0;
  return 1.0 - static_cast<double>(count) / static_cast<double>(max_count);
}

}  // namespace

void ScoreWeights::validate() const {
  if (!(alpha >= 0.0 && beta >= 0.0 && gamma >= 0.0))
    throw std::invalid_argument("score weights must be non-negative");
  if (std::abs(alpha + beta + gamma - 1.0) > 1e-9)
    throw std::invalid_argument("score weights must sum to 1 (alpha + beta + gamma = " +
                                std::to_string(alpha + beta + gamma) + ")");
}

CategoricalPoint categorical_point(const std::string& content_type, const TagList& tags,
                                   const ViolationMap& v) {
  return {content_type, v(tags)};
}

double score_phi1(const Datapoint& x, std::span<const WWLogEntry> ww_day, const ViolationMap& v) {
  std::map<std::string, std::size_t> counts;
  for (const auto& e : ww_day) ++counts[v(e.key.report_tags)];
  std::size_t max_count = 0;
  for (const auto& [_, n] : counts) max_count = std::max(max_count, n);
  const auto it = counts.find(v(x.report_tags));
  return normalized_novelty(it == counts.end() ? 0 : it->second, max_count);
}

double score_phi2(const Datapoint& x, std::span<const WWLogEntry> ww_day, const ClusterModel& model,
                  const ViolationMap& v) {
  std::map<std::size_t, std::size_t> counts;
  for (const auto& e : ww_day)
    ++counts[model.assign(categorical_point(e.key.content_type, e.key.report_tags, v))];
  std::size_t max_count = 0;
  for (const auto& [_, n] : counts) max_count = std::max(max_count, n);
  const auto it = counts.find(model.assign(categorical_point(x.content_type, x.report_tags, v)));
  return normalized_novelty(it == counts.end() ? 0 : it->second, max_count);
}

double score_phi3(const Datapoint& x, std::span<const Datapoint> previous_day) {
  const auto prev = x.day.previous();
  if (!prev) return 0.0;
  for (const auto& y : previous_day) {
    if (y.day == *prev && y.content_type == x.content_type && y.report_tags == x.report_tags &&
        y.decision == x.decision && y.actions != x.actions)
      return 1.0;
  }
  return 0.0;
}

double score_phi3(const Datapoint& x, std::span<const WWLogEntry> previous_day) {
  const auto prev = x.day.previous();
  if (!prev) return 0.0;
  for (const auto& e : previous_day) {
    if (e.day == *prev && e.key.content_type == x.content_type &&
        e.key.report_tags == x.report_tags && e.key.decision == x.decision &&
        e.key.actions != x.actions)
      return 1.0;
  }
  return 0.0;
}

AnomalyIndex::AnomalyIndex(Datestamp day, std::span<const Datapoint> records) : day_(day) {
  for (const auto& r : records)
    if (r.day == day) seen_[RuleKey::of(r)].insert(r.actions);
}

AnomalyIndex::AnomalyIndex(Datestamp day, std::span<const WWLogEntry> records) : day_(day) {
  for (const auto& r : records)
    if (r.day == day) seen_[RuleKey::of(r.key)].insert(r.key.actions);
}

double AnomalyIndex::score(const Datapoint& x) const {
  const auto prev = x.day.previous();
  if (!prev || !day_ || *prev != *day_) return 0.0;
  const auto it = seen_.find(RuleKey::of(x));
  if (it == seen_.end()) return 0.0;
  const auto& variants = it->second;
  return (variants.size() > 1 || *variants.begin() != x.actions) ? 1.0 : 0.0;
}

void DayCoverageCounts::add(const TestKey& key) {
  const auto n = ++by_violation_[(*v_)(key.report_tags)];
  max_violation_ = std::max(max_violation_, n);
  if (model_) {
    const auto m = ++by_cluster_[model_->assign(categorical_point(key.content_type, key.report_tags, *v_))];
    max_cluster_ = std::max(max_cluster_, m);
  }
}

void DayCoverageCounts::add(std::span<const WWLogEntry> entries) {
  for (const auto& e : entries) add(e.key);
}

double DayCoverageCounts::phi1(const std::string& violation_type) const {
  const auto it = by_violation_.find(violation_type);
  return normalized_novelty(it == by_violation_.end() ? 0 : it->second, max_violation_);
}

double DayCoverageCounts::phi2(std::size_t cluster) const {
  const auto it = by_cluster_.find(cluster);
  return normalized_novelty(it == by_cluster_.end() ? 0 : it->second, max_cluster_);
}

ScoredCandidate score_combined(const Datapoint& x, const ScoreWeights& w, double phi1, double phi2,
                               double phi3) {
  w.validate();
  return {x, phi1, phi2, phi3, w.alpha * phi1 + w.beta * phi2 + w.gamma * phi3};
}

std::vector<ScoredCandidate> score_candidates(std::span<const Datapoint> candidates,
                                              const ScoreWeights& w, const DayCoverageCounts& counts,
                                              const ClusterModel& model, const ViolationMap& v,
                                              const AnomalyIndex& anomalies) {
  w.validate();
  std::vector<ScoredCandidate> out;
  out.reserve(candidates.size());
  for (const auto& x : candidates) {
    const auto point = categorical_point(x.content_type, x.report_tags, v);
    const double p1 = counts.phi1(point.violation_type);
    const double p2 = counts.phi2(model.assign(point));
    const double p3 = anomalies.score(x);
    out.push_back({x, p1, p2, p3, w.alpha * p1 + w.beta * p2 + w.gamma * p3});
  }
  return out;
}

std::vector<std::size_t> sample_top_n(std::span<const ScoredCandidate> candidates, std::size_t n,
                                      std::uint64_t seed, const std::set<TestKey>* excluded) {
  std::vector<std::size_t> eligible;
  eligible.reserve(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (excluded && !excluded->empty() && excluded->count(TestKey::of(candidates[i].datapoint)))
      continue;
    eligible.push_back(i);
  }
  if (n == 0 || eligible.empty()) return {};

  std::stable_sort(eligible.begin(), eligible.end(), [&](std::size_t a, std::size_t b) {
    return candidates[a].phi > candidates[b].phi;
  });
  if (n >= eligible.size()) return eligible;

  const double boundary = candidates[eligible[n - 1]].phi;
  std::vector<std::size_t> selected, ties;
  for (std::size_t i : eligible) {
    const double phi = candidates[i].phi;
    if (phi > boundary + kTieTolerance)
      selected.push_back(i);
    else if (std::abs(phi - boundary) <= kTieTolerance)
      ties.push_back(i);
  }

  Rng rng(seed);
  std::shuffle(ties.begin(), ties.end(), rng);
  ties.resize(n - selected.size());
  std::sort(ties.begin(), ties.end());
  // Keep the output best-first; within the tie band, by candidate index.
  std::stable_sort(ties.begin(), ties.end(), [&](std::size_t a, std::size_t b) {
    return candidates[a].phi > candidates[b].phi;
  });
  selected.insert(selected.end(), ties.begin(), ties.end());
  return selected;
}

}  // namespace infertest
