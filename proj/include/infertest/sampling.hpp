#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "infertest/kmodes.hpp"
#include "infertest/log_model.hpp"

namespace infertest {

/// Convex weights for the three sampling scores.
struct ScoreWeights {
  double alpha = 1.0 / 3.0;
  double beta = 1.0 / 3.0;
  double gamma = 1.0 / 3.0;

  /// Throws std::invalid_argument unless all weights are >= 0 and sum to 1
  /// within 1e-9.
  void validate() const;
};

struct ScoredCandidate {
  Datapoint datapoint;
  double phi1 = 0.0;
  double phi2 = 0.0;
  double phi3 = 0.0;
  double phi = 0.0;
};

CategoricalPoint categorical_point(const std::string& content_type, const TagList& tags,
                                   const ViolationMap& v);

/// Violation-type coverage score: 1 - count(v(x.r)) / max count over the
/// day's WW entries. 1 on an empty day.
double score_phi1(const Datapoint& x, std::span<const WWLogEntry> ww_day, const ViolationMap& v);

/// Cluster coverage score: like phi1 but counting WW entries per K-Modes
/// cluster of (c, v(r)).
double score_phi2(const Datapoint& x, std::span<const WWLogEntry> ww_day, const ClusterModel& model,
                  const ViolationMap& v);

/// 1 iff some record on day x.t - 1 has the same (c, r, d) and a different
/// action multiset. Records on other days are ignored.
double score_phi3(const Datapoint& x, std::span<const Datapoint> previous_day);
double score_phi3(const Datapoint& x, std::span<const WWLogEntry> previous_day);

/// Action multisets seen per (c, r, d) on one day; answers phi3 in
/// logarithmic time.
class AnomalyIndex {
 public:
  AnomalyIndex() = default;
  AnomalyIndex(Datestamp day, std::span<const Datapoint> records);
  AnomalyIndex(Datestamp day, std::span<const WWLogEntry> records);

  /// phi3 for x, which must be dated the day after the indexed day.
  double score(const Datapoint& x) const;

 private:
  std::optional<Datestamp> day_;
  std::map<RuleKey, std::set<ActionList>> seen_;
};

/// Per-violation-type and per-cluster run counts of one WW day, updated as
/// entries are appended during the day.
class DayCoverageCounts {
 public:
  DayCoverageCounts(const ViolationMap& v, const ClusterModel* model) : v_(&v), model_(model) {}

  void add(const TestKey& key);
  void add(std::span<const WWLogEntry> entries);

  double phi1(const std::string& violation_type) const;
  double phi2(std::size_t cluster) const;
  const std::map<std::string, std::size_t>& violation_counts() const noexcept { return by_violation_; }

 private:
  const ViolationMap* v_;
  const ClusterModel* model_;
  std::map<std::string, std::size_t> by_violation_;
  std::map<std::size_t, std::size_t> by_cluster_;
  std::size_t max_violation_ = 0;
  std::size_t max_cluster_ = 0;
};

ScoredCandidate score_combined(const Datapoint& x, const ScoreWeights& w, double phi1, double phi2,
                               double phi3);

/// Scores every candidate against shared day counts and an anomaly index.
std::vector<ScoredCandidate> score_candidates(std::span<const Datapoint> candidates,
                                              const ScoreWeights& w, const DayCoverageCounts& counts,
                                              const ClusterModel& model, const ViolationMap& v,
                                              const AnomalyIndex& anomalies);

/// Indices of the N highest-phi candidates, best first. Candidates whose key
/// is in `excluded` are skipped. Scores within 1e-12 of the selection
/// boundary are ties, and the boundary ties are filled by a uniformly random
/// subset drawn from `seed`.
std::vector<std::size_t> sample_top_n(std::span<const ScoredCandidate> candidates, std::size_t n,
                                      std::uint64_t seed, const std::set<TestKey>* excluded = nullptr);

}  // namespace infertest
