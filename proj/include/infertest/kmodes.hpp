#pragma once

#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace infertest {

/// An ordered (content type, violation type) pair.
struct CategoricalPoint {
  std::string content_type;
  std::string violation_type;

  auto operator<=>(const CategoricalPoint&) const = default;
};

/// Number of mismatched components, in {0, 1, 2}.
int distance(const CategoricalPoint& p, const CategoricalPoint& q);

struct KModesOptions {
  std::size_t restarts = 8;
  std::size_t max_iterations = 100;
  std::uint64_t seed = 0;
};

/// Fitted K-Modes centers. Immutable after construction.
class ClusterModel {
 public:
  ClusterModel(std::vector<CategoricalPoint> centers, std::uint64_t seed, std::size_t cost)
      : centers_(std::move(centers)), seed_(seed), cost_(cost) {}

  std::size_t k() const noexcept { return centers_.size(); }
  const std::vector<CategoricalPoint>& centers() const noexcept { return centers_; }
  std::uint64_t seed() const noexcept { return seed_; }
  /// Total distance of the fitted points to their assigned centers.
  std::size_t cost() const noexcept { return cost_; }

  /// Nearest center; ties go to the lowest index.
  std::size_t assign(const CategoricalPoint& p) const;

  /// {k, centers, cost} diagnostic dump.
  nlohmann::json to_json() const;

 private:
  std::vector<CategoricalPoint> centers_;
  std::uint64_t seed_;
  std::size_t cost_;
};

inline std::size_t assign(const CategoricalPoint& p, const ClusterModel& model) {
  return model.assign(p);
}

/// Per-restart cost after each assignment pass; filled when requested.
struct KModesDiagnostics {
  std::vector<std::vector<std::size_t>> cost_history;
  std::size_t best_restart = 0;
};

std::size_t distinct_count(std::span<const CategoricalPoint> points);

/// Sum over points of the distance to the nearest center.
std::size_t clustering_cost(std::span<const CategoricalPoint> points,
                            std::span<const CategoricalPoint> centers);

/// Lloyd-style K-Modes with `restarts` seeded initializations from distinct
/// data points; keeps the lowest-cost run. Requires 1 <= k <= distinct
/// points, otherwise throws std::invalid_argument.
ClusterModel kmodes_fit(std::span<const CategoricalPoint> points, std::size_t k,
                        const KModesOptions& options = {}, KModesDiagnostics* diagnostics = nullptr);

struct ElbowOptions {
  std::size_t k_min = 1;
  std::size_t k_max = 8;
  double epsilon = 0.1;
  KModesOptions fit;
};

struct ElbowResult {
  std::size_t k = 0;
  /// cost(k) for every k that was fitted, starting at the clamped k_min.
  std::vector<std::size_t> costs;
  ClusterModel model;
};

/// Smallest k whose relative cost improvement to k + 1 is below epsilon;
/// the top of the range otherwise. The range is clamped to the number of
/// distinct points. Throws std::invalid_argument on empty input.
ElbowResult elbow_select_k(std::span<const CategoricalPoint> points, const ElbowOptions& options = {});

}  // namespace infertest
