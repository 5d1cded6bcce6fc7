#include "infertest/kmodes.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <optional>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "infertest/random.hpp"

namespace infertest {

namespace {

// Points interned as integer ids. Ids follow lexicographic label order, so
// "smallest id" is "lexicographically smallest label".
struct EncodedPoint {
  std::uint32_t c;
  std::uint32_t v;
  bool operator==(const EncodedPoint&) const = default;
};

int encoded_distance(EncodedPoint a, EncodedPoint b) {
  return static_cast<int>(a.c != b.c) + static_cast<int>(a.v != b.v);
}

struct Encoded {
  std::vector<std::string> content_labels;
  std::vector<std::string> violation_labels;
  std::vector<EncodedPoint> distinct;
  std::vector<std::size_t> weight;

  CategoricalPoint decode(EncodedPoint p) const {
    return {content_labels[p.c], violation_labels[p.v]};
  }
};

Encoded encode(std::span<const CategoricalPoint> points) {
  std::map<CategoricalPoint, std::size_t> counts;
  for (const auto& p : points) ++counts[p];

  Encoded e;
  std::map<std::string, std::uint32_t> c_ids, v_ids;
  for (const auto& [p, _] : counts) {
    c_ids.emplace(p.content_type, 0);
    v_ids.emplace(p.violation_type, 0);
  }
  for (auto& [label, id] : c_ids) {
    id = static_cast<std::uint32_t>(e.content_labels.size());
    e.content_labels.push_back(label);
  }
  for (auto& [label, id] : v_ids) {
    id = static_cast<std::uint32_t>(e.violation_labels.size());
    e.violation_labels.push_back(label);
  }
  for (const auto& [p, n] : counts) {
    e.distinct.push_back({c_ids[p.content_type], v_ids[p.violation_type]});
    e.weight.push_back(n);
  }
  return e;
}

std::size_t nearest(EncodedPoint p, const std::vector<EncodedPoint>& centers) {
  std::size_t best = 0;
  int best_d = 3;
  for (std::size_t j = 0; j < centers.size(); ++j) {
    const int d = encoded_distance(p, centers[j]);
    if (d < best_d) {
      best_d = d;
      best = j;
    }
  }
  return best;
}

struct RunResult {
  std::vector<EncodedPoint> centers;
  std::size_t cost = 0;
  std::vector<std::size_t> history;
};

RunResult run_once(const Encoded& e, std::size_t k, std::size_t max_iterations, Rng& rng) {
  const std::size_t n = e.distinct.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  RunResult r;
  for (std::size_t j = 0; j < k; ++j) r.centers.push_back(e.distinct[order[j]]);

  std::vector<std::size_t> assignment(n);
  for (std::size_t iter = 0; iter < max_iterations; ++iter) {
    std::size_t cost = 0;
    for (std::size_t i = 0; i < n; ++i) {
      assignment[i] = nearest(e.distinct[i], r.centers);
      cost += e.weight[i] * static_cast<std::size_t>(encoded_distance(e.distinct[i], r.centers[assignment[i]]));
    }
    r.history.push_back(cost);

    // Component-wise weighted modes; ties resolve to the smallest id.
    std::vector<std::vector<std::size_t>> c_votes(k, std::vector<std::size_t>(e.content_labels.size()));
    std::vector<std::vector<std::size_t>> v_votes(k, std::vector<std::size_t>(e.violation_labels.size()));
    std::vector<std::size_t> members(k);
    for (std::size_t i = 0; i < n; ++i) {
      c_votes[assignment[i]][e.distinct[i].c] += e.weight[i];
      v_votes[assignment[i]][e.distinct[i].v] += e.weight[i];
      ++members[assignment[i]];
    }
    std::vector<EncodedPoint> next = r.centers;
    for (std::size_t j = 0; j < k; ++j) {
      if (members[j] == 0) continue;
      auto argmax = [](const std::vector<std::size_t>& votes) {
        return static_cast<std::uint32_t>(std::max_element(votes.begin(), votes.end()) - votes.begin());
      };
      next[j] = {argmax(c_votes[j]), argmax(v_votes[j])};
    }

    // A center that is empty or duplicates an earlier one owns no points, so
    // moving it onto the worst-served point cannot raise the cost.
    for (std::size_t j = 0; j < k; ++j) {
      const bool duplicate = std::find(next.begin(), next.begin() + static_cast<std::ptrdiff_t>(j),
                                       next[j]) != next.begin() + static_cast<std::ptrdiff_t>(j);
      if (members[j] != 0 && !duplicate) continue;
      std::optional<std::size_t> worst;
      int worst_d = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (std::find(next.begin(), next.end(), e.distinct[i]) != next.end()) continue;
        const int d = encoded_distance(e.distinct[i], next[nearest(e.distinct[i], next)]);
        if (!worst || d > worst_d) {
          worst = i;
          worst_d = d;
        }
      }
      if (worst) next[j] = e.distinct[*worst];
    }

    if (next == r.centers) break;
    r.centers = std::move(next);
  }

  r.cost = 0;
  for (std::size_t i = 0; i < n; ++i)
    r.cost += e.weight[i] * static_cast<std::size_t>(
                                encoded_distance(e.distinct[i], r.centers[nearest(e.distinct[i], r.centers)]));
  return r;
}

}  // namespace

int distance(const CategoricalPoint& p, const CategoricalPoint& q) {
  return static_cast<int>(p.content_type != q.content_type) +
         static_cast<int>(p.violation_type != q.violation_type);
}

std::size_t ClusterModel::assign(const CategoricalPoint& p) const {
  std::size_t best = 0;
  int best_d = 3;
  for (std::size_t j = 0; j < centers_.size(); ++j) {
    const int d = distance(p, centers_[j]);
    if (d < best_d) {
      best_d = d;
      best = j;
    }
  }
  return best;
}

nlohmann::json ClusterModel::to_json() const {
  nlohmann::json centers = nlohmann::json::array();
  for (const auto& c : centers_)
    centers.push_back({{"content_type", c.content_type}, {"violation_type", c.violation_type}});
  return {{"k", k()}, {"centers", centers}, {"cost", cost_}};
}

std::size_t distinct_count(std::span<const CategoricalPoint> points) {
  std::vector<CategoricalPoint> v(points.begin(), points.end());
  std::sort(v.begin(), v.end());
  return static_cast<std::size_t>(std::unique(v.begin(), v.end()) - v.begin());
}

std::size_t clustering_cost(std::span<const CategoricalPoint> points,
                            std::span<const CategoricalPoint> centers) {
  std::size_t total = 0;
  for (const auto& p : points) {
    int best = 2;
    for (const auto& c : centers) best = std::min(best, distance(p, c));
    total += static_cast<std::size_t>(best);
  }
  return total;
}

ClusterModel kmodes_fit(std::span<const CategoricalPoint> points, std::size_t k,
                        const KModesOptions& options, KModesDiagnostics* diagnostics) {
  const Encoded e = encode(points);
  if (k < 1 || k > e.distinct.size())
    throw std::invalid_argument("kmodes_fit: k=" + std::to_string(k) + " outside [1, " +
                                std::to_string(e.distinct.size()) + "]");

  const std::size_t restarts = std::max<std::size_t>(1, options.restarts);
  std::optional<RunResult> best;
  for (std::size_t r = 0; r < restarts; ++r) {
    Rng rng(derive_seed(options.seed, {k, r}));
    RunResult run = run_once(e, k, std::max<std::size_t>(1, options.max_iterations), rng);
    if (diagnostics) diagnostics->cost_history.push_back(run.history);
    if (!best || run.cost < best->cost) {
      if (diagnostics) diagnostics->best_restart = r;
      best = std::move(run);
    }
  }

  std::vector<CategoricalPoint> centers;
  for (auto c : best->centers) centers.push_back(e.decode(c));
  return ClusterModel(std::move(centers), options.seed, best->cost);
}

ElbowResult elbow_select_k(std::span<const CategoricalPoint> points, const ElbowOptions& options) {
  if (points.empty()) throw std::invalid_argument("elbow_select_k: no points");
  const std::size_t distinct = distinct_count(points);
  const std::size_t hi = std::clamp<std::size_t>(options.k_max, 1, distinct);
  const std::size_t lo = std::clamp<std::size_t>(options.k_min, 1, hi);

  ElbowResult result{0, {}, kmodes_fit(points, lo, options.fit)};
  result.costs.push_back(result.model.cost());
  for (std::size_t k = lo; k < hi; ++k) {
    ClusterModel next = kmodes_fit(points, k + 1, options.fit);
    const double cost_k = static_cast<double>(result.costs.back());
    const double improvement =
        cost_k == 0.0 ? 0.0 : (cost_k - static_cast<double>(next.cost())) / cost_k;
    if (improvement < options.epsilon) {
      result.k = k;
      return result;
    }
    result.costs.push_back(next.cost());
    result.model = std::move(next);
  }
  result.k = hi;
  return result;
}

}  // namespace infertest
