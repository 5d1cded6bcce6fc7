#include "infertest/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <ostream>

namespace infertest {

namespace {

struct DaySets {
  std::set<std::string> types;
  std::set<CategoricalPoint> pairs;
};

DaySets day_sets(Datestamp t, const WWLogStore& ww, const ViolationMap& v) {
  DaySets s;
  for (const auto& e : ww.day_slice(t)) {
    const auto p = categorical_point(e.key.content_type, e.key.report_tags, v);
    s.types.insert(p.violation_type);
    s.pairs.insert(p);
  }
  return s;
}

template <typename T>
double covered_fraction(const std::set<T>& day, const std::set<T>& universe, const char* what) {
  if (universe.empty())
    throw UndefinedCoverageError(std::string(what) + " coverage undefined: empty universe");
  std::size_t hit = 0;
  for (const auto& x : day)
    if (universe.count(x)) ++hit;
  return static_cast<double>(hit) / static_cast<double>(universe.size());
}

FrequencyTable tabulate(std::string category, const std::map<std::string, std::size_t>& counts) {
  FrequencyTable t{std::move(category), {counts.begin(), counts.end()}};
  std::stable_sort(t.rows.begin(), t.rows.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  return t;
}

}  // namespace

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::string format_rate(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", x);
  return buf;
}

CoverageUniverse ww_universe(const WWLogStore& ww, const ViolationMap& v,
                             std::optional<Datestamp> through) {
  CoverageUniverse u;
  ww.for_each([&](const WWLogEntry& e) {
    if (through && e.day > *through) return;
    const auto p = categorical_point(e.key.content_type, e.key.report_tags, v);
    u.violation_types.insert(p.violation_type);
    u.pairs.insert(p);
  });
  return u;
}

CoverageUniverse production_universe(const ProductionLogStore& production, const ViolationMap& v,
                                     std::optional<Datestamp> through) {
  CoverageUniverse u;
  production.for_each([&](const Datapoint& dp) {
    if (through && dp.day > *through) return;
    const auto p = categorical_point(dp.content_type, dp.report_tags, v);
    u.violation_types.insert(p.violation_type);
    u.pairs.insert(p);
  });
  return u;
}

double violation_coverage_mu(Datestamp t, const WWLogStore& ww, const ViolationMap& v) {
  return violation_coverage_mu(t, ww, v, ww_universe(ww, v));
}

double violation_coverage_mu(Datestamp t, const WWLogStore& ww, const ViolationMap& v,
                             const CoverageUniverse& universe) {
  return covered_fraction(day_sets(t, ww, v).types, universe.violation_types, "violation type");
}

double cross_product_coverage_nu(Datestamp t, const WWLogStore& ww, const ViolationMap& v) {
  return cross_product_coverage_nu(t, ww, v, ww_universe(ww, v));
}

double cross_product_coverage_nu(Datestamp t, const WWLogStore& ww, const ViolationMap& v,
                                 const CoverageUniverse& universe) {
  return covered_fraction(day_sets(t, ww, v).pairs, universe.pairs, "cross-product");
}

CoverageRow coverage_row(Datestamp t, const WWLogStore& ww, const ViolationMap& v,
                         const CoverageUniverse& universe) {
  const DaySets s = day_sets(t, ww, v);
  CoverageRow row;
  row.day = t;
  row.mu = covered_fraction(s.types, universe.violation_types, "violation type");
  row.nu = covered_fraction(s.pairs, universe.pairs, "cross-product");
  row.sampled = ww.day_slice(t).size();
  row.distinct_violation_types = s.types.size();
  row.distinct_pairs = s.pairs.size();
  return row;
}

void write_coverage_csv(std::ostream& out, std::span<const CoverageRow> rows) {
  out << "day,mu,nu,sampled,distinct_violation_types,distinct_pairs\n";
  for (const auto& r : rows)
    out << r.day.value << ',' << format_rate(r.mu) << ',' << format_rate(r.nu) << ',' << r.sampled
        << ',' << r.distinct_violation_types << ',' << r.distinct_pairs << '\n';
}

FunnelSummary phase_funnel(const PhaseLedger& ledger) {
  struct Acc {
    std::size_t n = 0, rated = 0;
    double sum = 0.0;
    void add(const LedgerEntry& e) {
      ++n;
      if (auto r = e.pass_rate()) {
        ++rated;
        sum += *r;
      }
    }
    PhaseStats stats() const {
      PhaseStats s{n, std::nullopt};
      if (rated) s.mean_pass_rate = sum / static_cast<double>(rated);
      return s;
    }
  } exploration, staging, deployment;

  for (const auto& [_, e] : ledger.entries()) {
    exploration.add(e);
    if (e.state >= Phase::staging) staging.add(e);
    if (e.state >= Phase::deployed) deployment.add(e);
  }
  return {exploration.stats(), staging.stats(), deployment.stats()};
}

void write_funnel_csv(std::ostream& out, const FunnelSummary& funnel) {
  out << "phase,tests,mean_pass_rate\n";
  auto row = [&out](const char* name, const PhaseStats& s) {
    out << name << ',' << s.tests << ',' << (s.mean_pass_rate ? format_rate(*s.mean_pass_rate) : "")
        << '\n';
  };
  row("exploration", funnel.exploration);
  row("staging", funnel.staging);
  row("deployment", funnel.deployment);
}

std::size_t FrequencyTable::total() const {
  std::size_t n = 0;
  for (const auto& [_, c] : rows) n += c;
  return n;
}

DistributionReport distribution_report(Phase phase, const PhaseLedger& ledger, const ViolationMap& v) {
  std::map<std::string, std::size_t> content, violation, decision, actions;
  for (const auto& [key, e] : ledger.entries()) {
    if (e.state < phase) continue;
    ++content[key.content_type];
    ++violation[v(key.report_tags)];
    ++decision[key.decision];
    ++actions[key.actions.empty() ? std::string("<none>") : join_labels(key.actions)];
  }
  DistributionReport r;
  r.phase = phase;
  r.content_type = tabulate("content_type", content);
  r.violation_type = tabulate("violation_type", violation);
  r.decision = tabulate("decision", decision);
  r.actions = tabulate("actions", actions);
  return r;
}

void write_distribution_csv(std::ostream& out, const DistributionReport& report) {
  out << "category,label,count\n";
  for (const FrequencyTable* t :
       {&report.content_type, &report.violation_type, &report.decision, &report.actions}) {
    for (const auto& [label, count] : t->rows) {
      out << t->category << ',' << csv_field(label) << ',' << count << '\n';
    }
  }
}

}  // namespace infertest
