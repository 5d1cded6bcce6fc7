#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "infertest/kmodes.hpp"
#include "infertest/log_model.hpp"
#include "infertest/pipeline.hpp"

namespace infertest {

class UndefinedCoverageError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// The reference sets coverage is measured against.
struct CoverageUniverse {
  std::set<std::string> violation_types;
  std::set<CategoricalPoint> pairs;
};

enum class CoverageUniverseSource { production, ww_logs };

/// Types and (c, v(r)) pairs in the WW logs, optionally up to a day.
CoverageUniverse ww_universe(const WWLogStore& ww, const ViolationMap& v,
                             std::optional<Datestamp> through = {});
CoverageUniverse production_universe(const ProductionLogStore& production, const ViolationMap& v,
                                     std::optional<Datestamp> through = {});

/// Fraction of violation types run on day t. The two-argument-store form
/// measures against all WW logs. Throws UndefinedCoverageError when the
/// universe is empty.
double violation_coverage_mu(Datestamp t, const WWLogStore& ww, const ViolationMap& v);
double violation_coverage_mu(Datestamp t, const WWLogStore& ww, const ViolationMap& v,
                             const CoverageUniverse& universe);

/// Same as mu, over (content type, violation type) pairs.
double cross_product_coverage_nu(Datestamp t, const WWLogStore& ww, const ViolationMap& v);
double cross_product_coverage_nu(Datestamp t, const WWLogStore& ww, const ViolationMap& v,
                                 const CoverageUniverse& universe);

struct CoverageRow {
  Datestamp day;
  double mu = 0.0;
  double nu = 0.0;
  std::size_t sampled = 0;
  std::size_t distinct_violation_types = 0;
  std::size_t distinct_pairs = 0;
};

CoverageRow coverage_row(Datestamp t, const WWLogStore& ww, const ViolationMap& v,
                         const CoverageUniverse& universe);

/// Header: day,mu,nu,sampled,distinct_violation_types,distinct_pairs
void write_coverage_csv(std::ostream& out, std::span<const CoverageRow> rows);

struct PhaseStats {
  std::size_t tests = 0;
  std::optional<double> mean_pass_rate;
};

/// Distinct keys ever in each phase and their mean cumulative pass rate.
struct FunnelSummary {
  PhaseStats exploration;
  PhaseStats staging;
  PhaseStats deployment;
};

FunnelSummary phase_funnel(const PhaseLedger& ledger);
/// Header: phase,tests,mean_pass_rate (empty when undefined)
void write_funnel_csv(std::ostream& out, const FunnelSummary& funnel);

struct FrequencyTable {
  std::string category;
  /// (label, count), count descending then label ascending.
  std::vector<std::pair<std::string, std::size_t>> rows;

  std::size_t total() const;
};

struct DistributionReport {
  Phase phase = Phase::exploration;
  FrequencyTable content_type{"content_type", {}};
  FrequencyTable violation_type{"violation_type", {}};
  FrequencyTable decision{"decision", {}};
  FrequencyTable actions{"actions", {}};
};

/// Frequency tables over the keys that ever reached `phase`. Actions are
/// counted per key as the joined multiset ("<none>" when empty).
DistributionReport distribution_report(Phase phase, const PhaseLedger& ledger, const ViolationMap& v);
/// Header: category,label,count
void write_distribution_csv(std::ostream& out, const DistributionReport& report);

/// Fixed-precision decimal used in every CSV.
std::string format_rate(double x);
/// Quotes a CSV field when it contains a comma, quote or newline.
std::string csv_field(std::string_view s);

}  // namespace infertest
