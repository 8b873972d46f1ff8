// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sav/collector.hpp"
#include "sav/inference.hpp"
#include "sav/netaddr.hpp"

namespace sav::report {

using inference::UnitVerdict;
using simnet::Verdict;

/// Prefix-to-country database with longest-match lookup.
class GeoDb {
 public:
  void add(const Prefix& p, const std::string& iso2);

  /// CSV lines `prefix,iso2`.
  static GeoDb parse(std::istream& in);
  static GeoDb parse_file(const std::string& path);

  std::optional<std::string> country_of(const Address& a) const;
  const std::vector<std::pair<Prefix, std::string>>& entries() const { return entries_; }

 private:
  std::vector<std::pair<Prefix, std::string>> entries_;
  PrefixMap<std::string> map_;
};

inline std::optional<std::string> country_of(const Address& a, const GeoDb& g) {
  return g.country_of(a);
}

/// Majority country over the 256 addresses of a v4 /24; ties break to the
/// lexicographically smaller iso2 code. None when no address geolocates.
std::optional<std::string> unit_country(const Prefix& unit, const GeoDb& g);

struct CountryStats {
  std::string iso2;
  size_t resolvers{0};
  size_t vulnerable_units{0};
  size_t partial_units{0};
  size_t total_units{0};
  double fraction{0.0};  // vulnerable / total, percent
};

/// Per-country fraction of fully vulnerable /24 units over all units mapped
/// to the country; partial units are reported separately, never inflating the
/// numerator. Optional resolver addresses fill the per-country resolver count.
std::vector<CountryStats> country_fractions(const std::vector<UnitVerdict>& verdicts,
                                            const GeoDb& g,
                                            const std::vector<Prefix>& all_units,
                                            const std::vector<Address>& resolver_addrs = {});

struct RoleOpennessRow {
  size_t all{0};
  size_t open{0};
  size_t closed{0};
};

struct LevelShareRow {
  UnitLevel level{UnitLevel::asn};
  std::optional<Family> family;  // unset for asn-level rows (v4/v6 can mix)
  size_t total_before{0};
  size_t total_after{0};
  double vulnerable_before{0}, vulnerable_after{0};
  double partial_before{0}, partial_after{0};
  double non_vulnerable_before{0}, non_vulnerable_after{0};
};

struct SummaryReport {
  // per family: forwarders / non-forwarders x all/open/closed
  std::map<Family, std::map<planner::ResolverRole, RoleOpennessRow>> scan_results;
  std::vector<LevelShareRow> filtering_granularity;
};

/// Scan-result counts (role x openness per family) plus per-level
/// before/after percentage triples; each triple sums to 100 +- 0.1 when the
/// level has data.
SummaryReport summary_tables(
    const std::vector<std::pair<UnitLevel, std::vector<UnitVerdict>>>& before,
    const std::vector<std::pair<UnitLevel, std::vector<UnitVerdict>>>& after,
    const std::vector<collector::ResolverObservation>& obs,
    const std::map<Address, collector::Openness>& open_map);

struct CohortBreakdown {
  size_t vulnerable{0};
  size_t partial{0};
  size_t non_vulnerable{0};
  size_t no_data{0};
};

/// Verdict histogram restricted to the given ASN set; set members without a
/// verdict count as no_data.
CohortBreakdown cohort_breakdown(const std::vector<UnitVerdict>& asn_verdicts,
                                 const std::set<uint32_t>& asn_set);

struct ComplexityRow {
  Verdict status{Verdict::vulnerable};
  size_t n_ases{0};
  double mean_peer_count{0.0};
  double stub_fraction{0.0};
  double mean_stability{0.0};
  std::vector<uint64_t> size_quartiles;  // min, q1, median, q3, max of as_size
};

/// Per verdict class: mean peer count, stub fraction, mean stability over
/// snapshots, and AS-size distribution sample points. Empty classes omitted.
std::vector<ComplexityRow> complexity_summary(
    const std::vector<UnitVerdict>& asn_verdicts,
    const std::vector<BgpTable>& snapshots, const AsGraph& graph);

// Rendering: CSV plus a human-readable aligned-text form.
void write_country_stats_csv(std::ostream& out, const std::vector<CountryStats>& stats);
void render_country_stats(std::ostream& out, const std::vector<CountryStats>& stats);
void render_summary(std::ostream& out, const SummaryReport& summary);
void render_cohort(std::ostream& out, const CohortBreakdown& cohort);
void render_complexity(std::ostream& out, const std::vector<ComplexityRow>& rows);

}  // namespace sav::report
