// SPDX-License-Identifier: Apache-2.0

#include "sav/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace sav::report {

void GeoDb::add(const Prefix& p, const std::string& iso2) {
  if (iso2.size() != 2)
    throw std::invalid_argument("country code must be two letters");
  entries_.emplace_back(p, iso2);
  map_.insert(p, iso2);
}

GeoDb GeoDb::parse(std::istream& in) {
  GeoDb g;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#')
      continue;
    auto comma = line.find(',');
    if (comma == std::string::npos)
      continue;
    auto prefix = Prefix::parse(line.substr(0, comma));
    auto iso2 = line.substr(comma + 1);
    if (!prefix || iso2.size() != 2)
      continue;
    g.add(*prefix, iso2);
  }
  return g;
}

GeoDb GeoDb::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot open " + path);
  return parse(in);
}

std::optional<std::string> GeoDb::country_of(const Address& a) const {
  auto hit = map_.lookup(a);
  if (!hit)
    return std::nullopt;
  return hit->second;
}

std::optional<std::string> unit_country(const Prefix& unit, const GeoDb& g) {
  if (unit.base.family != Family::v4 || unit.length != 24)
    throw std::invalid_argument("unit_country expects a v4 /24");
  std::map<std::string, int> votes;
  for (uint32_t i = 0; i < 256; ++i) {
    auto c = g.country_of(Address::v4(static_cast<uint32_t>(unit.base.value) + i));
    if (c)
      ++votes[*c];
  }
  if (votes.empty())
    return std::nullopt;
  // map iteration is iso2-ascending, so strict > keeps the lexicographically
  // smaller code on ties
  std::string best;
  int best_votes = 0;
  for (const auto& [iso2, n] : votes)
    if (n > best_votes) {
      best = iso2;
      best_votes = n;
    }
  return best;
}

std::vector<CountryStats> country_fractions(const std::vector<UnitVerdict>& verdicts,
                                            const GeoDb& g,
                                            const std::vector<Prefix>& all_units,
                                            const std::vector<Address>& resolver_addrs) {
  std::map<std::string, CountryStats> by_country;
  std::map<Prefix, std::string> unit_to_country;
  for (const auto& u : all_units) {
    auto c = unit_country(u, g);
    if (!c)
      continue;
    unit_to_country[u] = *c;
    auto& stats = by_country[*c];
    stats.iso2 = *c;
    ++stats.total_units;
  }
  for (const auto& v : verdicts) {
    if (v.unit.level != UnitLevel::slash24)
      continue;
    auto it = unit_to_country.find(v.unit.prefix);
    if (it == unit_to_country.end())
      continue;
    if (v.status == Verdict::vulnerable)
      ++by_country[it->second].vulnerable_units;
    else if (v.status == Verdict::partial)
      ++by_country[it->second].partial_units;
  }
  for (const auto& a : resolver_addrs) {
    auto c = g.country_of(a);
    if (c && by_country.count(*c))
      ++by_country[*c].resolvers;
  }
  std::vector<CountryStats> out;
  for (auto& [iso2, stats] : by_country) {
    if (stats.total_units > 0)
      stats.fraction = 100.0 * static_cast<double>(stats.vulnerable_units) /
                       static_cast<double>(stats.total_units);
    out.push_back(stats);
  }
  std::sort(out.begin(), out.end(), [](const CountryStats& a, const CountryStats& b) {
    if (a.fraction != b.fraction)
      return a.fraction > b.fraction;
    return a.iso2 < b.iso2;
  });
  return out;
}

namespace {

LevelShareRow make_share_row(UnitLevel level, std::optional<Family> family,
                             const std::vector<UnitVerdict>& before,
                             const std::vector<UnitVerdict>& after) {
  LevelShareRow row;
  row.level = level;
  row.family = family;
  auto tally = [&](const std::vector<UnitVerdict>& vs, size_t& total, double& vuln,
                   double& part, double& nonvuln) {
    size_t v = 0, p = 0, n = 0;
    for (const auto& uv : vs) {
      if (uv.unit.level != level)
        continue;
      if (family && uv.unit.level != UnitLevel::asn &&
          uv.unit.prefix.base.family != *family)
        continue;
      switch (uv.status) {
        case Verdict::vulnerable: ++v; break;
        case Verdict::partial: ++p; break;
        case Verdict::non_vulnerable: ++n; break;
        case Verdict::no_data: break;
      }
    }
    total = v + p + n;
    if (total > 0) {
      vuln = 100.0 * double(v) / double(total);
      part = 100.0 * double(p) / double(total);
      nonvuln = 100.0 * double(n) / double(total);
    }
  };
  tally(before, row.total_before, row.vulnerable_before, row.partial_before,
        row.non_vulnerable_before);
  tally(after, row.total_after, row.vulnerable_after, row.partial_after,
        row.non_vulnerable_after);
  return row;
}

}  // namespace

SummaryReport summary_tables(
    const std::vector<std::pair<UnitLevel, std::vector<UnitVerdict>>>& before,
    const std::vector<std::pair<UnitLevel, std::vector<UnitVerdict>>>& after,
    const std::vector<collector::ResolverObservation>& obs,
    const std::map<Address, collector::Openness>& open_map) {
  SummaryReport out;

  std::map<Address, planner::ResolverRole> role_of;
  for (const auto& o : obs)
    role_of.emplace(o.target, o.role);
  for (const auto& [target, role] : role_of) {
    auto& row = out.scan_results[target.family][role];
    ++row.all;
    auto it = open_map.find(target);
    if (it != open_map.end() && it->second == collector::Openness::open)
      ++row.open;
    else
      ++row.closed;
  }

  auto find_level = [](const std::vector<std::pair<UnitLevel, std::vector<UnitVerdict>>>& vs,
                       UnitLevel level) -> const std::vector<UnitVerdict>* {
    for (const auto& [l, v] : vs)
      if (l == level)
        return &v;
    return nullptr;
  };
  static const std::vector<UnitVerdict> kEmpty;
  for (UnitLevel level : {UnitLevel::asn, UnitLevel::bgp_prefix, UnitLevel::slash24,
                          UnitLevel::slash40}) {
    const auto* b = find_level(before, level);
    const auto* a = find_level(after, level);
    if (!b && !a)
      continue;
    const auto& bv = b ? *b : kEmpty;
    const auto& av = a ? *a : kEmpty;
    if (level == UnitLevel::asn) {
      out.filtering_granularity.push_back(
          make_share_row(level, std::nullopt, bv, av));
    } else if (level == UnitLevel::slash24) {
      out.filtering_granularity.push_back(make_share_row(level, Family::v4, bv, av));
    } else if (level == UnitLevel::slash40) {
      out.filtering_granularity.push_back(make_share_row(level, Family::v6, bv, av));
    } else {
      out.filtering_granularity.push_back(make_share_row(level, Family::v4, bv, av));
      out.filtering_granularity.push_back(make_share_row(level, Family::v6, bv, av));
    }
  }
  return out;
}

CohortBreakdown cohort_breakdown(const std::vector<UnitVerdict>& asn_verdicts,
                                 const std::set<uint32_t>& asn_set) {
  std::map<uint32_t, Verdict> status_of;
  for (const auto& v : asn_verdicts)
    if (v.unit.level == UnitLevel::asn)
      status_of[v.unit.asn] = v.status;
  CohortBreakdown out;
  for (uint32_t asn : asn_set) {
    auto it = status_of.find(asn);
    Verdict s = it == status_of.end() ? Verdict::no_data : it->second;
    switch (s) {
      case Verdict::vulnerable: ++out.vulnerable; break;
      case Verdict::partial: ++out.partial; break;
      case Verdict::non_vulnerable: ++out.non_vulnerable; break;
      case Verdict::no_data: ++out.no_data; break;
    }
  }
  return out;
}

std::vector<ComplexityRow> complexity_summary(
    const std::vector<UnitVerdict>& asn_verdicts,
    const std::vector<BgpTable>& snapshots, const AsGraph& graph) {
  std::map<Verdict, std::vector<uint32_t>> classes;
  for (const auto& v : asn_verdicts)
    if (v.unit.level == UnitLevel::asn)
      classes[v.status].push_back(v.unit.asn);

  std::vector<ComplexityRow> out;
  for (Verdict status : {Verdict::vulnerable, Verdict::partial, Verdict::non_vulnerable,
                         Verdict::no_data}) {
    auto it = classes.find(status);
    if (it == classes.end() || it->second.empty())
      continue;
    const auto& asns = it->second;
    ComplexityRow row;
    row.status = status;
    row.n_ases = asns.size();

    double peer_sum = 0.0;
    size_t stubs = 0;
    double stability_sum = 0.0;
    size_t stability_n = 0;
    std::vector<uint64_t> sizes;
    for (uint32_t asn : asns) {
      peer_sum += static_cast<double>(graph.peer_count(asn));
      if (graph.is_stub(asn))
        ++stubs;
      if (snapshots.size() >= 2) {
        try {
          stability_sum += as_stability(snapshots, asn);
          ++stability_n;
        } catch (const std::runtime_error&) {
          // asn absent from every snapshot: no stability sample
        }
      }
      if (!snapshots.empty())
        sizes.push_back(as_size(snapshots.front(), asn));
    }
    row.mean_peer_count = peer_sum / static_cast<double>(asns.size());
    row.stub_fraction = static_cast<double>(stubs) / static_cast<double>(asns.size());
    row.mean_stability =
        stability_n > 0 ? stability_sum / static_cast<double>(stability_n) : 0.0;
    if (!sizes.empty()) {
      std::sort(sizes.begin(), sizes.end());
      auto at = [&](double q) {
        size_t idx = static_cast<size_t>(std::llround(q * double(sizes.size() - 1)));
        return sizes[idx];
      };
      row.size_quartiles = {at(0.0), at(0.25), at(0.5), at(0.75), at(1.0)};
    }
    out.push_back(std::move(row));
  }
  return out;
}

void write_country_stats_csv(std::ostream& out, const std::vector<CountryStats>& stats) {
  out << "iso2,resolvers,vulnerable_units,partial_units,total_units,fraction_pct\n";
  for (const auto& s : stats)
    out << s.iso2 << ',' << s.resolvers << ',' << s.vulnerable_units << ','
        << s.partial_units << ',' << s.total_units << ',' << std::fixed
        << std::setprecision(2) << s.fraction << '\n';
}

void render_country_stats(std::ostream& out, const std::vector<CountryStats>& stats) {
  out << std::left << std::setw(6) << "iso2" << std::right << std::setw(10)
      << "resolvers" << std::setw(12) << "vulnerable" << std::setw(10) << "partial"
      << std::setw(8) << "total" << std::setw(10) << "pct" << '\n';
  for (const auto& s : stats)
    out << std::left << std::setw(6) << s.iso2 << std::right << std::setw(10)
        << s.resolvers << std::setw(12) << s.vulnerable_units << std::setw(10)
        << s.partial_units << std::setw(8) << s.total_units << std::setw(10)
        << std::fixed << std::setprecision(2) << s.fraction << '\n';
}

void render_summary(std::ostream& out, const SummaryReport& summary) {
  out << "scan results (targets by role and openness)\n";
  for (const auto& [family, roles] : summary.scan_results) {
    for (const auto& [role, row] : roles) {
      out << "  " << (family == Family::v4 ? "IPv4" : "IPv6") << ' ' << std::left
          << std::setw(14) << planner::to_string(role) << std::right << " all="
          << std::setw(8) << row.all << " open=" << std::setw(8) << row.open
          << " closed=" << std::setw(8) << row.closed << '\n';
    }
  }
  out << "inbound filtering granularity (% before -> after)\n";
  for (const auto& row : summary.filtering_granularity) {
    std::string label = to_string(row.level);
    if (row.family)
      label += *row.family == Family::v4 ? " v4" : " v6";
    out << "  " << std::left << std::setw(16) << label << std::right << std::fixed
        << std::setprecision(2) << " vulnerable " << std::setw(6)
        << row.vulnerable_before << " -> " << std::setw(6) << row.vulnerable_after
        << "  partial " << std::setw(6) << row.partial_before << " -> " << std::setw(6)
        << row.partial_after << "  non-vulnerable " << std::setw(6)
        << row.non_vulnerable_before << " -> " << std::setw(6)
        << row.non_vulnerable_after << '\n';
  }
}

void render_cohort(std::ostream& out, const CohortBreakdown& cohort) {
  out << "vulnerable=" << cohort.vulnerable << " partial=" << cohort.partial
      << " non_vulnerable=" << cohort.non_vulnerable << " no_data=" << cohort.no_data
      << '\n';
}

void render_complexity(std::ostream& out, const std::vector<ComplexityRow>& rows) {
  for (const auto& row : rows) {
    out << std::left << std::setw(16) << simnet::to_string(row.status) << std::right
        << " n=" << row.n_ases << std::fixed << std::setprecision(3)
        << " mean_peers=" << row.mean_peer_count << " stub_fraction="
        << row.stub_fraction << " mean_stability=" << row.mean_stability;
    if (!row.size_quartiles.empty()) {
      out << " size_quartiles=";
      for (size_t i = 0; i < row.size_quartiles.size(); ++i)
        out << (i ? "/" : "") << row.size_quartiles[i];
    }
    out << '\n';
  }
}

}  // namespace sav::report
