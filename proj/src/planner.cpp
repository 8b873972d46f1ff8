// SPDX-License-Identifier: Apache-2.0

#include "sav/planner.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

namespace sav::planner {

namespace {

Prefix group_of(const Address& a) {
  return Prefix::of(a, a.family == Family::v4 ? 24 : 40);
}

/// Seeded permutation that avoids placing two targets from the same /24
/// (or /40) next to each other whenever the mix of groups allows it.
std::vector<Address> ordered_targets(const std::vector<Address>& targets, uint64_t seed) {
  std::map<Prefix, std::vector<Address>> by_group;
  for (const auto& a : targets)
    by_group[group_of(a)].push_back(a);

  std::mt19937_64 rng(seed);
  std::vector<std::vector<Address>> groups;
  groups.reserve(by_group.size());
  for (auto& [p, members] : by_group) {
    std::shuffle(members.begin(), members.end(), rng);
    groups.push_back(std::move(members));
  }
  std::shuffle(groups.begin(), groups.end(), rng);

  std::vector<Address> out;
  out.reserve(targets.size());
  size_t last = groups.size();  // sentinel: no previous group
  for (size_t n = 0; n < targets.size(); ++n) {
    size_t pick = groups.size();
    size_t best = 0;
    for (size_t i = 0; i < groups.size(); ++i) {
      if (i == last || groups[i].empty())
        continue;
      if (groups[i].size() > best) {
        best = groups[i].size();
        pick = i;
      }
    }
    if (pick == groups.size())
      pick = last;  // only the previous group has targets left
    out.push_back(groups[pick].back());
    groups[pick].pop_back();
    last = pick;
  }
  return out;
}

std::vector<Address> enumerate_v4_hosts(const Prefix& p, bool skip_boundary) {
  std::vector<Address> out;
  u128 first = p.first().value;
  u128 last = p.last().value;
  for (u128 v = first;; ++v) {
    unsigned octet = static_cast<unsigned>(v & 0xff);
    if (!skip_boundary || (octet != 0 && octet != 255))
      out.push_back(Address::v4(static_cast<uint32_t>(v)));
    if (v == last)
      break;
  }
  return out;
}

codec::TransportZone main_zone(Family f) {
  return f == Family::v4 ? codec::TransportZone::v4_only : codec::TransportZone::v6_only;
}

void emit_pair(ScanPlan& plan, const Address& dst, codec::TransportZone zone,
               bool nf, int scan_id, Purpose purpose, codec::NonceGenerator& nonces,
               const PlannerConfig& cfg) {
  const Address& scanner =
      dst.family == Family::v4 ? cfg.scanner_v4 : cfg.scanner_v6;
  codec::ProbeDomain d;
  d.target = dst;
  d.scan_id = scan_id;
  d.nf = nf;
  d.transport_zone = zone;

  d.nonce = nonces.next();
  d.kind = codec::ProbeKind::spoofed;
  plan.probes.push_back({dst, dst.next(), codec::encode(d, cfg.zones),
                         codec::ProbeKind::spoofed, purpose});

  d.nonce = nonces.next();
  d.kind = codec::ProbeKind::unspoofed;
  plan.probes.push_back({dst, scanner, codec::encode(d, cfg.zones),
                         codec::ProbeKind::unspoofed, purpose});
}

ScanPlan plan_main(std::vector<Address> candidates, const std::vector<Prefix>& exclusions,
                   uint64_t seed, const PlannerConfig& cfg, Purpose purpose, int scan_id) {
  PrefixSet excluded;
  for (const auto& p : exclusions)
    excluded.insert(p);

  ScanPlan plan;
  plan.seed = seed;
  std::vector<Address> targets;
  for (const auto& a : candidates) {
    if (excluded.covers(a))
      ++plan.excluded_count;
    else
      targets.push_back(a);
  }
  if (targets.empty())
    throw std::runtime_error("empty target set");

  codec::NonceGenerator nonces(seed);
  for (const auto& dst : ordered_targets(targets, seed))
    emit_pair(plan, dst, main_zone(dst.family), false, scan_id, purpose, nonces, cfg);
  return plan;
}

}  // namespace

std::string to_string(Purpose p) {
  switch (p) {
    case Purpose::main_scan: return "main_scan";
    case Purpose::traversal_nf: return "traversal_nf";
    case Purpose::traversal_fwd: return "traversal_fwd";
    case Purpose::rescan: return "rescan";
  }
  return "?";
}

std::optional<Purpose> parse_purpose(std::string_view s) {
  if (s == "main_scan") return Purpose::main_scan;
  if (s == "traversal_nf") return Purpose::traversal_nf;
  if (s == "traversal_fwd") return Purpose::traversal_fwd;
  if (s == "rescan") return Purpose::rescan;
  return std::nullopt;
}

std::string to_string(ResolverRole r) {
  return r == ResolverRole::forwarder ? "forwarder" : "non_forwarder";
}

std::optional<ResolverRole> parse_resolver_role(std::string_view s) {
  if (s == "forwarder") return ResolverRole::forwarder;
  if (s == "non_forwarder") return ResolverRole::non_forwarder;
  return std::nullopt;
}

void ScanPlan::serialize(std::ostream& out) const {
  for (const auto& p : probes)
    out << p.dst.to_string() << '\t' << p.src.to_string() << '\t' << p.qname
        << '\t' << codec::to_string(p.kind) << '\t' << to_string(p.purpose) << '\n';
}

std::string ScanPlan::serialize() const {
  std::ostringstream out;
  serialize(out);
  return out.str();
}

ScanPlan ScanPlan::parse(std::istream& in) {
  ScanPlan plan;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#')
      continue;
    std::vector<std::string> fields;
    size_t start = 0;
    while (start <= line.size()) {
      size_t tab = line.find('\t', start);
      if (tab == std::string::npos) {
        fields.push_back(line.substr(start));
        break;
      }
      fields.push_back(line.substr(start, tab - start));
      start = tab + 1;
    }
    if (fields.size() != 5)
      throw std::runtime_error("malformed plan line: " + line);
    auto dst = Address::parse(fields[0]);
    auto src = Address::parse(fields[1]);
    auto kind = codec::parse_probe_kind(fields[3]);
    auto purpose = parse_purpose(fields[4]);
    if (!dst || !src || !kind || !purpose)
      throw std::runtime_error("malformed plan line: " + line);
    plan.probes.push_back({*dst, *src, fields[2], *kind, *purpose});
  }
  return plan;
}

ScanPlan ScanPlan::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot open " + path);
  return parse(in);
}

ScanPlan plan_ipv4(const BgpTable& t, const std::vector<Prefix>& exclusions,
                   uint64_t seed, const PlannerConfig& cfg) {
  if (t.empty())
    throw std::runtime_error("empty bgp table");
  std::vector<Address> candidates;
  for (const auto& p : aggregate_prefixes(t)) {
    if (p.base.family != Family::v4)
      continue;
    auto hosts = enumerate_v4_hosts(p, cfg.skip_boundary);
    candidates.insert(candidates.end(), hosts.begin(), hosts.end());
  }
  return plan_main(std::move(candidates), exclusions, seed, cfg, Purpose::main_scan,
                   cfg.scan_id);
}

ScanPlan plan_ipv6(const std::vector<Address>& hitlist,
                   const std::vector<Prefix>& aliased,
                   const std::vector<Prefix>& exclusions, uint64_t seed,
                   const PlannerConfig& cfg) {
  auto candidates = dealias_hitlist(hitlist, aliased);
  return plan_main(std::move(candidates), exclusions, seed, cfg, Purpose::main_scan,
                   cfg.scan_id);
}

ScanPlan plan_traversal(const std::vector<std::pair<Address, ResolverRole>>& discovered,
                        uint64_t seed, const PlannerConfig& cfg) {
  ScanPlan plan;
  plan.seed = seed;
  codec::NonceGenerator nonces(seed);

  std::vector<std::pair<Address, ResolverRole>> ordered = discovered;
  std::mt19937_64 rng(seed);
  std::shuffle(ordered.begin(), ordered.end(), rng);

  for (const auto& [addr, role] : ordered) {
    codec::TransportZone zone = addr.family == Family::v4
                                    ? codec::TransportZone::v4_to_v6
                                    : codec::TransportZone::v6_to_v4;
    bool nf = role == ResolverRole::non_forwarder;
    emit_pair(plan, addr, zone, nf, cfg.scan_id,
              nf ? Purpose::traversal_nf : Purpose::traversal_fwd, nonces, cfg);
  }
  return plan;
}

ScanPlan plan_rescan(const std::vector<NetworkUnit>& units,
                     const std::vector<Address>& prior_targets, uint64_t seed,
                     const PlannerConfig& cfg) {
  std::set<Address> candidates;
  for (const auto& u : units) {
    if (u.level == UnitLevel::slash24) {
      for (const auto& a : enumerate_v4_hosts(u.prefix, cfg.skip_boundary))
        candidates.insert(a);
    } else if (u.level == UnitLevel::slash40) {
      for (const auto& a : prior_targets)
        if (u.prefix.contains(a))
          candidates.insert(a);
    } else {
      throw std::invalid_argument("rescan units must be slash24 or slash40");
    }
  }

  ScanPlan plan;
  plan.seed = seed;
  codec::NonceGenerator nonces(seed);
  std::vector<Address> targets(candidates.begin(), candidates.end());
  int scan_id = cfg.scan_id + 1;
  for (const auto& dst : ordered_targets(targets, seed))
    emit_pair(plan, dst, main_zone(dst.family), false, scan_id, Purpose::rescan,
              nonces, cfg);
  return plan;
}

}  // namespace sav::planner
