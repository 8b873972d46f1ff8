// SPDX-License-Identifier: Apache-2.0

#include "sav/inference.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

namespace sav::inference {

namespace {

std::optional<NetworkUnit> unit_for(const Address& a, UnitLevel level, const BgpTable& t) {
  if ((level == UnitLevel::slash24 && a.family != Family::v4) ||
      (level == UnitLevel::slash40 && a.family != Family::v6))
    return std::nullopt;
  return unit_of(a, level, t);
}

UnitVerdict verdict_from_group(const NetworkUnit& unit,
                               const std::vector<Outcome>& outcomes) {
  UnitVerdict v;
  v.unit = unit;
  v.n_measurements = outcomes.size();
  bool any_spoof = std::any_of(outcomes.begin(), outcomes.end(),
                               [](Outcome o) { return o == Outcome::spoof_resolved; });
  bool any_open = std::any_of(outcomes.begin(), outcomes.end(),
                              [](Outcome o) { return o == Outcome::open_no_spoof; });
  if (any_spoof && any_open)
    v.status = Verdict::partial;
  else if (any_spoof)
    v.status = Verdict::vulnerable;
  else if (any_open)
    v.status = Verdict::non_vulnerable;
  else
    v.status = Verdict::no_data;
  return v;
}

}  // namespace

std::string to_string(Outcome o) {
  return o == Outcome::spoof_resolved ? "spoof_resolved" : "open_no_spoof";
}

std::optional<Outcome> parse_outcome(std::string_view s) {
  if (s == "spoof_resolved") return Outcome::spoof_resolved;
  if (s == "open_no_spoof") return Outcome::open_no_spoof;
  return std::nullopt;
}

std::vector<Measurement> measurements(
    const std::vector<collector::ResolverObservation>& obs,
    const std::map<Address, collector::Openness>& open_map) {
  std::map<Address, std::pair<bool, int>> spoofed;  // target -> (seen, max scan id)
  for (const auto& o : obs) {
    if (o.kind != codec::ProbeKind::spoofed)
      continue;
    auto& entry = spoofed[o.target];
    entry.first = true;
    entry.second = std::max(entry.second, o.scan_id);
  }
  std::vector<Measurement> out;
  for (const auto& [target, entry] : spoofed)
    out.push_back({target, Outcome::spoof_resolved, entry.second});
  for (const auto& [target, state] : open_map) {
    if (state != collector::Openness::open)
      continue;
    if (spoofed.count(target))
      continue;
    out.push_back({target, Outcome::open_no_spoof, 1});
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<UnitVerdict> infer(const std::vector<Measurement>& ms, UnitLevel level,
                               const BgpTable& t) {
  std::map<NetworkUnit, std::vector<Outcome>> groups;
  for (const auto& m : ms) {
    auto unit = unit_for(m.target, level, t);
    if (!unit)
      continue;
    groups[*unit].push_back(m.outcome);
  }
  std::vector<UnitVerdict> out;
  out.reserve(groups.size());
  for (const auto& [unit, outcomes] : groups)
    out.push_back(verdict_from_group(unit, outcomes));
  return out;
}

std::vector<UnitVerdict> merge_rescan(const std::vector<UnitVerdict>& before,
                                      const std::vector<Measurement>& rescan_ms,
                                      UnitLevel level, const BgpTable& t) {
  std::map<NetworkUnit, std::vector<Outcome>> rescan_groups;
  std::map<NetworkUnit, const UnitVerdict*> prior;
  for (const auto& v : before)
    prior[v.unit] = &v;
  for (const auto& m : rescan_ms) {
    auto unit = unit_for(m.target, level, t);
    if (!unit)
      continue;
    auto it = prior.find(*unit);
    if (it == prior.end() || it->second->status != Verdict::partial)
      throw std::invalid_argument("rescan measurement for a non-partial unit: " +
                                  unit->key());
    rescan_groups[*unit].push_back(m.outcome);
  }

  std::vector<UnitVerdict> out;
  out.reserve(before.size());
  for (const auto& v : before) {
    auto it = rescan_groups.find(v.unit);
    if (it != rescan_groups.end()) {
      out.push_back(verdict_from_group(v.unit, it->second));
    } else if (v.status == Verdict::partial) {
      UnitVerdict kept = v;
      kept.rescan_unresponsive = true;
      out.push_back(kept);
    } else {
      out.push_back(v);
    }
  }
  return out;
}

DualStackResult dual_stack_candidates(
    const std::vector<collector::ResolverObservation>& traversal_obs) {
  DualStackResult out;
  std::set<std::pair<Address, Address>> seen_pairs;
  std::set<Address> seen_addrs;
  for (const auto& o : traversal_obs) {
    bool v4_side = o.transport_zone == codec::TransportZone::v4_to_v6;
    bool v6_side = o.transport_zone == codec::TransportZone::v6_to_v4;
    if (!v4_side && !v6_side)
      continue;
    if (!o.nf_flag) {
      // forwarder traversal traffic only reveals addresses of the other family
      if (seen_addrs.insert(o.observed_src).second)
        out.hitlist_additions.push_back(o.observed_src);
      continue;
    }
    DualStackPair pair;
    if (v4_side) {
      if (o.target.family != Family::v4 || o.observed_src.family != Family::v6)
        continue;
      pair.v4 = o.target;
      pair.v6 = o.observed_src;
      pair.discovered_via = DiscoveredVia::v4_to_v6;
    } else {
      if (o.target.family != Family::v6 || o.observed_src.family != Family::v4)
        continue;
      pair.v4 = o.observed_src;
      pair.v6 = o.target;
      pair.discovered_via = DiscoveredVia::v6_to_v4;
    }
    if (seen_pairs.emplace(pair.v4, pair.v6).second)
      out.pairs.push_back(std::move(pair));
  }
  return out;
}

std::string to_string(FingerprintProtocol p) {
  switch (p) {
    case FingerprintProtocol::dns_version_bind: return "dns_version_bind";
    case FingerprintProtocol::dns_ptr: return "dns_ptr";
    case FingerprintProtocol::ntp: return "ntp";
    case FingerprintProtocol::http: return "http";
    case FingerprintProtocol::https: return "https";
    case FingerprintProtocol::ssh: return "ssh";
    case FingerprintProtocol::smtp: return "smtp";
  }
  return "?";
}

std::optional<FingerprintProtocol> parse_fingerprint_protocol(std::string_view s) {
  if (s == "dns_version_bind") return FingerprintProtocol::dns_version_bind;
  if (s == "dns_ptr") return FingerprintProtocol::dns_ptr;
  if (s == "ntp") return FingerprintProtocol::ntp;
  if (s == "http") return FingerprintProtocol::http;
  if (s == "https") return FingerprintProtocol::https;
  if (s == "ssh") return FingerprintProtocol::ssh;
  if (s == "smtp") return FingerprintProtocol::smtp;
  return std::nullopt;
}

std::vector<FingerprintEvidence> parse_fingerprints(std::istream& in) {
  std::vector<FingerprintEvidence> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#')
      continue;
    std::istringstream ls(line);
    std::string addr_s, proto_s, tok;
    if (!(ls >> addr_s >> proto_s))
      continue;
    auto addr = Address::parse(addr_s);
    auto proto = parse_fingerprint_protocol(proto_s);
    if (!addr || !proto)
      continue;
    FingerprintEvidence ev;
    ev.addr = *addr;
    ev.protocol = *proto;
    while (ls >> tok) {
      auto eq = tok.find('=');
      if (eq == std::string::npos)
        continue;
      ev.attributes[tok.substr(0, eq)] = tok.substr(eq + 1);
    }
    if (!ev.attributes.empty())
      out.push_back(std::move(ev));
  }
  return out;
}

namespace {

using AttrMap = std::map<std::string, std::string>;

bool attrs_equal(const AttrMap& a, const AttrMap& b, std::initializer_list<const char*> keys) {
  for (const char* k : keys) {
    auto ia = a.find(k);
    auto ib = b.find(k);
    if (ia == a.end() || ib == b.end() || ia->second != ib->second)
      return false;
  }
  return true;
}

bool protocol_matches(FingerprintProtocol p, const AttrMap& a, const AttrMap& b,
                      const MatchConfig& cfg) {
  switch (p) {
    case FingerprintProtocol::dns_version_bind: {
      auto ia = a.find("version");
      auto ib = b.find("version");
      if (ia == a.end() || ib == b.end())
        return false;
      if (cfg.version_bind_denylist.count(ia->second) ||
          cfg.version_bind_denylist.count(ib->second))
        return false;
      return ia->second == ib->second;
    }
    case FingerprintProtocol::dns_ptr:
      return attrs_equal(a, b, {"name"});
    case FingerprintProtocol::ntp:
      return attrs_equal(a, b, {"version", "system"});
    case FingerprintProtocol::http:
      return attrs_equal(a, b, {"server"});
    case FingerprintProtocol::https:
      return attrs_equal(a, b, {"cert_digest", "cipher_suite", "tls_version"});
    case FingerprintProtocol::ssh:
      return attrs_equal(a, b, {"software", "hostkey"});
    case FingerprintProtocol::smtp:
      return attrs_equal(a, b, {"cert_digest"});
  }
  return false;
}

}  // namespace

DualStackPair match_fingerprints(DualStackPair pair,
                                 const std::vector<FingerprintEvidence>& evidence,
                                 const MatchConfig& cfg) {
  std::map<FingerprintProtocol, const AttrMap*> side4, side6;
  for (const auto& ev : evidence) {
    if (ev.addr == pair.v4)
      side4.emplace(ev.protocol, &ev.attributes);
    else if (ev.addr == pair.v6)
      side6.emplace(ev.protocol, &ev.attributes);
  }
  pair.matched_protocols.clear();
  for (const auto& [proto, attrs4] : side4) {
    auto it = side6.find(proto);
    if (it == side6.end())
      continue;
    if (protocol_matches(proto, *attrs4, *it->second, cfg))
      pair.matched_protocols.insert(to_string(proto));
  }
  pair.confirmed = !pair.matched_protocols.empty();
  return pair;
}

std::string to_string(OutboundSource s) {
  switch (s) {
    case OutboundSource::spoofer_received: return "spoofer_received";
    case OutboundSource::spoofer_blocked: return "spoofer_blocked";
    case OutboundSource::fwd_misconfig: return "fwd_misconfig";
  }
  return "?";
}

std::string to_string(OutboundVerdict v) {
  return v == OutboundVerdict::vulnerable_out ? "vulnerable_out" : "non_vulnerable_out";
}

std::vector<SpooferRow> parse_spoofer_csv(std::istream& in, size_t* malformed) {
  std::vector<SpooferRow> out;
  size_t bad = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#')
      continue;
    auto comma = line.find(',');
    if (comma == std::string::npos) {
      ++bad;
      continue;
    }
    auto prefix = Prefix::parse(line.substr(0, comma));
    auto result = line.substr(comma + 1);
    if (!prefix || (result != "received" && result != "blocked" &&
                    result != "rewritten" && result != "unknown")) {
      ++bad;
      continue;
    }
    out.push_back({*prefix, result});
  }
  if (malformed)
    *malformed = bad;
  return out;
}

std::vector<OutboundEvidence> outbound_evidence(
    const std::vector<SpooferRow>& spoofer_rows,
    const std::vector<collector::ForwarderMismatch>& fwd_misconfig, const BgpTable& t) {
  (void)t;
  std::vector<OutboundEvidence> out;
  auto fixed_unit = [](const Address& a) {
    NetworkUnit u;
    if (a.family == Family::v4) {
      u.level = UnitLevel::slash24;
      u.prefix = Prefix::of(a, 24);
    } else {
      u.level = UnitLevel::slash40;
      u.prefix = Prefix::of(a, 40);
    }
    return u;
  };
  for (const auto& row : spoofer_rows) {
    if (row.result != "received" && row.result != "blocked")
      continue;  // rewritten/unknown rows carry no signal
    OutboundEvidence ev;
    ev.unit = fixed_unit(row.prefix.base);
    if (row.result == "received") {
      ev.source = OutboundSource::spoofer_received;
      ev.verdict = OutboundVerdict::vulnerable_out;
    } else {
      ev.source = OutboundSource::spoofer_blocked;
      ev.verdict = OutboundVerdict::non_vulnerable_out;
    }
    out.push_back(ev);
  }
  for (const auto& m : fwd_misconfig) {
    OutboundEvidence ev;
    ev.unit = fixed_unit(m.responder);
    ev.source = OutboundSource::fwd_misconfig;
    ev.verdict = OutboundVerdict::vulnerable_out;
    out.push_back(ev);
  }
  return out;
}

DirectionMatrix direction_matrix(const std::vector<UnitVerdict>& inbound,
                                 const std::vector<OutboundEvidence>& outbound) {
  std::map<NetworkUnit, Verdict> in_map;
  for (const auto& v : inbound) {
    if (v.status == Verdict::partial || v.status == Verdict::no_data)
      continue;
    in_map[v.unit] = v.status;
  }
  // any positive spoof evidence outweighs a blocked row for the same unit
  std::map<NetworkUnit, OutboundVerdict> out_map;
  for (const auto& ev : outbound) {
    auto [it, fresh] = out_map.emplace(ev.unit, ev.verdict);
    if (!fresh && ev.verdict == OutboundVerdict::vulnerable_out)
      it->second = OutboundVerdict::vulnerable_out;
  }

  DirectionMatrix m;
  for (const auto& [unit, in_status] : in_map) {
    auto it = out_map.find(unit);
    if (it == out_map.end())
      continue;
    ++m.overlap;
    bool in_vuln = in_status == Verdict::vulnerable;
    bool out_vuln = it->second == OutboundVerdict::vulnerable_out;
    if (in_vuln && out_vuln)
      ++m.in_vuln_out_vuln;
    else if (in_vuln)
      ++m.in_vuln_out_ok;
    else if (out_vuln)
      ++m.in_ok_out_vuln;
    else
      ++m.in_ok_out_ok;
  }
  return m;
}

void write_verdicts(std::ostream& out, const std::vector<UnitVerdict>& verdicts) {
  for (const auto& v : verdicts)
    out << to_string(v.unit.level) << ',' << v.unit.key() << ','
        << simnet::to_string(v.status) << ',' << v.n_measurements << '\n';
}

std::vector<UnitVerdict> parse_verdicts(std::istream& in) {
  std::vector<UnitVerdict> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#')
      continue;
    std::vector<std::string> f;
    size_t start = 0;
    while (start <= line.size()) {
      size_t comma = line.find(',', start);
      if (comma == std::string::npos) {
        f.push_back(line.substr(start));
        break;
      }
      f.push_back(line.substr(start, comma - start));
      start = comma + 1;
    }
    if (f.size() != 4)
      continue;
    auto level = parse_unit_level(f[0]);
    if (!level)
      continue;
    auto unit = NetworkUnit::parse(*level, f[1]);
    auto status = simnet::parse_verdict(f[2]);
    size_t n = 0;
    auto [p, ec] = std::from_chars(f[3].data(), f[3].data() + f[3].size(), n);
    if (!unit || !status || ec != std::errc())
      continue;
    out.push_back({*unit, *status, n, false});
  }
  return out;
}

}  // namespace sav::inference
