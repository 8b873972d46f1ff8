// SPDX-License-Identifier: Apache-2.0

#include "sav/collector.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <set>
#include <sstream>

namespace sav::collector {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  size_t start = 0;
  while (start <= line.size()) {
    size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

bool is_private_or_special(const Address& a) {
  static const std::vector<Prefix> kRanges = [] {
    std::vector<Prefix> r;
    for (const char* s : {"10.0.0.0/8", "172.16.0.0/12", "192.168.0.0/16",
                          "127.0.0.0/8", "169.254.0.0/16", "100.64.0.0/10",
                          "fc00::/7", "fe80::/10", "::1/128"})
      r.push_back(*Prefix::parse(s));
    return r;
  }();
  return std::any_of(kRanges.begin(), kRanges.end(),
                     [&](const Prefix& p) { return p.contains(a); });
}

}  // namespace

std::string to_string(Rcode r) {
  switch (r) {
    case Rcode::NOERROR: return "NOERROR";
    case Rcode::REFUSED: return "REFUSED";
    case Rcode::SERVFAIL: return "SERVFAIL";
    case Rcode::NXDOMAIN: return "NXDOMAIN";
    case Rcode::other: return "OTHER";
  }
  return "OTHER";
}

std::optional<Rcode> parse_rcode(std::string_view s) {
  if (s == "NOERROR") return Rcode::NOERROR;
  if (s == "REFUSED") return Rcode::REFUSED;
  if (s == "SERVFAIL") return Rcode::SERVFAIL;
  if (s == "NXDOMAIN") return Rcode::NXDOMAIN;
  if (s == "OTHER") return Rcode::other;
  return std::nullopt;
}

std::vector<AuthLogRecord> parse_auth_log(std::istream& in) {
  std::vector<AuthLogRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#')
      continue;
    auto f = split_csv(line);
    if (f.size() != 4)
      continue;
    AuthLogRecord r;
    auto [p, ec] = std::from_chars(f[0].data(), f[0].data() + f[0].size(), r.ts_us);
    auto src = Address::parse(f[1]);
    if (ec != std::errc() || !src || f[2].empty())
      continue;
    r.src = *src;
    r.qname = f[2];
    r.qtype = f[3];
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<ScannerResponse> parse_response_log(std::istream& in) {
  std::vector<ScannerResponse> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#')
      continue;
    auto f = split_csv(line);
    if (f.size() != 5)
      continue;
    ScannerResponse r;
    auto [p, ec] = std::from_chars(f[0].data(), f[0].data() + f[0].size(), r.ts_us);
    auto dst = Address::parse(f[1]);
    auto responder = Address::parse(f[2]);
    auto rcode = parse_rcode(f[3]);
    if (ec != std::errc() || !dst || !responder || !rcode || (f[4] != "0" && f[4] != "1"))
      continue;
    r.probed_dst = *dst;
    r.responder = *responder;
    r.rcode = *rcode;
    r.answered = f[4] == "1";
    out.push_back(r);
  }
  return out;
}

void write_auth_log(std::ostream& out, const std::vector<AuthLogRecord>& records) {
  for (const auto& r : records)
    out << r.ts_us << ',' << r.src.to_string() << ',' << r.qname << ',' << r.qtype
        << '\n';
}

void write_response_log(std::ostream& out, const std::vector<ScannerResponse>& responses) {
  for (const auto& r : responses)
    out << r.ts_us << ',' << r.probed_dst.to_string() << ',' << r.responder.to_string()
        << ',' << to_string(r.rcode) << ',' << (r.answered ? '1' : '0') << '\n';
}

std::vector<ResolverObservation> parse_observations(std::istream& in) {
  std::vector<ResolverObservation> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#')
      continue;
    auto f = split_csv(line);
    if (f.size() != 7)
      continue;
    ResolverObservation o;
    auto target = Address::parse(f[0]);
    auto src = Address::parse(f[1]);
    auto role = planner::parse_resolver_role(f[2]);
    auto kind = codec::parse_probe_kind(f[3]);
    auto zone = codec::parse_transport_zone(f[5]);
    int scan_id = 0;
    auto [p, ec] = std::from_chars(f[4].data(), f[4].data() + f[4].size(), scan_id);
    if (!target || !src || !role || !kind || !zone || ec != std::errc() ||
        (f[6] != "0" && f[6] != "1"))
      continue;
    o.target = *target;
    o.observed_src = *src;
    o.role = *role;
    o.kind = *kind;
    o.scan_id = scan_id;
    o.transport_zone = *zone;
    o.nf_flag = f[6] == "1";
    out.push_back(o);
  }
  return out;
}

void write_observations(std::ostream& out, const std::vector<ResolverObservation>& obs) {
  for (const auto& o : obs)
    out << o.target.to_string() << ',' << o.observed_src.to_string() << ','
        << planner::to_string(o.role) << ',' << codec::to_string(o.kind) << ','
        << o.scan_id << ',' << codec::to_string(o.transport_zone) << ','
        << (o.nf_flag ? '1' : '0') << '\n';
}

std::vector<AuthLogRecord> dedup(const std::vector<AuthLogRecord>& records) {
  std::vector<AuthLogRecord> out;
  std::set<std::pair<Address, std::string>> seen;
  for (const auto& r : records)
    if (seen.emplace(r.src, lower(r.qname)).second)
      out.push_back(r);
  return out;
}

std::vector<ResolverObservation> classify(const std::vector<AuthLogRecord>& records,
                                          const codec::ZoneConfig& z,
                                          ClassifyStats* stats) {
  std::vector<ResolverObservation> out;
  ClassifyStats local;
  for (const auto& r : records) {
    if (r.qtype != "A") {
      ++local.dropped_qtype;
      continue;
    }
    auto decoded = codec::decode(r.qname, z);
    if (decoded.status == codec::DecodeStatus::not_ours) {
      ++local.dropped_foreign;
      continue;
    }
    if (decoded.status == codec::DecodeStatus::malformed) {
      ++local.dropped_malformed;
      continue;
    }
    const auto& d = decoded.domain;
    ResolverObservation o;
    o.target = d.target;
    o.observed_src = r.src;
    o.role = r.src == d.target ? planner::ResolverRole::non_forwarder
                               : planner::ResolverRole::forwarder;
    o.kind = d.kind;
    o.scan_id = d.scan_id;
    o.transport_zone = d.transport_zone;
    o.nf_flag = d.nf;
    out.push_back(o);
  }
  if (stats)
    *stats = local;
  return out;
}

std::map<Address, Openness> openness(const std::vector<ResolverObservation>& obs,
                                     const std::vector<ScannerResponse>& responses) {
  std::map<Address, Openness> out;
  for (const auto& o : obs)
    out.emplace(o.target, Openness::closed);
  for (const auto& r : responses)
    out.emplace(r.probed_dst, Openness::closed);
  for (const auto& r : responses)
    if (r.rcode == Rcode::NOERROR && r.answered)
      out[r.probed_dst] = Openness::open;
  return out;
}

MisconfiguredForwarders misconfigured_forwarders(
    const std::vector<ScannerResponse>& responses, const BgpTable& t) {
  MisconfiguredForwarders out;
  std::set<ForwarderMismatch> seen;
  for (const auto& r : responses) {
    if (r.responder == r.probed_dst)
      continue;
    ForwarderMismatch m{r.probed_dst, r.responder};
    if (!seen.insert(m).second)
      continue;
    if (is_private_or_special(r.responder) || !t.lookup(r.responder)) {
      out.private_or_unrouted.push_back(m);
      continue;
    }
    auto dst_as = t.lookup(r.probed_dst);
    auto resp_as = t.lookup(r.responder);
    if (!dst_as || dst_as->second != resp_as->second)
      out.cross_as.push_back(m);
    else
      out.same_as.push_back(m);
  }
  return out;
}

}  // namespace sav::collector
