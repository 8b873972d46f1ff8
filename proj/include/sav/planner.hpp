// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "sav/codec.hpp"
#include "sav/netaddr.hpp"

namespace sav::planner {

enum class Purpose : uint8_t { main_scan, traversal_nf, traversal_fwd, rescan };

std::string to_string(Purpose p);
std::optional<Purpose> parse_purpose(std::string_view s);

/// One planned probe. Spoofed probes carry src = dst+1; unspoofed probes
/// carry the scanner's own address.
struct ProbeSpec {
  Address dst;
  Address src;
  std::string qname;
  codec::ProbeKind kind{codec::ProbeKind::spoofed};
  Purpose purpose{Purpose::main_scan};

  friend bool operator==(const ProbeSpec&, const ProbeSpec&) = default;
};

struct ScanPlan {
  std::vector<ProbeSpec> probes;
  uint64_t seed{0};
  size_t excluded_count{0};

  /// Text lines "dst<TAB>src<TAB>qname<TAB>kind<TAB>purpose".
  std::string serialize() const;
  void serialize(std::ostream& out) const;
  static ScanPlan parse(std::istream& in);
  static ScanPlan parse_file(const std::string& path);
};

struct PlannerConfig {
  codec::ZoneConfig zones;
  Address scanner_v4 = Address::v4(0xc0000201);          // 192.0.2.1
  Address scanner_v6 = *Address::parse("2001:db8::1");
  bool skip_boundary = true;  // skip .0/.255 within each /24
  int scan_id = 1;
};

/// Spoofed+unspoofed probe pair for every host of every aggregated prefix,
/// exclusions removed, order seeded so consecutive targets avoid sharing
/// a /24 whenever possible. Throws when the target set ends up empty.
ScanPlan plan_ipv4(const BgpTable& t, const std::vector<Prefix>& exclusions,
                   uint64_t seed, const PlannerConfig& cfg);

/// Same pairing/ordering over a dealiased IPv6 hitlist; names use the
/// v6-only zone with decimal target encoding.
ScanPlan plan_ipv6(const std::vector<Address>& hitlist,
                   const std::vector<Prefix>& aliased,
                   const std::vector<Prefix>& exclusions, uint64_t seed,
                   const PlannerConfig& cfg);

enum class ResolverRole : uint8_t { forwarder, non_forwarder };

std::string to_string(ResolverRole r);
std::optional<ResolverRole> parse_resolver_role(std::string_view s);

/// Cross-protocol probes: v4 targets get names under the IPv4-only apex with
/// the v6 subdomain label and vice versa. Non-forwarders get the nf marker.
ScanPlan plan_traversal(const std::vector<std::pair<Address, ResolverRole>>& discovered,
                        uint64_t seed, const PlannerConfig& cfg);

/// Re-probes partially filtered units: all hosts of each /24; only the
/// previously scanned targets of each /40. Scan id is bumped so rescan
/// names are separable from the main scan by name alone.
ScanPlan plan_rescan(const std::vector<NetworkUnit>& units,
                     const std::vector<Address>& prior_targets, uint64_t seed,
                     const PlannerConfig& cfg);

}  // namespace sav::planner
