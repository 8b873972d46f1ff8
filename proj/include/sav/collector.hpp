// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sav/codec.hpp"
#include "sav/netaddr.hpp"
#include "sav/planner.hpp"

namespace sav::collector {

/// A query as seen by one of our authoritative nameservers.
struct AuthLogRecord {
  int64_t ts_us{0};
  Address src;  // the querying resolver
  std::string qname;
  std::string qtype = "A";

  friend bool operator==(const AuthLogRecord&, const AuthLogRecord&) = default;
};

enum class Rcode : uint8_t { NOERROR, REFUSED, SERVFAIL, NXDOMAIN, other };

std::string to_string(Rcode r);
std::optional<Rcode> parse_rcode(std::string_view s);

/// A reply as seen by the scanning host. The responder may differ from the
/// probed destination: that mismatch is the forwarder-based outbound signal.
struct ScannerResponse {
  int64_t ts_us{0};
  Address probed_dst;
  Address responder;
  Rcode rcode{Rcode::NOERROR};
  bool answered{false};

  friend bool operator==(const ScannerResponse&, const ScannerResponse&) = default;
};

/// A classified authoritative-log record: which resolver was probed, who
/// showed up at the nameserver, and how the name was flagged.
struct ResolverObservation {
  Address target;        // decoded from the qname
  Address observed_src;  // source seen at the nameserver
  planner::ResolverRole role{planner::ResolverRole::non_forwarder};
  codec::ProbeKind kind{codec::ProbeKind::spoofed};
  int scan_id{1};
  codec::TransportZone transport_zone{codec::TransportZone::v4_only};
  bool nf_flag{false};

  friend bool operator==(const ResolverObservation&, const ResolverObservation&) = default;
};

// CSV I/O. Auth log: `ts_us,src,qname,qtype`; responses:
// `ts_us,probed_dst,responder,rcode,answered`; observations:
// `target,observed_src,role,kind,scan_id,zone,nf`.
std::vector<AuthLogRecord> parse_auth_log(std::istream& in);
std::vector<ScannerResponse> parse_response_log(std::istream& in);
void write_auth_log(std::ostream& out, const std::vector<AuthLogRecord>& records);
void write_response_log(std::ostream& out, const std::vector<ScannerResponse>& responses);
std::vector<ResolverObservation> parse_observations(std::istream& in);
void write_observations(std::ostream& out, const std::vector<ResolverObservation>& obs);

/// First occurrence per (src, lowercased qname); input order preserved.
std::vector<AuthLogRecord> dedup(const std::vector<AuthLogRecord>& records);

struct ClassifyStats {
  size_t dropped_foreign = 0;    // qnames under someone else's apex
  size_t dropped_malformed = 0;  // qnames under ours but unparsable
  size_t dropped_qtype = 0;      // non-A records
};

/// Decodes qnames and assigns the forwarder/non-forwarder role by comparing
/// the record source against the decoded target. Undecodable names are
/// dropped and counted, never fatal.
std::vector<ResolverObservation> classify(const std::vector<AuthLogRecord>& records,
                                          const codec::ZoneConfig& z,
                                          ClassifyStats* stats = nullptr);

enum class Openness : uint8_t { open, closed };

/// A target is open iff an answered NOERROR response for it exists; targets
/// seen only through spoofed-name auth records are closed.
std::map<Address, Openness> openness(const std::vector<ResolverObservation>& obs,
                                     const std::vector<ScannerResponse>& responses);

struct ForwarderMismatch {
  Address probed_dst;
  Address responder;

  friend bool operator==(const ForwarderMismatch&, const ForwarderMismatch&) = default;
  friend auto operator<=>(const ForwarderMismatch&, const ForwarderMismatch&) = default;
};

struct MisconfiguredForwarders {
  std::vector<ForwarderMismatch> cross_as;             // outbound-SAV evidence
  std::vector<ForwarderMismatch> private_or_unrouted;  // NAT-misconfiguration bucket
  std::vector<ForwarderMismatch> same_as;              // recorded, not evidence
};

/// Responder != probed destination, split by whether the two live in
/// different ASes (flagged), the responder is private/unrouted (separate
/// bucket), or both share an AS (recorded but excluded from verdicts).
MisconfiguredForwarders misconfigured_forwarders(
    const std::vector<ScannerResponse>& responses, const BgpTable& t);

}  // namespace sav::collector
