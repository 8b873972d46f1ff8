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
#include "sav/netaddr.hpp"
#include "sav/simnet.hpp"

namespace sav::inference {

using simnet::Verdict;

enum class Outcome : uint8_t { spoof_resolved, open_no_spoof };

std::string to_string(Outcome o);
std::optional<Outcome> parse_outcome(std::string_view s);

/// One per-resolver spoofing outcome: either a spoofed query reached our
/// nameservers (no inbound filtering on the path), or the resolver is open
/// yet never resolved a spoofed name (filtering present).
struct Measurement {
  Address target;
  Outcome outcome{Outcome::spoof_resolved};
  int scan_id{1};

  friend bool operator==(const Measurement&, const Measurement&) = default;
  friend auto operator<=>(const Measurement&, const Measurement&) = default;
};

struct UnitVerdict {
  NetworkUnit unit;
  Verdict status{Verdict::no_data};
  size_t n_measurements{0};
  bool rescan_unresponsive{false};

  friend bool operator==(const UnitVerdict&, const UnitVerdict&) = default;
};

/// At most one measurement per target: any spoofed observation wins as
/// spoof_resolved; otherwise an open target yields open_no_spoof; silence
/// yields nothing.
std::vector<Measurement> measurements(
    const std::vector<collector::ResolverObservation>& obs,
    const std::map<Address, collector::Openness>& open_map);

/// Groups measurements by unit at the given level; units whose measurements
/// all agree get the matching verdict, mixed units are partial. Measurements
/// whose family does not fit a fixed-length level, or whose target is
/// uncovered at a routing level, are skipped.
std::vector<UnitVerdict> infer(const std::vector<Measurement>& ms, UnitLevel level,
                               const BgpTable& t);

/// Rescan measurements REPLACE the prior ones of their (previously partial)
/// unit and the verdict is recomputed; a rescan measurement for a non-partial
/// unit throws. Partial units silent on rescan keep their verdict, flagged
/// unresponsive.
std::vector<UnitVerdict> merge_rescan(const std::vector<UnitVerdict>& before,
                                      const std::vector<Measurement>& rescan_ms,
                                      UnitLevel level, const BgpTable& t);

enum class DiscoveredVia : uint8_t { v4_to_v6, v6_to_v4 };

/// An (IPv4, IPv6) address pair believed to be one physical host.
struct DualStackPair {
  Address v4;
  Address v6;
  DiscoveredVia discovered_via{DiscoveredVia::v4_to_v6};
  bool confirmed{false};
  std::set<std::string> matched_protocols;

  friend bool operator==(const DualStackPair&, const DualStackPair&) = default;
};

struct DualStackResult {
  std::vector<DualStackPair> pairs;
  std::vector<Address> hitlist_additions;  // from forwarder traversal records
};

/// From nf-flagged traversal observations: the decoded target of one family
/// and the observed source of the other form a candidate pair. Forwarder
/// traversal records only contribute newly revealed addresses.
DualStackResult dual_stack_candidates(
    const std::vector<collector::ResolverObservation>& traversal_obs);

enum class FingerprintProtocol : uint8_t {
  dns_version_bind,
  dns_ptr,
  ntp,
  http,
  https,
  ssh,
  smtp
};

std::string to_string(FingerprintProtocol p);
std::optional<FingerprintProtocol> parse_fingerprint_protocol(std::string_view s);

struct FingerprintEvidence {
  Address addr;
  FingerprintProtocol protocol{FingerprintProtocol::dns_version_bind};
  std::map<std::string, std::string> attributes;
};

/// Line format: `addr protocol key=value ...`.
std::vector<FingerprintEvidence> parse_fingerprints(std::istream& in);

struct MatchConfig {
  std::set<std::string> version_bind_denylist;
};

/// Per-protocol match rules over evidence present on both sides; the pair is
/// confirmed when at least one protocol matches.
DualStackPair match_fingerprints(DualStackPair pair,
                                 const std::vector<FingerprintEvidence>& evidence,
                                 const MatchConfig& cfg = {});

enum class OutboundSource : uint8_t { spoofer_received, spoofer_blocked, fwd_misconfig };
enum class OutboundVerdict : uint8_t { vulnerable_out, non_vulnerable_out };

std::string to_string(OutboundSource s);
std::string to_string(OutboundVerdict v);

struct OutboundEvidence {
  NetworkUnit unit;  // slash24 or slash40
  OutboundSource source{OutboundSource::spoofer_received};
  OutboundVerdict verdict{OutboundVerdict::vulnerable_out};

  friend bool operator==(const OutboundEvidence&, const OutboundEvidence&) = default;
};

struct SpooferRow {
  Prefix prefix;
  std::string result;  // received | blocked | rewritten | unknown
};

/// Spoofer CSV `prefix,result`; malformed rows counted and skipped.
std::vector<SpooferRow> parse_spoofer_csv(std::istream& in, size_t* malformed = nullptr);

/// Spoofer received/blocked rows map to out-direction verdicts at their /24
/// (/40); rewritten/unknown rows carry no signal and are dropped. Every
/// cross-AS misconfigured-forwarder responder marks its unit vulnerable_out.
std::vector<OutboundEvidence> outbound_evidence(
    const std::vector<SpooferRow>& spoofer_rows,
    const std::vector<collector::ForwarderMismatch>& fwd_misconfig, const BgpTable& t);

struct DirectionMatrix {
  size_t in_vuln_out_vuln{0};
  size_t in_vuln_out_ok{0};
  size_t in_ok_out_vuln{0};
  size_t in_ok_out_ok{0};
  size_t overlap{0};
};

/// Cross-tabulates inbound verdicts with outbound evidence over units present
/// in both datasets; partial inbound units are excluded.
DirectionMatrix direction_matrix(const std::vector<UnitVerdict>& inbound,
                                 const std::vector<OutboundEvidence>& outbound);

/// Verdicts CSV `level,key,status,n_measurements`.
void write_verdicts(std::ostream& out, const std::vector<UnitVerdict>& verdicts);
std::vector<UnitVerdict> parse_verdicts(std::istream& in);

}  // namespace sav::inference
