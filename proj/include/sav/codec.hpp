// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "sav/netaddr.hpp"

namespace sav::codec {

/// The four-zone domain layout: two apex domains (one reachable only over
/// IPv4, one only over IPv6), each with a v4 and a v6 subdomain.
struct ZoneConfig {
  std::string apex_v4only = "drakkardnsv4.com";
  std::string apex_v6only = "drakkardnsv6.com";
  std::string label_v4 = "v4";
  std::string label_v6 = "v6";

  void validate() const;
  static ZoneConfig parse_file(const std::string& path);
  static ZoneConfig parse(std::istream& in);
};

enum class ProbeKind : uint8_t { spoofed, unspoofed };

/// Which zone the query name lives under, i.e. which network protocol(s)
/// a resolver must use to reach the authoritative server.
enum class TransportZone : uint8_t { v4_only, v6_only, v4_to_v6, v6_to_v4 };

std::string to_string(ProbeKind k);
std::string to_string(TransportZone z);
std::optional<ProbeKind> parse_probe_kind(std::string_view s);
std::optional<TransportZone> parse_transport_zone(std::string_view s);

/// Target address family implied by a transport zone (the probed resolver's
/// family, which is the apex's family).
Family target_family(TransportZone z);

/// A decoded query name: who was originally probed and how.
struct ProbeDomain {
  std::string nonce;  // 6 chars, [a-z0-9], stored lowercase
  Address target;
  ProbeKind kind{ProbeKind::spoofed};
  int scan_id{1};
  bool nf{false};
  TransportZone transport_zone{TransportZone::v4_only};

  friend bool operator==(const ProbeDomain&, const ProbeDomain&) = default;
};

/// Renders the query name:
///   nonce "." enc(target) "." ["nf."] kindletter scan_id "." vlabel "." apex
/// v4 targets encode as 8 lowercase hex chars, v6 targets as an unpadded
/// decimal integer. Throws on invalid fields or a name over 253 chars.
std::string encode(const ProbeDomain& d, const ZoneConfig& z);

enum class DecodeStatus : uint8_t { ok, not_ours, malformed };

struct DecodeResult {
  DecodeStatus status{DecodeStatus::malformed};
  ProbeDomain domain;

  explicit operator bool() const { return status == DecodeStatus::ok; }
};

/// Exact case-insensitive inverse of encode. Names under a foreign apex
/// come back as not_ours; structural problems as malformed.
DecodeResult decode(std::string_view name, const ZoneConfig& z);

/// Deterministic nonce stream over [a-z0-9]^6. An affine step through
/// Z_{36^6} guarantees no repeat before the full period (36^6 > 2^31 draws).
class NonceGenerator {
 public:
  explicit NonceGenerator(uint64_t seed);
  std::string next();

 private:
  uint64_t state_;
  uint64_t offset_;
};

}  // namespace sav::codec
