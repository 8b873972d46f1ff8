// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sav/collector.hpp"
#include "sav/netaddr.hpp"
#include "sav/planner.hpp"

namespace sav::simnet {

enum class ResolverBehavior : uint8_t { recursive, forwarder_clean, forwarder_noRewrite };

std::string to_string(ResolverBehavior b);
std::optional<ResolverBehavior> parse_resolver_behavior(std::string_view s);

/// A resolver inside a simulated network. Closed resolvers answer only
/// clients matching the acl; an empty acl refuses everyone, scanner and
/// LAN alike.
struct SimResolver {
  Address addr;
  bool open{false};
  std::vector<Prefix> acl;
  ResolverBehavior behavior{ResolverBehavior::recursive};
  Address upstream;  // forwarder variants only

  bool answers(const Address& query_src) const;
};

struct SimNetwork {
  Prefix prefix;
  uint32_t asn{0};
  bool inbound_sav{false};
  bool outbound_sav{false};
  std::vector<SimResolver> resolvers;
};

struct SimTopology {
  std::vector<SimNetwork> networks;
  double loss_probability{0.0};
  uint64_t seed{0};

  void validate() const;

  /// One (prefix, asn) entry per network.
  BgpTable routing_table() const;

  const SimNetwork* network_containing(const Address& a) const;
  const SimResolver* resolver_at(const Address& a) const;

  /// Structured text, one network stanza per block; round-trips losslessly.
  std::string serialize() const;
  void serialize(std::ostream& out) const;
  static SimTopology parse(std::istream& in);
  static SimTopology parse_file(const std::string& path);
};

enum class Verdict : uint8_t { vulnerable, non_vulnerable, partial, no_data };

std::string to_string(Verdict v);
std::optional<Verdict> parse_verdict(std::string_view s);

/// What a resolver is expected to contribute under zero loss.
enum class ExpectedObs : uint8_t { spoof_resolved, open_no_spoof, silent };

/// Per-unit expected verdicts derived purely from the topology.
struct GroundTruth {
  UnitLevel level{UnitLevel::asn};
  std::map<NetworkUnit, Verdict> verdicts;
  std::map<Address, ExpectedObs> per_resolver;
};

struct SimOutput {
  std::vector<collector::AuthLogRecord> auth_log;
  std::vector<collector::ScannerResponse> responses;
};

/// Runs a plan against the topology. Spoofed probes entering a network with
/// inbound SAV drop at the edge; answered queries produce one authoritative
/// log record (source rewritten to the upstream for forwarders); unspoofed
/// answered probes produce a NOERROR scanner response, which for a
/// non-rewriting forwarder carries the upstream as responder and escapes
/// only when the network lacks outbound SAV. Closed resolvers REFUSE
/// unspoofed scanner queries. Loss is Bernoulli per probe/record leg.
SimOutput simulate(const SimTopology& topo, const planner::ScanPlan& plan);

/// Oracle: expected per-resolver observability and per-unit verdicts,
/// computed from topology alone.
GroundTruth ground_truth(const SimTopology& topo, UnitLevel level);

struct TopologyKnobs {
  int min_resolvers = 0;
  int max_resolvers = 4;
  double p_open = 0.5;
  double p_inbound_sav = 0.5;
  double p_outbound_sav = 0.5;
  double p_forwarder = 0.4;
  double p_norewrite = 0.4;   // among forwarders
  double p_empty_acl = 0.15;  // among closed resolvers
  double p_v6 = 0.3;          // fraction of v6 networks
  double loss_probability = 0.0;
};

/// Reproducible synthetic topology: disjoint network prefixes, a small ASN
/// pool so some ASes span several networks, resolver mix per the knobs.
SimTopology random_topology(uint64_t seed, int n_networks, const TopologyKnobs& knobs);

}  // namespace sav::simnet
