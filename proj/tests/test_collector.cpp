// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <sstream>

#include "sav/collector.hpp"
#include "sav/simnet.hpp"

using namespace sav;
using namespace sav::collector;

namespace {

const codec::ZoneConfig kZones;

Address a(const char* s) { return *Address::parse(s); }
Prefix pfx(const char* s) { return *Prefix::parse(s); }

std::string qname_for(const Address& target, codec::ProbeKind kind,
                      const char* nonce = "abcdef") {
  codec::ProbeDomain d;
  d.nonce = nonce;
  d.target = target;
  d.kind = kind;
  d.transport_zone = target.family == Family::v4 ? codec::TransportZone::v4_only
                                                 : codec::TransportZone::v6_only;
  return codec::encode(d, kZones);
}

}  // namespace

TEST_CASE("dedup keeps the first record per (src, case-folded qname)") {
  std::string q = qname_for(a("1.2.3.5"), codec::ProbeKind::spoofed);
  std::string upper = q;
  for (char& c : upper)
    c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  std::vector<AuthLogRecord> in = {
      {100, a("9.9.9.9"), q, "A"},
      {200, a("9.9.9.9"), upper, "A"},     // duplicate modulo case
      {300, a("8.8.8.8"), q, "A"},         // same qname, other source: kept
      {400, a("9.9.9.9"), q + "x", "A"},   // different qname: kept
  };
  auto out = dedup(in);
  REQUIRE(out.size() == 3);
  CHECK(out[0].ts_us == 100);
  CHECK(out[1].ts_us == 300);
  CHECK(out[2].ts_us == 400);
  CHECK(dedup(out) == out);  // idempotent
}

TEST_CASE("dedup ratio: 100 records, 79 unique") {
  std::vector<AuthLogRecord> in;
  for (int i = 0; i < 79; ++i)
    in.push_back({i, a("9.9.9.9"),
                  qname_for(Address::v4(0x01020300u + uint32_t(i)),
                            codec::ProbeKind::spoofed),
                  "A"});
  for (int i = 0; i < 21; ++i)
    in.push_back(in[static_cast<size_t>(i)]);
  CHECK(in.size() == 100);
  CHECK(dedup(in).size() == 79);
}

TEST_CASE("classify assigns roles by source-vs-target equality") {
  std::vector<AuthLogRecord> in = {
      {1, a("1.2.3.5"), qname_for(a("1.2.3.5"), codec::ProbeKind::spoofed), "A"},
      {2, a("9.9.9.9"), qname_for(a("1.2.3.5"), codec::ProbeKind::unspoofed), "A"},
      {3, a("9.9.9.9"), "www.example.com", "A"},
      {4, a("9.9.9.9"), "bad.hex.s1.v4.drakkardnsv4.com", "A"},
      {5, a("9.9.9.9"), qname_for(a("1.2.3.5"), codec::ProbeKind::spoofed), "AAAA"},
  };
  ClassifyStats stats;
  auto obs = classify(in, kZones, &stats);
  REQUIRE(obs.size() == 2);
  CHECK(obs[0].role == planner::ResolverRole::non_forwarder);
  CHECK(obs[0].target == a("1.2.3.5"));
  CHECK(obs[0].kind == codec::ProbeKind::spoofed);
  CHECK(obs[1].role == planner::ResolverRole::forwarder);
  CHECK(obs[1].observed_src == a("9.9.9.9"));
  CHECK(stats.dropped_foreign == 1);
  CHECK(stats.dropped_malformed == 1);
  CHECK(stats.dropped_qtype == 1);
}

TEST_CASE("classify carries nf flag and transport zone through") {
  codec::ProbeDomain d;
  d.nonce = "qgpdbe";
  d.target = a("2.174.82.199");
  d.kind = codec::ProbeKind::spoofed;
  d.nf = true;
  d.transport_zone = codec::TransportZone::v4_to_v6;
  auto obs = classify({{1, a("2.174.82.199"), codec::encode(d, kZones), "A"}}, kZones);
  REQUIRE(obs.size() == 1);
  CHECK(obs[0].nf_flag);
  CHECK(obs[0].transport_zone == codec::TransportZone::v4_to_v6);
  CHECK(obs[0].role == planner::ResolverRole::non_forwarder);
}

TEST_CASE("openness requires an answered NOERROR response") {
  std::vector<ResolverObservation> obs = {
      {a("1.1.1.1"), a("1.1.1.1"), planner::ResolverRole::non_forwarder,
       codec::ProbeKind::spoofed, 1, codec::TransportZone::v4_only, false},
  };
  std::vector<ScannerResponse> resp = {
      {1, a("2.2.2.2"), a("2.2.2.2"), Rcode::NOERROR, true},
      {2, a("3.3.3.3"), a("3.3.3.3"), Rcode::REFUSED, false},
      {3, a("4.4.4.4"), a("4.4.4.4"), Rcode::NOERROR, false},  // unanswered
  };
  auto open = openness(obs, resp);
  CHECK(open.at(a("1.1.1.1")) == Openness::closed);  // spoofed auth only
  CHECK(open.at(a("2.2.2.2")) == Openness::open);
  CHECK(open.at(a("3.3.3.3")) == Openness::closed);
  CHECK(open.at(a("4.4.4.4")) == Openness::closed);
  CHECK(open.size() == 4);
}

TEST_CASE("misconfigured forwarders split by AS relation of the responder") {
  BgpTable t;
  t.add(pfx("1.0.0.0/8"), 100);
  t.add(pfx("2.0.0.0/8"), 200);
  std::vector<ScannerResponse> resp = {
      {1, a("1.2.3.4"), a("1.2.3.4"), Rcode::NOERROR, true},   // match: ignored
      {2, a("1.2.3.4"), a("2.0.0.1"), Rcode::NOERROR, true},   // cross-AS
      {3, a("1.2.3.4"), a("2.0.0.1"), Rcode::NOERROR, true},   // duplicate pair
      {4, a("1.2.3.4"), a("1.9.9.9"), Rcode::NOERROR, true},   // same AS
      {5, a("1.2.3.4"), a("10.0.0.1"), Rcode::NOERROR, true},  // private
      {6, a("1.2.3.4"), a("203.0.113.7"), Rcode::NOERROR, true},  // unrouted
  };
  auto m = misconfigured_forwarders(resp, t);
  REQUIRE(m.cross_as.size() == 1);
  CHECK(m.cross_as[0] == ForwarderMismatch{a("1.2.3.4"), a("2.0.0.1")});
  REQUIRE(m.same_as.size() == 1);
  CHECK(m.same_as[0].responder == a("1.9.9.9"));
  REQUIRE(m.private_or_unrouted.size() == 2);
}

TEST_CASE("auth and response logs round-trip through CSV") {
  std::vector<AuthLogRecord> auth = {
      {123456, a("1.2.3.4"), qname_for(a("1.2.3.4"), codec::ProbeKind::spoofed), "A"},
      {123457, a("2001:db8::1"), qname_for(a("2001:db8::1"), codec::ProbeKind::unspoofed),
       "A"},
  };
  std::ostringstream out;
  write_auth_log(out, auth);
  std::istringstream in(out.str());
  CHECK(parse_auth_log(in) == auth);

  std::vector<ScannerResponse> resp = {
      {1, a("1.2.3.4"), a("5.6.7.8"), Rcode::NOERROR, true},
      {2, a("1.2.3.9"), a("1.2.3.9"), Rcode::REFUSED, false},
  };
  std::ostringstream rout;
  write_response_log(rout, resp);
  std::istringstream rin(rout.str());
  CHECK(parse_response_log(rin) == resp);

  std::istringstream junk("garbage\n1,notanip,q,A\n# comment\n");
  CHECK(parse_auth_log(junk).empty());
}

TEST_CASE("observation CSV round-trips") {
  std::vector<ResolverObservation> obs = {
      {a("1.2.3.4"), a("9.9.9.9"), planner::ResolverRole::forwarder,
       codec::ProbeKind::spoofed, 2, codec::TransportZone::v4_to_v6, true},
      {a("2001:db8::5"), a("2001:db8::5"), planner::ResolverRole::non_forwarder,
       codec::ProbeKind::unspoofed, 1, codec::TransportZone::v6_only, false},
  };
  std::ostringstream out;
  write_observations(out, obs);
  std::istringstream in(out.str());
  CHECK(parse_observations(in) == obs);
}

TEST_CASE("pipeline on simulator output recovers roles and openness") {
  using namespace sav::simnet;
  auto topo = random_topology(17, 40, {});
  planner::ScanPlan plan;
  codec::NonceGenerator nonces(17);
  for (const auto& net : topo.networks)
    for (const auto& r : net.resolvers) {
      codec::ProbeDomain d;
      d.target = r.addr;
      d.transport_zone = r.addr.family == Family::v4 ? codec::TransportZone::v4_only
                                                     : codec::TransportZone::v6_only;
      d.nonce = nonces.next();
      d.kind = codec::ProbeKind::spoofed;
      plan.probes.push_back({r.addr, r.addr.next(), codec::encode(d, kZones),
                             codec::ProbeKind::spoofed, planner::Purpose::main_scan});
      d.nonce = nonces.next();
      d.kind = codec::ProbeKind::unspoofed;
      plan.probes.push_back({r.addr, a("192.0.2.1"), codec::encode(d, kZones),
                             codec::ProbeKind::unspoofed, planner::Purpose::main_scan});
    }

  auto out = simulate(topo, plan);
  ClassifyStats stats;
  auto obs = classify(dedup(out.auth_log), kZones, &stats);
  CHECK(stats.dropped_foreign == 0);
  CHECK(stats.dropped_malformed == 0);
  auto open = openness(obs, out.responses);

  for (const auto& o : obs) {
    const SimResolver* r = topo.resolver_at(o.target);
    REQUIRE(r != nullptr);
    bool fwd = r->behavior != ResolverBehavior::recursive;
    CHECK((o.role == planner::ResolverRole::forwarder) == fwd);
  }
  auto gt = ground_truth(topo, UnitLevel::asn);
  for (const auto& [addr, expected] : gt.per_resolver) {
    auto it = open.find(addr);
    if (expected == ExpectedObs::open_no_spoof) {
      REQUIRE(it != open.end());
      CHECK(it->second == Openness::open);
    }
    const SimResolver* r = topo.resolver_at(addr);
    const SimNetwork* net = topo.network_containing(addr);
    bool really_open_visible =
        r->open && (r->behavior != ResolverBehavior::forwarder_noRewrite ||
                    !net->outbound_sav);
    if (it != open.end() && it->second == Openness::open)
      CHECK(really_open_visible);
  }
}
