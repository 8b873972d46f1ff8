// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>
#include <sstream>

#include "sav/planner.hpp"

using namespace sav;
using namespace sav::planner;

namespace {

const PlannerConfig kCfg;

Address a(const char* s) { return *Address::parse(s); }
Prefix pfx(const char* s) { return *Prefix::parse(s); }

// Invariants every plan must satisfy.
void check_plan(const ScanPlan& plan, bool expect_decodable_dst = true) {
  REQUIRE(plan.probes.size() % 2 == 0);
  for (size_t i = 0; i < plan.probes.size(); i += 2) {
    const auto& sp = plan.probes[i];
    const auto& un = plan.probes[i + 1];
    CHECK(sp.kind == codec::ProbeKind::spoofed);
    CHECK(un.kind == codec::ProbeKind::unspoofed);
    CHECK(sp.dst == un.dst);
    CHECK(sp.src == sp.dst.next());
    CHECK(un.src == (un.dst.family == Family::v4 ? kCfg.scanner_v4 : kCfg.scanner_v6));
    auto d = codec::decode(sp.qname, kCfg.zones);
    REQUIRE(d.status == codec::DecodeStatus::ok);
    CHECK(d.domain.kind == codec::ProbeKind::spoofed);
    if (expect_decodable_dst)
      CHECK(d.domain.target == sp.dst);
    auto u = codec::decode(un.qname, kCfg.zones);
    REQUIRE(u.status == codec::DecodeStatus::ok);
    CHECK(u.domain.kind == codec::ProbeKind::unspoofed);
    CHECK(u.domain.nonce != d.domain.nonce);
  }
}

std::set<Address> plan_targets(const ScanPlan& plan) {
  std::set<Address> out;
  for (const auto& p : plan.probes)
    out.insert(p.dst);
  return out;
}

}  // namespace

TEST_CASE("ipv4 plan over a /30: 8 probes, 4 targets") {
  BgpTable t;
  t.add(pfx("198.51.100.4/30"), 1);
  auto plan = plan_ipv4(t, {}, 42, kCfg);
  CHECK(plan.probes.size() == 8);
  CHECK(plan_targets(plan).size() == 4);
  check_plan(plan);
}

TEST_CASE("ipv4 plan skips .0 and .255 per /24") {
  BgpTable t;
  t.add(pfx("198.51.100.0/24"), 1);
  auto plan = plan_ipv4(t, {}, 1, kCfg);
  CHECK(plan.probes.size() == 254 * 2);
  auto targets = plan_targets(plan);
  CHECK(targets.count(a("198.51.100.0")) == 0);
  CHECK(targets.count(a("198.51.100.255")) == 0);
  CHECK(targets.count(a("198.51.100.1")) == 1);
  CHECK(targets.count(a("198.51.100.254")) == 1);

  PlannerConfig all = kCfg;
  all.skip_boundary = false;
  CHECK(plan_ipv4(t, {}, 1, all).probes.size() == 256 * 2);
}

TEST_CASE("ipv4 plan honors exclusions; fully excluded table throws") {
  BgpTable t;
  t.add(pfx("198.51.100.0/24"), 1);
  auto plan = plan_ipv4(t, {pfx("198.51.100.128/25")}, 3, kCfg);
  CHECK(plan.excluded_count == 127);  // .128-.254 (no .255 under skip_boundary)
  for (const auto& p : plan.probes)
    CHECK_FALSE(pfx("198.51.100.128/25").contains(p.dst));

  CHECK_THROWS_AS(plan_ipv4(t, {pfx("198.51.100.0/24")}, 3, kCfg), std::runtime_error);
  CHECK_THROWS_AS(plan_ipv4(BgpTable{}, {}, 3, kCfg), std::runtime_error);
}

TEST_CASE("ipv4 plan enumerates aggregated announcements once") {
  BgpTable t;
  t.add(pfx("10.0.0.0/23"), 1);
  t.add(pfx("10.0.0.0/24"), 2);  // contained, must not double-probe
  auto plan = plan_ipv4(t, {}, 9, kCfg);
  CHECK(plan.probes.size() == 2 * 254 * 2);
  check_plan(plan);
}

TEST_CASE("consecutive distinct targets avoid sharing a /24 when possible") {
  BgpTable t;
  t.add(pfx("10.0.0.0/29"), 1);
  t.add(pfx("10.0.1.0/29"), 1);
  for (uint64_t seed : {1ull, 7ull, 99ull}) {
    auto plan = plan_ipv4(t, {}, seed, kCfg);
    CHECK(plan.probes.size() == (7 + 7) * 2);  // .0 skipped in each block
    for (size_t i = 2; i < plan.probes.size(); i += 2) {
      auto prev = Prefix::of(plan.probes[i - 2].dst, 24);
      auto cur = Prefix::of(plan.probes[i].dst, 24);
      CHECK(prev != cur);
    }
  }
}

TEST_CASE("determinism: same seed gives byte-identical plans, seeds differ") {
  BgpTable t;
  t.add(pfx("10.0.0.0/28"), 1);
  t.add(pfx("10.1.0.0/28"), 1);
  auto p1 = plan_ipv4(t, {}, 5, kCfg);
  auto p2 = plan_ipv4(t, {}, 5, kCfg);
  CHECK(p1.serialize() == p2.serialize());
  auto p3 = plan_ipv4(t, {}, 6, kCfg);
  CHECK(p1.serialize() != p3.serialize());
}

TEST_CASE("plan serialization round-trips") {
  BgpTable t;
  t.add(pfx("10.0.0.0/29"), 1);
  auto plan = plan_ipv4(t, {}, 11, kCfg);
  std::istringstream in(plan.serialize());
  auto back = ScanPlan::parse(in);
  CHECK(back.probes == plan.probes);

  std::istringstream bad("one\ttwo\n");
  CHECK_THROWS_AS(ScanPlan::parse(bad), std::runtime_error);
}

TEST_CASE("ipv6 plan dealiases then pairs") {
  auto plan = plan_ipv6({a("2001:db8:1::1"), a("2001:db8:1::2")},
                        {pfx("2001:db8:1::/64")}, {}, 2, kCfg);
  CHECK(plan.probes.size() == 2);  // one representative target
  CHECK(plan.probes[0].dst == a("2001:db8:1::1"));
  check_plan(plan);

  auto plain = plan_ipv6({a("2001:db8::5"), a("2001:db8:ffff::5")}, {}, {}, 2, kCfg);
  CHECK(plain.probes.size() == 4);
  for (const auto& p : plain.probes) {
    auto d = codec::decode(p.qname, kCfg.zones);
    CHECK(d.domain.transport_zone == codec::TransportZone::v6_only);
  }

  auto excl = plan_ipv6({a("2001:db8::5"), a("2001:db8:ffff::5")}, {},
                        {pfx("2001:db8:ffff::5/128")}, 2, kCfg);
  CHECK(excl.probes.size() == 2);
  CHECK(excl.excluded_count == 1);
}

TEST_CASE("traversal names switch protocol and mark non-forwarders") {
  auto nf = plan_traversal({{a("2.174.82.199"), ResolverRole::non_forwarder}}, 1, kCfg);
  REQUIRE(nf.probes.size() == 2);
  CHECK(nf.probes[0].qname.ends_with(".nf.s1.v6.drakkardnsv4.com"));
  CHECK(nf.probes[1].qname.ends_with(".nf.n1.v6.drakkardnsv4.com"));
  CHECK(nf.probes[0].purpose == Purpose::traversal_nf);

  auto fwd = plan_traversal({{a("2.174.82.199"), ResolverRole::forwarder}}, 1, kCfg);
  REQUIRE(fwd.probes.size() == 2);
  CHECK(fwd.probes[0].qname.ends_with(".s1.v6.drakkardnsv4.com"));
  CHECK(fwd.probes[0].qname.find(".nf.") == std::string::npos);
  CHECK(fwd.probes[0].purpose == Purpose::traversal_fwd);

  auto v6 = plan_traversal({{a("2001:db8::9"), ResolverRole::non_forwarder}}, 1, kCfg);
  REQUIRE(v6.probes.size() == 2);
  CHECK(v6.probes[0].qname.ends_with(".nf.s1.v4.drakkardnsv6.com"));
  auto d = codec::decode(v6.probes[0].qname, kCfg.zones);
  REQUIRE(d.status == codec::DecodeStatus::ok);
  CHECK(d.domain.target == a("2001:db8::9"));
  CHECK(d.domain.transport_zone == codec::TransportZone::v6_to_v4);

  CHECK(plan_traversal({}, 1, kCfg).probes.empty());
}

TEST_CASE("rescan re-probes whole /24s and only prior /40 targets, scan id bumped") {
  NetworkUnit u24{UnitLevel::slash24, 0, pfx("198.51.100.0/24")};
  auto plan = plan_rescan({u24}, {}, 4, kCfg);
  CHECK(plan.probes.size() == 254 * 2);
  for (const auto& p : plan.probes) {
    CHECK(p.purpose == Purpose::rescan);
    auto d = codec::decode(p.qname, kCfg.zones);
    REQUIRE(d.status == codec::DecodeStatus::ok);
    CHECK(d.domain.scan_id == 2);
  }
  check_plan(plan);

  NetworkUnit u40{UnitLevel::slash40, 0, pfx("2001:db8::/40")};
  auto prior = std::vector<Address>{a("2001:db8::1"), a("2001:db8:7f::2"),
                                    a("2001:db8::3"), a("2001:dead::1")};
  auto p40 = plan_rescan({u40}, prior, 4, kCfg);
  CHECK(p40.probes.size() == 6);  // 3 prior targets inside the /40
  CHECK(plan_targets(p40) ==
        std::set<Address>{a("2001:db8::1"), a("2001:db8:7f::2"), a("2001:db8::3")});

  CHECK(plan_rescan({u40}, {a("2001:dead::1")}, 4, kCfg).probes.empty());

  NetworkUnit uasn{UnitLevel::asn, 5, {}};
  CHECK_THROWS_AS(plan_rescan({uasn}, {}, 4, kCfg), std::invalid_argument);
}

TEST_CASE("rescan and main-scan names are separable by scan id") {
  BgpTable t;
  t.add(pfx("198.51.100.0/24"), 1);
  auto main_plan = plan_ipv4(t, {}, 8, kCfg);
  NetworkUnit u24{UnitLevel::slash24, 0, pfx("198.51.100.0/24")};
  auto rescan_plan = plan_rescan({u24}, {}, 8, kCfg);
  std::set<int> main_ids, rescan_ids;
  for (const auto& p : main_plan.probes)
    main_ids.insert(codec::decode(p.qname, kCfg.zones).domain.scan_id);
  for (const auto& p : rescan_plan.probes)
    rescan_ids.insert(codec::decode(p.qname, kCfg.zones).domain.scan_id);
  CHECK(main_ids == std::set<int>{1});
  CHECK(rescan_ids == std::set<int>{2});
}

TEST_CASE("all nonces within one plan are unique") {
  BgpTable t;
  t.add(pfx("10.0.0.0/24"), 1);
  t.add(pfx("10.7.0.0/24"), 1);
  auto plan = plan_ipv4(t, {}, 13, kCfg);
  std::set<std::string> nonces;
  for (const auto& p : plan.probes) {
    auto d = codec::decode(p.qname, kCfg.zones);
    REQUIRE(nonces.insert(d.domain.nonce).second);
  }
}
