// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <sstream>

#include "sav/netaddr.hpp"

using namespace sav;

namespace {

Address a4(const char* s) { return *Address::parse(s); }
Address a6(const char* s) { return *Address::parse(s); }
Prefix pfx(const char* s) { return *Prefix::parse(s); }

Address random_address(std::mt19937_64& rng, Family f) {
  if (f == Family::v4)
    return Address::v4(static_cast<uint32_t>(rng()));
  return Address::v6(u128(rng()) << 64 | rng());
}

// Linear-scan longest-prefix-match oracle.
std::optional<std::pair<Prefix, uint32_t>> lpm_oracle(
    const std::vector<std::pair<Prefix, uint32_t>>& entries, const Address& a) {
  std::optional<std::pair<Prefix, uint32_t>> best;
  for (const auto& e : entries) {
    if (!e.first.contains(a))
      continue;
    if (!best || e.first.length > best->first.length ||
        (e.first.length == best->first.length && e.second < best->second))
      best = e;
  }
  return best;
}

}  // namespace

TEST_CASE("adjacent address") {
  CHECK(adjacent_address(a4("1.2.3.5")) == a4("1.2.3.6"));
  CHECK(adjacent_address(a4("255.255.255.255")) == a4("0.0.0.0"));
  CHECK(adjacent_address(a6("::1")) == a6("::2"));
  CHECK(adjacent_address(a6("ffff:ffff:ffff:ffff:ffff:ffff:ffff:ffff")) == a6("::"));
  CHECK(adjacent_address(a4("1.2.3.255")) == a4("1.2.4.0"));
}

TEST_CASE("parse/format round-trip on random addresses") {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 100000; ++i) {
    Family f = i % 2 ? Family::v4 : Family::v6;
    Address a = random_address(rng, f);
    auto back = Address::parse(a.to_string());
    REQUIRE(back.has_value());
    REQUIRE(*back == a);
  }
}

TEST_CASE("address parsing rejects junk") {
  CHECK_FALSE(Address::parse(""));
  CHECK_FALSE(Address::parse("1.2.3"));
  CHECK_FALSE(Address::parse("1.2.3.256"));
  CHECK_FALSE(Address::parse("not-an-ip"));
  CHECK_FALSE(Address::parse("1.2.3.4.5"));
  CHECK_FALSE(Address::parse(":::"));
}

TEST_CASE("prefix parse canonicalization") {
  CHECK(pfx("10.0.0.0/8").contains(a4("10.255.0.1")));
  CHECK_FALSE(pfx("10.0.0.0/8").contains(a4("11.0.0.1")));
  CHECK_FALSE(Prefix::parse("10.0.0.1/8"));  // host bits set
  CHECK_FALSE(Prefix::parse("10.0.0.0/33"));
  CHECK(pfx("0.0.0.0/0").contains(a4("1.2.3.4")));
  CHECK(pfx("::/0").contains(a6("2001:db8::1")));
  CHECK_FALSE(pfx("::/0").contains(a4("1.2.3.4")));
  CHECK(pfx("1.2.3.0/24").last() == a4("1.2.3.255"));
}

TEST_CASE("bgp table parsing") {
  std::istringstream in(
      "# comment\n"
      "1.2.3.0/24\t65001\n"
      "\n"
      "1.2.3.0/24\t65001\n"
      "bogus line\n"
      "10.0.0.0/8\t65002\n");
  BgpParseStats stats;
  auto t = BgpTable::parse(in, &stats);
  CHECK(t.entries().size() == 2);  // duplicate collapsed
  CHECK(stats.valid == 3);
  CHECK(stats.malformed == 1);
}

TEST_CASE("bgp table parse fails on zero valid entries") {
  std::istringstream in("# nothing\nbroken\n");
  CHECK_THROWS_AS(BgpTable::parse(in), std::runtime_error);
}

TEST_CASE("longest prefix match basics") {
  BgpTable t;
  t.add(pfx("10.0.0.0/8"), 1);
  t.add(pfx("10.1.0.0/16"), 2);
  auto hit = longest_prefix_match(t, a4("10.1.2.3"));
  REQUIRE(hit.has_value());
  CHECK(hit->first == pfx("10.1.0.0/16"));
  CHECK(hit->second == 2);
  CHECK(longest_prefix_match(t, a4("10.2.2.3"))->second == 1);

  BgpTable empty;
  CHECK_FALSE(longest_prefix_match(empty, a4("192.0.2.1")));
}

TEST_CASE("longest prefix match agrees with linear-scan oracle") {
  std::mt19937_64 rng(7);
  for (Family f : {Family::v4, Family::v6}) {
    BgpTable t;
    std::vector<std::pair<Prefix, uint32_t>> entries;
    int width = family_width(f);
    for (int i = 0; i < 1000; ++i) {
      int len = static_cast<int>(rng() % (width + 1));
      Prefix p = Prefix::of(random_address(rng, f), len);
      uint32_t asn = static_cast<uint32_t>(rng() % 1000 + 1);
      t.add(p, asn);
    }
    for (const auto& e : t.entries())
      entries.push_back(e);
    for (int i = 0; i < 10000; ++i) {
      Address a = random_address(rng, f);
      auto got = t.lookup(a);
      auto want = lpm_oracle(entries, a);
      REQUIRE(got.has_value() == want.has_value());
      if (got)
        REQUIRE(*got == *want);
    }
  }
}

TEST_CASE("aggregate: containment and sibling merge") {
  CHECK(aggregate_prefixes({pfx("10.0.0.0/8"), pfx("10.1.0.0/16")}) ==
        std::vector<Prefix>{pfx("10.0.0.0/8")});
  CHECK(aggregate_prefixes({pfx("10.0.0.0/9"), pfx("10.128.0.0/9")}) ==
        std::vector<Prefix>{pfx("10.0.0.0/8")});
  auto disjoint = std::vector<Prefix>{pfx("10.0.0.0/8"), pfx("192.168.0.0/16")};
  CHECK(aggregate_prefixes(disjoint) == disjoint);
  // cascade: four /26 siblings collapse to one /24
  CHECK(aggregate_prefixes({pfx("1.2.3.0/26"), pfx("1.2.3.64/26"), pfx("1.2.3.128/26"),
                            pfx("1.2.3.192/26")}) ==
        std::vector<Prefix>{pfx("1.2.3.0/24")});
}

TEST_CASE("aggregate /9 pair covers the same /24 set as the /8") {
  auto merged = aggregate_prefixes({pfx("10.0.0.0/9"), pfx("10.128.0.0/9")});
  REQUIRE(merged.size() == 1);
  std::set<uint32_t> covered;
  for (const auto& p : {pfx("10.0.0.0/9"), pfx("10.128.0.0/9")})
    for (u128 v = p.first().value; v <= p.last().value; v += 256)
      covered.insert(static_cast<uint32_t>(v));
  for (uint32_t slash24 : covered)
    CHECK(merged[0].contains(Address::v4(slash24)));
  CHECK(covered.size() == merged[0].size() / 256);
}

TEST_CASE("aggregate output is disjoint and membership-preserving") {
  std::mt19937_64 rng(11);
  std::vector<Prefix> input;
  for (int i = 0; i < 200; ++i)
    input.push_back(Prefix::of(random_address(rng, Family::v4), 8 + int(rng() % 25)));
  auto out = aggregate_prefixes(input);
  for (size_t i = 0; i < out.size(); ++i)
    for (size_t j = i + 1; j < out.size(); ++j) {
      CHECK_FALSE(out[i].contains(out[j]));
      CHECK_FALSE(out[j].contains(out[i]));
    }
  auto member = [](const std::vector<Prefix>& ps, const Address& a) {
    for (const auto& p : ps)
      if (p.contains(a))
        return true;
    return false;
  };
  for (int i = 0; i < 10000; ++i) {
    Address a = random_address(rng, Family::v4);
    CHECK(member(input, a) == member(out, a));
  }
}

TEST_CASE("unit_of") {
  BgpTable t;
  t.add(pfx("10.0.0.0/8"), 1);
  t.add(pfx("10.1.0.0/16"), 2);

  auto u24 = unit_of(a4("1.2.3.77"), UnitLevel::slash24, t);
  REQUIRE(u24.has_value());
  CHECK(u24->prefix == pfx("1.2.3.0/24"));

  auto u40 = unit_of(a6("2001:db8::1"), UnitLevel::slash40, t);
  REQUIRE(u40.has_value());
  CHECK(u40->prefix == pfx("2001:db8::/40"));

  auto uasn = unit_of(a4("10.1.2.3"), UnitLevel::asn, t);
  REQUIRE(uasn.has_value());
  CHECK(uasn->asn == 2);

  auto uprefix = unit_of(a4("10.1.2.3"), UnitLevel::bgp_prefix, t);
  REQUIRE(uprefix.has_value());
  CHECK(uprefix->prefix == pfx("10.1.0.0/16"));

  CHECK_FALSE(unit_of(a4("192.0.2.1"), UnitLevel::asn, t));
  CHECK_THROWS_AS(unit_of(a6("::1"), UnitLevel::slash24, t), std::invalid_argument);
  CHECK_THROWS_AS(unit_of(a4("1.2.3.4"), UnitLevel::slash40, t), std::invalid_argument);

  // idempotent under re-masking
  CHECK(unit_of(u24->prefix.base, UnitLevel::slash24, t)->prefix == u24->prefix);
}

TEST_CASE("dealias hitlist") {
  auto aliased = std::vector<Prefix>{pfx("2001:db8::/64")};
  auto out = dealias_hitlist({a6("2001:db8::2"), a6("2001:db8::1")}, aliased);
  CHECK(out == std::vector<Address>{a6("2001:db8::1")});

  out = dealias_hitlist({a6("::2"), a6("::1"), a6("::2")}, {});
  CHECK(out == std::vector<Address>{a6("::1"), a6("::2")});
}

TEST_CASE("dealias matches per-prefix grouping oracle on random input") {
  std::mt19937_64 rng(3);
  std::vector<Prefix> aliased;
  for (int i = 0; i < 10; ++i) {
    u128 base = (u128(0x20010db8u + uint32_t(i)) << 96);
    aliased.push_back(Prefix::of(Address::v6(base), 48));
  }
  std::vector<Address> addrs;
  for (int i = 0; i < 10000; ++i) {
    if (rng() % 2) {
      const Prefix& p = aliased[rng() % aliased.size()];
      addrs.push_back(Address::v6(p.base.value | (rng() % 1000)));
    } else {
      addrs.push_back(Address::v6(u128(0x3000u) << 112 | rng()));
    }
  }
  auto out = dealias_hitlist(addrs, aliased);

  // oracle: group by covering prefix, keep min; others dedup
  std::set<Address> expected;
  std::map<int, Address> mins;
  for (const auto& a : addrs) {
    int hit = -1;
    for (size_t i = 0; i < aliased.size(); ++i)
      if (aliased[i].contains(a))
        hit = static_cast<int>(i);
    if (hit < 0) {
      expected.insert(a);
    } else {
      auto [it, fresh] = mins.emplace(hit, a);
      if (!fresh && a < it->second)
        it->second = a;
    }
  }
  for (const auto& [i, a] : mins)
    expected.insert(a);
  CHECK(out == std::vector<Address>(expected.begin(), expected.end()));
}

TEST_CASE("as_size") {
  BgpTable t;
  t.add(pfx("1.2.3.0/24"), 5);
  CHECK(as_size(t, 5) == 256);
  t.add(pfx("1.2.3.128/25"), 5);
  CHECK(as_size(t, 5) == 256);  // contained /25 adds nothing
  t.add(pfx("9.9.9.0/30"), 5);
  CHECK(as_size(t, 5) == 260);
  CHECK(as_size(t, 42) == 0);
}

TEST_CASE("as_size equals enumeration oracle on toy prefixes") {
  std::mt19937_64 rng(13);
  BgpTable t;
  std::vector<Prefix> mine;
  for (int i = 0; i < 40; ++i) {
    Prefix p = Prefix::of(Address::v4(uint32_t(rng() % 4096) << 4), 26 + int(rng() % 7));
    uint32_t asn = 1 + uint32_t(rng() % 2);
    t.add(p, asn);
    if (asn == 1)
      mine.push_back(p);
  }
  std::set<uint32_t> covered;
  for (const auto& p : mine)
    for (u128 v = p.first().value; v <= p.last().value; ++v)
      covered.insert(static_cast<uint32_t>(v));
  CHECK(as_size(t, 1) == covered.size());
}

TEST_CASE("as_stability") {
  BgpTable s1, s2, s3;
  s1.add(pfx("1.2.3.0/24"), 9);
  s2.add(pfx("1.2.3.0/24"), 9);
  CHECK(as_stability({s1, s2}, 9) == doctest::Approx(1.0));

  BgpTable q;
  q.add(pfx("9.9.9.0/24"), 9);
  CHECK(as_stability({s1, q}, 9) == doctest::Approx(0.0));

  BgpTable pq;
  pq.add(pfx("1.2.3.0/24"), 9);
  pq.add(pfx("9.9.9.0/24"), 9);
  CHECK(as_stability({pq, s1}, 9) == doctest::Approx(0.5));

  s3.add(pfx("5.5.5.0/24"), 77);
  CHECK_THROWS_AS(as_stability({s1, s2}, 1234), std::runtime_error);
  CHECK_THROWS_AS(as_stability({s1}, 9), std::invalid_argument);
}

TEST_CASE("as graph: stubs and peer counts") {
  AsGraph g;
  g.add_edge(1, 2, AsRel::provider_to_customer);
  CHECK(g.is_stub(2));
  CHECK_FALSE(g.is_stub(1));
  g.add_edge(1, 3, AsRel::peer_to_peer);
  CHECK(g.peer_count(1) == 2);
  CHECK(g.peer_count(2) == 1);
  CHECK(g.peer_count(99) == 0);

  CHECK_THROWS_AS(g.add_edge(4, 4, AsRel::peer_to_peer), std::invalid_argument);
  CHECK_THROWS_AS(g.add_edge(1, 2, AsRel::peer_to_peer), std::invalid_argument);
  g.add_edge(1, 2, AsRel::provider_to_customer);  // exact duplicate is fine
  CHECK(g.edges().size() == 2);
}

TEST_CASE("as graph matches direct edge scans on a random graph") {
  std::mt19937_64 rng(21);
  AsGraph g;
  std::vector<std::tuple<uint32_t, uint32_t, AsRel>> edges;
  std::set<std::pair<uint32_t, uint32_t>> used;
  for (int i = 0; i < 200; ++i) {
    uint32_t a = 1 + uint32_t(rng() % 50);
    uint32_t b = 1 + uint32_t(rng() % 50);
    if (a == b || !used.emplace(std::min(a, b), std::max(a, b)).second)
      continue;
    AsRel rel = rng() % 2 ? AsRel::provider_to_customer : AsRel::peer_to_peer;
    g.add_edge(a, b, rel);
    edges.emplace_back(a, b, rel);
  }
  for (uint32_t asn = 1; asn <= 50; ++asn) {
    bool stub = true;
    std::set<uint32_t> neigh;
    for (const auto& [a, b, rel] : edges) {
      if (a == asn || b == asn)
        neigh.insert(a == asn ? b : a);
      if (a == asn && rel == AsRel::provider_to_customer)
        stub = false;
    }
    CHECK(g.is_stub(asn) == stub);
    CHECK(g.peer_count(asn) == neigh.size());
  }
}

TEST_CASE("caida relationship file parsing") {
  std::istringstream in(
      "# serial-1\n"
      "1|2|-1\n"
      "2|3|0\n");
  auto g = AsGraph::parse(in);
  CHECK_FALSE(g.is_stub(1));
  CHECK(g.is_stub(2));
  CHECK(g.peer_count(2) == 2);
}
