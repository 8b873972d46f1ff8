// SPDX-License-Identifier: Apache-2.0

#include "sav/netaddr.hpp"

#include <arpa/inet.h>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace sav {

u128 high_mask(int length, int width) {
  if (length <= 0)
    return 0;
  if (length >= width)
    return width == 32 ? u128(0xffffffffu) : ~u128(0);
  u128 all = width == 32 ? u128(0xffffffffu) : ~u128(0);
  return all << (width - length) & all;
}

Address Address::next() const {
  u128 mask = family == Family::v4 ? u128(0xffffffffu) : ~u128(0);
  return {family, (value + 1) & mask};
}

std::string Address::to_string() const {
  char buf[INET6_ADDRSTRLEN];
  if (family == Family::v4) {
    uint32_t be = htonl(static_cast<uint32_t>(value));
    inet_ntop(AF_INET, &be, buf, sizeof(buf));
  } else {
    unsigned char bytes[16];
    for (int i = 0; i < 16; ++i)
      bytes[i] = static_cast<unsigned char>(value >> (8 * (15 - i)));
    inet_ntop(AF_INET6, bytes, buf, sizeof(buf));
  }
  return buf;
}

std::optional<Address> Address::parse(std::string_view text) {
  std::string s(text);
  if (s.find(':') != std::string::npos) {
    unsigned char bytes[16];
    if (inet_pton(AF_INET6, s.c_str(), bytes) != 1)
      return std::nullopt;
    u128 v = 0;
    for (int i = 0; i < 16; ++i)
      v = v << 8 | bytes[i];
    return Address{Family::v6, v};
  }
  struct in_addr a4;
  if (inet_pton(AF_INET, s.c_str(), &a4) != 1)
    return std::nullopt;
  return Address{Family::v4, ntohl(a4.s_addr)};
}

Prefix Prefix::of(Address base, int length) {
  int w = base.width();
  if (length < 0 || length > w)
    throw std::invalid_argument("prefix length out of range");
  base.value &= high_mask(length, w);
  return Prefix{base, length};
}

bool Prefix::contains(const Address& a) const {
  if (a.family != base.family)
    return false;
  return (a.value & high_mask(length, a.width())) == base.value;
}

bool Prefix::contains(const Prefix& p) const {
  return p.length >= length && contains(p.base);
}

Address Prefix::last() const {
  u128 all = base.family == Family::v4 ? u128(0xffffffffu) : ~u128(0);
  return {base.family, base.value | (~high_mask(length, base.width()) & all)};
}

u128 Prefix::size() const {
  int host = base.width() - length;
  if (host >= 128)
    throw std::overflow_error("prefix size overflow");
  return u128(1) << host;
}

std::string Prefix::to_string() const {
  return base.to_string() + "/" + std::to_string(length);
}

std::optional<Prefix> Prefix::parse(std::string_view text) {
  auto slash = text.rfind('/');
  if (slash == std::string_view::npos)
    return std::nullopt;
  auto addr = Address::parse(text.substr(0, slash));
  if (!addr)
    return std::nullopt;
  int len = -1;
  auto tail = text.substr(slash + 1);
  auto [p, ec] = std::from_chars(tail.data(), tail.data() + tail.size(), len);
  if (ec != std::errc() || p != tail.data() + tail.size())
    return std::nullopt;
  if (len < 0 || len > addr->width())
    return std::nullopt;
  auto canonical = Prefix::of(*addr, len);
  if (canonical.base.value != addr->value)
    return std::nullopt;  // host bits set
  return canonical;
}

void BgpTable::add(const Prefix& p, uint32_t asn) {
  if (asn == 0)
    throw std::invalid_argument("asn must be positive");
  if (!entries_.emplace(p, asn).second)
    return;
  auto [it, fresh] = best_asn_.emplace(p, asn);
  if (!fresh && asn < it->second)
    it->second = asn;
  trie_stale_ = true;
}

BgpTable BgpTable::parse(std::istream& in, BgpParseStats* stats) {
  BgpTable t;
  BgpParseStats local;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#')
      continue;
    auto tab = line.find('\t');
    bool ok = false;
    if (tab != std::string::npos) {
      auto prefix = Prefix::parse(std::string_view(line).substr(0, tab));
      uint32_t asn = 0;
      auto tail = std::string_view(line).substr(tab + 1);
      auto [p, ec] = std::from_chars(tail.data(), tail.data() + tail.size(), asn);
      if (prefix && ec == std::errc() && p == tail.data() + tail.size() && asn > 0) {
        t.add(*prefix, asn);
        ok = true;
      }
    }
    if (ok)
      ++local.valid;
    else
      ++local.malformed;
  }
  if (stats)
    *stats = local;
  if (t.entries_.empty())
    throw std::runtime_error("bgp table: no valid entries");
  return t;
}

BgpTable BgpTable::parse_file(const std::string& path, BgpParseStats* stats) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot open " + path);
  return parse(in, stats);
}

std::optional<std::pair<Prefix, uint32_t>> BgpTable::lookup(const Address& a) const {
  if (trie_stale_) {
    // trie keeps the lowest asn per prefix so lookup is deterministic
    trie_ = {};
    for (const auto& [pref, best] : best_asn_)
      trie_.insert(pref, best);
    trie_stale_ = false;
  }
  return trie_.lookup(a);
}

std::vector<Prefix> BgpTable::prefixes_of(uint32_t asn) const {
  std::vector<Prefix> out;
  for (const auto& [p, owner] : entries_)
    if (owner == asn)
      out.push_back(p);
  return out;
}

std::set<uint32_t> BgpTable::asns() const {
  std::set<uint32_t> out;
  for (const auto& [p, asn] : entries_)
    out.insert(asn);
  return out;
}

std::optional<std::pair<Prefix, uint32_t>> longest_prefix_match(const BgpTable& t,
                                                                const Address& a) {
  return t.lookup(a);
}

namespace {

// Sorted-by-(base,length) sweep removes contained prefixes, then a stack pass
// merges aligned sibling pairs, cascading upward.
std::vector<Prefix> aggregate_family(std::vector<Prefix> ps) {
  std::sort(ps.begin(), ps.end());
  std::vector<Prefix> kept;
  for (const auto& p : ps) {
    if (!kept.empty() && kept.back().contains(p))
      continue;
    kept.push_back(p);
  }
  std::vector<Prefix> stack;
  for (const auto& p : kept) {
    stack.push_back(p);
    while (stack.size() >= 2) {
      const Prefix& a = stack[stack.size() - 2];
      const Prefix& b = stack.back();
      if (a.length != b.length || a.length == 0)
        break;
      Prefix parent = Prefix::of(a.base, a.length - 1);
      if (parent.base != a.base || b.base != a.last().next())
        break;
      stack.pop_back();
      stack.pop_back();
      stack.push_back(parent);
    }
  }
  return stack;
}

}  // namespace

std::vector<Prefix> aggregate_prefixes(const std::vector<Prefix>& prefixes) {
  std::vector<Prefix> v4, v6;
  for (const auto& p : prefixes)
    (p.base.family == Family::v4 ? v4 : v6).push_back(p);
  auto out = aggregate_family(std::move(v4));
  auto o6 = aggregate_family(std::move(v6));
  out.insert(out.end(), o6.begin(), o6.end());
  return out;
}

std::vector<Prefix> aggregate_prefixes(const BgpTable& t) {
  std::vector<Prefix> ps;
  for (const auto& [p, asn] : t.entries())
    ps.push_back(p);
  return aggregate_prefixes(ps);
}

std::string to_string(UnitLevel level) {
  switch (level) {
    case UnitLevel::asn: return "asn";
    case UnitLevel::bgp_prefix: return "bgp_prefix";
    case UnitLevel::slash24: return "slash24";
    case UnitLevel::slash40: return "slash40";
  }
  return "?";
}

std::optional<UnitLevel> parse_unit_level(std::string_view s) {
  if (s == "asn") return UnitLevel::asn;
  if (s == "bgp_prefix") return UnitLevel::bgp_prefix;
  if (s == "slash24") return UnitLevel::slash24;
  if (s == "slash40") return UnitLevel::slash40;
  return std::nullopt;
}

std::string NetworkUnit::key() const {
  if (level == UnitLevel::asn)
    return std::to_string(asn);
  return prefix.to_string();
}

std::optional<NetworkUnit> NetworkUnit::parse(UnitLevel level, std::string_view key) {
  NetworkUnit u;
  u.level = level;
  if (level == UnitLevel::asn) {
    auto [p, ec] = std::from_chars(key.data(), key.data() + key.size(), u.asn);
    if (ec != std::errc() || p != key.data() + key.size() || u.asn == 0)
      return std::nullopt;
    return u;
  }
  auto prefix = Prefix::parse(key);
  if (!prefix)
    return std::nullopt;
  if (level == UnitLevel::slash24 &&
      (prefix->length != 24 || prefix->base.family != Family::v4))
    return std::nullopt;
  if (level == UnitLevel::slash40 &&
      (prefix->length != 40 || prefix->base.family != Family::v6))
    return std::nullopt;
  u.prefix = *prefix;
  return u;
}

std::optional<NetworkUnit> unit_of(const Address& a, UnitLevel level, const BgpTable& t) {
  NetworkUnit u;
  u.level = level;
  switch (level) {
    case UnitLevel::slash24:
      if (a.family != Family::v4)
        throw std::invalid_argument("slash24 unit requires an IPv4 address");
      u.prefix = Prefix::of(a, 24);
      return u;
    case UnitLevel::slash40:
      if (a.family != Family::v6)
        throw std::invalid_argument("slash40 unit requires an IPv6 address");
      u.prefix = Prefix::of(a, 40);
      return u;
    case UnitLevel::asn: {
      auto hit = t.lookup(a);
      if (!hit)
        return std::nullopt;
      u.asn = hit->second;
      return u;
    }
    case UnitLevel::bgp_prefix: {
      auto hit = t.lookup(a);
      if (!hit)
        return std::nullopt;
      u.prefix = hit->first;
      return u;
    }
  }
  return std::nullopt;
}

std::vector<Address> dealias_hitlist(const std::vector<Address>& addrs,
                                     const std::vector<Prefix>& aliased) {
  PrefixMap<size_t> map;
  for (size_t i = 0; i < aliased.size(); ++i) {
    if (aliased[i].base.family != Family::v6)
      throw std::invalid_argument("aliased prefixes must be IPv6");
    map.insert(aliased[i], i);
  }
  std::map<size_t, Address> representative;
  std::set<Address> kept;
  for (const auto& a : addrs) {
    if (a.family != Family::v6)
      throw std::invalid_argument("hitlist must be IPv6");
    auto hit = map.lookup(a);
    if (!hit) {
      kept.insert(a);
      continue;
    }
    auto [it, fresh] = representative.emplace(hit->second, a);
    if (!fresh && a < it->second)
      it->second = a;
  }
  for (const auto& [idx, a] : representative)
    kept.insert(a);
  return {kept.begin(), kept.end()};
}

uint64_t as_size(const BgpTable& t, uint32_t asn) {
  std::vector<Prefix> v4;
  for (const auto& p : t.prefixes_of(asn))
    if (p.base.family == Family::v4)
      v4.push_back(p);
  uint64_t total = 0;
  for (const auto& p : aggregate_prefixes(v4))
    total += uint64_t(1) << (32 - p.length);
  return total;
}

double as_stability(const std::vector<BgpTable>& snapshots, uint32_t asn) {
  if (snapshots.size() < 2)
    throw std::invalid_argument("as_stability needs at least two snapshots");
  std::set<Prefix> common, all;
  bool first = true;
  for (const auto& snap : snapshots) {
    auto ps = snap.prefixes_of(asn);
    std::set<Prefix> cur(ps.begin(), ps.end());
    all.insert(cur.begin(), cur.end());
    if (first) {
      common = cur;
      first = false;
    } else {
      std::set<Prefix> next;
      std::set_intersection(common.begin(), common.end(), cur.begin(), cur.end(),
                            std::inserter(next, next.begin()));
      common = std::move(next);
    }
  }
  if (all.empty())
    throw std::runtime_error("asn absent from all snapshots");
  return static_cast<double>(common.size()) / static_cast<double>(all.size());
}

void AsGraph::add_edge(uint32_t a, uint32_t b, AsRel rel) {
  if (a == b)
    throw std::invalid_argument("self-edge");
  std::pair<uint32_t, uint32_t> key{std::min(a, b), std::max(a, b)};
  std::tuple<uint32_t, uint32_t, AsRel> edge =
      rel == AsRel::peer_to_peer ? std::tuple{key.first, key.second, rel}
                                 : std::tuple{a, b, rel};
  auto it = by_pair_.find(key);
  if (it != by_pair_.end()) {
    if (it->second == edge)
      return;  // exact duplicate
    throw std::invalid_argument("conflicting relationship for AS pair");
  }
  by_pair_.emplace(key, edge);
  edges_.insert(edge);
  if (rel == AsRel::provider_to_customer)
    providers_.insert(a);
  neighbors_[a].insert(b);
  neighbors_[b].insert(a);
}

AsGraph AsGraph::parse(std::istream& in) {
  AsGraph g;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#')
      continue;
    std::istringstream ls(line);
    std::string a, b, rel;
    if (!std::getline(ls, a, '|') || !std::getline(ls, b, '|') || !std::getline(ls, rel, '|'))
      continue;
    try {
      uint32_t x = static_cast<uint32_t>(std::stoul(a));
      uint32_t y = static_cast<uint32_t>(std::stoul(b));
      if (rel == "-1")
        g.add_edge(x, y, AsRel::provider_to_customer);
      else if (rel == "0")
        g.add_edge(x, y, AsRel::peer_to_peer);
    } catch (const std::exception&) {
      continue;
    }
  }
  return g;
}

AsGraph AsGraph::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot open " + path);
  return parse(in);
}

bool AsGraph::is_stub(uint32_t asn) const { return providers_.count(asn) == 0; }

size_t AsGraph::peer_count(uint32_t asn) const {
  auto it = neighbors_.find(asn);
  return it == neighbors_.end() ? 0 : it->second.size();
}

std::vector<Address> parse_address_list(std::istream& in) {
  std::vector<Address> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#')
      continue;
    if (auto a = Address::parse(line))
      out.push_back(*a);
  }
  return out;
}

std::vector<Prefix> parse_prefix_list(std::istream& in) {
  std::vector<Prefix> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#')
      continue;
    if (auto p = Prefix::parse(line))
      out.push_back(*p);
    else if (auto a = Address::parse(line))
      out.push_back(Prefix::of(*a, a->width()));  // bare address = host prefix
  }
  return out;
}

std::vector<Address> parse_address_file(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot open " + path);
  return parse_address_list(in);
}

std::vector<Prefix> parse_prefix_file(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot open " + path);
  return parse_prefix_list(in);
}

}  // namespace sav
