// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <compare>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sav {

using u128 = unsigned __int128;

enum class Family : uint8_t { v4, v6 };

constexpr int family_width(Family f) { return f == Family::v4 ? 32 : 128; }

/// An exact-width IP address. v4 values fit in 32 bits, v6 in 128.
struct Address {
  Family family{Family::v4};
  u128 value{0};

  static Address v4(uint32_t v) { return {Family::v4, v}; }
  static Address v6(u128 v) { return {Family::v6, v}; }

  int width() const { return family_width(family); }

  /// a+1 with wraparound modulo the family width; family preserved.
  Address next() const;

  std::string to_string() const;
  static std::optional<Address> parse(std::string_view text);

  friend bool operator==(const Address&, const Address&) = default;
  friend auto operator<=>(const Address& a, const Address& b) {
    if (a.family != b.family)
      return a.family <=> b.family;
    return a.value <=> b.value;
  }
};

inline Address adjacent_address(const Address& a) { return a.next(); }

/// A CIDR prefix. The base address always has all host bits zero.
struct Prefix {
  Address base;
  int length{0};

  /// Masks host bits so the invariant holds for any input base.
  static Prefix of(Address base, int length);

  bool contains(const Address& a) const;
  bool contains(const Prefix& p) const;
  Address first() const { return base; }
  Address last() const;
  /// Number of addresses covered; callers must keep v4-sized prefixes in mind
  /// before materializing (v6 counts can exceed 2^64).
  u128 size() const;

  std::string to_string() const;
  static std::optional<Prefix> parse(std::string_view text);

  friend bool operator==(const Prefix&, const Prefix&) = default;
  friend auto operator<=>(const Prefix& a, const Prefix& b) {
    if (a.base != b.base)
      return a.base <=> b.base;
    return a.length <=> b.length;
  }
};

u128 high_mask(int length, int width);

/// Binary radix trie mapping prefixes to values, longest-match lookup.
/// Both families share one map; lookups never cross families.
template <typename T>
class PrefixMap {
 public:
  void insert(const Prefix& p, const T& value) {
    auto& nodes = p.base.family == Family::v4 ? v4_ : v6_;
    size_t cur = root(nodes);
    int width = p.base.width();
    for (int i = 0; i < p.length; ++i) {
      int bit = static_cast<int>((p.base.value >> (width - 1 - i)) & 1);
      if (nodes[cur].child[bit] < 0) {
        nodes[cur].child[bit] = static_cast<int>(nodes.size());
        nodes.push_back({});
      }
      cur = static_cast<size_t>(nodes[cur].child[bit]);
    }
    if (!nodes[cur].entry)
      nodes[cur].entry.emplace(p, value);
  }

  /// Longest-prefix match; none when no stored prefix covers the address.
  std::optional<std::pair<Prefix, T>> lookup(const Address& a) const {
    const auto& nodes = a.family == Family::v4 ? v4_ : v6_;
    if (nodes.empty())
      return std::nullopt;
    std::optional<std::pair<Prefix, T>> best;
    size_t cur = 0;
    int width = a.width();
    for (int i = 0;; ++i) {
      if (nodes[cur].entry)
        best = nodes[cur].entry;
      if (i == width)
        break;
      int bit = static_cast<int>((a.value >> (width - 1 - i)) & 1);
      if (nodes[cur].child[bit] < 0)
        break;
      cur = static_cast<size_t>(nodes[cur].child[bit]);
    }
    return best;
  }

  bool covers(const Address& a) const { return lookup(a).has_value(); }

 private:
  struct Node {
    int child[2] = {-1, -1};
    std::optional<std::pair<Prefix, T>> entry;
  };
  std::vector<Node> v4_, v6_;

  static size_t root(std::vector<Node>& nodes) {
    if (nodes.empty())
      nodes.push_back({});
    return 0;
  }
};

/// Set of prefixes with containment queries (exclusion lists, aliased prefixes).
class PrefixSet {
 public:
  void insert(const Prefix& p) { map_.insert(p, 0); }
  bool covers(const Address& a) const { return map_.covers(a); }
  std::optional<Prefix> covering(const Address& a) const {
    auto hit = map_.lookup(a);
    if (!hit)
      return std::nullopt;
    return hit->first;
  }

 private:
  PrefixMap<int> map_;
};

struct BgpParseStats {
  size_t valid = 0;
  size_t malformed = 0;
};

/// Routing table: (prefix, origin ASN) entries with longest-prefix match.
class BgpTable {
 public:
  void add(const Prefix& p, uint32_t asn);

  /// Parses lines of "<prefix>\t<asn>"; '#' comments and blank lines ignored.
  /// Throws std::runtime_error if no valid entry is found.
  static BgpTable parse(std::istream& in, BgpParseStats* stats = nullptr);
  static BgpTable parse_file(const std::string& path, BgpParseStats* stats = nullptr);

  std::optional<std::pair<Prefix, uint32_t>> lookup(const Address& a) const;

  const std::set<std::pair<Prefix, uint32_t>>& entries() const { return entries_; }
  std::vector<Prefix> prefixes_of(uint32_t asn) const;
  std::set<uint32_t> asns() const;
  bool empty() const { return entries_.empty(); }

 private:
  std::set<std::pair<Prefix, uint32_t>> entries_;
  std::map<Prefix, uint32_t> best_asn_;  // lowest asn per prefix, for lookup
  mutable PrefixMap<uint32_t> trie_;
  mutable bool trie_stale_ = false;
};

/// Minimal disjoint cover of the union of the given prefixes, sorted by base.
/// Merges contained prefixes and adjacent mergeable siblings.
std::vector<Prefix> aggregate_prefixes(const std::vector<Prefix>& prefixes);
std::vector<Prefix> aggregate_prefixes(const BgpTable& t);

std::optional<std::pair<Prefix, uint32_t>> longest_prefix_match(const BgpTable& t,
                                                                const Address& a);

enum class UnitLevel : uint8_t { asn, bgp_prefix, slash24, slash40 };

std::string to_string(UnitLevel level);
std::optional<UnitLevel> parse_unit_level(std::string_view s);

/// The aggregation unit a verdict applies to: an ASN, a routed prefix,
/// or a fixed-size /24 (v4) or /40 (v6) block.
struct NetworkUnit {
  UnitLevel level{UnitLevel::asn};
  uint32_t asn{0};   // valid when level == asn
  Prefix prefix;     // valid otherwise

  std::string key() const;
  static std::optional<NetworkUnit> parse(UnitLevel level, std::string_view key);

  friend bool operator==(const NetworkUnit&, const NetworkUnit&) = default;
  friend auto operator<=>(const NetworkUnit& a, const NetworkUnit& b) {
    if (a.level != b.level)
      return a.level <=> b.level;
    if (a.level == UnitLevel::asn)
      return a.asn <=> b.asn;
    return a.prefix <=> b.prefix;
  }
};

/// Maps an address to its unit at the given level. Fixed-length levels mask
/// the address (family mismatch throws); routing-based levels go through
/// longest-prefix match and return none when the address is uncovered.
std::optional<NetworkUnit> unit_of(const Address& a, UnitLevel level, const BgpTable& t);

/// One representative (the numerically lowest contained address) per aliased
/// prefix; addresses outside any aliased prefix are kept. Sorted, unique.
std::vector<Address> dealias_hitlist(const std::vector<Address>& addrs,
                                     const std::vector<Prefix>& aliased);

/// Unique IPv4 addresses covered by the ASN's announced prefixes, overlaps
/// among them removed.
uint64_t as_size(const BgpTable& t, uint32_t asn);

/// Intersection-over-union of the ASN's per-snapshot prefix sets.
/// Throws if the ASN announces nothing in any snapshot.
double as_stability(const std::vector<BgpTable>& snapshots, uint32_t asn);

enum class AsRel : uint8_t { provider_to_customer, peer_to_peer };

/// AS relationship graph. At most one relationship per unordered pair,
/// no self-edges.
class AsGraph {
 public:
  /// For provider_to_customer, `a` is the provider.
  void add_edge(uint32_t a, uint32_t b, AsRel rel);

  /// Parses CAIDA serial-1 style lines "asn|asn|rel" with rel -1 (p2c) or 0 (peer).
  static AsGraph parse(std::istream& in);
  static AsGraph parse_file(const std::string& path);

  bool is_stub(uint32_t asn) const;
  size_t peer_count(uint32_t asn) const;

  const std::set<std::tuple<uint32_t, uint32_t, AsRel>>& edges() const { return edges_; }

 private:
  std::set<std::tuple<uint32_t, uint32_t, AsRel>> edges_;  // p2c directed, peer min-first
  std::map<std::pair<uint32_t, uint32_t>, std::tuple<uint32_t, uint32_t, AsRel>> by_pair_;
  std::set<uint32_t> providers_;
  std::map<uint32_t, std::set<uint32_t>> neighbors_;
};

/// One address or prefix per line; '#' comments and blanks ignored.
std::vector<Address> parse_address_list(std::istream& in);
std::vector<Prefix> parse_prefix_list(std::istream& in);
std::vector<Address> parse_address_file(const std::string& path);
std::vector<Prefix> parse_prefix_file(const std::string& path);

}  // namespace sav
