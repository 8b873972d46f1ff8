// SPDX-License-Identifier: Apache-2.0

#include "sav/simnet.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

namespace sav::simnet {

namespace {

uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Per-(probe, leg) coin, independent of how many draws other probes consume,
// so a lossy run's records are a subset of the zero-loss run.
bool lost(const SimTopology& topo, size_t probe_index, int leg) {
  if (topo.loss_probability <= 0.0)
    return false;
  if (topo.loss_probability >= 1.0)
    return true;
  uint64_t h = splitmix64(topo.seed ^ splitmix64(probe_index * 4 + uint64_t(leg)));
  double u = double(h >> 11) * 0x1.0p-53;
  return u < topo.loss_probability;
}

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  std::string tok;
  while (in >> tok)
    out.push_back(tok);
  return out;
}

std::optional<std::string> kv(const std::string& tok, const std::string& key) {
  if (tok.size() > key.size() + 1 && tok.compare(0, key.size(), key) == 0 &&
      tok[key.size()] == '=')
    return tok.substr(key.size() + 1);
  return std::nullopt;
}

}  // namespace

std::string to_string(ResolverBehavior b) {
  switch (b) {
    case ResolverBehavior::recursive: return "recursive";
    case ResolverBehavior::forwarder_clean: return "forwarder_clean";
    case ResolverBehavior::forwarder_noRewrite: return "forwarder_norewrite";
  }
  return "?";
}

std::optional<ResolverBehavior> parse_resolver_behavior(std::string_view s) {
  if (s == "recursive") return ResolverBehavior::recursive;
  if (s == "forwarder_clean") return ResolverBehavior::forwarder_clean;
  if (s == "forwarder_norewrite") return ResolverBehavior::forwarder_noRewrite;
  return std::nullopt;
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::vulnerable: return "vulnerable";
    case Verdict::non_vulnerable: return "non_vulnerable";
    case Verdict::partial: return "partial";
    case Verdict::no_data: return "no_data";
  }
  return "?";
}

std::optional<Verdict> parse_verdict(std::string_view s) {
  if (s == "vulnerable") return Verdict::vulnerable;
  if (s == "non_vulnerable") return Verdict::non_vulnerable;
  if (s == "partial") return Verdict::partial;
  if (s == "no_data") return Verdict::no_data;
  return std::nullopt;
}

bool SimResolver::answers(const Address& query_src) const {
  if (open)
    return true;
  return std::any_of(acl.begin(), acl.end(),
                     [&](const Prefix& p) { return p.contains(query_src); });
}

void SimTopology::validate() const {
  if (loss_probability < 0.0 || loss_probability > 1.0)
    throw std::invalid_argument("loss probability out of [0,1]");
  for (size_t i = 0; i < networks.size(); ++i) {
    const auto& n = networks[i];
    if (n.asn == 0)
      throw std::invalid_argument("network asn must be positive");
    for (const auto& r : n.resolvers) {
      if (!n.prefix.contains(r.addr))
        throw std::invalid_argument("resolver outside its network prefix");
      if (r.behavior == ResolverBehavior::recursive) {
        if (r.upstream.value != 0)
          throw std::invalid_argument("recursive resolver with upstream");
      } else if (r.upstream == r.addr) {
        throw std::invalid_argument("forwarder upstream equals resolver address");
      }
    }
    for (size_t j = i + 1; j < networks.size(); ++j) {
      const auto& m = networks[j];
      if (n.prefix.base.family == m.prefix.base.family &&
          (n.prefix.contains(m.prefix) || m.prefix.contains(n.prefix)))
        throw std::invalid_argument("network prefixes overlap");
    }
  }
}

BgpTable SimTopology::routing_table() const {
  BgpTable t;
  for (const auto& n : networks)
    t.add(n.prefix, n.asn);
  return t;
}

const SimNetwork* SimTopology::network_containing(const Address& a) const {
  for (const auto& n : networks)
    if (n.prefix.contains(a))
      return &n;
  return nullptr;
}

const SimResolver* SimTopology::resolver_at(const Address& a) const {
  const SimNetwork* n = network_containing(a);
  if (!n)
    return nullptr;
  for (const auto& r : n->resolvers)
    if (r.addr == a)
      return &r;
  return nullptr;
}

void SimTopology::serialize(std::ostream& out) const {
  out << "seed " << seed << '\n';
  out << "loss " << loss_probability << '\n';
  for (const auto& n : networks) {
    out << "network " << n.prefix.to_string() << ' ' << n.asn
        << " inbound=" << (n.inbound_sav ? 1 : 0)
        << " outbound=" << (n.outbound_sav ? 1 : 0) << '\n';
    for (const auto& r : n.resolvers) {
      out << "resolver " << r.addr.to_string() << " open=" << (r.open ? 1 : 0)
          << " behavior=" << to_string(r.behavior);
      out << " upstream="
          << (r.behavior == ResolverBehavior::recursive ? "none"
                                                        : r.upstream.to_string());
      out << " acl=";
      if (r.acl.empty()) {
        out << "none";
      } else {
        for (size_t i = 0; i < r.acl.size(); ++i)
          out << (i ? "," : "") << r.acl[i].to_string();
      }
      out << '\n';
    }
  }
}

std::string SimTopology::serialize() const {
  std::ostringstream out;
  serialize(out);
  return out.str();
}

SimTopology SimTopology::parse(std::istream& in) {
  SimTopology topo;
  std::string line;
  size_t lineno = 0;
  auto fail = [&](const std::string& msg) -> void {
    throw std::runtime_error("topology line " + std::to_string(lineno) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#')
      continue;
    auto toks = split_ws(line);
    if (toks.empty())
      continue;
    if (toks[0] == "seed" && toks.size() == 2) {
      topo.seed = std::stoull(toks[1]);
    } else if (toks[0] == "loss" && toks.size() == 2) {
      topo.loss_probability = std::stod(toks[1]);
    } else if (toks[0] == "network") {
      if (toks.size() != 5)
        fail("expected: network <prefix> <asn> inbound=<0|1> outbound=<0|1>");
      SimNetwork n;
      auto p = Prefix::parse(toks[1]);
      if (!p)
        fail("bad prefix " + toks[1]);
      n.prefix = *p;
      n.asn = static_cast<uint32_t>(std::stoul(toks[2]));
      auto inb = kv(toks[3], "inbound");
      auto outb = kv(toks[4], "outbound");
      if (!inb || !outb)
        fail("bad flags");
      n.inbound_sav = *inb == "1";
      n.outbound_sav = *outb == "1";
      topo.networks.push_back(std::move(n));
    } else if (toks[0] == "resolver") {
      if (topo.networks.empty())
        fail("resolver before any network");
      if (toks.size() < 4 || toks.size() > 6)
        fail("expected: resolver <addr> open=<0|1> behavior=<b> upstream=<a|none> acl=<p,..|none>");
      SimResolver r;
      auto addr = Address::parse(toks[1]);
      if (!addr)
        fail("bad address " + toks[1]);
      r.addr = *addr;
      auto open = kv(toks[2], "open");
      auto behavior = kv(toks[3], "behavior");
      if (!open || !behavior)
        fail("bad fields");
      r.open = *open == "1";
      auto b = parse_resolver_behavior(*behavior);
      if (!b)
        fail("bad behavior " + *behavior);
      r.behavior = *b;
      // upstream and acl may come in either order
      for (size_t i = 4; i < toks.size(); ++i) {
        if (auto up = kv(toks[i], "upstream")) {
          if (*up != "none") {
            auto ua = Address::parse(*up);
            if (!ua)
              fail("bad upstream " + *up);
            r.upstream = *ua;
          }
        } else if (auto acl = kv(toks[i], "acl")) {
          if (*acl != "none") {
            std::istringstream as(*acl);
            std::string item;
            while (std::getline(as, item, ',')) {
              auto pp = Prefix::parse(item);
              if (!pp)
                fail("bad acl prefix " + item);
              r.acl.push_back(*pp);
            }
          }
        } else {
          fail("unknown field " + toks[i]);
        }
      }
      topo.networks.back().resolvers.push_back(std::move(r));
    } else {
      fail("unknown directive " + toks[0]);
    }
  }
  topo.validate();
  return topo;
}

SimTopology SimTopology::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot open " + path);
  return parse(in);
}

SimOutput simulate(const SimTopology& topo, const planner::ScanPlan& plan) {
  topo.validate();
  SimOutput out;
  for (size_t i = 0; i < plan.probes.size(); ++i) {
    const auto& probe = plan.probes[i];
    int64_t ts = static_cast<int64_t>(i) * 10;
    if (lost(topo, i, 0))
      continue;
    const SimNetwork* net = topo.network_containing(probe.dst);
    if (!net)
      continue;
    // Edge filtering: a spoofed probe claims an in-network source, inbound
    // SAV drops it before it reaches anything.
    if (probe.kind == codec::ProbeKind::spoofed && net->inbound_sav)
      continue;
    const SimResolver* r = nullptr;
    for (const auto& cand : net->resolvers)
      if (cand.addr == probe.dst) {
        r = &cand;
        break;
      }
    if (!r)
      continue;

    bool answered = r->answers(probe.src);
    if (answered) {
      Address auth_src =
          r->behavior == ResolverBehavior::recursive ? r->addr : r->upstream;
      if (!lost(topo, i, 1))
        out.auth_log.push_back({ts, auth_src, probe.qname, "A"});
      if (probe.kind == codec::ProbeKind::unspoofed) {
        bool mismatched = r->behavior == ResolverBehavior::forwarder_noRewrite;
        // A mismatched-source response is itself spoofed-looking traffic and
        // dies at the egress when the network filters outbound.
        if (mismatched && net->outbound_sav)
          continue;
        Address responder = mismatched ? r->upstream : probe.dst;
        if (!lost(topo, i, 2))
          out.responses.push_back({ts + 1, probe.dst, responder, collector::Rcode::NOERROR, true});
      }
    } else if (probe.kind == codec::ProbeKind::unspoofed) {
      if (!lost(topo, i, 2))
        out.responses.push_back({ts + 1, probe.dst, probe.dst, collector::Rcode::REFUSED, false});
    }
  }
  return out;
}

GroundTruth ground_truth(const SimTopology& topo, UnitLevel level) {
  topo.validate();
  GroundTruth gt;
  gt.level = level;
  BgpTable table = topo.routing_table();

  for (const auto& net : topo.networks) {
    for (const auto& r : net.resolvers) {
      ExpectedObs expected = ExpectedObs::silent;
      bool spoof_resolves = !net.inbound_sav && r.answers(r.addr.next());
      bool open_visible =
          r.open && (r.behavior != ResolverBehavior::forwarder_noRewrite ||
                     !net.outbound_sav);
      if (spoof_resolves)
        expected = ExpectedObs::spoof_resolved;
      else if (open_visible)
        expected = ExpectedObs::open_no_spoof;
      gt.per_resolver[r.addr] = expected;

      if ((level == UnitLevel::slash24 && r.addr.family != Family::v4) ||
          (level == UnitLevel::slash40 && r.addr.family != Family::v6))
        continue;
      auto unit = unit_of(r.addr, level, table);
      if (!unit)
        continue;
      auto [it, fresh] = gt.verdicts.emplace(*unit, Verdict::no_data);
      if (expected == ExpectedObs::silent)
        continue;
      Verdict add = expected == ExpectedObs::spoof_resolved ? Verdict::vulnerable
                                                            : Verdict::non_vulnerable;
      if (it->second == Verdict::no_data)
        it->second = add;
      else if (it->second != add)
        it->second = Verdict::partial;
    }
  }
  return gt;
}

SimTopology random_topology(uint64_t seed, int n_networks, const TopologyKnobs& knobs) {
  std::mt19937_64 rng(seed);
  auto coin = [&](double p) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p;
  };

  SimTopology topo;
  topo.seed = seed;
  topo.loss_probability = knobs.loss_probability;

  int asn_pool = std::max(1, n_networks / 2);
  int v6_budget = static_cast<int>(knobs.p_v6 * n_networks);

  for (int i = 0; i < n_networks; ++i) {
    SimNetwork net;
    bool v6 = i < v6_budget;
    if (v6) {
      // 2001:db8:xx00::/40 blocks, one per network
      u128 base = (u128(0x20010db8u) << 96) | (u128(i) << 88);
      net.prefix = Prefix::of(Address::v6(base), 40);
    } else {
      uint32_t base = (10u << 24) | (static_cast<uint32_t>(i) << 8);
      net.prefix = Prefix::of(Address::v4(base), 24);
    }
    net.asn = 65000 + static_cast<uint32_t>(
                          std::uniform_int_distribution<int>(0, asn_pool - 1)(rng));
    net.inbound_sav = coin(knobs.p_inbound_sav);
    net.outbound_sav = coin(knobs.p_outbound_sav);

    int n_resolvers = std::uniform_int_distribution<int>(knobs.min_resolvers,
                                                         knobs.max_resolvers)(rng);
    for (int j = 0; j < n_resolvers; ++j) {
      SimResolver r;
      r.addr = Address{net.prefix.base.family, net.prefix.base.value + u128(j) + 1};
      r.open = coin(knobs.p_open);
      if (!r.open && !coin(knobs.p_empty_acl))
        r.acl.push_back(net.prefix);
      if (coin(knobs.p_forwarder)) {
        r.behavior = coin(knobs.p_norewrite) ? ResolverBehavior::forwarder_noRewrite
                                             : ResolverBehavior::forwarder_clean;
        // upstream in another network when one exists, far from resolver slots
        if (n_networks > 1) {
          int other = std::uniform_int_distribution<int>(0, n_networks - 2)(rng);
          if (other >= i)
            ++other;
          // upstream networks built earlier have known bases; later ones are
          // derivable from the same layout
          bool other_v6 = other < v6_budget;
          u128 base = other_v6 ? ((u128(0x20010db8u) << 96) | (u128(other) << 88))
                               : u128((10u << 24) | (static_cast<uint32_t>(other) << 8));
          r.upstream = Address{other_v6 ? Family::v6 : Family::v4, base + 200};
        } else {
          r.upstream = Address::v4(0xc6336401);  // 198.51.100.1, off-topology
        }
      }
      net.resolvers.push_back(std::move(r));
    }
    topo.networks.push_back(std::move(net));
  }
  topo.validate();
  return topo;
}

}  // namespace sav::simnet
