// SPDX-License-Identifier: Apache-2.0

#include "sav/codec.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace sav::codec {

namespace {

constexpr uint64_t kNonceSpace = 2176782336ull;  // 36^6
constexpr uint64_t kNonceStep = 1000003ull;      // coprime with 36^6
constexpr char kNonceAlphabet[] = "abcdefghijklmnopqrstuvwxyz0123456789";

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

bool valid_label(std::string_view l) {
  if (l.empty() || l.size() > 63)
    return false;
  return std::all_of(l.begin(), l.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '-';
  });
}

bool valid_domain(std::string_view d) {
  size_t start = 0;
  while (start <= d.size()) {
    size_t dot = d.find('.', start);
    auto label = d.substr(start, dot == std::string_view::npos ? d.size() - start
                                                               : dot - start);
    if (!valid_label(label))
      return false;
    if (dot == std::string_view::npos)
      break;
    start = dot + 1;
  }
  return true;
}

bool valid_nonce(std::string_view n) {
  if (n.size() != 6)
    return false;
  return std::all_of(n.begin(), n.end(), [](unsigned char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9');
  });
}

std::vector<std::string> split_labels(std::string_view name) {
  std::vector<std::string> out;
  size_t start = 0;
  while (start <= name.size()) {
    size_t dot = name.find('.', start);
    if (dot == std::string_view::npos) {
      out.emplace_back(name.substr(start));
      break;
    }
    out.emplace_back(name.substr(start, dot - start));
    start = dot + 1;
  }
  return out;
}

uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::string encode_target(const Address& a) {
  if (a.family == Family::v4) {
    static const char* hex = "0123456789abcdef";
    std::string out(8, '0');
    uint32_t v = static_cast<uint32_t>(a.value);
    for (int i = 7; i >= 0; --i) {
      out[i] = hex[v & 0xf];
      v >>= 4;
    }
    return out;
  }
  u128 v = a.value;
  if (v == 0)
    return "0";
  std::string out;
  while (v > 0) {
    out.push_back(static_cast<char>('0' + static_cast<int>(v % 10)));
    v /= 10;
  }
  std::reverse(out.begin(), out.end());
  return out;
}

std::optional<Address> decode_target(std::string_view label, Family family) {
  if (family == Family::v4) {
    if (label.size() != 8)
      return std::nullopt;
    uint32_t v = 0;
    for (char c : label) {
      int d;
      if (c >= '0' && c <= '9')
        d = c - '0';
      else if (c >= 'a' && c <= 'f')
        d = c - 'a' + 10;
      else
        return std::nullopt;
      v = v << 4 | static_cast<uint32_t>(d);
    }
    return Address::v4(v);
  }
  if (label.empty() || label.size() > 39)
    return std::nullopt;
  u128 v = 0;
  for (char c : label) {
    if (c < '0' || c > '9')
      return std::nullopt;
    u128 next = v * 10 + static_cast<unsigned>(c - '0');
    if (next < v)
      return std::nullopt;  // overflow
    v = next;
  }
  return Address::v6(v);
}

}  // namespace

void ZoneConfig::validate() const {
  if (!valid_domain(apex_v4only) || !valid_domain(apex_v6only))
    throw std::invalid_argument("zone apex is not a valid domain name");
  if (lower(apex_v4only) == lower(apex_v6only))
    throw std::invalid_argument("zone apexes must differ");
  if (!valid_label(label_v4) || !valid_label(label_v6) || lower(label_v4) == lower(label_v6))
    throw std::invalid_argument("bad zone labels");
}

ZoneConfig ZoneConfig::parse(std::istream& in) {
  ZoneConfig z;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#')
      continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      continue;
    auto key = line.substr(0, eq);
    auto value = line.substr(eq + 1);
    if (key == "apex_v4only")
      z.apex_v4only = value;
    else if (key == "apex_v6only")
      z.apex_v6only = value;
    else if (key == "label_v4")
      z.label_v4 = value;
    else if (key == "label_v6")
      z.label_v6 = value;
  }
  z.validate();
  return z;
}

ZoneConfig ZoneConfig::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot open " + path);
  return parse(in);
}

std::string to_string(ProbeKind k) {
  return k == ProbeKind::spoofed ? "spoofed" : "unspoofed";
}

std::string to_string(TransportZone z) {
  switch (z) {
    case TransportZone::v4_only: return "v4_only";
    case TransportZone::v6_only: return "v6_only";
    case TransportZone::v4_to_v6: return "v4_to_v6";
    case TransportZone::v6_to_v4: return "v6_to_v4";
  }
  return "?";
}

std::optional<ProbeKind> parse_probe_kind(std::string_view s) {
  if (s == "spoofed") return ProbeKind::spoofed;
  if (s == "unspoofed") return ProbeKind::unspoofed;
  return std::nullopt;
}

std::optional<TransportZone> parse_transport_zone(std::string_view s) {
  if (s == "v4_only") return TransportZone::v4_only;
  if (s == "v6_only") return TransportZone::v6_only;
  if (s == "v4_to_v6") return TransportZone::v4_to_v6;
  if (s == "v6_to_v4") return TransportZone::v6_to_v4;
  return std::nullopt;
}

Family target_family(TransportZone z) {
  // The probed resolver lives under the apex's family: switching zones keep
  // the original target encoding.
  switch (z) {
    case TransportZone::v4_only:
    case TransportZone::v4_to_v6:
      return Family::v4;
    default:
      return Family::v6;
  }
}

std::string encode(const ProbeDomain& d, const ZoneConfig& z) {
  z.validate();
  std::string nonce = lower(d.nonce);
  if (!valid_nonce(nonce))
    throw std::invalid_argument("nonce must be 6 chars of [a-z0-9]");
  if (d.scan_id < 1)
    throw std::invalid_argument("scan_id must be positive");
  if (d.target.family != target_family(d.transport_zone))
    throw std::invalid_argument("target family does not match transport zone");

  const std::string& vlabel =
      (d.transport_zone == TransportZone::v4_only ||
       d.transport_zone == TransportZone::v6_to_v4)
          ? z.label_v4
          : z.label_v6;
  const std::string& apex =
      (d.transport_zone == TransportZone::v4_only ||
       d.transport_zone == TransportZone::v4_to_v6)
          ? z.apex_v4only
          : z.apex_v6only;

  std::string name = nonce;
  name += '.';
  name += encode_target(d.target);
  name += '.';
  if (d.nf)
    name += "nf.";
  name += d.kind == ProbeKind::spoofed ? 's' : 'n';
  name += std::to_string(d.scan_id);
  name += '.';
  name += lower(vlabel);
  name += '.';
  name += lower(apex);
  if (name.size() > 253)
    throw std::length_error("query name exceeds 253 chars");
  return name;
}

DecodeResult decode(std::string_view name, const ZoneConfig& z) {
  z.validate();
  std::string folded = lower(name);
  auto labels = split_labels(folded);

  auto apex4 = split_labels(lower(z.apex_v4only));
  auto apex6 = split_labels(lower(z.apex_v6only));
  auto ends_with = [&](const std::vector<std::string>& apex) {
    if (labels.size() < apex.size())
      return false;
    return std::equal(apex.begin(), apex.end(), labels.end() - apex.size());
  };

  bool under_v4 = ends_with(apex4);
  bool under_v6 = !under_v4 && ends_with(apex6);
  if (!under_v4 && !under_v6)
    return {DecodeStatus::not_ours, {}};

  size_t apex_len = under_v4 ? apex4.size() : apex6.size();
  size_t head = labels.size() - apex_len;
  // nonce, target, [nf], kind+scan, vlabel
  if (head != 4 && head != 5)
    return {DecodeStatus::malformed, {}};
  bool nf = head == 5;
  if (nf && labels[2] != "nf")
    return {DecodeStatus::malformed, {}};

  ProbeDomain d;
  d.nf = nf;
  d.nonce = labels[0];
  if (!valid_nonce(d.nonce))
    return {DecodeStatus::malformed, {}};

  Family fam = under_v4 ? Family::v4 : Family::v6;
  auto target = decode_target(labels[1], fam);
  if (!target)
    return {DecodeStatus::malformed, {}};
  d.target = *target;

  const std::string& kind_label = labels[nf ? 3 : 2];
  if (kind_label.size() < 2)
    return {DecodeStatus::malformed, {}};
  if (kind_label[0] == 's')
    d.kind = ProbeKind::spoofed;
  else if (kind_label[0] == 'n')
    d.kind = ProbeKind::unspoofed;
  else
    return {DecodeStatus::malformed, {}};
  int scan_id = 0;
  for (size_t i = 1; i < kind_label.size(); ++i) {
    char c = kind_label[i];
    if (c < '0' || c > '9')
      return {DecodeStatus::malformed, {}};
    scan_id = scan_id * 10 + (c - '0');
    if (scan_id > 1000000)
      return {DecodeStatus::malformed, {}};
  }
  if (scan_id < 1)
    return {DecodeStatus::malformed, {}};
  d.scan_id = scan_id;

  const std::string& vlabel = labels[nf ? 4 : 3];
  bool v4label = vlabel == lower(z.label_v4);
  bool v6label = vlabel == lower(z.label_v6);
  if (!v4label && !v6label)
    return {DecodeStatus::malformed, {}};
  if (under_v4)
    d.transport_zone = v4label ? TransportZone::v4_only : TransportZone::v4_to_v6;
  else
    d.transport_zone = v4label ? TransportZone::v6_to_v4 : TransportZone::v6_only;

  return {DecodeStatus::ok, d};
}

NonceGenerator::NonceGenerator(uint64_t seed)
    : state_(0), offset_(splitmix64(seed) % kNonceSpace) {}

std::string NonceGenerator::next() {
  uint64_t v = (offset_ + (state_ % kNonceSpace) * (kNonceStep % kNonceSpace)) % kNonceSpace;
  ++state_;
  std::string out(6, 'a');
  for (int i = 5; i >= 0; --i) {
    out[i] = kNonceAlphabet[v % 36];
    v /= 36;
  }
  return out;
}

}  // namespace sav::codec
