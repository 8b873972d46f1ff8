// SPDX-License-Identifier: Apache-2.0

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>

#include "sav/collector.hpp"
#include "sav/inference.hpp"
#include "sav/netaddr.hpp"
#include "sav/planner.hpp"
#include "sav/report.hpp"
#include "sav/simnet.hpp"

using namespace sav;

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out)
    throw std::runtime_error("cannot write " + path);
  return out;
}

std::ostream& out_or_stdout(std::ofstream& file, const std::string& path) {
  if (path.empty())
    return std::cout;
  file = open_out(path);
  return file;
}

codec::ZoneConfig load_zones(const std::string& path) {
  if (path.empty())
    return {};
  return codec::ZoneConfig::parse_file(path);
}

// Lines "<addr> forwarder|non_forwarder".
std::vector<std::pair<Address, planner::ResolverRole>> parse_resolver_list(
    const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot open " + path);
  std::vector<std::pair<Address, planner::ResolverRole>> out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#')
      continue;
    std::istringstream ls(line);
    std::string addr_s, role_s;
    ls >> addr_s >> role_s;
    auto addr = Address::parse(addr_s);
    auto role = planner::parse_resolver_role(role_s);
    if (!addr || !role)
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected '<addr> forwarder|non_forwarder'");
    out.emplace_back(*addr, *role);
  }
  return out;
}

// Lines "<level> <key>", e.g. "slash24 1.2.3.0/24".
std::vector<NetworkUnit> parse_unit_list(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot open " + path);
  std::vector<NetworkUnit> out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#')
      continue;
    std::istringstream ls(line);
    std::string level_s, key;
    ls >> level_s >> key;
    auto level = parse_unit_level(level_s);
    auto unit = level ? NetworkUnit::parse(*level, key) : std::nullopt;
    if (!unit)
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected '<level> <key>'");
    out.push_back(*unit);
  }
  return out;
}

std::set<uint32_t> parse_asn_list(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot open " + path);
  std::set<uint32_t> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#')
      continue;
    out.insert(static_cast<uint32_t>(std::stoul(line)));
  }
  return out;
}

UnitLevel level_arg(const std::string& s) {
  auto level = parse_unit_level(s);
  if (!level)
    throw CLI::ValidationError("--level", "unknown unit level '" + s + "'");
  return *level;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DNS resolver scan planner, network simulator and SAV verdict pipeline"};
  app.require_subcommand(1);

  std::string zones_path, out_path, exclude_path;
  uint64_t seed = 1;
  int scan_id = 1;

  // plan
  auto* plan = app.add_subcommand("plan", "build a probe stream");
  plan->require_subcommand(1);
  plan->fallthrough();
  plan->add_option("--zones", zones_path, "zone config file (key=value)");
  plan->add_option("--seed", seed, "ordering seed");
  plan->add_option("--scan-id", scan_id, "scan identifier embedded in names");
  plan->add_option("--exclude", exclude_path, "prefix exclusion list");
  plan->add_option("--out", out_path, "output file (default stdout)");

  std::string bgp_path;
  auto* plan_v4 = plan->add_subcommand("v4", "pairs for every host of a routing table");
  plan_v4->add_option("--bgp", bgp_path, "routing table (prefix<TAB>asn)")->required();

  std::string hitlist_path, aliased_path;
  auto* plan_v6 = plan->add_subcommand("v6", "pairs over a dealiased hitlist");
  plan_v6->add_option("--hitlist", hitlist_path, "IPv6 address list")->required();
  plan_v6->add_option("--aliased", aliased_path, "aliased prefix list");

  std::string resolvers_path;
  auto* plan_trav = plan->add_subcommand("traversal", "cross-protocol follow-up probes");
  plan_trav->add_option("--resolvers", resolvers_path, "lines '<addr> <role>'")->required();

  std::string units_path, prior_path;
  auto* plan_rescan = plan->add_subcommand("rescan", "re-probe partially filtered units");
  plan_rescan->add_option("--units", units_path, "lines '<level> <key>'")->required();
  plan_rescan->add_option("--prior", prior_path, "previously scanned targets");

  // simulate
  std::string topo_path, plan_path, out_auth, out_resp;
  uint64_t random_seed = 0;
  int n_networks = 20;
  auto* simulate = app.add_subcommand("simulate", "run a plan against a topology");
  auto* topo_opt = simulate->add_option("--topo", topo_path, "topology file");
  auto* random_opt =
      simulate->add_option("--random", random_seed, "generate a seeded topology");
  simulate->add_option("--networks", n_networks, "network count for --random");
  simulate->add_option("--plan", plan_path, "probe stream")->required();
  simulate->add_option("--out-auth", out_auth, "authoritative log output")->required();
  simulate->add_option("--out-resp", out_resp, "scanner response output")->required();
  topo_opt->excludes(random_opt);

  // topo
  auto* topo_cmd = app.add_subcommand("topo", "emit a seeded random topology");
  topo_cmd->add_option("--random", random_seed, "topology seed")->required();
  topo_cmd->add_option("--networks", n_networks, "network count");
  topo_cmd->add_option("--out", out_path, "output file (default stdout)");

  // truth
  std::string level_s = "asn";
  auto* truth = app.add_subcommand("truth", "expected verdicts from a topology");
  auto* t_topo = truth->add_option("--topo", topo_path, "topology file");
  auto* t_random = truth->add_option("--random", random_seed, "generate a seeded topology");
  truth->add_option("--networks", n_networks, "network count for --random");
  truth->add_option("--level", level_s, "asn|bgp_prefix|slash24|slash40");
  truth->add_option("--out", out_path, "output file (default stdout)");
  t_topo->excludes(t_random);

  // ingest
  std::string auth_path, resp_path;
  auto* ingest = app.add_subcommand("ingest", "dedup and classify raw logs");
  ingest->add_option("--auth", auth_path, "authoritative log CSV")->required();
  ingest->add_option("--resp", resp_path, "scanner response CSV");
  ingest->add_option("--zones", zones_path, "zone config file");
  ingest->add_option("--out", out_path, "observations CSV (default stdout)");

  // infer
  std::string obs_path;
  auto* infer = app.add_subcommand("infer", "per-unit verdicts from observations");
  infer->add_option("--obs", obs_path, "observations CSV")->required();
  infer->add_option("--resp", resp_path, "scanner response CSV")->required();
  infer->add_option("--bgp", bgp_path, "routing table, needed for asn/bgp_prefix");
  infer->add_option("--level", level_s, "asn|bgp_prefix|slash24|slash40");
  infer->add_option("--out", out_path, "verdicts CSV (default stdout)");

  // report
  std::string verdicts_path, geo_path, units_universe_path, resolver_addrs_path;
  std::string after_path, asns_path, rels_path;
  std::vector<std::string> snapshot_paths;
  bool as_csv = false;
  auto* rep = app.add_subcommand("report", "aggregate verdicts into tables");
  rep->require_subcommand(1);
  rep->fallthrough();
  rep->add_option("--in", verdicts_path, "verdicts CSV")->required();
  rep->add_option("--out", out_path, "output file (default stdout)");

  auto* rep_frac = rep->add_subcommand("fractions", "per-country vulnerable fractions");
  rep_frac->add_option("--geo", geo_path, "prefix,iso2 CSV")->required();
  rep_frac->add_option("--units", units_universe_path, "/24 unit universe")->required();
  rep_frac->add_option("--resolvers", resolver_addrs_path, "resolver address list");
  rep_frac->add_flag("--csv", as_csv, "emit CSV instead of aligned text");

  auto* rep_sum = rep->add_subcommand("summary", "role/openness and level shares");
  rep_sum->add_option("--after", after_path, "post-rescan verdicts CSV");
  rep_sum->add_option("--obs", obs_path, "observations CSV");
  rep_sum->add_option("--resp", resp_path, "scanner response CSV");

  auto* rep_cohort = rep->add_subcommand("cohort", "verdict histogram over an ASN set");
  rep_cohort->add_option("--asns", asns_path, "ASN list, one per line")->required();

  auto* rep_cx = rep->add_subcommand("complexity", "AS metrics per verdict class");
  rep_cx->add_option("--bgp", snapshot_paths, "routing table snapshots")->required();
  rep_cx->add_option("--rels", rels_path, "AS relationship file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (plan->parsed()) {
      planner::PlannerConfig cfg;
      cfg.zones = load_zones(zones_path);
      cfg.scan_id = scan_id;
      std::vector<Prefix> exclusions;
      if (!exclude_path.empty())
        exclusions = parse_prefix_file(exclude_path);

      planner::ScanPlan result;
      if (plan_v4->parsed()) {
        result = planner::plan_ipv4(BgpTable::parse_file(bgp_path), exclusions, seed, cfg);
      } else if (plan_v6->parsed()) {
        std::vector<Prefix> aliased;
        if (!aliased_path.empty())
          aliased = parse_prefix_file(aliased_path);
        result = planner::plan_ipv6(parse_address_file(hitlist_path), aliased, exclusions,
                                    seed, cfg);
      } else if (plan_trav->parsed()) {
        result = planner::plan_traversal(parse_resolver_list(resolvers_path), seed, cfg);
      } else {
        std::vector<Address> prior;
        if (!prior_path.empty())
          prior = parse_address_file(prior_path);
        result = planner::plan_rescan(parse_unit_list(units_path), prior, seed, cfg);
      }
      std::ofstream file;
      result.serialize(out_or_stdout(file, out_path));
      std::cerr << result.probes.size() << " probes, " << result.excluded_count
                << " targets excluded\n";
    } else if (topo_cmd->parsed()) {
      std::ofstream file;
      simnet::random_topology(random_seed, n_networks, {})
          .serialize(out_or_stdout(file, out_path));
    } else if (simulate->parsed() || truth->parsed()) {
      simnet::SimTopology topo;
      if (!topo_path.empty())
        topo = simnet::SimTopology::parse_file(topo_path);
      else if ((simulate->parsed() ? random_opt : t_random)->count())
        topo = simnet::random_topology(random_seed, n_networks, {});
      else
        throw CLI::ValidationError("--topo/--random", "one topology source is required");

      if (simulate->parsed()) {
        auto out = simnet::simulate(topo, planner::ScanPlan::parse_file(plan_path));
        auto auth = open_out(out_auth);
        collector::write_auth_log(auth, out.auth_log);
        auto resp = open_out(out_resp);
        collector::write_response_log(resp, out.responses);
        std::cerr << out.auth_log.size() << " auth records, " << out.responses.size()
                  << " responses\n";
      } else {
        auto gt = simnet::ground_truth(topo, level_arg(level_s));
        std::vector<inference::UnitVerdict> verdicts;
        for (const auto& [unit, status] : gt.verdicts)
          verdicts.push_back({unit, status, 0, false});
        std::ofstream file;
        inference::write_verdicts(out_or_stdout(file, out_path), verdicts);
      }
    } else if (ingest->parsed()) {
      std::ifstream auth_in(auth_path);
      if (!auth_in)
        throw std::runtime_error("cannot open " + auth_path);
      auto records = collector::dedup(collector::parse_auth_log(auth_in));
      collector::ClassifyStats stats;
      auto obs = collector::classify(records, load_zones(zones_path), &stats);
      std::ofstream file;
      collector::write_observations(out_or_stdout(file, out_path), obs);
      std::cerr << obs.size() << " observations; dropped " << stats.dropped_foreign
                << " foreign, " << stats.dropped_malformed << " malformed, "
                << stats.dropped_qtype << " non-A\n";
    } else if (infer->parsed()) {
      std::ifstream obs_in(obs_path);
      if (!obs_in)
        throw std::runtime_error("cannot open " + obs_path);
      std::ifstream resp_in(resp_path);
      if (!resp_in)
        throw std::runtime_error("cannot open " + resp_path);
      auto obs = collector::parse_observations(obs_in);
      auto responses = collector::parse_response_log(resp_in);
      BgpTable table;
      if (!bgp_path.empty())
        table = BgpTable::parse_file(bgp_path);
      auto ms = inference::measurements(obs, collector::openness(obs, responses));
      auto verdicts = inference::infer(ms, level_arg(level_s), table);
      std::ofstream file;
      inference::write_verdicts(out_or_stdout(file, out_path), verdicts);
      std::cerr << ms.size() << " measurements, " << verdicts.size() << " units\n";
    } else if (rep->parsed()) {
      std::ifstream vin(verdicts_path);
      if (!vin)
        throw std::runtime_error("cannot open " + verdicts_path);
      auto verdicts = inference::parse_verdicts(vin);
      std::ofstream file;
      std::ostream& out = out_or_stdout(file, out_path);

      if (rep_frac->parsed()) {
        auto geo = report::GeoDb::parse_file(geo_path);
        auto universe = parse_prefix_file(units_universe_path);
        std::vector<Address> resolver_addrs;
        if (!resolver_addrs_path.empty())
          resolver_addrs = parse_address_file(resolver_addrs_path);
        auto stats = report::country_fractions(verdicts, geo, universe, resolver_addrs);
        if (as_csv)
          report::write_country_stats_csv(out, stats);
        else
          report::render_country_stats(out, stats);
      } else if (rep_sum->parsed()) {
        std::vector<inference::UnitVerdict> after;
        if (!after_path.empty()) {
          std::ifstream ain(after_path);
          if (!ain)
            throw std::runtime_error("cannot open " + after_path);
          after = inference::parse_verdicts(ain);
        }
        auto split_levels = [](const std::vector<inference::UnitVerdict>& vs) {
          std::map<UnitLevel, std::vector<inference::UnitVerdict>> by_level;
          for (const auto& v : vs)
            by_level[v.unit.level].push_back(v);
          std::vector<std::pair<UnitLevel, std::vector<inference::UnitVerdict>>> out;
          for (auto& [level, group] : by_level)
            out.emplace_back(level, std::move(group));
          return out;
        };
        std::vector<collector::ResolverObservation> obs;
        if (!obs_path.empty()) {
          std::ifstream oin(obs_path);
          if (!oin)
            throw std::runtime_error("cannot open " + obs_path);
          obs = collector::parse_observations(oin);
        }
        std::vector<collector::ScannerResponse> responses;
        if (!resp_path.empty()) {
          std::ifstream rin(resp_path);
          if (!rin)
            throw std::runtime_error("cannot open " + resp_path);
          responses = collector::parse_response_log(rin);
        }
        auto summary = report::summary_tables(split_levels(verdicts), split_levels(after),
                                              obs, collector::openness(obs, responses));
        report::render_summary(out, summary);
      } else if (rep_cohort->parsed()) {
        report::render_cohort(out, report::cohort_breakdown(verdicts,
                                                            parse_asn_list(asns_path)));
      } else {
        std::vector<BgpTable> snapshots;
        for (const auto& p : snapshot_paths)
          snapshots.push_back(BgpTable::parse_file(p));
        auto rows = report::complexity_summary(verdicts, snapshots,
                                               AsGraph::parse_file(rels_path));
        report::render_complexity(out, rows);
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
