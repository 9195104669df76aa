// Prints one PASS/FAIL line per acceptance criterion; exits non-zero if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "evc/sim.hpp"
#include "layout_gen.hpp"

using namespace evc;

namespace {

const char* const kFixtures[] = {"paper-usecase.json", "cesnet-only.json", "parallel-provisioning.json",
                                 "empty-workload.json"};

Scenario fixture(const std::string& name) { return load_scenario(std::string(EVC_FIXTURES_DIR) + "/" + name); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, double a, double b = 0.0, double c = 0.0) {
  char buffer[256];
  std::snprintf(buffer, sizeof buffer, format, a, b, c);
  return buffer;
}

// Transitions of public-cloud workers, in log order.
std::vector<NodeTransition> cloud_worker_transitions(const MetricsTimeline& tl, const Scenario& s) {
  std::vector<NodeTransition> out;
  for (const auto& tr : tl.transitions) {
    const CloudSite* site = s.find_site(tr.site_id);
    if (tr.role == NodeRole::worker && site && site->kind == SiteKind::public_cloud) out.push_back(tr);
  }
  return out;
}

std::vector<Seconds> block_arrivals(const MetricsTimeline& tl) {
  std::vector<Seconds> out;
  for (const auto& ev : tl.events) {
    if (ev.kind == EventKind::job_arrival) out.push_back(ev.t);
  }
  return out;
}

struct Context {
  Scenario scenario = fixture("paper-usecase.json");
  RunResult run;
  double wall_seconds = 0.0;

  Context() {
    const auto start = std::chrono::steady_clock::now();
    run = run_scenario(scenario, scenario.seed);
    wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

Outcome staircase(const Context& ctx) {
  const double step = ctx.scenario.find_site("aws")->provisioning_phase_durations.sum();
  std::vector<Seconds> ready;
  for (const auto& tr : cloud_worker_transitions(ctx.run.timeline, ctx.scenario)) {
    if (tr.from == NodeState::powering_on && tr.to == NodeState::idle) ready.push_back(tr.time);
  }
  if (ready.size() < 3) return {false, "fewer than three cloud power-on completions"};
  const bool spaced = ready[1] - ready[0] == step && ready[2] - ready[1] == step;
  return {spaced && ctx.wall_seconds < 5.0,
          fmt("ready at %.0f s, %.0f s, %.0f s", ready[0], ready[1], ready[2]) + fmt("; wall %.3f s", ctx.wall_seconds)};
}

Outcome provisioning_latency(const Context& ctx) {
  std::map<NodeId, Seconds> requested;
  double lo = 1e18;
  double hi = -1e18;
  int adds = 0;
  for (const auto& tr : cloud_worker_transitions(ctx.run.timeline, ctx.scenario)) {
    if (tr.to == NodeState::powering_on) requested[tr.node_id] = tr.time;
    if (tr.from == NodeState::powering_on && tr.to == NodeState::idle) {
      const double latency = tr.time - requested.at(tr.node_id);
      lo = std::min(lo, latency);
      hi = std::max(hi, latency);
      ++adds;
    }
  }
  const bool ok = adds > 0 && lo >= 19 * 60.0 && hi <= 20 * 60.0;
  return {ok, std::to_string(adds) + " cloud adds, latency " + fmt("%.1f to %.1f min", lo / 60.0, hi / 60.0)};
}

Outcome utilization(const Context& ctx) {
  const auto& u = ctx.run.report.utilization;
  if (!u) return {false, "utilization absent"};
  return {*u >= 0.56 && *u <= 0.76, fmt("utilization %.4f, band [0.56, 0.76]", *u)};
}

Outcome busy_time(const Context& ctx) {
  const double cloud = ctx.run.report.busy_s_by_site.at("aws");
  const double total = ctx.run.report.busy_s;
  const double cloud_target = 9 * 3600.0 + 42 * 60.0;
  const bool ok = std::abs(cloud - cloud_target) <= 30 * 60.0 && std::abs(total - 20 * 3600.0) <= 1.5 * 3600.0;
  return {ok, fmt("cloud %.3f h (9.700 +- 0.5), total %.3f h (20 +- 1.5)", cloud / 3600.0, total / 3600.0)};
}

Outcome cost(const Context& ctx) {
  const double total = ctx.run.report.total_cost;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> seconds(0.0, 50000.0);
  std::uniform_real_distribution<double> rate(0.001, 5.0);
  const double granularities[] = {1.0, 60.0, 3600.0, 1.0, 1.0};
  int exact = 0;
  for (int i = 0; i < 10; ++i) {
    const double t = seconds(rng);
    const double r = rate(rng);
    const double g = granularities[i % 5];
    const double oracle = std::ceil(t / g) * g * r / 3600.0;
    if (std::abs(accrue_cost(t, {r, g}) - oracle) <= 1e-12 * std::max(1.0, oracle)) ++exact;
  }
  return {total >= 0.70 && total <= 0.80 && exact == 10,
          fmt("total cost %.4f, band [0.70, 0.80]; oracle pairs matched %.0f/10", total, exact)};
}

Outcome counterfactual(const Context& ctx) {
  const auto cmp = compare_scenarios(ctx.scenario, fixture("cesnet-only.json"), ctx.scenario.seed);
  const double hours = cmp.makespan_delta / 3600.0;
  return {hours >= 3.5 && hours <= 4.5, fmt("cesnet-only minus hybrid makespan %.3f h, band [3.5, 4.5]", hours)};
}

Outcome behavioral_replay(const Context& ctx) {
  const auto& tl = ctx.run.timeline;
  const auto arrivals = block_arrivals(tl);
  if (arrivals.size() < 4) return {false, "expected four workload blocks"};
  const auto& all = tl.transitions;
  auto in = [](Seconds t, Seconds a, Seconds b) { return t > a && t < b; };
  std::ostringstream detail;

  // (a) nodes scheduled for power-off after block 1 and where each one went next.
  std::set<NodeId> scheduled;
  std::set<NodeId> awaiting;
  std::vector<NodeId> powered_off;
  int cancelled = 0;
  Seconds a_time = -1.0;
  for (const auto& tr : all) {
    if (in(tr.time, arrivals[0], arrivals[1]) && tr.to == NodeState::poweroff_scheduled) {
      scheduled.insert(tr.node_id);
      awaiting.insert(tr.node_id);
      continue;
    }
    if (tr.from != NodeState::poweroff_scheduled || awaiting.erase(tr.node_id) == 0) continue;
    if (tr.to == NodeState::idle) ++cancelled;
    if (tr.to == NodeState::powering_off) {
      powered_off.push_back(tr.node_id);
      a_time = tr.time;
    }
  }
  const bool a_ok = scheduled.size() >= 2 && powered_off.size() == 1 &&
                    cancelled == static_cast<int>(scheduled.size()) - 1;
  detail << "(a) scheduled " << scheduled.size() << ", cancelled " << cancelled << ", powered off "
         << (powered_off.empty() ? std::string("none") : powered_off.front());

  // (b) fault cycle on the injected node.
  bool b_ok = false;
  Seconds b_time = -1.0;
  if (!ctx.scenario.workload.faults.empty()) {
    const auto& fault = ctx.scenario.workload.faults.front();
    const NodeState cycle[] = {NodeState::failed, NodeState::powering_off, NodeState::off, NodeState::powering_on,
                               NodeState::idle};
    std::size_t k = 0;
    for (const auto& tr : all) {
      if (tr.node_id != fault.node_id || tr.time < fault.at || k == std::size(cycle)) continue;
      if (tr.to == cycle[k]) {
        if (k == 0) b_time = tr.time;
        ++k;
      } else if (k > 0) {
        break;
      }
    }
    b_ok = k == std::size(cycle);
    detail << "; (b) " << fault.node_id << " cycle steps " << k << "/" << std::size(cycle);
  }

  // (c) exactly one power-off between the last two blocks.
  std::vector<NodeId> final_off;
  Seconds c_time = -1.0;
  for (const auto& tr : all) {
    if (in(tr.time, arrivals[2], arrivals[3]) && tr.to == NodeState::powering_off) {
      final_off.push_back(tr.node_id);
      c_time = tr.time;
    }
  }
  const bool c_ok = final_off.size() == 1;
  detail << "; (c) " << final_off.size() << " power-off" << (c_ok ? " (" + final_off.front() + ")" : "");

  const bool ordered = a_time < b_time && b_time < c_time;
  return {a_ok && b_ok && c_ok && ordered, detail.str() + (ordered ? "; in order" : "; out of order")};
}

Outcome topology_properties() {
  std::mt19937_64 rng(1729);
  int layouts = 0;
  int backups = 0;
  auto reachable = [](const OverlayTopology& t, const std::vector<NodeId>& members) {
    const auto routes = compute_routes(t);
    for (const auto& a : members) {
      for (const auto& b : members) {
        const auto path = trace_path(routes, t, a, b);
        if (path.size() > 5 || path.front() != a || path.back() != b) return false;
      }
    }
    return true;
  };
  try {
    for (; layouts < 1000; ++layouts) {
      const auto layout = evc::testing::random_layout(rng);
      const auto t = build_overlay(layout.sites, layout.placement, layout.front_end_site, layout.config).topology;
      if (layout.config.backup_cp_sites.empty() && t.public_ip_count() != 1) return {false, "extra public IP"};
      std::vector<Ipv4Prefix> blocks{*t.tunnel_pool, *t.stand_alone_pool};
      for (const auto& [site, subnet] : t.local_subnets) blocks.push_back(subnet.prefix);
      for (std::size_t i = 0; i < blocks.size(); ++i) {
        for (std::size_t j = i + 1; j < blocks.size(); ++j) {
          if (blocks[i].overlaps(blocks[j])) return {false, "overlapping blocks in layout " + std::to_string(layouts)};
        }
      }
      std::vector<NodeId> members;
      for (const auto& [id, m] : t.members) members.push_back(id);
      if (!reachable(t, members)) return {false, "unreachable pair in layout " + std::to_string(layouts)};
      if (t.central_points.size() > 1) {
        ++backups;
        const auto after = fail_central_point(t, t.central_points.front());
        if (!reachable(after, reachable_members(after))) return {false, "failover lost reachability"};
      } else {
        try {
          fail_central_point(t, t.central_points.front());
          return {false, "failover without backup did not raise"};
        } catch (const Error& e) {
          if (e.code() != ErrorCode::NoBackupCentralPoint) return {false, "wrong failover error"};
        }
      }
    }
  } catch (const std::exception& e) {
    return {false, "layout " + std::to_string(layouts) + ": " + e.what()};
  }
  return {true, std::to_string(layouts) + " layouts, " + std::to_string(backups) + " with a backup CP"};
}

Outcome determinism() {
  for (const char* name : kFixtures) {
    const auto s = fixture(name);
    if (events_jsonl(run_scenario(s, s.seed).timeline) != events_jsonl(run_scenario(s, s.seed).timeline)) {
      return {false, std::string(name) + " differs between runs"};
    }
  }
  return {true, std::to_string(std::size(kFixtures)) + " fixtures byte-identical"};
}

Outcome state_machine() {
  long transitions = 0;
  for (const char* name : kFixtures) {
    const auto s = fixture(name);
    const auto tl = run_scenario(s, s.seed).timeline;
    for (const auto& tr : tl.transitions) {
      if (!is_allowed_transition(tr.from, tr.to)) {
        return {false, std::string(name) + ": " + tr.node_id + " " + std::string(to_string(tr.from)) + "->" +
                           std::string(to_string(tr.to))};
      }
      ++transitions;
    }
    for (const auto& [id, node] : tl.nodes) {
      Seconds covered = 0.0;
      for (std::size_t i = 0; i < node.intervals.size(); ++i) {
        const auto& iv = node.intervals[i];
        if (iv.exit < iv.enter || (i > 0 && node.intervals[i - 1].exit != iv.enter)) {
          return {false, std::string(name) + ": gap or overlap on " + id};
        }
        covered += iv.exit - iv.enter;
      }
      if (node.intervals.empty() || node.intervals.back().exit != tl.end_time ||
          std::abs(covered - (tl.end_time - node.intervals.front().enter)) > 1e-6) {
        return {false, std::string(name) + ": lifetime not covered on " + id};
      }
    }
  }
  return {true, std::to_string(transitions) + " transitions legal, intervals partition every lifetime"};
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int number, const char* name, const std::function<Outcome()>& check) {
    Outcome outcome;
    try {
      outcome = check();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    if (!outcome.pass) ++failures;
    std::printf("%s %d %s: %s\n", outcome.pass ? "PASS" : "FAIL", number, name, outcome.detail.c_str());
  };

  const Context ctx;
  report(1, "staircase", [&] { return staircase(ctx); });
  report(2, "provisioning-latency", [&] { return provisioning_latency(ctx); });
  report(3, "utilization", [&] { return utilization(ctx); });
  report(4, "busy-time", [&] { return busy_time(ctx); });
  report(5, "cost", [&] { return cost(ctx); });
  report(6, "counterfactual", [&] { return counterfactual(ctx); });
  report(7, "behavioral-replay", [&] { return behavioral_replay(ctx); });
  report(8, "topology-properties", topology_properties);
  report(9, "determinism", determinism);
  report(10, "state-machine", state_machine);
  return failures == 0 ? 0 : 1;
}
