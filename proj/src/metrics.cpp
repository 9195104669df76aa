#include <cmath>
#include <cstdio>
#include <sstream>

#include "evc/sim.hpp"

namespace evc {

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::job_arrival: return "job_arrival";
    case EventKind::phase_done: return "phase_done";
    case EventKind::lrms_dispatch: return "lrms_dispatch";
    case EventKind::job_done: return "job_done";
    case EventKind::policy_tick: return "policy_tick";
    case EventKind::lrms_report: return "lrms_report";
    case EventKind::fault_injection: return "fault_injection";
    case EventKind::poweroff_grace_elapsed: return "poweroff_grace_elapsed";
  }
  return "unknown";
}

double accrue_cost(Seconds interval, const CostRate& rate) {
  if (interval <= 0) {
    return 0.0;
  }
  const double billed = std::ceil(interval / rate.billing_granularity) * rate.billing_granularity;
  return billed * rate.per_hour / 3600.0;
}

Report summarize(const MetricsTimeline& timeline, std::span<const CloudSite> sites) {
  Report report;
  report.makespan_s = timeline.makespan;
  report.end_s = timeline.end_time;
  report.total_cost = timeline.total_cost;
  for (const auto& site : sites) {
    report.paid_s_by_site[site.site_id] = 0.0;
    report.cost_by_site[site.site_id] = 0.0;
    report.busy_s_by_site[site.site_id] = 0.0;
  }
  auto is_public = [&](const SiteId& site_id) {
    for (const auto& site : sites) {
      if (site.site_id == site_id) return site.kind == SiteKind::public_cloud;
    }
    return false;
  };

  Seconds public_paid = 0.0;
  Seconds public_used = 0.0;
  for (const auto& [node_id, node] : timeline.nodes) {
    for (const auto& interval : node.intervals) {
      const Seconds length = interval.exit - interval.enter;
      if (is_paid_state(interval.state)) {
        report.paid_s_by_site[interval.site_id] += length;
        if (node.role == NodeRole::worker && is_public(interval.site_id)) public_paid += length;
      }
      if (interval.state == NodeState::used) {
        report.busy_s_by_site[interval.site_id] += length;
        if (node.role == NodeRole::worker) {
          report.busy_s += length;
          if (is_public(interval.site_id)) public_used += length;
        }
      }
    }
  }
  for (const auto& [site_id, cost] : timeline.cost_by_site) {
    report.cost_by_site[site_id] += cost;
  }
  if (timeline.jobs_arrived > 0 && public_paid > 0) {
    report.utilization = public_used / public_paid;
  }
  return report;
}

std::string event_line(const EventRecord& record) {
  nlohmann::ordered_json j;
  j["t"] = record.t;
  j["seq"] = record.seq;
  j["kind"] = to_string(record.kind);
  j["node"] = record.node ? nlohmann::ordered_json(*record.node) : nlohmann::ordered_json(nullptr);
  j["detail"] = record.detail;
  return j.dump();
}

std::string events_jsonl(const MetricsTimeline& timeline) {
  std::string out;
  for (const auto& record : timeline.events) {
    out += event_line(record);
    out += '\n';
  }
  return out;
}

namespace {

std::string fixed3(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.3f", value);
  return buffer;
}

}  // namespace

std::string timeline_csv(const MetricsTimeline& timeline) {
  std::ostringstream out;
  out << "node,state,enter_s,exit_s\n";
  for (const auto& [node_id, node] : timeline.nodes) {
    for (const auto& interval : node.intervals) {
      out << node_id << ',' << to_string(interval.state) << ',' << fixed3(interval.enter) << ','
          << fixed3(interval.exit) << '\n';
    }
  }
  return out.str();
}

nlohmann::ordered_json summary_json(const Report& report) {
  nlohmann::ordered_json j;
  j["makespan_s"] = report.makespan_s;
  j["busy_s"] = report.busy_s;
  j["paid_s_by_site"] = nlohmann::ordered_json::object();
  for (const auto& [site, seconds] : report.paid_s_by_site) j["paid_s_by_site"][site] = seconds;
  j["cost_by_site"] = nlohmann::ordered_json::object();
  for (const auto& [site, cost] : report.cost_by_site) j["cost_by_site"][site] = cost;
  j["utilization"] = report.utilization ? nlohmann::ordered_json(*report.utilization) : nlohmann::ordered_json(nullptr);
  return j;
}

nlohmann::ordered_json comparison_json(const Comparison& comparison) {
  nlohmann::ordered_json j;
  j["makespan_delta"] = comparison.makespan_delta;
  j["cost_delta"] = comparison.cost_delta;
  j["utilization_delta"] = comparison.utilization_delta ? nlohmann::ordered_json(*comparison.utilization_delta)
                                                        : nlohmann::ordered_json(nullptr);
  j["a"] = summary_json(comparison.a);
  j["b"] = summary_json(comparison.b);
  return j;
}

}  // namespace evc
