#pragma once

// Deterministic discrete-event replay of an elastic hybrid cluster: a virtual
// clock, simulated cloud back-ends driven by the orchestrator, a FIFO batch
// scheduler, workload blocks, fault injection, per-second billing and metrics.

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "evc/domain.hpp"
#include "evc/elasticity.hpp"
#include "evc/orchestrator.hpp"
#include "evc/overlay.hpp"

namespace evc {

enum class EventKind {
  job_arrival,
  phase_done,
  lrms_dispatch,
  job_done,
  policy_tick,
  lrms_report,
  fault_injection,
  poweroff_grace_elapsed,
};

std::string_view to_string(EventKind kind);

/// One processed event as written to the JSON-lines log.
struct EventRecord {
  Seconds t = 0.0;
  std::uint64_t seq = 0;
  EventKind kind = EventKind::policy_tick;
  std::optional<NodeId> node;
  nlohmann::ordered_json detail = nlohmann::ordered_json::object();
};

/// Named, independently seeded sub-stream. Draws depend only on (seed, name).
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::string_view name);

  std::uint64_t next() { return engine_(); }
  /// Uniform in [lo, hi]; hi is returned when lo == hi.
  double uniform(double lo, double hi);

 private:
  std::mt19937_64 engine_;
};

Seconds sample_processing(RandomStream& stream, const DurationRange& range = {});

struct LrmsModel {
  std::deque<JobId> pending;
  std::map<NodeId, std::vector<JobId>, NodeIdLess> running;
  // Nodes that still have to install the runtime and pull the image.
  std::set<NodeId, NodeIdLess> cold_nodes;

  int running_count() const;
};

struct Dispatch {
  JobId job = 0;
  NodeId node;
  Seconds done_at = 0.0;
  bool cold = false;
};

/// Extra per-job seconds for a given node (cross-site transfer); may be empty.
using JobOverhead = std::function<Seconds(const VMInstance&)>;

/// FIFO dispatch of pending jobs onto free slots of idle/used nodes, lowest node_id first.
/// `jobs` is indexed by job_id - 1.
std::vector<Dispatch> lrms_step(LrmsModel& model, std::vector<Job>& jobs, std::span<const VMInstance> nodes,
                                Seconds now, Seconds setup_duration, const JobOverhead& overhead = {});

/// Requeues the jobs running on a node at the front of the queue (job order preserved).
std::vector<JobId> lrms_fail_node(LrmsModel& model, std::vector<Job>& jobs, const NodeId& node_id);

/// ceil(interval / granularity) * granularity * per_hour / 3600.
double accrue_cost(Seconds interval, const CostRate& rate);

struct StateInterval {
  NodeState state = NodeState::off;
  Seconds enter = 0.0;
  Seconds exit = 0.0;
  SiteId site_id;
};

struct NodeTimeline {
  NodeId node_id;
  NodeRole role = NodeRole::worker;
  std::vector<StateInterval> intervals;
  Seconds paid_seconds = 0.0;
  Seconds used_seconds = 0.0;
  double cost = 0.0;
};

struct MetricsTimeline {
  std::map<NodeId, NodeTimeline, NodeIdLess> nodes;
  std::vector<NodeTransition> transitions;
  std::vector<EventRecord> events;
  double total_cost = 0.0;
  std::map<SiteId, double> cost_by_site;
  std::optional<Seconds> first_arrival;
  std::optional<Seconds> last_completion;
  Seconds makespan = 0.0;  // last job completion - first job arrival
  Seconds end_time = 0.0;
  int jobs_arrived = 0;
  int jobs_done = 0;
};

struct Report {
  Seconds makespan_s = 0.0;
  Seconds busy_s = 0.0;
  std::map<SiteId, Seconds> busy_s_by_site;
  std::map<SiteId, Seconds> paid_s_by_site;
  std::map<SiteId, double> cost_by_site;
  double total_cost = 0.0;
  // Busy / paid seconds over workers at pay-per-use sites; absent without such time.
  std::optional<double> utilization;
  Seconds end_s = 0.0;
};

Report summarize(const MetricsTimeline& timeline, std::span<const CloudSite> sites);

struct RunResult {
  MetricsTimeline timeline;
  Report report;
};

/// Runs the scenario to completion. Identical (scenario, seed) give identical results.
RunResult run_scenario(const Scenario& scenario, std::uint64_t seed);

/// Copy of the scenario with an lrms "off" report for node_id delivered at `at`.
Scenario inject_fault(const Scenario& scenario, const NodeId& node_id, Seconds at);

struct Comparison {
  Seconds makespan_delta = 0.0;  // b - a
  double cost_delta = 0.0;
  std::optional<double> utilization_delta;
  Report a;
  Report b;
};

/// Runs both scenarios with the same seed (concurrently) and reports b - a.
Comparison compare_scenarios(const Scenario& a, const Scenario& b, std::uint64_t seed);

/// Overlay for the scenario at full scale: front-end, initial workers and every
/// elastic worker placed on the best-ranked sites.
struct PlannedOverlay {
  TopologyPlan plan;
  RouteTable routes;
};
PlannedOverlay plan_scenario_topology(const Scenario& scenario);

// Export formats.
std::string event_line(const EventRecord& record);
std::string events_jsonl(const MetricsTimeline& timeline);
std::string timeline_csv(const MetricsTimeline& timeline);
nlohmann::ordered_json summary_json(const Report& report);
nlohmann::ordered_json comparison_json(const Comparison& comparison);

}  // namespace evc
