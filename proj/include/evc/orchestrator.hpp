#pragma once

// Site ranking and the phased deployment workflow. In the default
// (serialized) mode a deployment accepts at most one modification at a time,
// so several node additions queue up into a staircase of phase-sums.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "evc/domain.hpp"
#include "evc/overlay.hpp"

namespace evc {

struct ScoreComponents {
  int sla_priority = 1;
  double availability = 0.0;
  int free_quota = 0;
};

struct SiteScore {
  SiteId site_id;
  double score = 0.0;
  ScoreComponents components;
};

/// Current footprint of a deployment at one site.
struct SiteUsage {
  int instances = 0;
  bool has_gateway = false;  // hosts the CP or already runs a vRouter
};

using UsageMap = std::map<SiteId, SiteUsage>;

/// Instances a new worker may still use at a site, after reserving a vRouter if one is needed.
int free_quota(const CloudSite& site, const SiteUsage& usage);

/// Eligible sites (free_quota >= needed, availability > 0) by availability / priority, then site_id.
std::vector<SiteScore> rank_sites(std::span<const SLA> slas, std::span<const CloudSite> sites, int needed,
                                  const UsageMap& usage = {});

enum class UpdateKind { initial_deploy, add_node, remove_node };
enum class UpdatePhase { network_create, vm_create, tunnel_setup, contextualize, deprovision, done };

std::string_view to_string(UpdateKind kind);
std::string_view to_string(UpdatePhase phase);

struct PhaseStep {
  UpdatePhase phase;
  Seconds duration = 0.0;
};

struct UpdateOperation {
  std::string op_id;
  UpdateKind kind = UpdateKind::add_node;
  SiteId target_site;
  std::vector<NodeId> nodes;            // nodes changing state with this operation
  std::vector<PhaseStep> steps;         // remaining phases in order; front() is current
  UpdatePhase phase = UpdatePhase::done;
  Seconds started_at = 0.0;
  Seconds phase_ends_at = 0.0;
  Seconds finishes_at = 0.0;
  std::vector<UpdatePhase> completed_phases;
};

struct NodeTransition {
  Seconds time = 0.0;
  NodeId node_id;
  SiteId site_id;
  NodeRole role = NodeRole::worker;
  NodeState from = NodeState::off;
  NodeState to = NodeState::off;
};

struct DeploymentRecord {
  std::string deployment_id;
  ClusterTemplate cluster;
  std::vector<CloudSite> sites;
  OverlayConfig overlay;
  OverlayTopology topology;
  std::map<NodeId, VMInstance, NodeIdLess> nodes;
  std::vector<UpdateOperation> in_flight;  // at most one unless parallel provisioning is on
  std::vector<UpdateOperation> history;
  std::vector<NodeTransition> transitions;  // every state change, in order
  int next_op = 1;

  bool parallel() const { return cluster.parallel_provisioning; }
  const CloudSite& site(const SiteId& site_id) const;
  UsageMap usage() const;
  std::vector<const VMInstance*> workers() const;
  int public_ips() const;
};

/// Moves a node along a lifecycle edge and appends to record.transitions; throws on an illegal edge.
void set_node_state(DeploymentRecord& record, const NodeId& node_id, NodeState to, Seconds now);

/// Validates the template, places the front-end and the initial workers, plans the
/// overlay and starts the initial_deploy operation at `now`.
DeploymentRecord submit_deployment(const ClusterTemplate& cluster, std::span<const CloudSite> sites,
                                   const OverlayConfig& overlay, Seconds now);

struct Busy {};

struct UpdateRequest {
  UpdateKind kind = UpdateKind::add_node;
  NodeId node_id;
  std::optional<SiteId> target_site;  // add_node: chosen by rank_sites when absent
};

using UpdateResult = std::variant<UpdateOperation, Busy>;

/// Starts a one-node add/remove operation, or returns Busy without side effects.
UpdateResult request_update(DeploymentRecord& record, const UpdateRequest& request, Seconds now);

enum class WorkflowEventKind { phase_done, node_state, update_done };

struct WorkflowEvent {
  WorkflowEventKind kind;
  std::string op_id;
  UpdatePhase phase = UpdatePhase::done;
  NodeId node_id;
  NodeState state = NodeState::off;
};

/// Advances every in-flight operation whose current phase has ended by `now`.
std::vector<WorkflowEvent> step_workflow(DeploymentRecord& record, Seconds now);

/// Earliest pending phase boundary, if any operation is in flight.
std::optional<Seconds> next_phase_deadline(const DeploymentRecord& record);

/// Current placement (nodes that are not off) as consumed by the overlay planner.
Placement current_placement(const DeploymentRecord& record);

}  // namespace evc
