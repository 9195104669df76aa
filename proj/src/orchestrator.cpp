#include "evc/orchestrator.hpp"

#include <algorithm>

namespace evc {

std::string_view to_string(UpdateKind kind) {
  switch (kind) {
    case UpdateKind::initial_deploy: return "initial_deploy";
    case UpdateKind::add_node: return "add_node";
    case UpdateKind::remove_node: return "remove_node";
  }
  return "unknown";
}

std::string_view to_string(UpdatePhase phase) {
  switch (phase) {
    case UpdatePhase::network_create: return "network_create";
    case UpdatePhase::vm_create: return "vm_create";
    case UpdatePhase::tunnel_setup: return "tunnel_setup";
    case UpdatePhase::contextualize: return "contextualize";
    case UpdatePhase::deprovision: return "deprovision";
    case UpdatePhase::done: return "done";
  }
  return "unknown";
}

int free_quota(const CloudSite& site, const SiteUsage& usage) {
  int reserve = (site.supports_private_networks && !usage.has_gateway) ? 1 : 0;
  return std::max(0, site.max_instances - usage.instances - reserve);
}

std::vector<SiteScore> rank_sites(std::span<const SLA> slas, std::span<const CloudSite> sites, int needed,
                                  const UsageMap& usage) {
  std::vector<SiteScore> ranked;
  for (const auto& sla : slas) {
    auto site = std::find_if(sites.begin(), sites.end(), [&](const CloudSite& s) { return s.site_id == sla.site_id; });
    if (site == sites.end()) {
      throw Error(ErrorCode::UnknownSite, "SLA references unknown site '" + sla.site_id + "'");
    }
    auto it = usage.find(sla.site_id);
    const SiteUsage site_usage = it == usage.end() ? SiteUsage{} : it->second;
    const int quota = free_quota(*site, site_usage);
    if (quota < std::max(needed, 1) || !(site->availability > 0.0)) {
      continue;
    }
    ranked.push_back(SiteScore{sla.site_id, site->availability / sla.priority,
                               ScoreComponents{sla.priority, site->availability, quota}});
  }
  if (ranked.empty()) {
    throw Error(ErrorCode::NoEligibleSite, "no site has free quota and non-zero availability");
  }
  std::sort(ranked.begin(), ranked.end(), [](const SiteScore& a, const SiteScore& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.site_id < b.site_id;
  });
  return ranked;
}

const CloudSite& DeploymentRecord::site(const SiteId& site_id) const {
  auto it = std::find_if(sites.begin(), sites.end(), [&](const CloudSite& s) { return s.site_id == site_id; });
  if (it == sites.end()) {
    throw Error(ErrorCode::UnknownSite, "site '" + site_id + "' is not declared");
  }
  return *it;
}

UsageMap DeploymentRecord::usage() const {
  UsageMap out;
  for (const auto& site : sites) {
    out[site.site_id];
  }
  out[cluster.front_end_site].has_gateway = true;
  for (const auto& [node_id, node] : nodes) {
    if (node.state == NodeState::off || node.site_id.empty()) continue;
    auto& u = out[node.site_id];
    u.instances += 1;
    if (node.role == NodeRole::vrouter || node.role == NodeRole::central_point || node.role == NodeRole::front_end) {
      u.has_gateway = true;
    }
  }
  return out;
}

std::vector<const VMInstance*> DeploymentRecord::workers() const {
  std::vector<const VMInstance*> out;
  for (const auto& [node_id, node] : nodes) {
    if (node.role == NodeRole::worker) out.push_back(&node);
  }
  return out;
}

int DeploymentRecord::public_ips() const {
  return static_cast<int>(std::count_if(nodes.begin(), nodes.end(), [](const auto& entry) {
    return entry.second.has_public_ip && entry.second.state != NodeState::off;
  }));
}

void set_node_state(DeploymentRecord& record, const NodeId& node_id, NodeState to, Seconds now) {
  auto it = record.nodes.find(node_id);
  if (it == record.nodes.end()) {
    throw Error(ErrorCode::UnknownNode, "node '" + node_id + "' does not exist");
  }
  VMInstance& node = it->second;
  if (!is_allowed_transition(node.state, to)) {
    throw Error(ErrorCode::InvalidUpdate, "illegal transition of '" + node_id + "' from " +
                                              std::string(to_string(node.state)) + " to " + std::string(to_string(to)));
  }
  if (is_paid_state(node.state)) {
    node.paid_seconds += now - node.state_since;
  }
  record.transitions.push_back(NodeTransition{now, node_id, node.site_id, node.role, node.state, to});
  node.state = to;
  node.state_since = now;
}

Placement current_placement(const DeploymentRecord& record) {
  Placement placement;
  for (const auto& [node_id, node] : record.nodes) {
    if (node.state == NodeState::off || node.site_id.empty()) continue;
    placement[node.site_id].push_back(PlacedNode{node_id, node.role});
  }
  return placement;
}

namespace {

// Rebuilds the overlay for the current placement and creates VMs for any
// gateway the planner added.
std::vector<NodeId> replan_overlay(DeploymentRecord& record, Seconds now) {
  TopologyPlan plan = build_overlay(record.sites, current_placement(record), record.cluster.front_end_site,
                                    record.overlay);
  std::vector<NodeId> added;
  for (const auto& [site_id, nodes] : plan.placement) {
    for (const auto& placed : nodes) {
      auto it = record.nodes.find(placed.node_id);
      if (it != record.nodes.end() && it->second.state != NodeState::off) continue;
      if (it == record.nodes.end()) {
        VMInstance vm;
        vm.node_id = placed.node_id;
        vm.role = placed.role;
        vm.slots = 0;
        vm.state_since = now;
        it = record.nodes.emplace(placed.node_id, vm).first;
      }
      it->second.site_id = site_id;
      it->second.has_public_ip = placed.role == NodeRole::central_point;
      set_node_state(record, placed.node_id, NodeState::powering_on, now);
      added.push_back(placed.node_id);
    }
  }
  record.topology = std::move(plan.topology);
  for (auto& [node_id, node] : record.nodes) {
    auto member = record.topology.members.find(node_id);
    node.private_address = member == record.topology.members.end() ? std::nullopt : member->second.address;
  }
  return added;
}

std::vector<PhaseStep> provisioning_steps(const PhaseDurations& d) {
  return {{UpdatePhase::network_create, d.network_create},
          {UpdatePhase::vm_create, d.vm_create},
          {UpdatePhase::tunnel_setup, d.tunnel_setup},
          {UpdatePhase::contextualize, d.contextualize}};
}

void start_operation(UpdateOperation& op, Seconds now) {
  op.started_at = now;
  op.phase = op.steps.front().phase;
  op.phase_ends_at = now + op.steps.front().duration;
  op.finishes_at = now;
  for (const auto& step : op.steps) op.finishes_at += step.duration;
}

bool busy(const DeploymentRecord& record) { return !record.parallel() && !record.in_flight.empty(); }

// idle -> poweroff_scheduled -> powering_off, or failed -> powering_off.
void begin_power_off(DeploymentRecord& record, const NodeId& node_id, Seconds now) {
  const NodeState state = record.nodes.at(node_id).state;
  if (state == NodeState::idle) {
    set_node_state(record, node_id, NodeState::poweroff_scheduled, now);
  }
  set_node_state(record, node_id, NodeState::powering_off, now);
}

}  // namespace

DeploymentRecord submit_deployment(const ClusterTemplate& cluster, std::span<const CloudSite> sites,
                                   const OverlayConfig& overlay, Seconds now) {
  validate_template(cluster, sites);
  DeploymentRecord record;
  record.deployment_id = "deployment-1";
  record.cluster = cluster;
  record.sites.assign(sites.begin(), sites.end());
  record.overlay = overlay;

  VMInstance fe;
  fe.node_id = front_end_node_id();
  fe.site_id = cluster.front_end_site;
  fe.role = NodeRole::front_end;
  fe.has_public_ip = true;
  fe.state_since = now;
  record.nodes.emplace(fe.node_id, fe);
  set_node_state(record, fe.node_id, NodeState::powering_on, now);

  for (int i = 1; i <= cluster.max_workers; ++i) {
    VMInstance worker;
    worker.node_id = worker_node_id(i);
    worker.role = NodeRole::worker;
    worker.slots = cluster.worker_slots;
    worker.state_since = now;
    record.nodes.emplace(worker.node_id, worker);
  }
  int next_worker = 1;
  for (const auto& entry : cluster.initial_workers) {
    for (int k = 0; k < entry.count; ++k) {
      NodeId id = worker_node_id(next_worker++);
      record.nodes.at(id).site_id = entry.site_id;
      set_node_state(record, id, NodeState::powering_on, now);
    }
  }
  replan_overlay(record, now);

  UpdateOperation op;
  op.op_id = "op-" + std::to_string(record.next_op++);
  op.kind = UpdateKind::initial_deploy;
  op.target_site = cluster.front_end_site;
  std::map<SiteId, bool> involved;
  for (const auto& [node_id, node] : record.nodes) {
    if (node.state == NodeState::powering_on) {
      op.nodes.push_back(node_id);
      involved[node.site_id] = true;
    }
  }
  // Sites provision side by side: each phase lasts as long as its slowest site.
  PhaseDurations longest;
  for (const auto& [site_id, unused] : involved) {
    const auto& d = record.site(site_id).provisioning_phase_durations;
    longest.network_create = std::max(longest.network_create, d.network_create);
    longest.vm_create = std::max(longest.vm_create, d.vm_create);
    longest.tunnel_setup = std::max(longest.tunnel_setup, d.tunnel_setup);
    longest.contextualize = std::max(longest.contextualize, d.contextualize);
  }
  op.steps = provisioning_steps(longest);
  start_operation(op, now);
  for (const auto& node_id : op.nodes) {
    record.nodes.at(node_id).ready_by = op.finishes_at + cluster.failure_detection;
  }
  record.in_flight.push_back(op);
  return record;
}

UpdateResult request_update(DeploymentRecord& record, const UpdateRequest& request, Seconds now) {
  auto it = record.nodes.find(request.node_id);
  if (it == record.nodes.end()) {
    throw Error(ErrorCode::UnknownNode, "node '" + request.node_id + "' does not exist");
  }
  const VMInstance& node = it->second;
  if (node.role != NodeRole::worker) {
    throw Error(ErrorCode::InvalidUpdate, "only worker nodes are added or removed on demand");
  }

  if (request.kind == UpdateKind::add_node) {
    if (node.state != NodeState::off) {
      throw Error(ErrorCode::InvalidUpdate, "cannot add '" + node.node_id + "' while it is " +
                                                std::string(to_string(node.state)));
    }
    if (busy(record)) {
      return Busy{};
    }
    const UsageMap usage = record.usage();
    SiteId site_id;
    if (request.target_site) {
      site_id = *request.target_site;
      if (free_quota(record.site(site_id), usage.at(site_id)) < 1) {
        throw Error(ErrorCode::QuotaExceeded, "site '" + site_id + "' has no instance quota left");
      }
    } else {
      site_id = rank_sites(record.cluster.site_preferences, record.sites, 1, usage).front().site_id;
    }

    UpdateOperation op;
    op.op_id = "op-" + std::to_string(record.next_op++);
    op.kind = UpdateKind::add_node;
    op.target_site = site_id;
    op.steps = provisioning_steps(record.site(site_id).provisioning_phase_durations);
    start_operation(op, now);

    VMInstance& vm = record.nodes.at(request.node_id);
    vm.site_id = site_id;
    vm.failed_cycle = false;
    set_node_state(record, request.node_id, NodeState::powering_on, now);
    vm.ready_by = op.finishes_at + record.cluster.failure_detection;
    op.nodes.push_back(request.node_id);
    // A first worker at a new site brings its vRouter up within the same operation.
    for (const auto& added : replan_overlay(record, now)) {
      op.nodes.push_back(added);
    }
    record.in_flight.push_back(op);
    return op;
  }

  if (request.kind == UpdateKind::remove_node) {
    if (node.state != NodeState::idle && node.state != NodeState::poweroff_scheduled &&
        node.state != NodeState::failed) {
      throw Error(ErrorCode::InvalidUpdate, "cannot remove '" + node.node_id + "' while it is " +
                                                std::string(to_string(node.state)));
    }
    if (busy(record)) {
      return Busy{};
    }
    const SiteId site_id = node.site_id;
    UpdateOperation op;
    op.op_id = "op-" + std::to_string(record.next_op++);
    op.kind = UpdateKind::remove_node;
    op.target_site = site_id;
    op.steps = {{UpdatePhase::deprovision, record.site(site_id).deprovision_duration}};
    start_operation(op, now);
    begin_power_off(record, request.node_id, now);
    op.nodes.push_back(request.node_id);

    const bool last_worker = std::none_of(record.nodes.begin(), record.nodes.end(), [&](const auto& entry) {
      const auto& other = entry.second;
      return other.role == NodeRole::worker && other.site_id == site_id && other.node_id != request.node_id &&
             other.state != NodeState::off && other.state != NodeState::powering_off;
    });
    if (last_worker && site_id != record.cluster.front_end_site) {
      auto vr = record.topology.vrouters.find(site_id);
      if (vr != record.topology.vrouters.end()) {
        const auto& gateway = record.nodes.at(vr->second);
        if (gateway.state == NodeState::idle) {
          begin_power_off(record, vr->second, now);
          op.nodes.push_back(vr->second);
        }
      }
    }
    record.in_flight.push_back(op);
    return op;
  }

  throw Error(ErrorCode::InvalidUpdate, "initial_deploy is started by submit_deployment");
}

std::vector<WorkflowEvent> step_workflow(DeploymentRecord& record, Seconds now) {
  std::vector<WorkflowEvent> events;
  bool topology_dirty = false;
  for (auto op_it = record.in_flight.begin(); op_it != record.in_flight.end();) {
    UpdateOperation& op = *op_it;
    while (!op.steps.empty() && op.phase_ends_at <= now) {
      events.push_back(WorkflowEvent{WorkflowEventKind::phase_done, op.op_id, op.phase, {}, NodeState::off});
      op.completed_phases.push_back(op.phase);
      op.steps.erase(op.steps.begin());
      if (!op.steps.empty()) {
        op.phase = op.steps.front().phase;
        op.phase_ends_at += op.steps.front().duration;
      }
    }
    if (!op.steps.empty()) {
      ++op_it;
      continue;
    }
    op.phase = UpdatePhase::done;
    const NodeState final_state = op.kind == UpdateKind::remove_node ? NodeState::off : NodeState::idle;
    const NodeState transient = op.kind == UpdateKind::remove_node ? NodeState::powering_off : NodeState::powering_on;
    for (const auto& node_id : op.nodes) {
      if (record.nodes.at(node_id).state != transient) continue;  // failed mid-operation
      set_node_state(record, node_id, final_state, op.finishes_at);
      auto& vm = record.nodes.at(node_id);
      vm.ready_by.reset();
      events.push_back(WorkflowEvent{WorkflowEventKind::node_state, op.op_id, UpdatePhase::done, node_id, final_state});
    }
    if (op.kind == UpdateKind::remove_node) {
      topology_dirty = true;
    }
    events.push_back(WorkflowEvent{WorkflowEventKind::update_done, op.op_id, UpdatePhase::done, {}, NodeState::off});
    record.history.push_back(op);
    op_it = record.in_flight.erase(op_it);
  }
  if (topology_dirty) {
    // Only reachable with parallel provisioning: a worker was added at a site
    // while its vRouter was going away, so the gateway comes back up.
    auto added = replan_overlay(record, now);
    if (!added.empty()) {
      UpdateOperation op;
      op.op_id = "op-" + std::to_string(record.next_op++);
      op.kind = UpdateKind::add_node;
      op.target_site = record.nodes.at(added.front()).site_id;
      op.steps = provisioning_steps(record.site(op.target_site).provisioning_phase_durations);
      op.nodes = added;
      start_operation(op, now);
      record.in_flight.push_back(op);
    }
  }
  return events;
}

std::optional<Seconds> next_phase_deadline(const DeploymentRecord& record) {
  std::optional<Seconds> earliest;
  for (const auto& op : record.in_flight) {
    if (!earliest || op.phase_ends_at < *earliest) earliest = op.phase_ends_at;
  }
  return earliest;
}

}  // namespace evc
