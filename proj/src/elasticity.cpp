#include "evc/elasticity.hpp"

#include <algorithm>

namespace evc {

ElasticityPolicy ElasticityPolicy::from_template(const ClusterTemplate& cluster) {
  ElasticityPolicy policy;
  policy.max_workers = cluster.max_workers;
  policy.min_workers = cluster.effective_min_workers();
  policy.idle_timeout = cluster.idle_timeout;
  policy.poweroff_grace = cluster.poweroff_grace;
  policy.reprovision_failed = cluster.reprovision_failed;
  policy.serialize_power_on = !cluster.parallel_provisioning;
  return policy;
}

std::string_view to_string(ActionKind kind) {
  switch (kind) {
    case ActionKind::power_on: return "power_on";
    case ActionKind::schedule_poweroff: return "schedule_poweroff";
    case ActionKind::cancel_poweroff: return "cancel_poweroff";
    case ActionKind::mark_failed: return "mark_failed";
    case ActionKind::reprovision: return "reprovision";
  }
  return "unknown";
}

namespace {

bool is_pay_per_use(const VMInstance& node, std::span<const CloudSite> sites) {
  auto it = std::find_if(sites.begin(), sites.end(), [&](const CloudSite& s) { return s.site_id == node.site_id; });
  return it != sites.end() && it->kind == SiteKind::public_cloud;
}

}  // namespace

std::vector<NodeId> select_victims(std::span<const VMInstance> idle_nodes, std::span<const CloudSite> sites,
                                   const ElasticityPolicy& /*policy*/) {
  std::vector<const VMInstance*> order;
  for (const auto& node : idle_nodes) order.push_back(&node);
  std::sort(order.begin(), order.end(), [&](const VMInstance* a, const VMInstance* b) {
    const bool pa = is_pay_per_use(*a, sites);
    const bool pb = is_pay_per_use(*b, sites);
    if (pa != pb) return pa;
    if (a->state_since != b->state_since) return a->state_since < b->state_since;
    return node_id_less(b->node_id, a->node_id);
  });
  std::vector<NodeId> out;
  for (const auto* node : order) out.push_back(node->node_id);
  return out;
}

std::vector<Action> evaluate(const QueueView& queue, std::span<const VMInstance> workers,
                             std::span<const CloudSite> sites, const ElasticityPolicy& policy, Seconds now) {
  std::vector<Action> actions;
  int capacity = queue.free_slots_on_used;
  int active = 0;
  bool powering_on = false;
  std::vector<VMInstance> scheduled;
  std::vector<VMInstance> idle_expired;
  int staying = 0;
  for (const auto& node : workers) {
    switch (node.state) {
      case NodeState::idle:
        capacity += node.slots;
        if (now - node.state_since >= policy.idle_timeout) idle_expired.push_back(node);
        ++staying;
        break;
      case NodeState::powering_on:
        capacity += node.slots;
        powering_on = true;
        ++staying;
        break;
      case NodeState::used:
        ++staying;
        break;
      case NodeState::poweroff_scheduled:
        scheduled.push_back(node);
        break;
      default:
        break;
    }
    if (node.state != NodeState::off) ++active;
  }

  if (queue.pending > 0) {
    int deficit = queue.pending - capacity;
    if (deficit > 0 && !scheduled.empty()) {
      // Keep the nodes that would have been powered off first.
      auto order = select_victims(scheduled, sites, policy);
      std::reverse(order.begin(), order.end());
      for (const auto& node_id : order) {
        if (deficit <= 0) break;
        const auto& node = *std::find_if(scheduled.begin(), scheduled.end(),
                                         [&](const VMInstance& n) { return n.node_id == node_id; });
        actions.push_back(Action{ActionKind::cancel_poweroff, node_id, std::nullopt, now, 0.0});
        deficit -= std::max(1, node.slots);
      }
    }
    if (deficit > 0) {
      const int room = policy.max_workers - active;
      int wanted = 0;
      if (policy.serialize_power_on) {
        wanted = (room > 0 && !powering_on) ? 1 : 0;
      } else {
        int slots = 1;
        for (const auto& node : workers) slots = std::max(slots, node.slots);
        wanted = std::min(room, (deficit + slots - 1) / slots);
      }
      for (int i = 0; i < wanted; ++i) {
        actions.push_back(Action{ActionKind::power_on, std::nullopt, std::nullopt, now, 0.0});
      }
    }
    return actions;
  }

  // Scale in only once the queue has drained.
  const int allowance = staying - policy.min_workers;
  if (allowance <= 0 || idle_expired.empty()) {
    return actions;
  }
  // Allowance is kept for pay-per-use nodes that are still busy, so they are
  // released before any free node.
  int public_staying = 0;
  for (const auto& node : workers) {
    const bool up = node.state == NodeState::idle || node.state == NodeState::used ||
                    node.state == NodeState::powering_on;
    if (up && is_pay_per_use(node, sites)) ++public_staying;
  }
  std::vector<NodeId> victims;
  int public_taken = 0;
  for (const auto& node_id : select_victims(idle_expired, sites, policy)) {
    if (static_cast<int>(victims.size()) >= allowance) break;
    const auto& node = *std::find_if(idle_expired.begin(), idle_expired.end(),
                                     [&](const VMInstance& n) { return n.node_id == node_id; });
    if (is_pay_per_use(node, sites)) {
      ++public_taken;
    } else if (static_cast<int>(victims.size()) + (public_staying - public_taken) >= allowance) {
      break;
    }
    victims.push_back(node_id);
  }
  for (const auto& node_id : victims) {
    actions.push_back(Action{ActionKind::schedule_poweroff, node_id, std::nullopt, now, policy.poweroff_grace});
  }
  return actions;
}

std::vector<Action> on_lrms_report(const VMInstance& node, LrmsReport reported, Seconds now,
                                   const ElasticityPolicy& /*policy*/) {
  if (reported == LrmsReport::responding) {
    return {};
  }
  const bool overdue = node.state == NodeState::powering_on && node.ready_by && now > *node.ready_by;
  if (node.state == NodeState::idle || node.state == NodeState::used || overdue) {
    return {Action{ActionKind::mark_failed, node.node_id, std::nullopt, now, 0.0},
            Action{ActionKind::schedule_poweroff, node.node_id, std::nullopt, now, 0.0}};
  }
  return {};
}

std::vector<Action> on_poweroff_complete(const VMInstance& node, const QueueView& queue,
                                         const ElasticityPolicy& policy, Seconds now) {
  if (node.failed_cycle && policy.reprovision_failed && queue.pending > 0) {
    return {Action{ActionKind::reprovision, node.node_id, node.site_id, now, 0.0}};
  }
  return {};
}

}  // namespace evc
