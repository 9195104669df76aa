#pragma once

// Queue-driven elasticity decisions. Everything here is a pure function of
// the queue, the node states and the policy; the simulation loop applies the
// resulting actions.

#include <optional>
#include <span>
#include <vector>

#include "evc/domain.hpp"

namespace evc {

enum class VictimOrder { pay_per_use_first_then_longest_idle };

struct ElasticityPolicy {
  int max_workers = 0;
  int min_workers = 0;
  Seconds idle_timeout = 300.0;
  Seconds poweroff_grace = 120.0;
  VictimOrder victim_order = VictimOrder::pay_per_use_first_then_longest_idle;
  bool reprovision_failed = true;
  // One power-on at a time, matching a deployment that accepts a single update.
  bool serialize_power_on = true;

  static ElasticityPolicy from_template(const ClusterTemplate& cluster);
};

struct QueueView {
  int pending = 0;
  int running = 0;
  // Unused slots on nodes that are already running jobs.
  int free_slots_on_used = 0;
};

enum class ActionKind { power_on, schedule_poweroff, cancel_poweroff, mark_failed, reprovision };

std::string_view to_string(ActionKind kind);

struct Action {
  ActionKind kind = ActionKind::power_on;
  std::optional<NodeId> node;
  std::optional<SiteId> site_hint;
  Seconds issue_time = 0.0;
  Seconds grace = 0.0;  // schedule_poweroff only

  bool operator==(const Action&) const = default;
};

enum class LrmsReport { responding, off };

std::vector<Action> evaluate(const QueueView& queue, std::span<const VMInstance> workers,
                             std::span<const CloudSite> sites, const ElasticityPolicy& policy, Seconds now);

std::vector<Action> on_lrms_report(const VMInstance& node, LrmsReport reported, Seconds now,
                                   const ElasticityPolicy& policy);

/// Called when a node reaches `off`; a node that failed during this cycle is brought back while work remains.
std::vector<Action> on_poweroff_complete(const VMInstance& node, const QueueView& queue,
                                         const ElasticityPolicy& policy, Seconds now);

/// Pay-per-use sites first, then longest idle, ties by node_id descending.
std::vector<NodeId> select_victims(std::span<const VMInstance> idle_nodes, std::span<const CloudSite> sites,
                                   const ElasticityPolicy& policy);

}  // namespace evc
