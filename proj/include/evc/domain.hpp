#pragma once

// Vocabulary types shared by the overlay planner, the orchestrator, the
// elasticity policy and the simulation engine. All of them are plain value
// objects.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "evc/error.hpp"
#include "evc/ipv4.hpp"

namespace evc {

using Seconds = double;
using SiteId = std::string;
using NodeId = std::string;
using JobId = std::uint32_t;

enum class SiteKind { on_premises, public_cloud };

struct CostRate {
  double per_hour = 0.0;
  Seconds billing_granularity = 1.0;
};

struct PhaseDurations {
  Seconds network_create = 0.0;
  Seconds vm_create = 0.0;
  Seconds tunnel_setup = 0.0;
  Seconds contextualize = 0.0;

  Seconds sum() const { return network_create + vm_create + tunnel_setup + contextualize; }
};

struct CloudSite {
  SiteId site_id;
  SiteKind kind = SiteKind::on_premises;
  int max_instances = 0;
  int max_public_ips = 0;
  bool supports_private_networks = true;
  PhaseDurations provisioning_phase_durations;
  Seconds deprovision_duration = 0.0;
  CostRate billing;
  // Rate for the site's vRouter VM; falls back to `billing` when absent.
  std::optional<CostRate> vrouter_billing;
  double availability = 1.0;

  const CostRate& rate_for_vrouter() const { return vrouter_billing ? *vrouter_billing : billing; }
};

enum class NodeRole { front_end, worker, vrouter, central_point, stand_alone_client };

enum class NodeState { off, powering_on, idle, used, poweroff_scheduled, powering_off, failed };

struct VMInstance {
  NodeId node_id;
  SiteId site_id;  // empty while a pooled worker has never been placed
  NodeRole role = NodeRole::worker;
  NodeState state = NodeState::off;
  bool has_public_ip = false;
  std::optional<Ipv4Address> private_address;
  int slots = 0;
  Seconds state_since = 0.0;
  Seconds paid_seconds = 0.0;
  // Set while powering on: a LRMS "off" report after this instant is a failure.
  std::optional<Seconds> ready_by;
  // Marked failed during the current power cycle.
  bool failed_cycle = false;
};

enum class JobState { pending, running, done };

struct Job {
  JobId job_id = 0;
  Seconds submit_time = 0.0;
  Seconds processing_duration = 0.0;
  JobState state = JobState::pending;
  std::optional<NodeId> assigned_node;
  int attempts = 0;
};

struct DurationRange {
  Seconds min = 15.0;
  Seconds max = 20.0;
};

struct WorkloadBlock {
  int job_count = 0;
  // Offset of this block's submission from the previous block's submission
  // (from simulation start for the first block).
  Seconds inter_block_gap = 0.0;
  DurationRange duration_distribution;
};

struct FaultSpec {
  NodeId node_id;
  Seconds at = 0.0;
};

struct Workload {
  std::vector<WorkloadBlock> blocks;
  Seconds setup_duration = 270.0;
  // Explicit per-job data transfer to the front-end; zero disables it.
  Seconds transfer_seconds = 0.0;
  std::vector<FaultSpec> faults;
  Seconds max_sim_time = 30.0 * 24 * 3600;

  int total_jobs() const;
};

struct SiteCount {
  SiteId site_id;
  int count = 0;
};

struct SLA {
  SiteId site_id;
  int priority = 1;
};

struct ClusterTemplate {
  SiteId front_end_site;
  std::vector<SiteCount> initial_workers;
  int max_workers = 0;
  int worker_slots = 1;
  Seconds idle_timeout = 300.0;
  Seconds poweroff_grace = 120.0;
  std::vector<SLA> site_preferences;
  // Workers never scaled in below this count; defaults to the initial worker count.
  std::optional<int> min_workers;
  bool parallel_provisioning = false;
  bool reprovision_failed = true;
  Seconds policy_tick = 30.0;
  Seconds failure_detection = 180.0;

  int initial_worker_count() const;
  int effective_min_workers() const { return min_workers ? *min_workers : initial_worker_count(); }
};

enum class CipherMode { none, light, full };

struct CipherProfile {
  CipherMode mode = CipherMode::none;
  double throughput_factor = 1.0;
  Seconds latency_penalty = 0.0;
};

struct OverlayConfig {
  Ipv4Prefix base_prefix = Ipv4Prefix::parse("10.8.0.0/16");
  std::vector<SiteId> backup_cp_sites;
  CipherProfile cipher;
  std::map<SiteId, Ipv4Prefix> manual_subnets;
};

struct Scenario {
  std::vector<CloudSite> sites;
  ClusterTemplate cluster;  // "template" in the scenario file
  Workload workload;
  OverlayConfig overlay;
  std::uint64_t seed = 0;

  const CloudSite* find_site(std::string_view site_id) const;
};

// Canonical node names.
NodeId front_end_node_id();
NodeId worker_node_id(int index);  // 1-based
NodeId vrouter_node_id(std::string_view site_id);
NodeId backup_cp_node_id(std::string_view site_id);

/// Natural ordering: "vnode-2" < "vnode-10".
bool node_id_less(std::string_view a, std::string_view b);

struct NodeIdLess {
  bool operator()(std::string_view a, std::string_view b) const { return node_id_less(a, b); }
};

/// Edges of the node lifecycle state machine.
bool is_allowed_transition(NodeState from, NodeState to);

/// States during which a VM exists and is billed.
bool is_paid_state(NodeState state);

std::string_view to_string(SiteKind kind);
std::string_view to_string(NodeRole role);
std::string_view to_string(NodeState state);
std::string_view to_string(JobState state);
std::string_view to_string(CipherMode mode);
NodeState parse_node_state(std::string_view text);

/// Every violation of the template against the given sites; empty when valid.
std::vector<Diagnostic> check_template(const ClusterTemplate& cluster, std::span<const CloudSite> sites);

/// Returns the template unchanged when valid, throws ValidationError otherwise.
const ClusterTemplate& validate_template(const ClusterTemplate& cluster, std::span<const CloudSite> sites);

/// Whole-scenario consistency: sites, template, workload, overlay and fault references.
std::vector<Diagnostic> check_scenario(const Scenario& scenario);
const Scenario& validate_scenario(const Scenario& scenario);

/// Strict parse: unknown keys and missing required keys are errors.
Scenario parse_scenario(const nlohmann::json& document);
Scenario load_scenario(const std::filesystem::path& path);
nlohmann::ordered_json to_json(const Scenario& scenario);

}  // namespace evc
