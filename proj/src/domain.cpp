#include "evc/domain.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>
#include <set>

namespace evc {

int Workload::total_jobs() const {
  return std::accumulate(blocks.begin(), blocks.end(), 0,
                         [](int total, const WorkloadBlock& block) { return total + block.job_count; });
}

int ClusterTemplate::initial_worker_count() const {
  return std::accumulate(initial_workers.begin(), initial_workers.end(), 0,
                         [](int total, const SiteCount& entry) { return total + entry.count; });
}

const CloudSite* Scenario::find_site(std::string_view site_id) const {
  auto it = std::find_if(sites.begin(), sites.end(), [&](const CloudSite& site) { return site.site_id == site_id; });
  return it == sites.end() ? nullptr : &*it;
}

NodeId front_end_node_id() { return "fe"; }
NodeId worker_node_id(int index) { return "vnode-" + std::to_string(index); }
NodeId vrouter_node_id(std::string_view site_id) { return "vrouter-" + std::string(site_id); }
NodeId backup_cp_node_id(std::string_view site_id) { return "cp-" + std::string(site_id); }

bool node_id_less(std::string_view a, std::string_view b) {
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.size() && j < b.size()) {
    if (std::isdigit(static_cast<unsigned char>(a[i])) && std::isdigit(static_cast<unsigned char>(b[j]))) {
      std::size_t ia = i;
      std::size_t jb = j;
      while (ia < a.size() && a[ia] == '0') ++ia;
      while (jb < b.size() && b[jb] == '0') ++jb;
      std::size_t ea = ia;
      std::size_t eb = jb;
      while (ea < a.size() && std::isdigit(static_cast<unsigned char>(a[ea]))) ++ea;
      while (eb < b.size() && std::isdigit(static_cast<unsigned char>(b[eb]))) ++eb;
      if (ea - ia != eb - jb) {
        return ea - ia < eb - jb;
      }
      auto cmp = a.substr(ia, ea - ia).compare(b.substr(jb, eb - jb));
      if (cmp != 0) {
        return cmp < 0;
      }
      i = ea;
      j = eb;
      continue;
    }
    if (a[i] != b[j]) {
      return a[i] < b[j];
    }
    ++i;
    ++j;
  }
  if ((a.size() - i) != (b.size() - j)) {
    return a.size() - i < b.size() - j;
  }
  return a < b;
}

bool is_allowed_transition(NodeState from, NodeState to) {
  using S = NodeState;
  switch (from) {
    case S::off: return to == S::powering_on;
    case S::powering_on: return to == S::idle || to == S::failed;
    case S::idle: return to == S::used || to == S::poweroff_scheduled || to == S::failed;
    case S::used: return to == S::idle || to == S::failed;
    case S::poweroff_scheduled: return to == S::powering_off || to == S::idle;
    case S::powering_off: return to == S::off;
    case S::failed: return to == S::powering_off;
  }
  return false;
}

bool is_paid_state(NodeState state) { return state != NodeState::off; }

std::string_view to_string(SiteKind kind) {
  return kind == SiteKind::public_cloud ? "public" : "on_premises";
}

std::string_view to_string(NodeRole role) {
  switch (role) {
    case NodeRole::front_end: return "front_end";
    case NodeRole::worker: return "worker";
    case NodeRole::vrouter: return "vrouter";
    case NodeRole::central_point: return "central_point";
    case NodeRole::stand_alone_client: return "stand_alone_client";
  }
  return "unknown";
}

std::string_view to_string(NodeState state) {
  switch (state) {
    case NodeState::off: return "off";
    case NodeState::powering_on: return "powering_on";
    case NodeState::idle: return "idle";
    case NodeState::used: return "used";
    case NodeState::poweroff_scheduled: return "poweroff_scheduled";
    case NodeState::powering_off: return "powering_off";
    case NodeState::failed: return "failed";
  }
  return "unknown";
}

std::string_view to_string(JobState state) {
  switch (state) {
    case JobState::pending: return "pending";
    case JobState::running: return "running";
    case JobState::done: return "done";
  }
  return "unknown";
}

std::string_view to_string(CipherMode mode) {
  switch (mode) {
    case CipherMode::none: return "none";
    case CipherMode::light: return "light";
    case CipherMode::full: return "full";
  }
  return "unknown";
}

NodeState parse_node_state(std::string_view text) {
  for (auto state : {NodeState::off, NodeState::powering_on, NodeState::idle, NodeState::used,
                     NodeState::poweroff_scheduled, NodeState::powering_off, NodeState::failed}) {
    if (to_string(state) == text) {
      return state;
    }
  }
  throw Error(ErrorCode::ParseError, "unknown node state '" + std::string(text) + "'");
}

namespace {

const CloudSite* find(std::span<const CloudSite> sites, std::string_view site_id) {
  auto it = std::find_if(sites.begin(), sites.end(), [&](const CloudSite& site) { return site.site_id == site_id; });
  return it == sites.end() ? nullptr : &*it;
}

void add(std::vector<Diagnostic>& out, ErrorCode code, std::string message) {
  out.push_back(Diagnostic{code, std::move(message)});
}

}  // namespace

std::vector<Diagnostic> check_template(const ClusterTemplate& cluster, std::span<const CloudSite> sites) {
  std::vector<Diagnostic> out;

  const CloudSite* fe_site = find(sites, cluster.front_end_site);
  if (fe_site == nullptr) {
    add(out, ErrorCode::UnknownSite, "front_end_site '" + cluster.front_end_site + "' is not declared");
  } else if (fe_site->max_public_ips < 1) {
    add(out, ErrorCode::NoPublicIpAtFrontEnd,
        "front-end site '" + fe_site->site_id + "' offers no public IP for the central point");
  }

  std::map<SiteId, int> workers_per_site;
  for (const auto& entry : cluster.initial_workers) {
    if (find(sites, entry.site_id) == nullptr) {
      add(out, ErrorCode::UnknownSite, "initial_workers references unknown site '" + entry.site_id + "'");
      continue;
    }
    if (entry.count < 0) {
      add(out, ErrorCode::BadBounds, "negative initial worker count at '" + entry.site_id + "'");
      continue;
    }
    workers_per_site[entry.site_id] += entry.count;
  }

  std::set<SiteId> sla_sites;
  for (const auto& sla : cluster.site_preferences) {
    if (find(sites, sla.site_id) == nullptr) {
      add(out, ErrorCode::UnknownSite, "site_preferences references unknown site '" + sla.site_id + "'");
    }
    if (!sla_sites.insert(sla.site_id).second) {
      add(out, ErrorCode::InvalidValue, "duplicate SLA entry for site '" + sla.site_id + "'");
    }
    if (sla.priority < 1) {
      add(out, ErrorCode::InvalidValue, "SLA priority for '" + sla.site_id + "' must be a positive integer");
    }
  }

  const int initial = cluster.initial_worker_count();
  if (cluster.max_workers < 0 || cluster.max_workers < initial) {
    add(out, ErrorCode::BadBounds,
        "max_workers (" + std::to_string(cluster.max_workers) + ") is below the initial worker count (" +
            std::to_string(initial) + ")");
  }
  if (cluster.worker_slots < 1) {
    add(out, ErrorCode::BadBounds, "worker_slots must be at least 1");
  }
  if (cluster.idle_timeout < 0 || cluster.poweroff_grace < 0) {
    add(out, ErrorCode::BadBounds, "idle_timeout and poweroff_grace must be non-negative");
  }
  if (cluster.min_workers && (*cluster.min_workers < 0 || *cluster.min_workers > cluster.max_workers)) {
    add(out, ErrorCode::BadBounds, "min_workers must lie in [0, max_workers]");
  }
  if (!(cluster.policy_tick > 0)) {
    add(out, ErrorCode::BadBounds, "policy_tick must be positive");
  }
  if (cluster.failure_detection < 0) {
    add(out, ErrorCode::BadBounds, "failure_detection must be non-negative");
  }

  for (const auto& [site_id, count] : workers_per_site) {
    const CloudSite* site = find(sites, site_id);
    int instances = count;
    if (site_id == cluster.front_end_site) {
      instances += 1;
    } else if (count > 0 && site->supports_private_networks) {
      instances += 1;  // the site's vRouter
    }
    if (instances > site->max_instances) {
      add(out, ErrorCode::QuotaInfeasible,
          "site '" + site_id + "' needs " + std::to_string(instances) + " instances for the initial deployment but " +
              "its quota is " + std::to_string(site->max_instances));
    }
  }
  if (fe_site != nullptr && workers_per_site.count(fe_site->site_id) == 0 && fe_site->max_instances < 1) {
    add(out, ErrorCode::QuotaInfeasible, "front-end site '" + fe_site->site_id + "' has no instance quota");
  }
  return out;
}

const ClusterTemplate& validate_template(const ClusterTemplate& cluster, std::span<const CloudSite> sites) {
  auto diagnostics = check_template(cluster, sites);
  if (!diagnostics.empty()) {
    throw ValidationError(std::move(diagnostics));
  }
  return cluster;
}

namespace {

void check_sites(const Scenario& scenario, std::vector<Diagnostic>& out) {
  std::set<SiteId> seen;
  for (const auto& site : scenario.sites) {
    const std::string where = "site '" + site.site_id + "'";
    if (site.site_id.empty()) {
      add(out, ErrorCode::InvalidValue, "site with empty site_id");
    }
    if (!seen.insert(site.site_id).second) {
      add(out, ErrorCode::InvalidValue, "duplicate " + where);
    }
    if (site.max_instances < 0 || site.max_public_ips < 0) {
      add(out, ErrorCode::BadBounds, where + ": quotas must be non-negative");
    }
    if (!(site.availability >= 0.0 && site.availability <= 1.0)) {
      add(out, ErrorCode::InvalidValue, where + ": availability must lie in [0, 1]");
    }
    for (const CostRate* rate : {&site.billing, site.vrouter_billing ? &*site.vrouter_billing : nullptr}) {
      if (rate == nullptr) continue;
      if (rate->per_hour < 0) {
        add(out, ErrorCode::InvalidValue, where + ": per_hour must be non-negative");
      }
      if (rate->billing_granularity < 1) {
        add(out, ErrorCode::InvalidValue, where + ": billing_granularity must be at least 1 second");
      }
    }
    const auto& p = site.provisioning_phase_durations;
    if (p.network_create < 0 || p.vm_create < 0 || p.tunnel_setup < 0 || p.contextualize < 0 ||
        site.deprovision_duration < 0) {
      add(out, ErrorCode::InvalidValue, where + ": phase durations must be non-negative");
    }
  }
}

void check_workload(const Scenario& scenario, std::vector<Diagnostic>& out) {
  const auto& workload = scenario.workload;
  for (std::size_t i = 0; i < workload.blocks.size(); ++i) {
    const auto& block = workload.blocks[i];
    const std::string where = "workload block " + std::to_string(i);
    if (block.job_count < 0) {
      add(out, ErrorCode::BadBounds, where + ": job_count must be non-negative");
    }
    if (block.inter_block_gap < 0) {
      add(out, ErrorCode::BadBounds, where + ": inter_block_gap must be non-negative");
    }
    if (!(block.duration_distribution.min > 0) || block.duration_distribution.min > block.duration_distribution.max) {
      add(out, ErrorCode::BadBounds, where + ": duration_distribution needs 0 < min <= max");
    }
  }
  if (workload.setup_duration < 0 || workload.transfer_seconds < 0) {
    add(out, ErrorCode::BadBounds, "workload setup_duration and transfer_seconds must be non-negative");
  }
  if (!(workload.max_sim_time > 0)) {
    add(out, ErrorCode::BadBounds, "workload max_sim_time must be positive");
  }

  std::set<NodeId> known{front_end_node_id()};
  for (int i = 1; i <= scenario.cluster.max_workers; ++i) {
    known.insert(worker_node_id(i));
  }
  for (const auto& site : scenario.sites) {
    known.insert(vrouter_node_id(site.site_id));
  }
  for (const auto& site_id : scenario.overlay.backup_cp_sites) {
    known.insert(backup_cp_node_id(site_id));
  }
  for (const auto& fault : workload.faults) {
    if (known.count(fault.node_id) == 0) {
      add(out, ErrorCode::UnknownNode, "fault references unknown node '" + fault.node_id + "'");
    }
    if (fault.at < 0) {
      add(out, ErrorCode::BadBounds, "fault time must be non-negative");
    }
  }
}

void check_overlay(const Scenario& scenario, std::vector<Diagnostic>& out) {
  const auto& overlay = scenario.overlay;
  const auto& cipher = overlay.cipher;
  if (!(cipher.throughput_factor > 0.0 && cipher.throughput_factor <= 1.0) || cipher.latency_penalty < 0) {
    add(out, ErrorCode::InvalidValue, "cipher needs throughput_factor in (0, 1] and non-negative latency_penalty");
  }
  if (cipher.mode == CipherMode::none && (cipher.throughput_factor != 1.0 || cipher.latency_penalty != 0.0)) {
    add(out, ErrorCode::InvalidValue, "cipher mode none requires throughput_factor 1 and latency_penalty 0");
  }

  std::map<SiteId, int> cps_per_site;
  cps_per_site[scenario.cluster.front_end_site] += 1;
  std::set<SiteId> backups;
  for (const auto& site_id : overlay.backup_cp_sites) {
    if (scenario.find_site(site_id) == nullptr) {
      add(out, ErrorCode::UnknownSite, "backup_cp_sites references unknown site '" + site_id + "'");
      continue;
    }
    if (!backups.insert(site_id).second) {
      add(out, ErrorCode::InvalidValue, "more than one backup central point at '" + site_id + "'");
    }
    cps_per_site[site_id] += 1;
  }
  for (const auto& [site_id, count] : cps_per_site) {
    const CloudSite* site = scenario.find_site(site_id);
    if (site != nullptr && site_id != scenario.cluster.front_end_site && site->max_public_ips < count) {
      add(out, ErrorCode::NoPublicIpAvailable, "site '" + site_id + "' lacks public IPs for its central point");
    }
    if (site != nullptr && site_id == scenario.cluster.front_end_site && count > 1 && site->max_public_ips < count) {
      add(out, ErrorCode::NoPublicIpAvailable, "site '" + site_id + "' lacks public IPs for its central points");
    }
  }

  const auto& base = overlay.base_prefix;
  const int sub_length = base.length() + 8;
  const std::uint64_t blocks = sub_length <= 30 ? base.subblock_count(sub_length) : 0;
  if (blocks < scenario.sites.size() + 3) {
    add(out, ErrorCode::PrefixExhausted,
        "base prefix " + base.to_string() + " cannot hold " + std::to_string(scenario.sites.size()) +
            " site subnets plus the reserved tunnel and stand-alone blocks");
  }

  std::vector<std::pair<SiteId, Ipv4Prefix>> manual(overlay.manual_subnets.begin(), overlay.manual_subnets.end());
  for (std::size_t i = 0; i < manual.size(); ++i) {
    const auto& [site_id, prefix] = manual[i];
    if (scenario.find_site(site_id) == nullptr) {
      add(out, ErrorCode::UnknownSite, "manual_subnets references unknown site '" + site_id + "'");
    }
    if (!base.contains(prefix)) {
      add(out, ErrorCode::InvalidValue,
          "manual subnet " + prefix.to_string() + " for '" + site_id + "' lies outside " + base.to_string());
    }
    if (prefix.length() > 30) {
      add(out, ErrorCode::InvalidValue, "manual subnet " + prefix.to_string() + " is too small for a gateway and hosts");
    }
    if (blocks >= 3 && base.contains(prefix)) {
      for (std::uint64_t reserved : {blocks - 2, blocks - 3}) {
        if (prefix.overlaps(base.subblock(sub_length, reserved))) {
          add(out, ErrorCode::SubnetOverlap,
              "subnet overlap: manual subnet " + prefix.to_string() + " for '" + site_id +
                  "' overlaps a reserved overlay block");
        }
      }
    }
    for (std::size_t j = i + 1; j < manual.size(); ++j) {
      if (prefix.overlaps(manual[j].second)) {
        add(out, ErrorCode::SubnetOverlap,
            "subnet overlap: " + prefix.to_string() + " ('" + site_id + "') and " + manual[j].second.to_string() +
                " ('" + manual[j].first + "')");
      }
    }
  }
}

}  // namespace

std::vector<Diagnostic> check_scenario(const Scenario& scenario) {
  std::vector<Diagnostic> out;
  check_sites(scenario, out);
  auto template_diagnostics = check_template(scenario.cluster, scenario.sites);
  out.insert(out.end(), template_diagnostics.begin(), template_diagnostics.end());
  check_workload(scenario, out);
  check_overlay(scenario, out);
  return out;
}

const Scenario& validate_scenario(const Scenario& scenario) {
  auto diagnostics = check_scenario(scenario);
  if (!diagnostics.empty()) {
    throw ValidationError(std::move(diagnostics));
  }
  return scenario;
}

}  // namespace evc
