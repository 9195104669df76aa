#include <algorithm>
#include <future>
#include <queue>

#include "evc/sim.hpp"

namespace evc {

namespace {

using ojson = nlohmann::ordered_json;

struct QueuedEvent {
  Seconds time = 0.0;
  std::uint64_t seq = 0;
  EventKind kind = EventKind::policy_tick;
  NodeId node;
  long index = 0;
  int attempt = 0;
};

struct Later {
  bool operator()(const QueuedEvent& a, const QueuedEvent& b) const {
    if (a.time != b.time) return a.time > b.time;
    return a.seq > b.seq;
  }
};

class Simulation {
 public:
  Simulation(const Scenario& scenario, std::uint64_t seed)
      : scenario_(scenario),
        policy_(ElasticityPolicy::from_template(scenario.cluster)),
        durations_(seed, "job_durations") {}

  RunResult run();

 private:
  void schedule(Seconds t, EventKind kind, NodeId node = {}, long index = 0, int attempt = 0) {
    queue_.push(QueuedEvent{t, next_seq_++, kind, std::move(node), index, attempt});
  }
  void schedule_dispatch() {
    if (dispatch_at_ && *dispatch_at_ == now_) return;
    dispatch_at_ = now_;
    schedule(now_, EventKind::lrms_dispatch);
  }
  void schedule_phase_deadline() {
    if (auto deadline = next_phase_deadline(record_); deadline && scheduled_deadlines_.insert(*deadline).second) {
      schedule(*deadline, EventKind::phase_done);
    }
  }

  void handle(const QueuedEvent& ev);
  void on_job_arrival(long block);
  void on_dispatch();
  void dispatch_now();
  void on_job_done(const QueuedEvent& ev);
  void on_phase_done();
  void on_report(const NodeId& node_id);
  void on_grace_elapsed(const QueuedEvent& ev);

  void policy_pass();
  void apply(const std::vector<Action>& actions);
  void try_removals();
  bool start_add(const NodeId& node_id, const std::optional<SiteId>& site_hint);

  std::vector<VMInstance> workers() const;
  QueueView queue_view() const;
  bool steady() const;
  void note(const char* key, ojson value) { detail_[key].push_back(std::move(value)); }
  void finalize(MetricsTimeline& timeline) const;

  const Scenario& scenario_;
  ElasticityPolicy policy_;
  RandomStream durations_;
  DeploymentRecord record_;
  std::vector<Job> jobs_;
  LrmsModel lrms_;

  std::priority_queue<QueuedEvent, std::vector<QueuedEvent>, Later> queue_;
  std::uint64_t next_seq_ = 0;
  Seconds now_ = 0.0;
  std::optional<Seconds> dispatch_at_;
  std::set<Seconds> scheduled_deadlines_;
  int future_arrivals_ = 0;
  int future_reports_ = 0;

  std::map<NodeId, long, NodeIdLess> schedule_cycle_;
  std::set<NodeId, NodeIdLess> grace_elapsed_;
  std::set<NodeId, NodeIdLess> reprovision_wanted_;

  ojson detail_;
  std::vector<EventRecord> events_;
  std::optional<Seconds> first_arrival_;
  std::optional<Seconds> last_completion_;
  int jobs_done_ = 0;
};

std::vector<VMInstance> Simulation::workers() const {
  std::vector<VMInstance> out;
  for (const auto* node : record_.workers()) out.push_back(*node);
  return out;
}

QueueView Simulation::queue_view() const {
  QueueView view;
  view.pending = static_cast<int>(lrms_.pending.size());
  view.running = lrms_.running_count();
  for (const auto* node : record_.workers()) {
    if (node->state != NodeState::used) continue;
    auto it = lrms_.running.find(node->node_id);
    const int busy = it == lrms_.running.end() ? 0 : static_cast<int>(it->second.size());
    view.free_slots_on_used += std::max(0, node->slots - busy);
  }
  return view;
}

bool Simulation::steady() const {
  if (!lrms_.pending.empty() || lrms_.running_count() > 0) return false;
  if (future_arrivals_ > 0 || future_reports_ > 0 || !record_.in_flight.empty()) return false;
  int idle = 0;
  for (const auto* node : record_.workers()) {
    if (node->state == NodeState::idle) {
      ++idle;
    } else if (node->state != NodeState::off) {
      return false;
    }
  }
  return idle <= policy_.min_workers;
}

RunResult Simulation::run() {
  try {
    validate_scenario(scenario_);
  } catch (const ValidationError& e) {
    throw Error(ErrorCode::ScenarioInvalid, e.what());
  }
  record_ = submit_deployment(scenario_.cluster, scenario_.sites, scenario_.overlay, 0.0);
  schedule_phase_deadline();

  Seconds arrival = 0.0;
  for (std::size_t i = 0; i < scenario_.workload.blocks.size(); ++i) {
    arrival += scenario_.workload.blocks[i].inter_block_gap;
    schedule(arrival, EventKind::job_arrival, {}, static_cast<long>(i));
    ++future_arrivals_;
  }
  for (const auto& fault : scenario_.workload.faults) {
    schedule(fault.at, EventKind::fault_injection, fault.node_id);
    ++future_reports_;
  }
  schedule(scenario_.cluster.policy_tick, EventKind::policy_tick);

  while (!queue_.empty()) {
    QueuedEvent ev = queue_.top();
    queue_.pop();
    if (ev.time > scenario_.workload.max_sim_time) {
      throw Error(ErrorCode::NonTermination,
                  "simulation did not reach a steady state within " + std::to_string(scenario_.workload.max_sim_time) +
                      " s");
    }
    now_ = ev.time;
    detail_ = ojson::object();
    const std::size_t transitions_before = record_.transitions.size();
    handle(ev);
    schedule_phase_deadline();
    for (std::size_t i = transitions_before; i < record_.transitions.size(); ++i) {
      const auto& tr = record_.transitions[i];
      note("transitions", ojson{{"node", tr.node_id},
                                {"from", to_string(tr.from)},
                                {"to", to_string(tr.to)},
                                {"site", tr.site_id}});
    }
    EventRecord record;
    record.t = ev.time;
    record.seq = ev.seq;
    record.kind = ev.kind;
    if (!ev.node.empty()) record.node = ev.node;
    record.detail = std::move(detail_);
    events_.push_back(std::move(record));
    if (steady()) break;
  }

  RunResult result;
  finalize(result.timeline);
  result.report = summarize(result.timeline, scenario_.sites);
  return result;
}

void Simulation::handle(const QueuedEvent& ev) {
  switch (ev.kind) {
    case EventKind::job_arrival:
      on_job_arrival(ev.index);
      break;
    case EventKind::lrms_dispatch:
      on_dispatch();
      break;
    case EventKind::job_done:
      on_job_done(ev);
      break;
    case EventKind::phase_done:
      on_phase_done();
      break;
    case EventKind::policy_tick:
      policy_pass();
      schedule(now_ + scenario_.cluster.policy_tick, EventKind::policy_tick);
      break;
    case EventKind::fault_injection:
      schedule(now_, EventKind::lrms_report, ev.node);
      break;
    case EventKind::lrms_report:
      --future_reports_;
      on_report(ev.node);
      break;
    case EventKind::poweroff_grace_elapsed:
      on_grace_elapsed(ev);
      break;
  }
}

void Simulation::on_job_arrival(long block_index) {
  --future_arrivals_;
  const auto& block = scenario_.workload.blocks.at(static_cast<std::size_t>(block_index));
  const JobId first = static_cast<JobId>(jobs_.size()) + 1;
  for (int k = 0; k < block.job_count; ++k) {
    Job job;
    job.job_id = static_cast<JobId>(jobs_.size()) + 1;
    job.submit_time = now_;
    job.processing_duration = sample_processing(durations_, block.duration_distribution);
    jobs_.push_back(job);
    lrms_.pending.push_back(job.job_id);
  }
  if (block.job_count > 0 && !first_arrival_) first_arrival_ = now_;
  detail_["block"] = block_index + 1;
  detail_["jobs"] = block.job_count;
  detail_["first_job"] = first;
  schedule_dispatch();
}

void Simulation::on_dispatch() {
  dispatch_at_.reset();
  dispatch_now();
}

void Simulation::dispatch_now() {
  const std::vector<VMInstance> nodes = workers();
  JobOverhead overhead;
  const Seconds transfer = scenario_.workload.transfer_seconds;
  if (transfer > 0) {
    overhead = [this, transfer](const VMInstance& node) {
      const RouteTable routes = compute_routes(record_.topology);
      const auto path = trace_path(routes, record_.topology, node.node_id, front_end_node_id());
      return apply_cipher_profile(record_.topology.cipher, transfer, static_cast<int>(path.size()) - 1);
    };
  }
  const auto dispatches = lrms_step(lrms_, jobs_, nodes, now_, scenario_.workload.setup_duration, overhead);
  for (const auto& d : dispatches) {
    if (record_.nodes.at(d.node).state == NodeState::idle) {
      set_node_state(record_, d.node, NodeState::used, now_);
    }
    const Job& job = jobs_.at(d.job - 1);
    schedule(d.done_at, EventKind::job_done, d.node, d.job, job.attempts);
  }
  detail_["dispatched"] = dispatches.size();
  detail_["pending"] = lrms_.pending.size();
}

void Simulation::on_job_done(const QueuedEvent& ev) {
  Job& job = jobs_.at(static_cast<std::size_t>(ev.index) - 1);
  detail_["job"] = ev.index;
  if (job.state != JobState::running || job.attempts != ev.attempt || job.assigned_node != ev.node) {
    detail_["stale"] = true;
    return;
  }
  job.state = JobState::done;
  ++jobs_done_;
  last_completion_ = now_;
  auto it = lrms_.running.find(ev.node);
  auto& running = it->second;
  running.erase(std::find(running.begin(), running.end(), job.job_id));
  if (running.empty()) lrms_.running.erase(it);
  // The freed slot is refilled before the node is considered idle.
  if (!lrms_.pending.empty()) dispatch_now();
  if (!lrms_.running.count(ev.node) && record_.nodes.at(ev.node).state == NodeState::used) {
    set_node_state(record_, ev.node, NodeState::idle, now_);
  }
}

void Simulation::on_phase_done() {
  const auto events = step_workflow(record_, now_);
  std::vector<Action> follow_up;
  for (const auto& we : events) {
    switch (we.kind) {
      case WorkflowEventKind::phase_done:
        note("workflow", ojson{{"event", "phase_done"}, {"op", we.op_id}, {"phase", to_string(we.phase)}});
        break;
      case WorkflowEventKind::update_done:
        note("workflow", ojson{{"event", "update_done"}, {"op", we.op_id}});
        break;
      case WorkflowEventKind::node_state: {
        note("workflow", ojson{{"event", "node_state"}, {"node", we.node_id}, {"state", to_string(we.state)}});
        const VMInstance& node = record_.nodes.at(we.node_id);
        if (node.role != NodeRole::worker) break;
        if (we.state == NodeState::idle) {
          lrms_.cold_nodes.insert(we.node_id);
        } else if (we.state == NodeState::off) {
          grace_elapsed_.erase(we.node_id);
          auto actions = on_poweroff_complete(node, queue_view(), policy_, now_);
          follow_up.insert(follow_up.end(), actions.begin(), actions.end());
        }
        break;
      }
    }
  }
  apply(follow_up);
  policy_pass();
  schedule_dispatch();
}

void Simulation::on_report(const NodeId& node_id) {
  detail_["reported"] = "off";
  auto it = record_.nodes.find(node_id);
  if (it == record_.nodes.end() || it->second.role != NodeRole::worker) {
    detail_["ignored"] = true;
    return;
  }
  apply(on_lrms_report(it->second, LrmsReport::off, now_, policy_));
  try_removals();
  schedule_dispatch();
}

void Simulation::on_grace_elapsed(const QueuedEvent& ev) {
  const VMInstance& node = record_.nodes.at(ev.node);
  auto cycle = schedule_cycle_.find(ev.node);
  if (node.state != NodeState::poweroff_scheduled || cycle == schedule_cycle_.end() || cycle->second != ev.index) {
    detail_["stale"] = true;
    return;
  }
  grace_elapsed_.insert(ev.node);
  policy_pass();
}

void Simulation::policy_pass() {
  const auto nodes = workers();
  apply(evaluate(queue_view(), nodes, scenario_.sites, policy_, now_));
  try_removals();
}

bool Simulation::start_add(const NodeId& node_id, const std::optional<SiteId>& site_hint) {
  UpdateRequest request{UpdateKind::add_node, node_id, site_hint};
  try {
    auto result = request_update(record_, request, now_);
    if (std::holds_alternative<Busy>(result)) {
      note("actions", ojson{{"action", "power_on"}, {"node", node_id}, {"outcome", "busy"}});
      return false;
    }
    const auto& op = std::get<UpdateOperation>(result);
    note("actions", ojson{{"action", "power_on"}, {"node", node_id}, {"site", op.target_site}, {"op", op.op_id},
                          {"ready_at", op.finishes_at}});
    return true;
  } catch (const Error& e) {
    if (site_hint && e.code() == ErrorCode::QuotaExceeded) {
      return start_add(node_id, std::nullopt);
    }
    if (e.code() != ErrorCode::NoEligibleSite && e.code() != ErrorCode::QuotaExceeded) throw;
    note("actions", ojson{{"action", "power_on"}, {"node", node_id}, {"outcome", "no_site"}});
    return false;
  }
}

void Simulation::apply(const std::vector<Action>& actions) {
  for (const auto& action : actions) {
    switch (action.kind) {
      case ActionKind::power_on: {
        std::optional<NodeId> chosen;
        for (const auto& node_id : reprovision_wanted_) {
          if (record_.nodes.at(node_id).state == NodeState::off) {
            chosen = node_id;
            break;
          }
        }
        std::optional<SiteId> hint;
        if (chosen) {
          hint = record_.nodes.at(*chosen).site_id;
        } else {
          for (const auto* node : record_.workers()) {
            if (node->state == NodeState::off) {
              chosen = node->node_id;
              break;
            }
          }
        }
        if (chosen && start_add(*chosen, hint)) reprovision_wanted_.erase(*chosen);
        break;
      }
      case ActionKind::reprovision: {
        note("actions", ojson{{"action", "reprovision"}, {"node", *action.node}});
        if (!start_add(*action.node, action.site_hint)) reprovision_wanted_.insert(*action.node);
        break;
      }
      case ActionKind::schedule_poweroff: {
        const NodeId& node_id = *action.node;
        note("actions", ojson{{"action", "schedule_poweroff"}, {"node", node_id}, {"grace", action.grace}});
        if (record_.nodes.at(node_id).state != NodeState::idle) break;  // failed nodes are removed directly
        set_node_state(record_, node_id, NodeState::poweroff_scheduled, now_);
        const long cycle = ++schedule_cycle_[node_id];
        schedule(now_ + action.grace, EventKind::poweroff_grace_elapsed, node_id, cycle);
        break;
      }
      case ActionKind::cancel_poweroff: {
        const NodeId& node_id = *action.node;
        note("actions", ojson{{"action", "cancel_poweroff"}, {"node", node_id}});
        grace_elapsed_.erase(node_id);
        ++schedule_cycle_[node_id];
        set_node_state(record_, node_id, NodeState::idle, now_);
        schedule_dispatch();
        break;
      }
      case ActionKind::mark_failed: {
        const NodeId& node_id = *action.node;
        const auto requeued = lrms_fail_node(lrms_, jobs_, node_id);
        note("actions", ojson{{"action", "mark_failed"}, {"node", node_id}, {"requeued", requeued}});
        lrms_.cold_nodes.erase(node_id);
        set_node_state(record_, node_id, NodeState::failed, now_);
        record_.nodes.at(node_id).failed_cycle = true;
        break;
      }
    }
  }
}

void Simulation::try_removals() {
  std::vector<NodeId> candidates;
  std::vector<VMInstance> expired;
  for (const auto* node : record_.workers()) {
    if (node->state == NodeState::failed) {
      candidates.push_back(node->node_id);
    } else if (node->state == NodeState::poweroff_scheduled && grace_elapsed_.count(node->node_id)) {
      expired.push_back(*node);
    }
  }
  for (auto& node_id : select_victims(expired, scenario_.sites, policy_)) candidates.push_back(node_id);

  for (const auto& node_id : candidates) {
    auto result = request_update(record_, UpdateRequest{UpdateKind::remove_node, node_id, std::nullopt}, now_);
    if (std::holds_alternative<Busy>(result)) {
      break;
    }
    grace_elapsed_.erase(node_id);
    const auto& op = std::get<UpdateOperation>(result);
    note("actions", ojson{{"action", "power_off"}, {"node", node_id}, {"op", op.op_id}, {"off_at", op.finishes_at}});
  }
}

void Simulation::finalize(MetricsTimeline& timeline) const {
  timeline.transitions = record_.transitions;
  timeline.events = events_;
  timeline.end_time = now_;
  timeline.first_arrival = first_arrival_;
  timeline.last_completion = last_completion_;
  timeline.jobs_arrived = static_cast<int>(jobs_.size());
  timeline.jobs_done = jobs_done_;
  if (first_arrival_ && last_completion_) timeline.makespan = *last_completion_ - *first_arrival_;
  for (const auto& site : scenario_.sites) timeline.cost_by_site[site.site_id] = 0.0;

  for (const auto& tr : record_.transitions) {
    auto& node = timeline.nodes[tr.node_id];
    node.node_id = tr.node_id;
    node.role = tr.role;
    if (!node.intervals.empty()) node.intervals.back().exit = tr.time;
    node.intervals.push_back(StateInterval{tr.to, tr.time, tr.time, tr.site_id});
  }
  for (auto& [node_id, node] : timeline.nodes) {
    node.intervals.back().exit = now_;
    Seconds cycle = 0.0;
    SiteId cycle_site;
    auto close_cycle = [&] {
      if (cycle <= 0.0) return;
      const CloudSite* s = scenario_.find_site(cycle_site);
      const CostRate& rate = node.role == NodeRole::vrouter ? s->rate_for_vrouter() : s->billing;
      const double cost = accrue_cost(cycle, rate);
      node.cost += cost;
      timeline.cost_by_site[cycle_site] += cost;
      cycle = 0.0;
    };
    for (const auto& interval : node.intervals) {
      const Seconds length = interval.exit - interval.enter;
      if (is_paid_state(interval.state)) {
        if (cycle_site != interval.site_id) close_cycle();
        cycle_site = interval.site_id;
        cycle += length;
        node.paid_seconds += length;
      } else {
        close_cycle();
      }
      if (interval.state == NodeState::used) node.used_seconds += length;
    }
    close_cycle();
    timeline.total_cost += node.cost;
  }
}

}  // namespace

RunResult run_scenario(const Scenario& scenario, std::uint64_t seed) {
  Simulation simulation(scenario, seed);
  return simulation.run();
}

Scenario inject_fault(const Scenario& scenario, const NodeId& node_id, Seconds at) {
  Scenario copy = scenario;
  copy.workload.faults.push_back(FaultSpec{node_id, at});
  return copy;
}

Comparison compare_scenarios(const Scenario& a, const Scenario& b, std::uint64_t seed) {
  auto future_a = std::async(std::launch::async, [&] { return run_scenario(a, seed); });
  auto future_b = std::async(std::launch::async, [&] { return run_scenario(b, seed); });
  Comparison out;
  out.a = future_a.get().report;
  out.b = future_b.get().report;
  out.makespan_delta = out.b.makespan_s - out.a.makespan_s;
  out.cost_delta = out.b.total_cost - out.a.total_cost;
  if (out.a.utilization && out.b.utilization) out.utilization_delta = *out.b.utilization - *out.a.utilization;
  return out;
}

PlannedOverlay plan_scenario_topology(const Scenario& scenario) {
  try {
    validate_scenario(scenario);
  } catch (const ValidationError& e) {
    throw Error(ErrorCode::ScenarioInvalid, e.what());
  }
  const auto& cluster = scenario.cluster;
  Placement placement;
  UsageMap usage;
  for (const auto& site : scenario.sites) usage[site.site_id];
  usage[cluster.front_end_site] = SiteUsage{1, true};
  placement[cluster.front_end_site].push_back(PlacedNode{front_end_node_id(), NodeRole::front_end});

  int next = 1;
  auto place_worker = [&](const SiteId& site_id) {
    placement[site_id].push_back(PlacedNode{worker_node_id(next++), NodeRole::worker});
    auto& u = usage[site_id];
    const CloudSite* site = scenario.find_site(site_id);
    if (!u.has_gateway && site->supports_private_networks) {
      u.instances += 1;
      u.has_gateway = true;
    }
    u.instances += 1;
  };
  for (const auto& entry : cluster.initial_workers) {
    for (int k = 0; k < entry.count; ++k) place_worker(entry.site_id);
  }
  while (next <= cluster.max_workers) {
    try {
      place_worker(rank_sites(cluster.site_preferences, scenario.sites, 1, usage).front().site_id);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoEligibleSite) throw;
      break;
    }
  }
  PlannedOverlay out;
  out.plan = build_overlay(scenario.sites, placement, cluster.front_end_site, scenario.overlay);
  out.routes = compute_routes(out.plan.topology);
  return out;
}

}  // namespace evc
