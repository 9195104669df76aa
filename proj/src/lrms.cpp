#include <algorithm>
#include <numeric>

#include "evc/sim.hpp"

namespace evc {

namespace {

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t hash = 1469598103934665603ull;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 1099511628211ull;
  }
  return hash;
}

}  // namespace

RandomStream::RandomStream(std::uint64_t seed, std::string_view name) {
  const std::uint64_t tag = fnv1a(name);
  std::seed_seq sequence{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                         static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(tag >> 32)};
  engine_.seed(sequence);
}

double RandomStream::uniform(double lo, double hi) {
  // 53 random mantissa bits; the std distributions are implementation-defined.
  const double unit = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  return lo == hi ? hi : lo + (hi - lo) * unit;
}

Seconds sample_processing(RandomStream& stream, const DurationRange& range) {
  return stream.uniform(range.min, range.max);
}

int LrmsModel::running_count() const {
  return std::accumulate(running.begin(), running.end(), 0,
                         [](int total, const auto& entry) { return total + static_cast<int>(entry.second.size()); });
}

std::vector<Dispatch> lrms_step(LrmsModel& model, std::vector<Job>& jobs, std::span<const VMInstance> nodes,
                                Seconds now, Seconds setup_duration, const JobOverhead& overhead) {
  std::vector<const VMInstance*> candidates;
  for (const auto& node : nodes) {
    if ((node.state == NodeState::idle || node.state == NodeState::used) && node.slots > 0) {
      candidates.push_back(&node);
    }
  }
  std::sort(candidates.begin(), candidates.end(),
            [](const VMInstance* a, const VMInstance* b) { return node_id_less(a->node_id, b->node_id); });

  std::vector<Dispatch> out;
  std::map<NodeId, Seconds> setup_done;
  for (const VMInstance* node : candidates) {
    auto& running = model.running[node->node_id];
    while (!model.pending.empty() && static_cast<int>(running.size()) < node->slots) {
      Job& job = jobs.at(model.pending.front() - 1);
      model.pending.pop_front();
      const bool cold = model.cold_nodes.erase(node->node_id) > 0;
      if (cold) {
        setup_done[node->node_id] = now + setup_duration;
      }
      Seconds start = now;
      if (auto it = setup_done.find(node->node_id); it != setup_done.end()) {
        start = std::max(start, it->second);
      }
      Seconds duration = job.processing_duration;
      if (overhead) {
        duration += overhead(*node);
      }
      job.state = JobState::running;
      job.assigned_node = node->node_id;
      job.attempts += 1;
      running.push_back(job.job_id);
      out.push_back(Dispatch{job.job_id, node->node_id, start + duration, cold});
    }
    if (running.empty()) {
      model.running.erase(node->node_id);
    }
  }
  return out;
}

std::vector<JobId> lrms_fail_node(LrmsModel& model, std::vector<Job>& jobs, const NodeId& node_id) {
  auto it = model.running.find(node_id);
  if (it == model.running.end()) {
    return {};
  }
  std::vector<JobId> lost = it->second;
  model.running.erase(it);
  std::sort(lost.begin(), lost.end());
  for (auto rit = lost.rbegin(); rit != lost.rend(); ++rit) {
    Job& job = jobs.at(*rit - 1);
    job.state = JobState::pending;
    job.assigned_node.reset();
    model.pending.push_front(*rit);
  }
  return lost;
}

}  // namespace evc
