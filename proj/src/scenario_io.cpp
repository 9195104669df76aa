#include <fstream>
#include <set>

#include "evc/domain.hpp"

namespace evc {

namespace {

using nlohmann::json;

// Reads fields of one JSON object and rejects keys nobody asked for.
class ObjectReader {
 public:
  ObjectReader(const json& object, std::string path) : object_(object), path_(std::move(path)) {
    if (!object_.is_object()) {
      throw Error(ErrorCode::ParseError, path_ + " must be a JSON object");
    }
  }

  ObjectReader(const ObjectReader&) = delete;
  ObjectReader& operator=(const ObjectReader&) = delete;

  ~ObjectReader() noexcept(false) {
    if (std::uncaught_exceptions() > 0) {
      return;
    }
    for (const auto& [key, value] : object_.items()) {
      if (consumed_.count(key) == 0) {
        throw Error(ErrorCode::ParseError, "unknown key '" + key + "' in " + path_);
      }
    }
  }

  const json& required(const std::string& key) {
    consumed_.insert(key);
    auto it = object_.find(key);
    if (it == object_.end()) {
      throw Error(ErrorCode::ParseError, "missing key '" + key + "' in " + path_);
    }
    return *it;
  }

  const json* optional(const std::string& key) {
    consumed_.insert(key);
    auto it = object_.find(key);
    return it == object_.end() ? nullptr : &*it;
  }

  template <typename T>
  T get(const std::string& key) {
    return convert<T>(required(key), key);
  }

  template <typename T>
  T get_or(const std::string& key, T fallback) {
    const json* value = optional(key);
    return value == nullptr ? fallback : convert<T>(*value, key);
  }

  std::string child(const std::string& key) const { return path_ + "." + key; }

  template <typename T>
  T convert(const json& value, const std::string& key) const {
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!value.is_boolean()) throw Error(ErrorCode::ParseError, "");
      } else if constexpr (std::is_integral_v<T>) {
        if (!value.is_number_integer()) throw Error(ErrorCode::ParseError, "");
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!value.is_number()) throw Error(ErrorCode::ParseError, "");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!value.is_string()) throw Error(ErrorCode::ParseError, "");
      }
      return value.get<T>();
    } catch (const std::exception&) {
      throw Error(ErrorCode::ParseError, "key '" + key + "' in " + path_ + " has the wrong type");
    }
  }

 private:
  const json& object_;
  std::string path_;
  std::set<std::string> consumed_;
};

const json& require_array(const json& value, const std::string& path) {
  if (!value.is_array()) {
    throw Error(ErrorCode::ParseError, path + " must be a JSON array");
  }
  return value;
}

CostRate parse_rate(const json& value, const std::string& path) {
  ObjectReader r(value, path);
  CostRate rate;
  rate.per_hour = r.get<double>("per_hour");
  rate.billing_granularity = r.get_or<double>("billing_granularity", 1.0);
  return rate;
}

SiteKind parse_kind(const std::string& text, const std::string& path) {
  if (text == "on_premises") return SiteKind::on_premises;
  if (text == "public") return SiteKind::public_cloud;
  throw Error(ErrorCode::ParseError, path + ".kind must be 'on_premises' or 'public', got '" + text + "'");
}

CipherMode parse_cipher_mode(const std::string& text, const std::string& path) {
  for (auto mode : {CipherMode::none, CipherMode::light, CipherMode::full}) {
    if (to_string(mode) == text) return mode;
  }
  throw Error(ErrorCode::ParseError, path + ".mode must be none, light or full");
}

CloudSite parse_site(const json& value, const std::string& path) {
  ObjectReader r(value, path);
  CloudSite site;
  site.site_id = r.get<std::string>("site_id");
  site.kind = parse_kind(r.get<std::string>("kind"), path);
  site.max_instances = r.get<int>("max_instances");
  site.max_public_ips = r.get<int>("max_public_ips");
  site.supports_private_networks = r.get<bool>("supports_private_networks");
  {
    ObjectReader p(r.required("provisioning_phase_durations"), r.child("provisioning_phase_durations"));
    auto& d = site.provisioning_phase_durations;
    d.network_create = p.get<double>("network_create");
    d.vm_create = p.get<double>("vm_create");
    d.tunnel_setup = p.get<double>("tunnel_setup");
    d.contextualize = p.get<double>("contextualize");
  }
  site.deprovision_duration = r.get<double>("deprovision_duration");
  site.billing = parse_rate(r.required("billing"), r.child("billing"));
  if (const json* vr = r.optional("vrouter_billing")) {
    site.vrouter_billing = parse_rate(*vr, r.child("vrouter_billing"));
  }
  site.availability = r.get_or<double>("availability", 1.0);
  return site;
}

ClusterTemplate parse_template(const json& value, const std::string& path) {
  ObjectReader r(value, path);
  ClusterTemplate t;
  t.front_end_site = r.get<std::string>("front_end_site");
  const auto& initial = require_array(r.required("initial_workers"), r.child("initial_workers"));
  for (std::size_t i = 0; i < initial.size(); ++i) {
    ObjectReader e(initial[i], r.child("initial_workers") + "[" + std::to_string(i) + "]");
    t.initial_workers.push_back(SiteCount{e.get<std::string>("site_id"), e.get<int>("count")});
  }
  t.max_workers = r.get<int>("max_workers");
  t.worker_slots = r.get_or<int>("worker_slots", 1);
  t.idle_timeout = r.get_or<double>("idle_timeout", 300.0);
  t.poweroff_grace = r.get_or<double>("poweroff_grace", 120.0);
  if (const json* prefs = r.optional("site_preferences")) {
    require_array(*prefs, r.child("site_preferences"));
    for (std::size_t i = 0; i < prefs->size(); ++i) {
      ObjectReader e((*prefs)[i], r.child("site_preferences") + "[" + std::to_string(i) + "]");
      t.site_preferences.push_back(SLA{e.get<std::string>("site_id"), e.get<int>("priority")});
    }
  }
  if (const json* min = r.optional("min_workers")) {
    t.min_workers = r.convert<int>(*min, "min_workers");
  }
  t.parallel_provisioning = r.get_or<bool>("parallel_provisioning", false);
  t.reprovision_failed = r.get_or<bool>("reprovision_failed", true);
  t.policy_tick = r.get_or<double>("policy_tick", 30.0);
  t.failure_detection = r.get_or<double>("failure_detection", 180.0);
  return t;
}

Workload parse_workload(const json& value, const std::string& path) {
  ObjectReader r(value, path);
  Workload w;
  const auto& blocks = require_array(r.required("blocks"), r.child("blocks"));
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const std::string block_path = r.child("blocks") + "[" + std::to_string(i) + "]";
    ObjectReader b(blocks[i], block_path);
    WorkloadBlock block;
    block.job_count = b.get<int>("job_count");
    block.inter_block_gap = b.get<double>("inter_block_gap");
    if (const json* dist = b.optional("duration_distribution")) {
      ObjectReader d(*dist, block_path + ".duration_distribution");
      block.duration_distribution.min = d.get<double>("min");
      block.duration_distribution.max = d.get<double>("max");
    }
    w.blocks.push_back(block);
  }
  w.setup_duration = r.get_or<double>("setup_duration", 270.0);
  w.transfer_seconds = r.get_or<double>("transfer_seconds", 0.0);
  if (const json* faults = r.optional("faults")) {
    require_array(*faults, r.child("faults"));
    for (std::size_t i = 0; i < faults->size(); ++i) {
      ObjectReader f((*faults)[i], r.child("faults") + "[" + std::to_string(i) + "]");
      w.faults.push_back(FaultSpec{f.get<std::string>("node_id"), f.get<double>("at")});
    }
  }
  w.max_sim_time = r.get_or<double>("max_sim_time", w.max_sim_time);
  return w;
}

OverlayConfig parse_overlay(const json& value, const std::string& path) {
  ObjectReader r(value, path);
  OverlayConfig o;
  if (const json* base = r.optional("base_prefix")) {
    o.base_prefix = Ipv4Prefix::parse(r.convert<std::string>(*base, "base_prefix"));
  }
  if (const json* backups = r.optional("backup_cp_sites")) {
    require_array(*backups, r.child("backup_cp_sites"));
    for (const auto& site : *backups) {
      o.backup_cp_sites.push_back(r.convert<std::string>(site, "backup_cp_sites"));
    }
  }
  if (const json* cipher = r.optional("cipher")) {
    ObjectReader c(*cipher, r.child("cipher"));
    o.cipher.mode = parse_cipher_mode(c.get<std::string>("mode"), r.child("cipher"));
    o.cipher.throughput_factor = c.get_or<double>("throughput_factor", 1.0);
    o.cipher.latency_penalty = c.get_or<double>("latency_penalty", 0.0);
  }
  if (const json* manual = r.optional("manual_subnets")) {
    if (!manual->is_object()) {
      throw Error(ErrorCode::ParseError, r.child("manual_subnets") + " must be an object");
    }
    for (const auto& [site, prefix] : manual->items()) {
      o.manual_subnets.emplace(site, Ipv4Prefix::parse(r.convert<std::string>(prefix, "manual_subnets." + site)));
    }
  }
  return o;
}

nlohmann::ordered_json rate_json(const CostRate& rate) {
  return {{"per_hour", rate.per_hour}, {"billing_granularity", rate.billing_granularity}};
}

}  // namespace

Scenario parse_scenario(const nlohmann::json& document) {
  ObjectReader r(document, "scenario");
  Scenario s;
  const auto& sites = require_array(r.required("sites"), "scenario.sites");
  for (std::size_t i = 0; i < sites.size(); ++i) {
    s.sites.push_back(parse_site(sites[i], "scenario.sites[" + std::to_string(i) + "]"));
  }
  s.cluster = parse_template(r.required("template"), "scenario.template");
  s.workload = parse_workload(r.required("workload"), "scenario.workload");
  s.overlay = parse_overlay(r.required("overlay"), "scenario.overlay");
  s.seed = r.get_or<std::uint64_t>("seed", 0);
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::filesystem::filesystem_error("cannot open scenario", path,
                                            std::make_error_code(std::errc::no_such_file_or_directory));
  }
  nlohmann::json document;
  try {
    in >> document;
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
  return parse_scenario(document);
}

nlohmann::ordered_json to_json(const Scenario& scenario) {
  nlohmann::ordered_json doc;
  auto& sites = doc["sites"] = nlohmann::ordered_json::array();
  for (const auto& site : scenario.sites) {
    nlohmann::ordered_json j;
    j["site_id"] = site.site_id;
    j["kind"] = to_string(site.kind);
    j["max_instances"] = site.max_instances;
    j["max_public_ips"] = site.max_public_ips;
    j["supports_private_networks"] = site.supports_private_networks;
    const auto& p = site.provisioning_phase_durations;
    j["provisioning_phase_durations"] = {{"network_create", p.network_create},
                                         {"vm_create", p.vm_create},
                                         {"tunnel_setup", p.tunnel_setup},
                                         {"contextualize", p.contextualize}};
    j["deprovision_duration"] = site.deprovision_duration;
    j["billing"] = rate_json(site.billing);
    if (site.vrouter_billing) {
      j["vrouter_billing"] = rate_json(*site.vrouter_billing);
    }
    j["availability"] = site.availability;
    sites.push_back(std::move(j));
  }

  const auto& t = scenario.cluster;
  auto& tj = doc["template"];
  tj["front_end_site"] = t.front_end_site;
  tj["initial_workers"] = nlohmann::ordered_json::array();
  for (const auto& entry : t.initial_workers) {
    tj["initial_workers"].push_back({{"site_id", entry.site_id}, {"count", entry.count}});
  }
  tj["max_workers"] = t.max_workers;
  tj["worker_slots"] = t.worker_slots;
  tj["idle_timeout"] = t.idle_timeout;
  tj["poweroff_grace"] = t.poweroff_grace;
  tj["site_preferences"] = nlohmann::ordered_json::array();
  for (const auto& sla : t.site_preferences) {
    tj["site_preferences"].push_back({{"site_id", sla.site_id}, {"priority", sla.priority}});
  }
  if (t.min_workers) {
    tj["min_workers"] = *t.min_workers;
  }
  tj["parallel_provisioning"] = t.parallel_provisioning;
  tj["reprovision_failed"] = t.reprovision_failed;
  tj["policy_tick"] = t.policy_tick;
  tj["failure_detection"] = t.failure_detection;

  const auto& w = scenario.workload;
  auto& wj = doc["workload"];
  wj["blocks"] = nlohmann::ordered_json::array();
  for (const auto& block : w.blocks) {
    wj["blocks"].push_back({{"job_count", block.job_count},
                            {"inter_block_gap", block.inter_block_gap},
                            {"duration_distribution",
                             {{"min", block.duration_distribution.min}, {"max", block.duration_distribution.max}}}});
  }
  wj["setup_duration"] = w.setup_duration;
  wj["transfer_seconds"] = w.transfer_seconds;
  wj["faults"] = nlohmann::ordered_json::array();
  for (const auto& fault : w.faults) {
    wj["faults"].push_back({{"node_id", fault.node_id}, {"at", fault.at}});
  }
  wj["max_sim_time"] = w.max_sim_time;

  const auto& o = scenario.overlay;
  auto& oj = doc["overlay"];
  oj["base_prefix"] = o.base_prefix.to_string();
  oj["backup_cp_sites"] = o.backup_cp_sites;
  oj["cipher"] = {{"mode", to_string(o.cipher.mode)},
                  {"throughput_factor", o.cipher.throughput_factor},
                  {"latency_penalty", o.cipher.latency_penalty}};
  oj["manual_subnets"] = nlohmann::ordered_json::object();
  for (const auto& [site, prefix] : o.manual_subnets) {
    oj["manual_subnets"][site] = prefix.to_string();
  }
  doc["seed"] = scenario.seed;
  return doc;
}

}  // namespace evc
