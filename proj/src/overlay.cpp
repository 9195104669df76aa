#include "evc/overlay.hpp"

#include <algorithm>

namespace evc {

const NodeId& OverlayTopology::hub() const {
  for (const auto& cp : central_points) {
    if (failed_central_points.count(cp) == 0) {
      return cp;
    }
  }
  throw Error(ErrorCode::NoBackupCentralPoint, "every central point has failed");
}

const OverlayMember& OverlayTopology::member(const NodeId& node_id) const {
  auto it = members.find(node_id);
  if (it == members.end()) {
    throw Error(ErrorCode::UnknownNode, "node '" + node_id + "' is not part of the overlay");
  }
  return it->second;
}

bool OverlayTopology::is_central_point(const NodeId& node_id) const {
  return std::find(central_points.begin(), central_points.end(), node_id) != central_points.end();
}

int OverlayTopology::public_ip_count() const {
  return static_cast<int>(std::count_if(members.begin(), members.end(),
                                        [](const auto& entry) { return entry.second.has_public_ip; }));
}

namespace {

const CloudSite& site_or_throw(std::span<const CloudSite> sites, const SiteId& site_id) {
  auto it = std::find_if(sites.begin(), sites.end(), [&](const CloudSite& site) { return site.site_id == site_id; });
  if (it == sites.end()) {
    throw Error(ErrorCode::UnknownSite, "site '" + site_id + "' is not declared");
  }
  return *it;
}

bool contains_node(const std::vector<PlacedNode>& nodes, const NodeId& node_id) {
  return std::any_of(nodes.begin(), nodes.end(), [&](const PlacedNode& n) { return n.node_id == node_id; });
}

// The node serving as gateway of a site's local subnet, if any.
std::optional<NodeId> gateway_node(const OverlayTopology& topology, const SiteId& site_id) {
  auto it = topology.local_subnets.find(site_id);
  if (it == topology.local_subnets.end()) {
    return std::nullopt;
  }
  for (const auto& [node_id, member] : topology.members) {
    if (member.address && *member.address == it->second.gateway_address) {
      return node_id;
    }
  }
  return std::nullopt;
}

const Tunnel* active_tunnel_from(const OverlayTopology& topology, const NodeId& client) {
  for (const auto& tunnel : topology.tunnels) {
    if (tunnel.client_node == client && tunnel.active) {
      return &tunnel;
    }
  }
  return nullptr;
}

}  // namespace

TopologyPlan plan_topology(std::span<const CloudSite> sites, const Placement& placement, const SiteId& front_end_site,
                           std::span<const SiteId> backup_cp_sites, const CipherProfile& cipher) {
  if (placement.empty()) {
    throw Error(ErrorCode::EmptyPlacement, "placement has no nodes");
  }
  const CloudSite& fe_site = site_or_throw(sites, front_end_site);

  std::optional<NodeId> front_end;
  for (const auto& [site_id, nodes] : placement) {
    site_or_throw(sites, site_id);
    for (const auto& node : nodes) {
      if (node.role == NodeRole::front_end) {
        if (site_id != front_end_site) {
          throw Error(ErrorCode::InvalidValue, "front-end '" + node.node_id + "' is not at the front-end site");
        }
        front_end = node.node_id;
      }
    }
  }
  if (!front_end) {
    throw Error(ErrorCode::EmptyPlacement, "placement does not include the front-end node");
  }

  TopologyPlan plan;
  plan.placement = placement;
  auto& topo = plan.topology;
  topo.cipher = cipher;
  topo.central_points.push_back(*front_end);

  std::map<SiteId, int> public_ips_used{{front_end_site, 1}};
  std::map<SiteId, NodeId> backup_at_site;
  for (const auto& site_id : backup_cp_sites) {
    const CloudSite& site = site_or_throw(sites, site_id);
    NodeId cp = backup_cp_node_id(site_id);
    if (topo.is_central_point(cp)) {
      continue;
    }
    if (++public_ips_used[site_id] > site.max_public_ips) {
      throw Error(ErrorCode::NoPublicIpAvailable, "no public IP left at '" + site_id + "' for central point " + cp);
    }
    auto& nodes = plan.placement[site_id];
    if (!contains_node(nodes, cp)) {
      nodes.push_back(PlacedNode{cp, NodeRole::central_point});
    }
    topo.central_points.push_back(cp);
    backup_at_site[site_id] = cp;
  }
  if (fe_site.max_public_ips < public_ips_used[front_end_site]) {
    throw Error(ErrorCode::NoPublicIpAvailable, "front-end site '" + front_end_site + "' has no public IP available");
  }

  // Gateways for sites with private networks; stand-alone clients elsewhere.
  for (auto& [site_id, nodes] : plan.placement) {
    const CloudSite& site = site_or_throw(sites, site_id);
    const bool any_worker = std::any_of(nodes.begin(), nodes.end(), [](const PlacedNode& n) {
      return n.role == NodeRole::worker || n.role == NodeRole::stand_alone_client;
    });
    if (!site.supports_private_networks) {
      for (auto& node : nodes) {
        if (node.role == NodeRole::worker || node.role == NodeRole::stand_alone_client) {
          node.role = NodeRole::stand_alone_client;
          topo.stand_alone_clients.insert(node.node_id);
        }
      }
      continue;
    }
    if (site_id == front_end_site || backup_at_site.count(site_id) != 0) {
      continue;
    }
    auto existing = std::find_if(nodes.begin(), nodes.end(), [](const PlacedNode& n) { return n.role == NodeRole::vrouter; });
    if (existing != nodes.end()) {
      topo.vrouters[site_id] = existing->node_id;
    } else if (any_worker) {
      NodeId vr = vrouter_node_id(site_id);
      nodes.push_back(PlacedNode{vr, NodeRole::vrouter});
      topo.vrouters[site_id] = vr;
    }
  }

  // Sites owning a local subnet, front-end site first.
  topo.site_order.push_back(front_end_site);
  for (const auto& [site_id, nodes] : plan.placement) {
    if (site_id == front_end_site) continue;
    const CloudSite& site = site_or_throw(sites, site_id);
    if (site.supports_private_networks && (topo.vrouters.count(site_id) != 0 || backup_at_site.count(site_id) != 0)) {
      topo.site_order.push_back(site_id);
    }
  }

  for (const auto& [site_id, nodes] : plan.placement) {
    for (const auto& node : nodes) {
      OverlayMember member;
      member.node_id = node.node_id;
      member.site_id = site_id;
      member.role = node.role;
      member.has_public_ip = node.role == NodeRole::front_end || topo.is_central_point(node.node_id);
      if (!topo.members.emplace(node.node_id, member).second) {
        throw Error(ErrorCode::InvalidValue, "node '" + node.node_id + "' placed twice");
      }
    }
  }

  // One tunnel from every client to every CP it may fail over to.
  auto add_tunnels = [&](const NodeId& client, std::size_t cp_limit) {
    for (std::size_t i = 0; i < cp_limit; ++i) {
      topo.tunnels.push_back(Tunnel{client, topo.central_points[i], std::nullopt, std::nullopt, false, std::nullopt});
    }
  };
  for (std::size_t i = 1; i < topo.central_points.size(); ++i) {
    add_tunnels(topo.central_points[i], i);
  }
  for (const auto& site_id : topo.site_order) {
    auto it = topo.vrouters.find(site_id);
    if (it != topo.vrouters.end()) {
      add_tunnels(it->second, topo.central_points.size());
    }
  }
  for (const auto& client : topo.stand_alone_clients) {
    add_tunnels(client, topo.central_points.size());
  }
  return plan;
}

OverlayTopology assign_addresses(const OverlayTopology& topology, const Ipv4Prefix& base_prefix,
                                 const std::map<SiteId, Ipv4Prefix>& manual_subnets) {
  OverlayTopology topo = topology;
  const int sub_length = base_prefix.length() + 8;
  if (sub_length > 30) {
    throw Error(ErrorCode::PrefixExhausted, "base prefix " + base_prefix.to_string() + " is too small to subdivide");
  }
  const std::uint64_t blocks = base_prefix.subblock_count(sub_length);
  if (topo.site_order.size() + 3 > blocks) {
    throw Error(ErrorCode::PrefixExhausted, "base prefix " + base_prefix.to_string() + " cannot hold " +
                                                std::to_string(topo.site_order.size()) + " site subnets");
  }
  topo.overlay_prefix = base_prefix;
  topo.tunnel_pool = base_prefix.subblock(sub_length, blocks - 2);
  topo.stand_alone_pool = base_prefix.subblock(sub_length, blocks - 3);
  topo.local_subnets.clear();

  std::vector<Ipv4Prefix> taken{*topo.tunnel_pool, *topo.stand_alone_pool};
  for (const auto& site_id : topo.site_order) {
    auto manual = manual_subnets.find(site_id);
    if (manual == manual_subnets.end()) continue;
    const auto& prefix = manual->second;
    if (!base_prefix.contains(prefix) || prefix.length() > 30) {
      throw Error(ErrorCode::InvalidValue, "manual subnet " + prefix.to_string() + " unusable inside " +
                                               base_prefix.to_string());
    }
    for (const auto& other : taken) {
      if (prefix.overlaps(other)) {
        throw Error(ErrorCode::SubnetOverlap, "subnet overlap: " + prefix.to_string() + " and " + other.to_string());
      }
    }
    taken.push_back(prefix);
  }

  std::uint64_t next_index = 0;
  for (const auto& site_id : topo.site_order) {
    Ipv4Prefix prefix;
    auto manual = manual_subnets.find(site_id);
    if (manual != manual_subnets.end()) {
      prefix = manual->second;
    } else {
      for (;; ++next_index) {
        if (next_index >= blocks - 3) {
          throw Error(ErrorCode::PrefixExhausted, "no free sub-block left for site '" + site_id + "'");
        }
        auto candidate = base_prefix.subblock(sub_length, next_index);
        if (std::none_of(taken.begin(), taken.end(), [&](const Ipv4Prefix& p) { return p.overlaps(candidate); })) {
          prefix = candidate;
          ++next_index;
          break;
        }
      }
    }
    SubnetAssignment subnet;
    subnet.site_id = site_id;
    subnet.prefix = prefix;
    subnet.gateway_address = prefix.network().offset(1);
    subnet.dhcp_range = AddressRange{prefix.network().offset(2), Ipv4Address{prefix.broadcast().value() - 1}};
    topo.local_subnets.emplace(site_id, subnet);
  }

  for (auto& [node_id, member] : topo.members) {
    member.address.reset();
  }

  // Gateways first, then DHCP leases in natural node order.
  std::map<SiteId, std::uint32_t> next_lease;
  for (const auto& site_id : topo.site_order) {
    const auto& subnet = topo.local_subnets.at(site_id);
    NodeId gateway;
    if (auto vr = topo.vrouters.find(site_id); vr != topo.vrouters.end()) {
      gateway = vr->second;
    } else {
      for (const auto& cp : topo.central_points) {
        if (topo.members.at(cp).site_id == site_id) {
          gateway = cp;
          break;
        }
      }
    }
    if (!gateway.empty()) {
      topo.members.at(gateway).address = subnet.gateway_address;
    }
    next_lease[site_id] = subnet.dhcp_range.first.value();
  }
  std::uint32_t next_pool = topo.stand_alone_pool->network().value() + 1;
  const std::uint32_t pool_last = topo.stand_alone_pool->broadcast().value() - 1;
  for (auto& [node_id, member] : topo.members) {
    if (member.address) continue;
    auto subnet = topo.local_subnets.find(member.site_id);
    const bool on_subnet = subnet != topo.local_subnets.end() && topo.stand_alone_clients.count(node_id) == 0;
    if (on_subnet) {
      auto& lease = next_lease[member.site_id];
      if (lease > subnet->second.dhcp_range.last.value()) {
        throw Error(ErrorCode::PrefixExhausted, "DHCP range of '" + member.site_id + "' exhausted");
      }
      member.address = Ipv4Address{lease++};
    } else {
      if (next_pool > pool_last) {
        throw Error(ErrorCode::PrefixExhausted, "stand-alone address pool exhausted");
      }
      member.address = Ipv4Address{next_pool++};
    }
  }

  const std::uint64_t tunnel_capacity = topo.tunnel_pool->size() / 4;
  if (topo.tunnels.size() > tunnel_capacity) {
    throw Error(ErrorCode::PrefixExhausted, "tunnel endpoint pool exhausted");
  }
  for (std::size_t k = 0; k < topo.tunnels.size(); ++k) {
    auto base = topo.tunnel_pool->network().value() + static_cast<std::uint32_t>(4 * k);
    topo.tunnels[k].server_tunnel_address = Ipv4Address{base + 1};
    topo.tunnels[k].client_tunnel_address = Ipv4Address{base + 2};
  }
  return topo;
}

RouteTable compute_routes(const OverlayTopology& topology) {
  if (!topology.overlay_prefix) {
    throw Error(ErrorCode::UnassignedAddresses, "topology has no address plan");
  }
  for (const auto& [node_id, member] : topology.members) {
    if (!member.address) {
      throw Error(ErrorCode::UnassignedAddresses, "node '" + node_id + "' has no overlay address");
    }
  }
  const NodeId& hub = topology.hub();

  std::map<NodeId, SiteId> gateway_of;  // gateway node -> site it serves
  for (const auto& [site_id, subnet] : topology.local_subnets) {
    if (auto gw = gateway_node(topology, site_id)) {
      gateway_of[*gw] = site_id;
    }
  }

  RouteTable routes;
  for (const auto& [node_id, member] : topology.members) {
    if (topology.failed_central_points.count(node_id) != 0) {
      continue;
    }
    auto& table = routes[node_id];
    auto add = [&](std::optional<Ipv4Prefix> destination, NextHop hop) {
      table.push_back(RouteEntry{node_id, destination, std::move(hop)});
    };
    const bool stand_alone = topology.stand_alone_clients.count(node_id) != 0;
    auto own_subnet = topology.local_subnets.find(member.site_id);
    const bool on_subnet = own_subnet != topology.local_subnets.end() && !stand_alone;
    if (on_subnet) {
      add(own_subnet->second.prefix, ConnectedRoute{});
    }

    if (node_id == hub) {
      for (const auto& tunnel : topology.tunnels) {
        if (tunnel.server_node != hub || !tunnel.active) continue;
        const NodeId& client = tunnel.client_node;
        TunnelHop hop{client, hub};
        if (auto served = gateway_of.find(client); served != gateway_of.end()) {
          add(topology.local_subnets.at(served->second).prefix, hop);
        } else {
          add(Ipv4Prefix{*topology.members.at(client).address, 32}, hop);
        }
      }
    } else if (topology.is_central_point(node_id) || member.role == NodeRole::vrouter) {
      if (const Tunnel* tunnel = active_tunnel_from(topology, node_id)) {
        add(std::nullopt, TunnelHop{tunnel->client_node, tunnel->server_node});
      }
    } else if (stand_alone) {
      if (const Tunnel* tunnel = active_tunnel_from(topology, node_id)) {
        add(*topology.overlay_prefix, TunnelHop{tunnel->client_node, tunnel->server_node});
      }
    } else if (on_subnet) {
      add(std::nullopt, GatewayHop{own_subnet->second.gateway_address});
    }
  }
  return routes;
}

const RouteEntry* lookup_route(const std::vector<RouteEntry>& table, Ipv4Address destination) {
  const RouteEntry* best = nullptr;
  int best_length = -1;
  for (const auto& entry : table) {
    const int length = entry.destination ? entry.destination->length() : 0;
    const bool matches = !entry.destination || entry.destination->contains(destination);
    if (matches && length > best_length) {
      best = &entry;
      best_length = length;
    }
  }
  return best;
}

std::vector<NodeId> trace_path(const RouteTable& routes, const OverlayTopology& topology, const NodeId& src,
                               const NodeId& dst) {
  constexpr std::size_t max_path_nodes = 5;
  const auto& dst_member = topology.member(dst);
  topology.member(src);
  if (src == dst) {
    return {src};
  }
  if (!dst_member.address) {
    throw Error(ErrorCode::UnassignedAddresses, "node '" + dst + "' has no overlay address");
  }
  std::map<Ipv4Address, NodeId> by_address;
  for (const auto& [node_id, member] : topology.members) {
    if (member.address) by_address[*member.address] = node_id;
  }

  std::vector<NodeId> path{src};
  NodeId current = src;
  while (current != dst) {
    auto table = routes.find(current);
    if (table == routes.end()) {
      throw Error(ErrorCode::Unreachable, "no routes at '" + current + "'");
    }
    const RouteEntry* route = lookup_route(table->second, *dst_member.address);
    if (route == nullptr) {
      throw Error(ErrorCode::Unreachable, "no route from '" + current + "' toward '" + dst + "'");
    }
    NodeId next;
    if (std::holds_alternative<ConnectedRoute>(route->next_hop)) {
      next = dst;
    } else if (const auto* gw = std::get_if<GatewayHop>(&route->next_hop)) {
      auto owner = by_address.find(gw->address);
      if (owner == by_address.end()) {
        throw Error(ErrorCode::Unreachable, "gateway " + gw->address.to_string() + " has no owner");
      }
      next = owner->second;
    } else {
      const auto& hop = std::get<TunnelHop>(route->next_hop);
      auto tunnel = std::find_if(topology.tunnels.begin(), topology.tunnels.end(), [&](const Tunnel& t) {
        return t.client_node == hop.client_node && t.server_node == hop.server_node;
      });
      if (tunnel == topology.tunnels.end() || !tunnel->active) {
        throw Error(ErrorCode::Unreachable, "tunnel " + hop.client_node + "->" + hop.server_node + " is down");
      }
      next = current == hop.client_node ? hop.server_node : hop.client_node;
    }
    if (topology.failed_central_points.count(next) != 0) {
      throw Error(ErrorCode::Unreachable, "path from '" + src + "' crosses failed central point '" + next + "'");
    }
    path.push_back(next);
    if (path.size() > max_path_nodes) {
      throw Error(ErrorCode::Unreachable, "path from '" + src + "' to '" + dst + "' exceeds five nodes");
    }
    current = next;
  }
  return path;
}

OverlayTopology fail_central_point(const OverlayTopology& topology, const NodeId& failed) {
  if (!topology.is_central_point(failed)) {
    throw Error(ErrorCode::InvalidValue, "'" + failed + "' is not a central point");
  }
  if (topology.failed_central_points.count(failed) != 0) {
    return topology;
  }
  const NodeId old_hub = topology.hub();
  OverlayTopology topo = topology;
  topo.failed_central_points.insert(failed);
  if (topo.failed_central_points.size() == topo.central_points.size()) {
    throw Error(ErrorCode::NoBackupCentralPoint, "no central point left after losing '" + failed + "'");
  }
  if (failed != old_hub) {
    return topo;
  }
  const NodeId& new_hub = topo.hub();
  for (auto& tunnel : topo.tunnels) {
    if (tunnel.server_node == failed || tunnel.client_node == failed || tunnel.client_node == new_hub) {
      tunnel.active = false;
    }
  }
  for (auto& tunnel : topo.tunnels) {
    if (tunnel.server_node != new_hub || topo.failed_central_points.count(tunnel.client_node) != 0) continue;
    if (tunnel.credential && topo.credentials[*tunnel.credential].registered) {
      tunnel.active = true;
    }
  }
  return topo;
}

Registration register_client(const OverlayTopology& topology, const NodeId& node_id, const std::string& subject) {
  const auto& member = topology.member(node_id);
  for (const auto& credential : topology.credentials) {
    if (credential.registered && credential.subject == subject) {
      throw Error(ErrorCode::DuplicateSubject, "subject '" + subject + "' is already registered");
    }
  }
  if (topology.central_points.empty()) {
    throw Error(ErrorCode::InvalidValue, "topology has no central point to issue credentials");
  }
  ClientCredential credential;
  credential.subject = subject;
  credential.node_id = node_id;
  credential.issued_by = topology.central_points.front();
  credential.registered = true;
  if (member.role == NodeRole::vrouter) {
    if (auto subnet = topology.local_subnets.find(member.site_id); subnet != topology.local_subnets.end()) {
      credential.static_subnet = subnet->second.prefix;
    }
  }

  Registration result{topology, credential};
  auto& topo = result.topology;
  topo.credentials.push_back(credential);
  const std::size_t index = topo.credentials.size() - 1;
  const NodeId& hub = topo.hub();
  for (auto& tunnel : topo.tunnels) {
    if (tunnel.client_node != node_id) continue;
    tunnel.credential = index;
    tunnel.active = tunnel.server_node == hub && node_id != hub;
  }
  return result;
}

Seconds apply_cipher_profile(const CipherProfile& profile, Seconds payload_seconds, int hops) {
  return payload_seconds / profile.throughput_factor + hops * profile.latency_penalty;
}

TopologyPlan build_overlay(std::span<const CloudSite> sites, const Placement& placement, const SiteId& front_end_site,
                           const OverlayConfig& config) {
  TopologyPlan plan = plan_topology(sites, placement, front_end_site, config.backup_cp_sites, config.cipher);
  plan.topology = assign_addresses(plan.topology, config.base_prefix, config.manual_subnets);
  std::vector<NodeId> clients;
  for (const auto& tunnel : plan.topology.tunnels) {
    if (std::find(clients.begin(), clients.end(), tunnel.client_node) == clients.end()) {
      clients.push_back(tunnel.client_node);
    }
  }
  for (const auto& client : clients) {
    plan.topology = register_client(plan.topology, client, "CN=" + client).topology;
  }
  return plan;
}

std::vector<NodeId> reachable_members(const OverlayTopology& topology) {
  std::set<SiteId> orphaned_sites;
  for (const auto& failed : topology.failed_central_points) {
    const auto& member = topology.member(failed);
    auto subnet = topology.local_subnets.find(member.site_id);
    if (subnet != topology.local_subnets.end() && member.address == subnet->second.gateway_address) {
      orphaned_sites.insert(member.site_id);
    }
  }
  std::vector<NodeId> out;
  for (const auto& [node_id, member] : topology.members) {
    if (topology.failed_central_points.count(node_id) != 0) continue;
    if (orphaned_sites.count(member.site_id) != 0 && topology.stand_alone_clients.count(node_id) == 0) continue;
    out.push_back(node_id);
  }
  return out;
}

nlohmann::ordered_json topology_to_json(const OverlayTopology& topology, const RouteTable& routes) {
  nlohmann::ordered_json doc;
  doc["central_points"] = topology.central_points;
  doc["vrouters"] = nlohmann::ordered_json::object();
  for (const auto& [site_id, node_id] : topology.vrouters) {
    doc["vrouters"][site_id] = node_id;
  }
  doc["subnets"] = nlohmann::ordered_json::array();
  for (const auto& site_id : topology.site_order) {
    auto it = topology.local_subnets.find(site_id);
    if (it == topology.local_subnets.end()) continue;
    const auto& s = it->second;
    doc["subnets"].push_back({{"site_id", site_id},
                              {"prefix", s.prefix.to_string()},
                              {"gateway_address", s.gateway_address.to_string()},
                              {"dhcp_range", {s.dhcp_range.first.to_string(), s.dhcp_range.last.to_string()}}});
  }
  doc["tunnels"] = nlohmann::ordered_json::array();
  for (const auto& t : topology.tunnels) {
    nlohmann::ordered_json j;
    j["client_node"] = t.client_node;
    j["server_node"] = t.server_node;
    j["client_tunnel_address"] = t.client_tunnel_address ? t.client_tunnel_address->to_string() : "";
    j["server_tunnel_address"] = t.server_tunnel_address ? t.server_tunnel_address->to_string() : "";
    j["active"] = t.active;
    doc["tunnels"].push_back(std::move(j));
  }
  doc["routes"] = nlohmann::ordered_json::object();
  for (const auto& [node_id, table] : routes) {
    auto& list = doc["routes"][node_id] = nlohmann::ordered_json::array();
    for (const auto& entry : table) {
      nlohmann::ordered_json j;
      j["destination"] = entry.destination ? entry.destination->to_string() : "default";
      if (std::holds_alternative<ConnectedRoute>(entry.next_hop)) {
        j["next_hop"] = "connected";
      } else if (const auto* gw = std::get_if<GatewayHop>(&entry.next_hop)) {
        j["next_hop"] = gw->address.to_string();
      } else {
        const auto& hop = std::get<TunnelHop>(entry.next_hop);
        j["next_hop"] = "tunnel:" + hop.client_node + "->" + hop.server_node;
      }
      list.push_back(std::move(j));
    }
  }
  return doc;
}

}  // namespace evc
