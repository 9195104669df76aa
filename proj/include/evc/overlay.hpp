#pragma once

// Star-topology overlay planning: the front-end doubles as the primary
// Central Point (CP), every other site with private networks gets one
// vRouter VM, and nodes in clouds without private networks run a VPN client
// directly (stand-alone clients). Backup CPs are hot standbys.

#include <map>
#include <optional>
#include <set>
#include <span>
#include <variant>
#include <vector>

#include <json.hpp>

#include "evc/domain.hpp"
#include "evc/ipv4.hpp"

namespace evc {

struct PlacedNode {
  NodeId node_id;
  NodeRole role = NodeRole::worker;
};

/// site_id -> nodes hosted there.
using Placement = std::map<SiteId, std::vector<PlacedNode>>;

struct SubnetAssignment {
  SiteId site_id;
  Ipv4Prefix prefix;
  Ipv4Address gateway_address;
  AddressRange dhcp_range;
};

struct ClientCredential {
  std::string subject;
  NodeId node_id;
  NodeId issued_by;
  bool registered = false;
  std::optional<Ipv4Prefix> static_subnet;
};

struct Tunnel {
  NodeId client_node;
  NodeId server_node;
  std::optional<Ipv4Address> client_tunnel_address;
  std::optional<Ipv4Address> server_tunnel_address;
  bool active = false;
  // Index into OverlayTopology::credentials once the client is registered.
  std::optional<std::size_t> credential;
};

struct OverlayMember {
  NodeId node_id;
  SiteId site_id;
  NodeRole role = NodeRole::worker;
  bool has_public_ip = false;
  std::optional<Ipv4Address> address;
};

struct OverlayTopology {
  std::vector<NodeId> central_points;  // first = primary
  std::set<NodeId> failed_central_points;
  std::map<SiteId, NodeId> vrouters;
  std::set<NodeId, NodeIdLess> stand_alone_clients;
  std::map<SiteId, SubnetAssignment> local_subnets;
  std::vector<Tunnel> tunnels;
  CipherProfile cipher;

  std::map<NodeId, OverlayMember, NodeIdLess> members;
  // Site order used for subnet assignment: front-end site first, then lexicographic.
  std::vector<SiteId> site_order;
  std::vector<ClientCredential> credentials;
  std::optional<Ipv4Prefix> overlay_prefix;
  std::optional<Ipv4Prefix> tunnel_pool;
  std::optional<Ipv4Prefix> stand_alone_pool;

  /// First central point that has not failed.
  const NodeId& hub() const;
  const OverlayMember& member(const NodeId& node_id) const;
  bool is_central_point(const NodeId& node_id) const;
  int public_ip_count() const;
};

struct TopologyPlan {
  OverlayTopology topology;
  Placement placement;  // input placement plus the vRouter and backup-CP VMs that were added
};

/// Builds the star topology (roles, vRouters, stand-alone clients, tunnels) without addresses.
TopologyPlan plan_topology(std::span<const CloudSite> sites, const Placement& placement, const SiteId& front_end_site,
                           std::span<const SiteId> backup_cp_sites, const CipherProfile& cipher = {});

/// Deterministic address plan: one sub-block per site (front-end site first,
/// then lexicographic), reserved blocks for tunnel endpoints and stand-alone clients.
OverlayTopology assign_addresses(const OverlayTopology& topology, const Ipv4Prefix& base_prefix,
                                 const std::map<SiteId, Ipv4Prefix>& manual_subnets = {});

struct ConnectedRoute {
  bool operator==(const ConnectedRoute&) const = default;
};
struct GatewayHop {
  Ipv4Address address;
  bool operator==(const GatewayHop&) const = default;
};
struct TunnelHop {
  NodeId client_node;
  NodeId server_node;
  bool operator==(const TunnelHop&) const = default;
};
using NextHop = std::variant<ConnectedRoute, GatewayHop, TunnelHop>;

struct RouteEntry {
  NodeId owner_node;
  std::optional<Ipv4Prefix> destination;  // nullopt = default route
  NextHop next_hop;
};

using RouteTable = std::map<NodeId, std::vector<RouteEntry>, NodeIdLess>;

RouteTable compute_routes(const OverlayTopology& topology);

/// Longest-prefix match in one node's table.
const RouteEntry* lookup_route(const std::vector<RouteEntry>& table, Ipv4Address destination);

/// Gateway-hop sequence from src to dst, both included.
std::vector<NodeId> trace_path(const RouteTable& routes, const OverlayTopology& topology, const NodeId& src,
                               const NodeId& dst);

OverlayTopology fail_central_point(const OverlayTopology& topology, const NodeId& failed);

struct Registration {
  OverlayTopology topology;
  ClientCredential credential;
};

/// Issues a credential from the primary CP and activates the client's tunnel toward the hub.
Registration register_client(const OverlayTopology& topology, const NodeId& node_id, const std::string& subject);

/// payload / throughput_factor + hops * latency_penalty.
Seconds apply_cipher_profile(const CipherProfile& profile, Seconds payload_seconds, int hops);

/// plan_topology + assign_addresses + register every tunnel client ("CN=<node_id>").
TopologyPlan build_overlay(std::span<const CloudSite> sites, const Placement& placement, const SiteId& front_end_site,
                           const OverlayConfig& config);

/// Nodes that keep full visibility: everything except failed CPs and the subnets they serve.
std::vector<NodeId> reachable_members(const OverlayTopology& topology);

nlohmann::ordered_json topology_to_json(const OverlayTopology& topology, const RouteTable& routes);

}  // namespace evc
