#include <random>

#include <gtest/gtest.h>

#include "evc/overlay.hpp"
#include "layout_gen.hpp"

using namespace evc;
using evc::testing::Layout;
using evc::testing::random_layout;

namespace {

void expect_full_visibility(const OverlayTopology& t, const std::vector<NodeId>& members, int layout_index) {
  const auto routes = compute_routes(t);
  for (const auto& a : members) {
    for (const auto& b : members) {
      std::vector<NodeId> path;
      ASSERT_NO_THROW(path = trace_path(routes, t, a, b)) << "layout " << layout_index << ": " << a << " -> " << b;
      ASSERT_LE(path.size(), 5u);
      ASSERT_EQ(path.front(), a);
      ASSERT_EQ(path.back(), b);
    }
  }
}

}  // namespace

TEST(OverlayProperties, RandomLayouts) {
  std::mt19937_64 rng(20231014);
  int with_backup = 0;
  for (int n = 0; n < 1200; ++n) {
    const Layout layout = random_layout(rng);
    const TopologyPlan plan = build_overlay(layout.sites, layout.placement, layout.front_end_site, layout.config);
    const auto& t = plan.topology;

    ASSERT_EQ(t.public_ip_count(), static_cast<int>(t.central_points.size())) << "layout " << n;
    if (layout.config.backup_cp_sites.empty()) ASSERT_EQ(t.public_ip_count(), 1);

    std::vector<Ipv4Prefix> blocks;
    for (const auto& [site, subnet] : t.local_subnets) blocks.push_back(subnet.prefix);
    blocks.push_back(*t.tunnel_pool);
    blocks.push_back(*t.stand_alone_pool);
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      for (std::size_t j = i + 1; j < blocks.size(); ++j) {
        ASSERT_FALSE(blocks[i].overlaps(blocks[j])) << "layout " << n;
      }
    }
    for (const auto& [site, subnet] : t.local_subnets) {
      ASSERT_TRUE(subnet.prefix.contains(subnet.gateway_address));
      ASSERT_FALSE(subnet.dhcp_range.contains(subnet.gateway_address));
    }

    std::vector<NodeId> everyone;
    for (const auto& [id, member] : t.members) everyone.push_back(id);
    expect_full_visibility(t, everyone, n);

    if (t.central_points.size() > 1) {
      ++with_backup;
      const auto after = fail_central_point(t, t.central_points.front());
      expect_full_visibility(after, reachable_members(after), n);
    } else {
      try {
        fail_central_point(t, t.central_points.front());
        FAIL() << "layout " << n;
      } catch (const Error& e) {
        ASSERT_EQ(e.code(), ErrorCode::NoBackupCentralPoint);
      }
    }
  }
  EXPECT_GT(with_backup, 100);
}
