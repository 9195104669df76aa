#include <gtest/gtest.h>

#include "evc/orchestrator.hpp"
#include "test_support.hpp"

using namespace evc;
using evc::testing::aws_site;
using evc::testing::cesnet_site;
using evc::testing::hybrid_template;

namespace {

std::vector<CloudSite> hybrid_sites() { return {cesnet_site(), aws_site()}; }

DeploymentRecord deployed(const ClusterTemplate& t = hybrid_template()) {
  const auto sites = hybrid_sites();
  auto record = submit_deployment(t, sites, OverlayConfig{}, 0.0);
  step_workflow(record, record.in_flight.front().finishes_at);
  return record;
}

UpdateOperation started(UpdateResult result) {
  if (!std::holds_alternative<UpdateOperation>(result)) throw std::runtime_error("unexpected Busy");
  return std::get<UpdateOperation>(result);
}

void finish_all(DeploymentRecord& record) {
  while (auto deadline = next_phase_deadline(record)) step_workflow(record, *deadline);
}

}  // namespace

TEST(RankSites, QuotaFullSiteIsExcluded) {
  const auto sites = hybrid_sites();
  const std::vector<SLA> slas{{"cesnet", 1}, {"aws", 2}};
  UsageMap usage{{"cesnet", {3, true}}, {"aws", {0, false}}};
  const auto ranked = rank_sites(slas, sites, 1, usage);
  ASSERT_EQ(ranked.size(), 1u);
  EXPECT_EQ(ranked[0].site_id, "aws");
  EXPECT_DOUBLE_EQ(ranked[0].score, 0.5);
  EXPECT_EQ(ranked[0].components.free_quota, 3);  // one instance reserved for the vRouter
}

TEST(RankSites, SingleEligibleSite) {
  const auto sites = hybrid_sites();
  const std::vector<SLA> slas{{"aws", 1}};
  const auto ranked = rank_sites(slas, sites, 1);
  ASSERT_EQ(ranked.size(), 1u);
  EXPECT_EQ(ranked[0].site_id, "aws");
}

TEST(RankSites, HigherAvailabilityFirstThenSiteId) {
  auto sites = hybrid_sites();
  sites[0].availability = 0.5;
  sites[1].availability = 0.9;
  const std::vector<SLA> slas{{"cesnet", 1}, {"aws", 1}};
  auto ranked = rank_sites(slas, sites, 1);
  ASSERT_EQ(ranked.size(), 2u);
  EXPECT_EQ(ranked[0].site_id, "aws");
  EXPECT_DOUBLE_EQ(ranked[0].score, 0.9);
  EXPECT_DOUBLE_EQ(ranked[1].score, 0.5);

  sites[0].availability = 0.9;
  ranked = rank_sites(slas, sites, 1);
  EXPECT_EQ(ranked[0].site_id, "aws");  // tie broken lexicographically
  EXPECT_EQ(ranked[1].site_id, "cesnet");
}

TEST(RankSites, Errors) {
  auto sites = hybrid_sites();
  const std::vector<SLA> unknown{{"azure", 1}};
  try {
    rank_sites(unknown, sites, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownSite);
  }
  sites[1].availability = 0.0;
  const std::vector<SLA> slas{{"cesnet", 1}, {"aws", 2}};
  UsageMap usage{{"cesnet", {3, true}}};
  try {
    rank_sites(slas, sites, 1, usage);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoEligibleSite);
  }
}

TEST(SubmitDeployment, HybridInitialDeploy) {
  const auto sites = hybrid_sites();
  const auto record = submit_deployment(hybrid_template(), sites, OverlayConfig{}, 0.0);
  ASSERT_EQ(record.in_flight.size(), 1u);
  const auto& op = record.in_flight.front();
  EXPECT_EQ(op.kind, UpdateKind::initial_deploy);
  EXPECT_DOUBLE_EQ(op.finishes_at, 900.0);
  EXPECT_EQ(op.nodes, (std::vector<NodeId>{"fe", "vnode-1", "vnode-2"}));
  EXPECT_EQ(record.topology.central_points, std::vector<NodeId>{"fe"});
  EXPECT_EQ(record.nodes.at("fe").state, NodeState::powering_on);
  EXPECT_TRUE(record.nodes.at("fe").has_public_ip);
  EXPECT_EQ(record.nodes.at("fe").slots, 0);
  EXPECT_EQ(record.nodes.at("vnode-3").state, NodeState::off);
  EXPECT_EQ(record.public_ips(), 1);
}

TEST(SubmitDeployment, FrontEndOnly) {
  auto t = hybrid_template();
  t.initial_workers.clear();
  const auto sites = hybrid_sites();
  auto record = submit_deployment(t, sites, OverlayConfig{}, 0.0);
  EXPECT_EQ(record.in_flight.front().nodes, std::vector<NodeId>{"fe"});
  for (const auto& e : step_workflow(record, 899.0)) EXPECT_NE(e.kind, WorkflowEventKind::update_done);
  EXPECT_EQ(record.in_flight.size(), 1u);
  step_workflow(record, 900.0);
  EXPECT_TRUE(record.in_flight.empty());
  EXPECT_EQ(record.nodes.at("fe").state, NodeState::idle);
}

TEST(RequestUpdate, BusyWhileInitialDeployWithoutSideEffects) {
  const auto sites = hybrid_sites();
  auto record = submit_deployment(hybrid_template(), sites, OverlayConfig{}, 0.0);
  const auto transitions = record.transitions.size();
  const auto next_op = record.next_op;
  const auto result = request_update(record, {UpdateKind::add_node, "vnode-3", std::nullopt}, 10.0);
  EXPECT_TRUE(std::holds_alternative<Busy>(result));
  EXPECT_EQ(record.transitions.size(), transitions);
  EXPECT_EQ(record.next_op, next_op);
  EXPECT_EQ(record.nodes.at("vnode-3").state, NodeState::off);
}

TEST(RequestUpdate, Guards) {
  auto record = deployed();
  EXPECT_THROW(request_update(record, {UpdateKind::remove_node, "vnode-3", std::nullopt}, 1000.0), Error);
  EXPECT_THROW(request_update(record, {UpdateKind::add_node, "vnode-1", std::nullopt}, 1000.0), Error);
  EXPECT_THROW(request_update(record, {UpdateKind::add_node, "fe", std::nullopt}, 1000.0), Error);
  EXPECT_THROW(request_update(record, {UpdateKind::add_node, "vnode-9", std::nullopt}, 1000.0), Error);
  try {
    request_update(record, {UpdateKind::add_node, "vnode-3", SiteId{"cesnet"}}, 1000.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::QuotaExceeded);
  }
}

TEST(RequestUpdate, FirstAwsAddBringsVrouterInOnePhaseSum) {
  auto record = deployed();
  const auto op = started(request_update(record, {UpdateKind::add_node, "vnode-3", std::nullopt}, 1000.0));
  EXPECT_EQ(op.target_site, "aws");
  EXPECT_DOUBLE_EQ(op.finishes_at - op.started_at, 1200.0);
  EXPECT_EQ(op.nodes, (std::vector<NodeId>{"vnode-3", "vrouter-aws"}));
  EXPECT_EQ(record.nodes.at("vrouter-aws").state, NodeState::powering_on);

  EXPECT_TRUE(step_workflow(record, 1000.0).empty());
  const auto events = step_workflow(record, 2200.0);
  ASSERT_FALSE(events.empty());
  EXPECT_EQ(events.back().kind, WorkflowEventKind::update_done);
  std::vector<UpdatePhase> phases;
  std::vector<NodeId> idle;
  for (const auto& e : events) {
    if (e.kind == WorkflowEventKind::phase_done) phases.push_back(e.phase);
    if (e.kind == WorkflowEventKind::node_state && e.state == NodeState::idle) idle.push_back(e.node_id);
  }
  EXPECT_EQ(phases, (std::vector<UpdatePhase>{UpdatePhase::network_create, UpdatePhase::vm_create,
                                              UpdatePhase::tunnel_setup, UpdatePhase::contextualize}));
  EXPECT_EQ(idle, (std::vector<NodeId>{"vnode-3", "vrouter-aws"}));
  EXPECT_EQ(record.nodes.at("vnode-3").state, NodeState::idle);
  EXPECT_EQ(record.history.back().completed_phases, phases);
}

TEST(RequestUpdate, SerializedAddsFormAStaircase) {
  auto record = deployed();
  std::vector<Seconds> ready;
  Seconds now = 1000.0;
  for (const char* node : {"vnode-3", "vnode-4", "vnode-5"}) {
    const auto op = started(request_update(record, {UpdateKind::add_node, node, std::nullopt}, now));
    if (std::string(node) != "vnode-5") {
      const auto queued = request_update(record, {UpdateKind::add_node, "vnode-5", std::nullopt}, now + 1.0);
      EXPECT_TRUE(std::holds_alternative<Busy>(queued));
    }
    finish_all(record);
    ready.push_back(op.finishes_at);
    now = op.finishes_at;
  }
  EXPECT_DOUBLE_EQ(ready[1] - ready[0], 1200.0);
  EXPECT_DOUBLE_EQ(ready[2] - ready[1], 1200.0);
  EXPECT_LE(record.usage().at("aws").instances, aws_site().max_instances);
}

TEST(RequestUpdate, RemoveReleasesQuotaAndLastWorkerTakesVrouter) {
  auto record = deployed();
  started(request_update(record, {UpdateKind::add_node, "vnode-3", std::nullopt}, 1000.0));
  finish_all(record);
  EXPECT_EQ(record.usage().at("aws").instances, 2);
  const auto op = started(request_update(record, {UpdateKind::remove_node, "vnode-3", std::nullopt}, 3000.0));
  EXPECT_EQ(op.nodes, (std::vector<NodeId>{"vnode-3", "vrouter-aws"}));
  EXPECT_DOUBLE_EQ(op.finishes_at, 3400.0);
  EXPECT_EQ(record.nodes.at("vnode-3").state, NodeState::powering_off);
  finish_all(record);
  EXPECT_EQ(record.nodes.at("vnode-3").state, NodeState::off);
  EXPECT_EQ(record.nodes.at("vrouter-aws").state, NodeState::off);
  EXPECT_EQ(record.usage().at("aws").instances, 0);
  EXPECT_TRUE(record.topology.vrouters.empty());
}

TEST(RequestUpdate, ParallelAddsFinishTogether) {
  auto t = hybrid_template();
  t.parallel_provisioning = true;
  auto record = deployed(t);
  std::vector<Seconds> ready;
  for (const char* node : {"vnode-3", "vnode-4", "vnode-5"}) {
    ready.push_back(started(request_update(record, {UpdateKind::add_node, node, std::nullopt}, 1000.0)).finishes_at);
  }
  EXPECT_EQ(record.in_flight.size(), 3u);
  EXPECT_EQ(ready, (std::vector<Seconds>{2200.0, 2200.0, 2200.0}));
  finish_all(record);
  EXPECT_EQ(record.usage().at("aws").instances, 4);
}

TEST(SetNodeState, RejectsIllegalEdgeAndAccruesPaidTime) {
  auto record = deployed();
  EXPECT_THROW(set_node_state(record, "vnode-1", NodeState::off, 950.0), Error);
  set_node_state(record, "vnode-1", NodeState::used, 1000.0);
  EXPECT_DOUBLE_EQ(record.nodes.at("vnode-1").paid_seconds, 1000.0);
}
