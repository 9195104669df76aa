#pragma once

#include <filesystem>
#include <string>

#include "evc/domain.hpp"

namespace evc::testing {

inline std::filesystem::path fixture_path(const std::string& name) {
  return std::filesystem::path(EVC_FIXTURES_DIR) / name;
}

inline Scenario load_fixture(const std::string& name) { return load_scenario(fixture_path(name)); }

inline CloudSite cesnet_site() {
  CloudSite s;
  s.site_id = "cesnet";
  s.kind = SiteKind::on_premises;
  s.max_instances = 3;
  s.max_public_ips = 1;
  s.provisioning_phase_durations = {60, 300, 60, 480};
  s.deprovision_duration = 120;
  s.billing = {0.0, 1.0};
  return s;
}

inline CloudSite aws_site() {
  CloudSite s;
  s.site_id = "aws";
  s.kind = SiteKind::public_cloud;
  s.max_instances = 4;
  s.max_public_ips = 1;
  s.provisioning_phase_durations = {60, 180, 60, 900};
  s.deprovision_duration = 400;
  s.billing = {0.0464, 1.0};
  s.vrouter_billing = CostRate{0.0116, 1.0};
  return s;
}

inline ClusterTemplate hybrid_template() {
  ClusterTemplate t;
  t.front_end_site = "cesnet";
  t.initial_workers = {{"cesnet", 2}};
  t.max_workers = 5;
  t.site_preferences = {{"cesnet", 1}, {"aws", 2}};
  return t;
}

}  // namespace evc::testing
