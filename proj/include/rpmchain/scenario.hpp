#pragma once

#include "rpmchain/contracts.hpp"
#include "rpmchain/overlay.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace rpmchain::sim {

// Deterministic scenario description: who is in which cluster, the contracts
// in force, scheduled access-control events, injected authority faults, and
// the telemetry stream itself. Everything an end-to-end run needs.

struct MemberSpec {
    std::string node_id;
    overlay::Role role = overlay::Role::requestee;
    int degree = 0;
};

struct ClusterSpec {
    std::string cluster_id;
    std::vector<MemberSpec> members;
};

struct ContractSpec {
    std::string patient_id;
    std::string provider_id;
    contracts::Metric metric;
    double lower_bound = 0.0;
    double upper_bound = 0.0;
};

struct GrantEvent {
    uint64_t tick = 0;
    std::string patient_id;
    std::string provider_id;
};

struct DeviceOpEvent {
    uint64_t tick = 0;
    std::string provider_id;
    std::string device_id;
    std::string operation;
};

struct FaultSpec {
    std::string authority_id;
    uint64_t refuse_from_tick = 0;
};

struct Scenario {
    uint64_t seed = 0;
    std::vector<ClusterSpec> clusters;
    std::vector<std::string> patients;
    std::vector<std::string> providers;
    std::vector<ContractSpec> contracts;
    std::vector<GrantEvent> grants;
    std::vector<GrantEvent> revokes;
    std::vector<DeviceOpEvent> device_ops;
    std::vector<FaultSpec> faults;
    std::vector<contracts::HealthReading> telemetry;
};

// Throws Error describing the first problem: unknown ids, bad roles,
// non-monotone telemetry ticks, faults naming nodes that are not heads.
void validate_scenario(const Scenario& scenario);

// JSON document; `telemetry` may be inline or an external JSON-lines file
// named by `telemetry_file`, resolved relative to `base_dir`.
Scenario parse_scenario_text(const std::string& text, const std::filesystem::path& base_dir);

Scenario load_scenario(const std::filesystem::path& path);

} // namespace rpmchain::sim
