#pragma once

#include "rpmchain/scenario.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace rpmchain::sim {

struct RunReport {
    uint64_t readings_processed = 0;
    uint64_t alerts_emitted = 0;
    uint64_t records_stored = 0;
    uint64_t records_discarded = 0;
    uint64_t blocks_sealed = 0;
    uint64_t chain_height = 0;
    uint64_t txns_issued = 0;
    uint64_t mines_rejected = 0;
    std::map<std::string, uint64_t> blocks_signed_by;
    std::vector<std::string> device_op_lines;
    bool audit_pass = false;
    std::string audit_detail;

    std::string text() const;
};

// Executes the full tick loop against a fresh output directory:
// readings -> contract evaluation -> (on alert) encrypt+sign+ingest ->
// seal -> announce -> route -> mine -> alert delivery. Writes ledger.dump,
// alerts.log, txns.log and cloud/<block_id> files; fully deterministic for
// a fixed scenario seed. Throws Error before any side effects when the
// scenario is invalid.
RunReport run_scenario(const Scenario& scenario, const std::filesystem::path& out_dir);

} // namespace rpmchain::sim
