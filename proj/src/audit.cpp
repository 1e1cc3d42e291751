#include "rpmchain/audit.hpp"

#include "rpmchain/cloud_store.hpp"
#include "rpmchain/overlay.hpp"

#include <sstream>

namespace rpmchain::sim {

ToolResult verify_chain_file(const std::filesystem::path& ledger_path) {
    auto read = overlay::read_ledger_dump(ledger_path);
    if (!read.dump) return {kExitInputError, "ledger dump: " + read.error + "\n"};

    auto validation = overlay::validate_chain(read.dump->blocks, read.dump->authority_key_map());
    if (!validation.valid)
        return {kExitVerifyFailed, "chain invalid at height " + std::to_string(validation.height) +
                                       ": " + validation.reason + "\n"};
    return {kExitOk, "chain valid, height " + std::to_string(read.dump->blocks.size()) + "\n"};
}

ToolResult audit_run(const std::filesystem::path& ledger_path,
                     const std::filesystem::path& cloud_dir) {
    auto read = overlay::read_ledger_dump(ledger_path);
    if (!read.dump) return {kExitInputError, "ledger dump: " + read.error + "\n"};
    if (!std::filesystem::is_directory(cloud_dir))
        return {kExitInputError, "cloud directory not found: " + cloud_dir.string() + "\n"};

    std::ostringstream report;
    auto validation = overlay::validate_chain(read.dump->blocks, read.dump->authority_key_map());
    if (!validation.valid) {
        report << "chain invalid at height " << validation.height << ": " << validation.reason
               << "\n";
        return {kExitVerifyFailed, report.str()};
    }
    report << "chain valid, height " << read.dump->blocks.size() << "\n";

    size_t audited = 0, failed = 0;
    for (const auto& b : read.dump->blocks) {
        if (b.payload_kind != overlay::PayloadKind::data_block) continue;
        ++audited;
        if (b.cloud_block_ref.empty()) {
            ++failed;
            report << "block (height " << b.height << "): FAIL missing cloud block reference\n";
            continue;
        }
        auto file = cloud::read_block_file(cloud_dir / b.cloud_block_ref);
        if (!file.block) {
            ++failed;
            report << "block " << b.cloud_block_ref << ": FAIL " << file.error << "\n";
            continue;
        }
        auto result = cloud::audit_records(b.cloud_block_ref, file.block->records,
                                           file.block->stored_root, b.payload_root);
        if (result.pass) {
            report << "block " << b.cloud_block_ref << ": ok\n";
        } else {
            ++failed;
            report << "block " << b.cloud_block_ref << ": FAIL " << result.detail << "\n";
        }
    }
    report << "audited " << audited << " data blocks, " << failed << " failed\n";
    return {failed == 0 ? kExitOk : kExitVerifyFailed, report.str()};
}

} // namespace rpmchain::sim
