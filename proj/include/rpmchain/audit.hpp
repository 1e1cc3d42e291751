#pragma once

#include <filesystem>
#include <string>

namespace rpmchain::sim {

// Exit codes shared with the CLI: 0 success, 1 verification failure,
// 2 unreadable or malformed input.
inline constexpr int kExitOk = 0;
inline constexpr int kExitVerifyFailed = 1;
inline constexpr int kExitInputError = 2;

struct ToolResult {
    int exit_code = kExitOk;
    std::string report;
};

// Chain-link and authority-signature verification of a ledger dump.
ToolResult verify_chain_file(const std::filesystem::path& ledger_path);

// verify_chain_file plus a Merkle/signature audit of every cloud block the
// ledger references; the report names each failing block.
ToolResult audit_run(const std::filesystem::path& ledger_path,
                     const std::filesystem::path& cloud_dir);

} // namespace rpmchain::sim
