#pragma once

#include "rpmchain/crypto.hpp"
#include "rpmchain/merkle.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace rpmchain::cloud {

// Signature-gated record storage. The store never decrypts payloads; it
// verifies signatures over ciphertext, groups accepted records into
// per-patient blocks, and hands one 32-octet Merkle root per sealed block
// to the overlay.

struct SignedRecord {
    std::string record_id;
    std::string patient_id;
    crypto::Ciphertext payload;  // symmetric, under the patient's session key
    crypto::Signature signature; // over serialize_record(), empty = missing
    crypto::PublicKey signer_public_key;
};

// Canonical octets used both as the signing message and as the Merkle leaf:
// length-prefixed record_id, patient_id, nonce, body, auth_tag.
Bytes serialize_record(const SignedRecord& record);

struct BlockAnnouncement {
    std::string block_id;
    std::string patient_id;
    crypto::Digest merkle_root;
};

struct DataBlock {
    std::string block_id;
    std::string patient_id;
    std::vector<SignedRecord> records;
    crypto::Digest merkle_root;
    uint64_t sealed_at = 0;
};

enum class DiscardReason : uint8_t {
    missing_signature,
    unregistered_signer,
    bad_signature,
};

std::string discard_reason_name(DiscardReason r);

struct IngestResult {
    bool accepted = false;
    DiscardReason reason = DiscardReason::missing_signature;  // valid iff !accepted
    std::string block_id;                                     // open block the record joined
    size_t record_index = 0;                                  // index within that block
    std::optional<BlockAnnouncement> auto_sealed;             // set when capacity was reached
};

struct AuditResult {
    bool pass = false;
    std::string detail;  // first violation, empty on pass
};

class CloudStore {
public:
    using KeyCheck = std::function<bool(const crypto::PublicKey&)>;

    explicit CloudStore(KeyCheck is_registered_key, size_t block_capacity = 16);

    // Sealed blocks are additionally written to dir/<block_id> when set.
    void set_persist_dir(const std::filesystem::path& dir);

    // Allocates "<patient>-r<n>" before the record is built and signed.
    std::string allocate_record_id(const std::string& patient_id);

    // Gate: signature present, verifies over the canonical serialization,
    // and the signer key is registered in the overlay. Rejection is a value.
    IngestResult ingest(SignedRecord record, uint64_t tick);

    // Closes the patient's open block. Throws Error when it is empty.
    BlockAnnouncement seal_block(const std::string& patient_id, uint64_t tick);

    // End-of-run sweep so no accepted record is stranded; patient order.
    std::vector<BlockAnnouncement> seal_all(uint64_t tick);

    struct FetchResult {
        SignedRecord record;
        merkle::MerkleProof proof;
    };
    // Sealed blocks only. Throws Error for unknown/unsealed block or index.
    FetchResult fetch_record(const std::string& block_id, size_t index) const;

    // Pass iff the root recomputed over the currently stored records equals
    // the on-chain root and every record still carries a valid signature.
    AuditResult audit_block(const std::string& block_id, const crypto::Digest& ledger_root) const;

    const DataBlock& sealed(const std::string& block_id) const;
    const std::vector<std::string>& sealed_ids() const { return seal_order_; }

    uint64_t accepted_count() const { return accepted_; }
    uint64_t discarded_count() const { return discarded_; }

private:
    struct OpenBlock {
        std::string block_id;
        std::vector<SignedRecord> records;
    };

    OpenBlock& open_block(const std::string& patient_id);
    BlockAnnouncement seal_open(const std::string& patient_id, uint64_t tick);

    KeyCheck is_registered_key_;
    size_t block_capacity_;
    std::optional<std::filesystem::path> persist_dir_;
    std::map<std::string, OpenBlock> open_;
    std::map<std::string, uint64_t> next_block_seq_;
    std::map<std::string, uint64_t> next_record_seq_;
    std::map<std::string, DataBlock> sealed_;
    std::vector<std::string> seal_order_;
    uint64_t accepted_ = 0;
    uint64_t discarded_ = 0;
};

// ---- Block file format ---------------------------------------------------
// One text file per sealed block, filename = block_id:
//   root|<64 lowercase hex>
//   record|<record_id>|<patient_id>|<nonce hex>|<body hex>|<tag hex>|<sig hex>|<signer hex>
// Strict parsing: any structural damage makes the block fail its audit.

std::filesystem::path write_block_file(const std::filesystem::path& dir, const DataBlock& block);

struct ParsedBlockFile {
    crypto::Digest stored_root;
    std::vector<SignedRecord> records;
};

struct ReadBlockResult {
    std::optional<ParsedBlockFile> block;
    std::string error;  // set when parsing failed
};

ReadBlockResult read_block_file(const std::filesystem::path& path);

// Shared audit core: root over `records` must match both the root stored in
// the file (when given) and the ledger root, and all signatures must verify.
AuditResult audit_records(const std::string& block_id, const std::vector<SignedRecord>& records,
                          const std::optional<crypto::Digest>& stored_root,
                          const crypto::Digest& ledger_root);

} // namespace rpmchain::cloud
