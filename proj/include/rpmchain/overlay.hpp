#pragma once

#include "rpmchain/cloud_store.hpp"
#include "rpmchain/crypto.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace rpmchain::overlay {

// The peer-to-peer overlay: clusters with elected heads, per-cluster key
// registries for requesters (providers) and requestees (patient devices),
// keep-or-forward routing of block announcements, and the digest chain the
// cluster heads maintain under proof-of-authority.

enum class Role : uint8_t { requestee, requester };

struct Node {
    std::string node_id;
    Role role = Role::requestee;
    crypto::PublicKey public_key;
    std::string cluster_id;
};

struct Cluster {
    std::string cluster_id;
    std::set<std::string> member_ids;
    std::string head_id;  // empty until elected
    std::map<std::string, crypto::PublicKey> requester_keys;
    std::map<std::string, crypto::PublicKey> requestee_keys;
};

// Highest connectivity degree wins, ties break to the lowest node id.
// Updates cluster.head_id. Throws Error on an empty cluster.
const std::string& elect_cluster_head(Cluster& cluster,
                                      const std::map<std::string, int>& connectivity);

struct PoAConfig {
    std::vector<std::string> authority_ids;

    size_t count() const { return authority_ids.size(); }
    size_t quorum() const { return authority_ids.size() / 2 + 1; }
};

enum class PayloadKind : uint8_t { data_block = 0, txn = 1 };

std::string payload_kind_name(PayloadKind k);
std::optional<PayloadKind> parse_payload_kind(const std::string& s);

struct ChainBlock {
    uint64_t height = 0;
    crypto::Digest prev_hash;     // 32 zero octets for the genesis block
    crypto::Digest payload_root;  // cloud Merkle root or transaction digest
    PayloadKind payload_kind = PayloadKind::data_block;
    std::string cloud_block_ref;  // empty for txn payloads
    std::string authority_id;
    crypto::Signature authority_signature;
    uint64_t timestamp = 0;  // logical tick
};

// Canonical octets. The signature covers everything but itself, so any
// field mutation is detectable even on the chain tip; the link hash covers
// the full serialization including the signature.
Bytes chain_block_signing_bytes(const ChainBlock& block);
Bytes serialize_chain_block(const ChainBlock& block);

class Overlay {
public:
    void add_cluster(const std::string& cluster_id);
    void add_node(const Node& node, int connectivity_degree);

    const Node& node(const std::string& node_id) const;
    const Cluster& cluster(const std::string& cluster_id) const;
    bool has_node(const std::string& node_id) const;

    // Runs the head election in every cluster; returns heads in cluster
    // insertion order (the PoA authority ring).
    std::vector<std::string> elect_heads();

    // Duplicate registration and role mismatches throw.
    void register_requestee(const std::string& cluster_id, const std::string& node_id,
                            const crypto::PublicKey& key);
    void register_requester(const std::string& cluster_id, const std::string& node_id,
                            const crypto::PublicKey& key);

    bool key_registered(const crypto::PublicKey& key) const;
    bool requestee_registered(const std::string& node_id) const;
    bool requester_registered(const std::string& node_id) const;

    // Cluster head responsible for the node's cluster; throws if unknown.
    const std::string& head_of(const std::string& node_id) const;

    struct RouteResult {
        std::string keeper_id;
        size_t hops = 0;
    };

    // Keep-or-forward: each head keeps the announcement iff the patient is a
    // member of its cluster, otherwise forwards to the next head in ring
    // order; after a full pass the origin keeps it.
    RouteResult route_announcement(const cloud::BlockAnnouncement& ann,
                                   const std::string& origin_ch, const PoAConfig& config) const;

private:
    std::map<std::string, Node> nodes_;
    std::map<std::string, Cluster> clusters_;
    std::vector<std::string> cluster_order_;
    std::map<std::string, int> degrees_;
};

// Mining rotation: a monotone slot counter picks the scheduled signer
// (authority_ids[slot mod N]) and advances on every attempt, so a refusing
// authority cannot stall the chain. In fault-free runs slot == height and
// each appended block is signed by authority_ids[height mod N].
class Ledger {
public:
    Ledger(PoAConfig config, std::map<std::string, crypto::KeyPair> authority_keys);

    void set_fault(const std::string& authority_id, uint64_t refuse_from_tick);

    enum class MineStatus : uint8_t {
        appended,
        rejected_not_your_turn,
        rejected_refused,   // scheduled signer is refusing at this tick
        rejected_no_quorum,
    };

    struct MineResult {
        MineStatus status = MineStatus::rejected_no_quorum;
        std::optional<ChainBlock> block;
        size_t acks = 0;
    };

    // One slot attempt by an explicit signer; not_your_turn does not consume
    // the slot. Throws Error for unknown signers.
    MineResult try_mine_once(const std::string& signer_id, const crypto::Digest& payload_root,
                             PayloadKind kind, const std::string& cloud_block_ref, uint64_t tick);

    // Entry point for a keeper cluster head: rotates through at most N slots
    // until the payload appends or every authority had its chance.
    MineResult propose_and_mine(const std::string& keeper_ch, const crypto::Digest& payload_root,
                                PayloadKind kind, const std::string& cloud_block_ref,
                                uint64_t tick);

    const std::string& scheduled_authority() const;
    const std::vector<ChainBlock>& blocks() const { return blocks_; }
    const PoAConfig& config() const { return config_; }
    uint64_t slot() const { return slot_; }

    std::map<std::string, crypto::PublicKey> authority_public_keys() const;

    // Total canonical serialized size; the overlay stores digests only, so
    // this stays small no matter how large the cloud payloads are.
    size_t ledger_bytes() const;

private:
    bool refusing(const std::string& authority_id, uint64_t tick) const;

    PoAConfig config_;
    std::map<std::string, crypto::KeyPair> authority_keys_;
    std::map<std::string, uint64_t> refuse_from_;
    std::vector<ChainBlock> blocks_;
    uint64_t slot_ = 0;
};

struct ChainValidation {
    bool valid = true;
    uint64_t height = 0;   // offending height when invalid
    std::string reason;    // bad_genesis, bad_height, bad_link, unknown_authority, bad_signature
};

ChainValidation validate_chain(std::span<const ChainBlock> blocks,
                               const std::map<std::string, crypto::PublicKey>& authority_keys);

// ---- Ledger dump format ----------------------------------------------------
// Self-describing text file: `authority|<id>|<pubkey hex>` header lines in
// ring order, then one block per line:
//   height|prev_hash|payload_root|payload_kind|cloud_block_ref|authority_id|authority_signature|timestamp
// Digests and signatures are lowercase hex; an absent cloud_block_ref is "-".

struct LedgerDump {
    std::vector<std::pair<std::string, crypto::PublicKey>> authorities;
    std::vector<ChainBlock> blocks;

    std::map<std::string, crypto::PublicKey> authority_key_map() const;
};

void write_ledger_dump(const std::filesystem::path& path, const Ledger& ledger);

struct ReadDumpResult {
    std::optional<LedgerDump> dump;
    std::string error;
};

ReadDumpResult read_ledger_dump(const std::filesystem::path& path);

} // namespace rpmchain::overlay
