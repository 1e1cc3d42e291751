#pragma once

#include "rpmchain/bytes.hpp"
#include "rpmchain/crypto.hpp"

#include <cstdint>
#include <vector>

namespace rpmchain::merkle {

// Binary hash tree over the serialized records of a cloud block. Leaves and
// internal nodes are domain-separated (0x00 / 0x01 prefixes) so an internal
// digest can never be confused with a leaf digest; an unpaired digest at any
// level is paired with a copy of itself.

crypto::Digest leaf_digest(ByteView leaf);
crypto::Digest node_digest(const crypto::Digest& left, const crypto::Digest& right);

enum class Side : uint8_t { left = 0, right = 1 };

struct MerkleProof {
    struct Step {
        crypto::Digest sibling;
        Side side;  // which side of the running digest the sibling sits on
    };

    size_t leaf_index = 0;
    std::vector<Step> path;
};

class MerkleTree {
public:
    const crypto::Digest& root() const { return levels_.back().front(); }
    size_t leaf_count() const { return levels_.front().size(); }
    const std::vector<std::vector<crypto::Digest>>& levels() const { return levels_; }

    // Membership proof for the indexed leaf. Throws Error when out of range.
    MerkleProof prove(size_t leaf_index) const;

private:
    friend MerkleTree build_tree(std::span<const Bytes> leaves);
    std::vector<std::vector<crypto::Digest>> levels_;  // leaves first, root last
};

// Throws Error on an empty leaf list.
MerkleTree build_tree(std::span<const Bytes> leaves);

bool verify_proof(const crypto::Digest& root, ByteView leaf, const MerkleProof& proof);

// Audit-report form: space-separated "<sibling hex>:<left|right>" pairs,
// leaf to root.
std::string format_proof(const MerkleProof& proof);

} // namespace rpmchain::merkle
