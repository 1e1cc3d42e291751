#include "rpmchain/merkle.hpp"

#include "rpmchain/error.hpp"

namespace rpmchain::merkle {

crypto::Digest leaf_digest(ByteView leaf) {
    ByteWriter w;
    w.u8(0x00);
    w.raw(leaf);
    return crypto::sha256(w.view());
}

crypto::Digest node_digest(const crypto::Digest& left, const crypto::Digest& right) {
    ByteWriter w;
    w.u8(0x01);
    w.raw(left.view());
    w.raw(right.view());
    return crypto::sha256(w.view());
}

MerkleTree build_tree(std::span<const Bytes> leaves) {
    if (leaves.empty()) throw Error("merkle tree needs at least one leaf");

    MerkleTree tree;
    std::vector<crypto::Digest> level;
    level.reserve(leaves.size());
    for (const Bytes& leaf : leaves) level.push_back(leaf_digest(leaf));
    tree.levels_.push_back(std::move(level));

    while (tree.levels_.back().size() > 1) {
        const auto& cur = tree.levels_.back();
        std::vector<crypto::Digest> next;
        next.reserve((cur.size() + 1) / 2);
        for (size_t i = 0; i < cur.size(); i += 2) {
            const crypto::Digest& left = cur[i];
            const crypto::Digest& right = (i + 1 < cur.size()) ? cur[i + 1] : cur[i];
            next.push_back(node_digest(left, right));
        }
        tree.levels_.push_back(std::move(next));
    }
    return tree;
}

MerkleProof MerkleTree::prove(size_t leaf_index) const {
    if (leaf_index >= leaf_count())
        throw Error("leaf index " + std::to_string(leaf_index) + " out of range");

    MerkleProof proof;
    proof.leaf_index = leaf_index;
    size_t pos = leaf_index;
    for (size_t lvl = 0; lvl + 1 < levels_.size(); ++lvl) {
        const auto& cur = levels_[lvl];
        if (pos % 2 == 0) {
            // sibling to the right; an unpaired node duplicates itself
            size_t sib = (pos + 1 < cur.size()) ? pos + 1 : pos;
            proof.path.push_back({cur[sib], Side::right});
        } else {
            proof.path.push_back({cur[pos - 1], Side::left});
        }
        pos /= 2;
    }
    return proof;
}

bool verify_proof(const crypto::Digest& root, ByteView leaf, const MerkleProof& proof) {
    crypto::Digest acc = leaf_digest(leaf);
    for (const auto& step : proof.path)
        acc = step.side == Side::right ? node_digest(acc, step.sibling)
                                       : node_digest(step.sibling, acc);
    return acc == root;
}

std::string format_proof(const MerkleProof& proof) {
    std::string out;
    for (const auto& step : proof.path) {
        if (!out.empty()) out.push_back(' ');
        out += step.sibling.hex();
        out += step.side == Side::right ? ":right" : ":left";
    }
    return out;
}

} // namespace rpmchain::merkle
