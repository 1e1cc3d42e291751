#include "rpmchain/merkle.hpp"

#include "rpmchain/error.hpp"
#include "rpmchain/rng.hpp"

#include <doctest.h>

using namespace rpmchain;
using namespace rpmchain::merkle;

namespace {

// Independent reference: composes sha256 directly instead of going through
// the merkle module's helpers.
crypto::Digest ref_hash_leaf(ByteView leaf) {
    Bytes buf{0x00};
    buf.insert(buf.end(), leaf.begin(), leaf.end());
    return crypto::sha256(buf);
}

crypto::Digest ref_hash_node(const crypto::Digest& l, const crypto::Digest& r) {
    Bytes buf{0x01};
    buf.insert(buf.end(), l.bytes.begin(), l.bytes.end());
    buf.insert(buf.end(), r.bytes.begin(), r.bytes.end());
    return crypto::sha256(buf);
}

crypto::Digest ref_reduce(const std::vector<crypto::Digest>& level) {
    if (level.size() == 1) return level[0];
    std::vector<crypto::Digest> next;
    for (size_t i = 0; i < level.size(); i += 2) {
        const auto& l = level[i];
        const auto& r = i + 1 < level.size() ? level[i + 1] : level[i];
        next.push_back(ref_hash_node(l, r));
    }
    return ref_reduce(next);
}

crypto::Digest ref_root(const std::vector<Bytes>& leaves) {
    std::vector<crypto::Digest> level;
    for (const auto& l : leaves) level.push_back(ref_hash_leaf(l));
    return ref_reduce(level);
}

std::vector<Bytes> random_leaves(Drbg& rng, size_t n) {
    std::vector<Bytes> leaves;
    for (size_t i = 0; i < n; ++i) leaves.push_back(rng.bytes(1 + rng.below(100)));
    return leaves;
}

} // namespace

TEST_CASE("single leaf: root is the leaf digest, proof is empty") {
    std::vector<Bytes> leaves{Bytes{'a'}};
    auto tree = build_tree(leaves);
    CHECK(tree.root().hex() ==
          "022a6979e6dab7aa5ae4c3e5e45f7e977112a7e63593820dbec1ec738a24f93c");
    CHECK(tree.root() == ref_root(leaves));

    auto proof = tree.prove(0);
    CHECK(proof.path.empty());
    CHECK(verify_proof(tree.root(), leaves[0], proof));
}

TEST_CASE("two leaves: hand-computed root and sibling path") {
    std::vector<Bytes> leaves{Bytes{'a'}, Bytes{'b'}};
    auto tree = build_tree(leaves);
    // sha256(0x01 || sha256(0x00||a) || sha256(0x00||b)), frozen from the
    // reference composition.
    CHECK(tree.root().hex() ==
          "b137985ff484fb600db93107c77b0365c80d78f5b429ded0fd97361d077999eb");

    auto proof = tree.prove(0);
    REQUIRE(proof.path.size() == 1);
    CHECK(proof.path[0].side == Side::right);
    CHECK(proof.path[0].sibling == ref_hash_leaf(leaves[1]));
    CHECK(format_proof(proof) == ref_hash_leaf(leaves[1]).hex() + ":right");
    CHECK(format_proof(tree.prove(1)) == ref_hash_leaf(leaves[0]).hex() + ":left");
}

TEST_CASE("three leaves: the odd leaf pairs with itself") {
    std::vector<Bytes> leaves{Bytes{'a'}, Bytes{'b'}, Bytes{'c'}};
    auto tree = build_tree(leaves);
    CHECK(tree.root().hex() ==
          "e9636069c740c9ff51625b01a0b040396d265a9b920cc6febdfa5ecc9f58ecce");
    CHECK(tree.root() == ref_root(leaves));

    // The duplicated node's proof names itself as its sibling.
    auto proof = tree.prove(2);
    REQUIRE(proof.path.size() == 2);
    CHECK(proof.path[0].sibling == ref_hash_leaf(leaves[2]));
    CHECK(verify_proof(tree.root(), leaves[2], proof));
}

TEST_CASE("empty leaf list is rejected") {
    std::vector<Bytes> none;
    CHECK_THROWS_AS(build_tree(none), Error);
}

TEST_CASE("root matches the reference for all sizes 1..64") {
    Drbg rng(101);
    for (size_t n = 1; n <= 64; ++n) {
        auto leaves = random_leaves(rng, n);
        auto tree = build_tree(leaves);
        CHECK(tree.root() == ref_root(leaves));
        CHECK(tree.leaf_count() == n);
    }
}

TEST_CASE("rebuilding from the same leaves reproduces the root") {
    Drbg rng(102);
    auto leaves = random_leaves(rng, 9);
    CHECK(build_tree(leaves).root() == build_tree(leaves).root());
}

TEST_CASE("changing any one leaf changes the root of an 8-leaf tree") {
    Drbg rng(103);
    auto leaves = random_leaves(rng, 8);
    auto root = build_tree(leaves).root();
    for (size_t i = 0; i < leaves.size(); ++i) {
        auto mutated = leaves;
        mutated[i].push_back(0x42);
        CHECK(build_tree(mutated).root() != root);
    }
}

TEST_CASE("every proof of a 7-leaf tree verifies; mismatched leaves fail") {
    Drbg rng(104);
    auto leaves = random_leaves(rng, 7);
    auto tree = build_tree(leaves);
    for (size_t i = 0; i < 7; ++i) {
        auto proof = tree.prove(i);
        CHECK(verify_proof(tree.root(), leaves[i], proof));
        CHECK_FALSE(verify_proof(tree.root(), leaves[(i + 1) % 7], proof));
    }
    CHECK_THROWS_AS(tree.prove(7), Error);
}

TEST_CASE("flipping a sibling digest breaks the proof") {
    Drbg rng(105);
    auto leaves = random_leaves(rng, 6);
    auto tree = build_tree(leaves);
    for (int trial = 0; trial < 50; ++trial) {
        size_t idx = rng.below(6);
        auto proof = tree.prove(idx);
        auto& step = proof.path[rng.below(proof.path.size())];
        step.sibling.bytes[rng.below(32)] ^= static_cast<uint8_t>(1 + rng.below(255));
        CHECK_FALSE(verify_proof(tree.root(), leaves[idx], proof));
    }
}

TEST_CASE("domain separation: a 2-leaf root is never a leaf digest of the joined digests") {
    Drbg rng(106);
    for (int trial = 0; trial < 20; ++trial) {
        auto x = rng.bytes(24);
        auto y = rng.bytes(24);
        std::vector<Bytes> leaves{x, y};
        auto root = build_tree(leaves).root();

        Bytes joined;
        auto lx = ref_hash_leaf(x), ly = ref_hash_leaf(y);
        joined.insert(joined.end(), lx.bytes.begin(), lx.bytes.end());
        joined.insert(joined.end(), ly.bytes.begin(), ly.bytes.end());
        CHECK(root != ref_hash_leaf(joined));
    }
}

TEST_CASE("no forged proof verifies on small trees") {
    Drbg rng(107);
    auto leaves = random_leaves(rng, 16);
    auto tree = build_tree(leaves);

    int attempts = 0;
    while (attempts < 10000) {
        auto proof = tree.prove(rng.below(16));
        Bytes forged_leaf = rng.bytes(1 + rng.below(40));
        bool genuine = false;
        for (const auto& l : leaves) genuine = genuine || l == forged_leaf;
        if (genuine) continue;
        ++attempts;
        CHECK_FALSE(verify_proof(tree.root(), forged_leaf, proof));
    }
}
