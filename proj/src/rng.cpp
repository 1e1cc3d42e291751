#include "rpmchain/rng.hpp"

#include "rpmchain/crypto.hpp"

#include <sodium.h>

namespace rpmchain {

namespace {
std::array<uint8_t, 32> derive_key(ByteView seed_bytes) {
    ByteWriter w;
    w.lp_str("rpmchain.drbg.v1");
    w.lp(seed_bytes);
    return crypto::sha256(w.view()).bytes;
}
} // namespace

Drbg::Drbg(uint64_t seed) {
    ByteWriter w;
    w.u64le(seed);
    key_ = derive_key(w.view());
}

Drbg::Drbg(ByteView seed_bytes) : key_(derive_key(seed_bytes)) {}

void Drbg::fill(std::span<uint8_t> out) {
    if (out.empty()) return;
    uint8_t nonce[crypto_stream_chacha20_NONCEBYTES];
    for (size_t i = 0; i < sizeof(nonce); ++i)
        nonce[i] = static_cast<uint8_t>(counter_ >> (8 * i));
    ++counter_;
    crypto_stream_chacha20(out.data(), out.size(), nonce, key_.data());
}

Bytes Drbg::bytes(size_t n) {
    Bytes out(n);
    fill(out);
    return out;
}

std::array<uint8_t, 32> Drbg::bytes32() {
    std::array<uint8_t, 32> out;
    fill(out);
    return out;
}

uint64_t Drbg::next_u64() {
    std::array<uint8_t, 8> b;
    fill(b);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
    return v;
}

uint64_t Drbg::below(uint64_t bound) {
    if (bound == 0) return 0;
    const uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    uint64_t v;
    do {
        v = next_u64();
    } while (v >= limit);
    return v % bound;
}

} // namespace rpmchain
