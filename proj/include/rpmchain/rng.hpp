#pragma once

#include "rpmchain/bytes.hpp"

#include <array>
#include <cstdint>

namespace rpmchain {

// Deterministic random byte stream (ChaCha20 keystream keyed from the seed).
// Every source of randomness in the system draws from one of these so a
// seeded run is reproducible byte for byte.
class Drbg {
public:
    explicit Drbg(uint64_t seed);
    explicit Drbg(ByteView seed_bytes);

    void fill(std::span<uint8_t> out);
    Bytes bytes(size_t n);
    std::array<uint8_t, 32> bytes32();
    uint64_t next_u64();

    // Uniform in [0, bound) without modulo bias.
    uint64_t below(uint64_t bound);

private:
    std::array<uint8_t, 32> key_;
    uint64_t counter_ = 0;
};

} // namespace rpmchain
