#pragma once

#include "rpmchain/bytes.hpp"
#include "rpmchain/rng.hpp"

#include <array>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>

namespace rpmchain::crypto {

// Digest, signature and envelope-encryption primitives shared by the whole
// system. Concrete schemes: SHA-256 digests, Ed25519 signatures (the same
// node key pair, converted to X25519, also receives wrapped session keys),
// AES-256-GCM for both symmetric payloads and the key-wrap body.

struct Digest {
    std::array<uint8_t, 32> bytes{};

    auto operator<=>(const Digest&) const = default;

    ByteView view() const { return {bytes.data(), bytes.size()}; }
    std::string hex() const;
    static std::optional<Digest> from_hex(std::string_view hex);
    static Digest zero() { return {}; }
};

Digest sha256(ByteView data);

struct PublicKey {
    std::array<uint8_t, 32> bytes{};

    auto operator<=>(const PublicKey&) const = default;

    ByteView view() const { return {bytes.data(), bytes.size()}; }
    std::string hex() const;
    static std::optional<PublicKey> from_hex(std::string_view hex);
};

struct PrivateKey {
    std::array<uint8_t, 64> bytes{};

    ByteView view() const { return {bytes.data(), bytes.size()}; }
};

struct KeyPair {
    PublicKey public_key;
    PrivateKey private_key;
};

// Deterministic for a fixed seed. Seeds shorter than 32 octets are rejected;
// longer seeds are compressed through SHA-256.
KeyPair generate_keypair(ByteView seed);

struct Signature {
    Bytes bytes;       // 64 octets when present, empty means missing
    PublicKey signer;  // convenience copy of the signing key

    bool empty() const { return bytes.empty(); }
};

Signature sign(const PrivateKey& key, ByteView message);

// True iff `sig` was produced over exactly `message` by the private key
// matching `key`. Malformed inputs verify false, never throw.
bool verify(const PublicKey& key, ByteView message, const Signature& sig);

struct SessionKey {
    std::string key_id;
    std::array<uint8_t, 32> key_bytes{};
    uint64_t epoch = 0;

    bool operator==(const SessionKey&) const = default;
};

enum class Scheme : uint8_t {
    symmetric = 0,        // AES-256-GCM under a session key
    asymmetric_wrap = 1,  // X25519 envelope around a serialized session key
};

struct Ciphertext {
    Scheme scheme = Scheme::symmetric;
    Bytes nonce;
    Bytes body;
    Bytes auth_tag;
};

Ciphertext encrypt_sym(const SessionKey& key, ByteView plaintext, Drbg& rng);

// Authenticated decryption: wrong key or any modified octet returns nullopt.
std::optional<Bytes> decrypt_sym(const SessionKey& key, const Ciphertext& ct);

// Wraps the session key (key_id, epoch, key bytes) so that only the holder
// of the matching private key can recover it. An ephemeral X25519 key pair
// is drawn from `rng`; the shared secret keys an AES-256-GCM envelope and the
// ephemeral public key travels at the front of the body.
Ciphertext wrap_key(const PublicKey& recipient, const SessionKey& key, Drbg& rng);

std::optional<SessionKey> unwrap_key(const PrivateKey& recipient, const Ciphertext& ct);

// Per-patient epoch counters. Single writer; epochs per patient are the
// strictly increasing sequence 1, 2, 3, ...
class KeyEpochRegistry {
public:
    void add_patient(const std::string& patient_id);
    bool has_patient(const std::string& patient_id) const;

    // Fresh random key with the next epoch. Throws Error for unknown patients.
    SessionKey generate_session_key(const std::string& patient_id, Drbg& rng);

    uint64_t last_epoch(const std::string& patient_id) const;

private:
    std::map<std::string, uint64_t> last_epoch_;
};

} // namespace rpmchain::crypto
