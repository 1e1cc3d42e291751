#include "rpmchain/crypto.hpp"

#include "rpmchain/error.hpp"
#include "rpmchain/hex.hpp"

#include <openssl/evp.h>
#include <sodium.h>

#include <memory>

namespace rpmchain::crypto {

namespace {

constexpr size_t kGcmNonceBytes = 12;
constexpr size_t kGcmTagBytes = 16;

void ensure_sodium() {
    if (sodium_init() < 0) throw Error("libsodium initialization failed");
}

struct CipherCtxFree {
    void operator()(EVP_CIPHER_CTX* ctx) const { EVP_CIPHER_CTX_free(ctx); }
};
using CipherCtx = std::unique_ptr<EVP_CIPHER_CTX, CipherCtxFree>;

// AES-256-GCM, detached 16-octet tag.
void aead_encrypt(const std::array<uint8_t, 32>& key, ByteView nonce, ByteView plaintext,
                  Bytes& body, Bytes& tag) {
    CipherCtx ctx(EVP_CIPHER_CTX_new());
    if (!ctx) throw Error("EVP context allocation failed");
    if (EVP_EncryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, nullptr, nullptr) != 1 ||
        EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_IVLEN, static_cast<int>(nonce.size()),
                            nullptr) != 1 ||
        EVP_EncryptInit_ex(ctx.get(), nullptr, nullptr, key.data(), nonce.data()) != 1)
        throw Error("AES-256-GCM init failed");

    body.resize(plaintext.size());
    int out_len = 0;
    if (!plaintext.empty() &&
        EVP_EncryptUpdate(ctx.get(), body.data(), &out_len, plaintext.data(),
                          static_cast<int>(plaintext.size())) != 1)
        throw Error("AES-256-GCM encrypt failed");
    uint8_t tail[16];  // GCM emits no trailing bytes
    int final_len = 0;
    if (EVP_EncryptFinal_ex(ctx.get(), tail, &final_len) != 1 || final_len != 0)
        throw Error("AES-256-GCM finalize failed");
    body.resize(static_cast<size_t>(out_len));

    tag.resize(kGcmTagBytes);
    if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_GET_TAG, kGcmTagBytes, tag.data()) != 1)
        throw Error("AES-256-GCM tag extraction failed");
}

std::optional<Bytes> aead_decrypt(const std::array<uint8_t, 32>& key, ByteView nonce,
                                  ByteView body, ByteView tag) {
    if (nonce.size() != kGcmNonceBytes || tag.size() != kGcmTagBytes) return std::nullopt;
    CipherCtx ctx(EVP_CIPHER_CTX_new());
    if (!ctx) return std::nullopt;
    if (EVP_DecryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, nullptr, nullptr) != 1 ||
        EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_IVLEN, static_cast<int>(nonce.size()),
                            nullptr) != 1 ||
        EVP_DecryptInit_ex(ctx.get(), nullptr, nullptr, key.data(), nonce.data()) != 1)
        return std::nullopt;

    Bytes plaintext(body.size());
    int out_len = 0;
    if (!body.empty() &&
        EVP_DecryptUpdate(ctx.get(), plaintext.data(), &out_len, body.data(),
                          static_cast<int>(body.size())) != 1)
        return std::nullopt;

    Bytes tag_copy(tag.begin(), tag.end());
    if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_TAG, kGcmTagBytes, tag_copy.data()) != 1)
        return std::nullopt;
    uint8_t tail[16];
    int final_len = 0;
    if (EVP_DecryptFinal_ex(ctx.get(), tail, &final_len) != 1)
        return std::nullopt;  // tag mismatch: tampered or wrong key
    plaintext.resize(static_cast<size_t>(out_len));
    return plaintext;
}

Bytes serialize_session_key(const SessionKey& key) {
    ByteWriter w;
    w.lp_str(key.key_id);
    w.u64le(key.epoch);
    w.raw(key.key_bytes);
    return w.take();
}

std::optional<SessionKey> parse_session_key(ByteView data) {
    ByteReader r(data);
    SessionKey key;
    if (!r.lp_str(key.key_id)) return std::nullopt;
    if (!r.u64le(key.epoch)) return std::nullopt;
    if (!r.raw(key.key_bytes)) return std::nullopt;
    if (!r.at_end()) return std::nullopt;
    return key;
}

// Key-encryption key for the X25519 envelope: binds the shared secret to
// both public halves of the exchange.
std::array<uint8_t, 32> wrap_kek(ByteView shared, ByteView ephemeral_pk, ByteView recipient_pk) {
    ByteWriter w;
    w.lp_str("rpmchain.wrap.v1");
    w.lp(shared);
    w.lp(ephemeral_pk);
    w.lp(recipient_pk);
    return sha256(w.view()).bytes;
}

} // namespace

std::string Digest::hex() const { return to_hex(view()); }

std::optional<Digest> Digest::from_hex(std::string_view hex) {
    auto raw = rpmchain::from_hex(hex);
    if (!raw || raw->size() != 32) return std::nullopt;
    Digest d;
    std::copy(raw->begin(), raw->end(), d.bytes.begin());
    return d;
}

Digest sha256(ByteView data) {
    ensure_sodium();
    Digest out;
    crypto_hash_sha256(out.bytes.data(), data.data(), data.size());
    return out;
}

std::string PublicKey::hex() const { return to_hex(view()); }

std::optional<PublicKey> PublicKey::from_hex(std::string_view hex) {
    auto raw = rpmchain::from_hex(hex);
    if (!raw || raw->size() != 32) return std::nullopt;
    PublicKey pk;
    std::copy(raw->begin(), raw->end(), pk.bytes.begin());
    return pk;
}

KeyPair generate_keypair(ByteView seed) {
    ensure_sodium();
    if (seed.size() < 32) throw Error("key seed must provide at least 32 octets");
    std::array<uint8_t, 32> seed32;
    if (seed.size() == 32)
        std::copy(seed.begin(), seed.end(), seed32.begin());
    else
        seed32 = sha256(seed).bytes;

    KeyPair kp;
    crypto_sign_seed_keypair(kp.public_key.bytes.data(), kp.private_key.bytes.data(),
                             seed32.data());
    return kp;
}

Signature sign(const PrivateKey& key, ByteView message) {
    ensure_sodium();
    Signature sig;
    sig.bytes.resize(crypto_sign_BYTES);
    unsigned long long sig_len = 0;
    if (crypto_sign_detached(sig.bytes.data(), &sig_len, message.data(), message.size(),
                             key.bytes.data()) != 0)
        throw Error("signing failed");
    sig.bytes.resize(sig_len);
    if (crypto_sign_ed25519_sk_to_pk(sig.signer.bytes.data(), key.bytes.data()) != 0)
        throw Error("malformed private key");
    return sig;
}

bool verify(const PublicKey& key, ByteView message, const Signature& sig) {
    if (sodium_init() < 0) return false;
    if (sig.bytes.size() != crypto_sign_BYTES) return false;
    return crypto_sign_verify_detached(sig.bytes.data(), message.data(), message.size(),
                                       key.bytes.data()) == 0;
}

Ciphertext encrypt_sym(const SessionKey& key, ByteView plaintext, Drbg& rng) {
    Ciphertext ct;
    ct.scheme = Scheme::symmetric;
    ct.nonce = rng.bytes(kGcmNonceBytes);
    aead_encrypt(key.key_bytes, ct.nonce, plaintext, ct.body, ct.auth_tag);
    return ct;
}

std::optional<Bytes> decrypt_sym(const SessionKey& key, const Ciphertext& ct) {
    if (ct.scheme != Scheme::symmetric) return std::nullopt;
    return aead_decrypt(key.key_bytes, ct.nonce, ct.body, ct.auth_tag);
}

Ciphertext wrap_key(const PublicKey& recipient, const SessionKey& key, Drbg& rng) {
    ensure_sodium();
    // Recipient signing key, converted to its X25519 form.
    std::array<uint8_t, 32> recipient_curve;
    if (crypto_sign_ed25519_pk_to_curve25519(recipient_curve.data(), recipient.bytes.data()) != 0)
        throw Error("public key not convertible for key wrap");

    std::array<uint8_t, 32> eph_pk, eph_sk;
    auto eph_seed = rng.bytes32();
    crypto_box_seed_keypair(eph_pk.data(), eph_sk.data(), eph_seed.data());

    std::array<uint8_t, 32> shared;
    if (crypto_scalarmult(shared.data(), eph_sk.data(), recipient_curve.data()) != 0)
        throw Error("key agreement failed");
    auto kek = wrap_kek(shared, eph_pk, recipient_curve);

    Ciphertext ct;
    ct.scheme = Scheme::asymmetric_wrap;
    ct.nonce = rng.bytes(kGcmNonceBytes);
    Bytes sealed_body;
    aead_encrypt(kek, ct.nonce, serialize_session_key(key), sealed_body, ct.auth_tag);
    ct.body.assign(eph_pk.begin(), eph_pk.end());
    ct.body.insert(ct.body.end(), sealed_body.begin(), sealed_body.end());
    return ct;
}

std::optional<SessionKey> unwrap_key(const PrivateKey& recipient, const Ciphertext& ct) {
    if (sodium_init() < 0) return std::nullopt;
    if (ct.scheme != Scheme::asymmetric_wrap) return std::nullopt;
    if (ct.body.size() < 32) return std::nullopt;

    std::array<uint8_t, 32> recipient_curve_sk;
    if (crypto_sign_ed25519_sk_to_curve25519(recipient_curve_sk.data(), recipient.bytes.data()) !=
        0)
        return std::nullopt;
    std::array<uint8_t, 32> recipient_curve_pk;
    crypto_scalarmult_base(recipient_curve_pk.data(), recipient_curve_sk.data());

    ByteView eph_pk(ct.body.data(), 32);
    ByteView sealed_body(ct.body.data() + 32, ct.body.size() - 32);

    std::array<uint8_t, 32> shared;
    if (crypto_scalarmult(shared.data(), recipient_curve_sk.data(), eph_pk.data()) != 0)
        return std::nullopt;
    auto kek = wrap_kek(shared, eph_pk, recipient_curve_pk);

    auto plain = aead_decrypt(kek, ct.nonce, sealed_body, ct.auth_tag);
    if (!plain) return std::nullopt;
    return parse_session_key(*plain);
}

void KeyEpochRegistry::add_patient(const std::string& patient_id) {
    last_epoch_.emplace(patient_id, 0);
}

bool KeyEpochRegistry::has_patient(const std::string& patient_id) const {
    return last_epoch_.contains(patient_id);
}

SessionKey KeyEpochRegistry::generate_session_key(const std::string& patient_id, Drbg& rng) {
    auto it = last_epoch_.find(patient_id);
    if (it == last_epoch_.end()) throw Error("unknown patient: " + patient_id);
    SessionKey key;
    key.epoch = ++it->second;
    key.key_bytes = rng.bytes32();
    key.key_id = patient_id + "-k" + std::to_string(key.epoch);
    return key;
}

uint64_t KeyEpochRegistry::last_epoch(const std::string& patient_id) const {
    auto it = last_epoch_.find(patient_id);
    return it == last_epoch_.end() ? 0 : it->second;
}

} // namespace rpmchain::crypto
