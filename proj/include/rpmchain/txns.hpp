#pragma once

#include "rpmchain/cloud_store.hpp"
#include "rpmchain/crypto.hpp"
#include "rpmchain/overlay.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace rpmchain::txns {

// The three session-key transactions that realize patient-controlled access:
//   create          — patient mints a session key, wrapped under their own key
//   grant           — patient rewraps the current key under a provider's key
//   provider_record — provider stores a record for the patient under a fresh
//                     key wrapped back to the patient
// Every transaction's digest is mined onto the overlay ledger.

enum class TxnKind : uint8_t { create = 0, grant = 1, provider_record = 2 };

std::string txn_kind_name(TxnKind k);

struct RecordRef {
    std::string block_id;
    uint64_t index = 0;
};

struct SessionKeyTxn {
    std::string txn_id;
    TxnKind kind = TxnKind::create;
    std::string patient_id;
    std::string provider_id;  // empty for create
    crypto::Ciphertext wrapped_key;
    uint64_t key_epoch = 0;
    std::optional<RecordRef> record_ref;  // provider_record only
    crypto::Signature issuer_signature;
};

Bytes txn_signing_bytes(const SessionKeyTxn& txn);
Bytes serialize_txn(const SessionKeyTxn& txn);
crypto::Digest txn_digest(const SessionKeyTxn& txn);

struct GrantState {
    std::set<uint64_t> granted_epochs;
    bool revoked = false;
};

class AccessManager {
public:
    AccessManager(crypto::KeyEpochRegistry& epochs, overlay::Overlay& overlay,
                  overlay::Ledger& ledger, cloud::CloudStore& store,
                  const std::map<std::string, crypto::KeyPair>& node_keys, Drbg& rng);

    const SessionKeyTxn& txn1_create(const std::string& patient_id, uint64_t tick);
    const SessionKeyTxn& txn2_grant(const std::string& patient_id,
                                    const std::string& provider_id, uint64_t tick);
    const SessionKeyTxn& txn3_provider_record(const std::string& provider_id,
                                              const std::string& patient_id,
                                              ByteView record_plaintext, uint64_t tick);

    // Marks the grant revoked and rotates the patient to a fresh epoch, so
    // records written from now on are unreadable under the old grant.
    void revoke_access(const std::string& patient_id, const std::string& provider_id,
                       uint64_t tick);

    struct OpDecision {
        bool approved = false;
        std::string detail;
    };

    // Approved iff the provider is a registered requester holding an
    // unrevoked grant for the device's patient. Throws for unknown devices.
    OpDecision request_device_operation(const std::string& provider_id,
                                        const std::string& device_id,
                                        const std::string& operation);

    // Key the patient's device currently encrypts with. Throws if no create
    // transaction has happened yet.
    const crypto::SessionKey& device_key(const std::string& patient_id) const;

    // Decryption as the provider would perform it: unwrap every grant the
    // ledger holds for (record's patient, provider) and try each key.
    std::optional<Bytes> provider_decrypt(const std::string& provider_id,
                                          const cloud::SignedRecord& record) const;

    // Decryption as the patient: create txns plus provider_record wraps.
    std::optional<Bytes> patient_decrypt(const std::string& patient_id,
                                         const cloud::SignedRecord& record) const;

    const std::vector<SessionKeyTxn>& txn_log() const { return log_; }
    const std::map<std::pair<std::string, std::string>, GrantState>& grants() const {
        return grants_;
    }
    uint64_t mines_rejected() const { return mines_rejected_; }

private:
    const crypto::KeyPair& keys_of(const std::string& node_id) const;
    void mine_txn(const SessionKeyTxn& txn, const std::string& keeper, uint64_t tick);
    std::string next_txn_id();

    crypto::KeyEpochRegistry& epochs_;
    overlay::Overlay& overlay_;
    overlay::Ledger& ledger_;
    cloud::CloudStore& store_;
    const std::map<std::string, crypto::KeyPair>& node_keys_;
    Drbg& rng_;

    std::vector<SessionKeyTxn> log_;
    std::map<std::string, crypto::SessionKey> device_keys_;
    std::map<std::pair<std::string, std::string>, GrantState> grants_;
    uint64_t next_txn_ = 1;
    uint64_t mines_rejected_ = 0;
};

} // namespace rpmchain::txns
