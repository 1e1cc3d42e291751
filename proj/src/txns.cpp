#include "rpmchain/txns.hpp"

#include "rpmchain/error.hpp"

namespace rpmchain::txns {

namespace {

void write_ciphertext(ByteWriter& w, const crypto::Ciphertext& ct) {
    w.u8(static_cast<uint8_t>(ct.scheme));
    w.lp(ct.nonce);
    w.lp(ct.body);
    w.lp(ct.auth_tag);
}

} // namespace

std::string txn_kind_name(TxnKind k) {
    switch (k) {
        case TxnKind::create: return "create";
        case TxnKind::grant: return "grant";
        case TxnKind::provider_record: return "provider_record";
    }
    return "";
}

Bytes txn_signing_bytes(const SessionKeyTxn& txn) {
    ByteWriter w;
    w.u8(static_cast<uint8_t>(txn.kind));
    w.lp_str(txn.txn_id);
    w.lp_str(txn.patient_id);
    w.lp_str(txn.provider_id);
    write_ciphertext(w, txn.wrapped_key);
    w.u64le(txn.key_epoch);
    w.u8(txn.record_ref ? 1 : 0);
    if (txn.record_ref) {
        w.lp_str(txn.record_ref->block_id);
        w.u64le(txn.record_ref->index);
    }
    return w.take();
}

Bytes serialize_txn(const SessionKeyTxn& txn) {
    ByteWriter w;
    w.raw(txn_signing_bytes(txn));
    w.lp(txn.issuer_signature.bytes);
    w.raw(txn.issuer_signature.signer.view());
    return w.take();
}

crypto::Digest txn_digest(const SessionKeyTxn& txn) {
    return crypto::sha256(serialize_txn(txn));
}

AccessManager::AccessManager(crypto::KeyEpochRegistry& epochs, overlay::Overlay& overlay,
                             overlay::Ledger& ledger, cloud::CloudStore& store,
                             const std::map<std::string, crypto::KeyPair>& node_keys, Drbg& rng)
    : epochs_(epochs), overlay_(overlay), ledger_(ledger), store_(store), node_keys_(node_keys),
      rng_(rng) {}

const crypto::KeyPair& AccessManager::keys_of(const std::string& node_id) const {
    auto it = node_keys_.find(node_id);
    if (it == node_keys_.end()) throw Error("no key pair for node " + node_id);
    return it->second;
}

std::string AccessManager::next_txn_id() { return "txn" + std::to_string(next_txn_++); }

void AccessManager::mine_txn(const SessionKeyTxn& txn, const std::string& keeper, uint64_t tick) {
    auto result =
        ledger_.propose_and_mine(keeper, txn_digest(txn), overlay::PayloadKind::txn, "", tick);
    if (result.status != overlay::Ledger::MineStatus::appended) ++mines_rejected_;
}

const SessionKeyTxn& AccessManager::txn1_create(const std::string& patient_id, uint64_t tick) {
    if (!overlay_.requestee_registered(patient_id))
        throw Error("patient not registered as requestee: " + patient_id);

    const auto& patient_keys = keys_of(patient_id);
    crypto::SessionKey key = epochs_.generate_session_key(patient_id, rng_);

    SessionKeyTxn txn;
    txn.txn_id = next_txn_id();
    txn.kind = TxnKind::create;
    txn.patient_id = patient_id;
    txn.key_epoch = key.epoch;
    txn.wrapped_key = crypto::wrap_key(patient_keys.public_key, key, rng_);
    txn.issuer_signature = crypto::sign(patient_keys.private_key, txn_signing_bytes(txn));

    device_keys_[patient_id] = key;
    log_.push_back(std::move(txn));
    mine_txn(log_.back(), overlay_.head_of(patient_id), tick);
    return log_.back();
}

const SessionKeyTxn& AccessManager::txn2_grant(const std::string& patient_id,
                                               const std::string& provider_id, uint64_t tick) {
    if (!overlay_.requester_registered(provider_id))
        throw Error("provider not registered as requester: " + provider_id);
    auto dev = device_keys_.find(patient_id);
    if (dev == device_keys_.end())
        throw Error("patient " + patient_id + " has no session key to grant");

    // The patient retrieves their own wrapped key from the network and
    // unwraps it before rewrapping for the provider.
    const auto& patient_keys = keys_of(patient_id);
    const SessionKeyTxn* create_txn = nullptr;
    for (const auto& t : log_)
        if (t.kind == TxnKind::create && t.patient_id == patient_id &&
            t.key_epoch == dev->second.epoch)
            create_txn = &t;
    if (!create_txn) throw Error("no create transaction found for " + patient_id);
    auto unwrapped = crypto::unwrap_key(patient_keys.private_key, create_txn->wrapped_key);
    if (!unwrapped || !(*unwrapped == dev->second))
        throw Error("session key recovery failed for " + patient_id);

    SessionKeyTxn txn;
    txn.txn_id = next_txn_id();
    txn.kind = TxnKind::grant;
    txn.patient_id = patient_id;
    txn.provider_id = provider_id;
    txn.key_epoch = unwrapped->epoch;
    txn.wrapped_key = crypto::wrap_key(keys_of(provider_id).public_key, *unwrapped, rng_);
    txn.issuer_signature = crypto::sign(patient_keys.private_key, txn_signing_bytes(txn));

    auto& grant = grants_[{patient_id, provider_id}];
    grant.granted_epochs.insert(unwrapped->epoch);
    grant.revoked = false;

    log_.push_back(std::move(txn));
    mine_txn(log_.back(), overlay_.head_of(patient_id), tick);
    return log_.back();
}

const SessionKeyTxn& AccessManager::txn3_provider_record(const std::string& provider_id,
                                                         const std::string& patient_id,
                                                         ByteView record_plaintext,
                                                         uint64_t tick) {
    if (!overlay_.requester_registered(provider_id))
        throw Error("provider not registered as requester: " + provider_id);
    if (!overlay_.requestee_registered(patient_id))
        throw Error("patient not registered as requestee: " + patient_id);

    const auto& provider_keys = keys_of(provider_id);
    crypto::SessionKey key = epochs_.generate_session_key(patient_id, rng_);

    cloud::SignedRecord record;
    record.record_id = store_.allocate_record_id(patient_id);
    record.patient_id = patient_id;
    record.payload = crypto::encrypt_sym(key, record_plaintext, rng_);
    record.signer_public_key = provider_keys.public_key;
    record.signature =
        crypto::sign(provider_keys.private_key, cloud::serialize_record(record));

    auto ingest = store_.ingest(record, tick);
    if (!ingest.accepted)
        throw Error("cloud discarded provider record: " +
                    cloud::discard_reason_name(ingest.reason));

    SessionKeyTxn txn;
    txn.txn_id = next_txn_id();
    txn.kind = TxnKind::provider_record;
    txn.patient_id = patient_id;
    txn.provider_id = provider_id;
    txn.key_epoch = key.epoch;
    txn.record_ref = RecordRef{ingest.block_id, ingest.record_index};
    txn.wrapped_key = crypto::wrap_key(keys_of(patient_id).public_key, key, rng_);
    txn.issuer_signature = crypto::sign(provider_keys.private_key, txn_signing_bytes(txn));

    log_.push_back(std::move(txn));
    mine_txn(log_.back(), overlay_.head_of(provider_id), tick);

    // A block auto-sealed by this ingest still needs its announcement routed.
    if (ingest.auto_sealed) {
        auto route = overlay_.route_announcement(*ingest.auto_sealed,
                                                 overlay_.head_of(patient_id), ledger_.config());
        auto mined = ledger_.propose_and_mine(route.keeper_id, ingest.auto_sealed->merkle_root,
                                              overlay::PayloadKind::data_block,
                                              ingest.auto_sealed->block_id, tick);
        if (mined.status != overlay::Ledger::MineStatus::appended) ++mines_rejected_;
    }
    return log_.back();
}

void AccessManager::revoke_access(const std::string& patient_id, const std::string& provider_id,
                                  uint64_t tick) {
    auto it = grants_.find({patient_id, provider_id});
    if (it == grants_.end() || it->second.revoked)
        throw Error("no active grant from " + patient_id + " to " + provider_id);
    it->second.revoked = true;
    txn1_create(patient_id, tick);  // rotate so future records use a new epoch
}

AccessManager::OpDecision AccessManager::request_device_operation(const std::string& provider_id,
                                                                  const std::string& device_id,
                                                                  const std::string& operation) {
    if (!overlay_.has_node(device_id) ||
        overlay_.node(device_id).role != overlay::Role::requestee)
        throw Error("unknown device: " + device_id);

    if (!overlay_.requester_registered(provider_id))
        return {false, "provider " + provider_id + " not registered"};
    auto it = grants_.find({device_id, provider_id});
    if (it == grants_.end() || it->second.revoked)
        return {false, "no active grant from " + device_id + " to " + provider_id};
    return {true, "operation '" + operation + "' authorized for " + provider_id + " on " +
                      device_id};
}

const crypto::SessionKey& AccessManager::device_key(const std::string& patient_id) const {
    auto it = device_keys_.find(patient_id);
    if (it == device_keys_.end()) throw Error("patient " + patient_id + " has no session key");
    return it->second;
}

std::optional<Bytes> AccessManager::provider_decrypt(const std::string& provider_id,
                                                     const cloud::SignedRecord& record) const {
    const auto& provider_sk = keys_of(provider_id).private_key;
    for (const auto& t : log_) {
        if (t.kind != TxnKind::grant || t.patient_id != record.patient_id ||
            t.provider_id != provider_id)
            continue;
        auto key = crypto::unwrap_key(provider_sk, t.wrapped_key);
        if (!key) continue;
        if (auto plain = crypto::decrypt_sym(*key, record.payload)) return plain;
    }
    return std::nullopt;
}

std::optional<Bytes> AccessManager::patient_decrypt(const std::string& patient_id,
                                                    const cloud::SignedRecord& record) const {
    if (record.patient_id != patient_id) return std::nullopt;
    const auto& patient_sk = keys_of(patient_id).private_key;
    for (const auto& t : log_) {
        if (t.patient_id != patient_id || t.kind == TxnKind::grant) continue;
        auto key = crypto::unwrap_key(patient_sk, t.wrapped_key);
        if (!key) continue;
        if (auto plain = crypto::decrypt_sym(*key, record.payload)) return plain;
    }
    return std::nullopt;
}

} // namespace rpmchain::txns
