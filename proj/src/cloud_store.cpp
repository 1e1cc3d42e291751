#include "rpmchain/cloud_store.hpp"

#include "rpmchain/error.hpp"
#include "rpmchain/hex.hpp"

#include <fstream>
#include <sstream>

namespace rpmchain::cloud {

namespace {

std::string pad4(uint64_t n) {
    std::string s = std::to_string(n);
    return s.size() >= 4 ? s : std::string(4 - s.size(), '0') + s;
}

std::vector<Bytes> record_leaves(const std::vector<SignedRecord>& records) {
    std::vector<Bytes> leaves;
    leaves.reserve(records.size());
    for (const auto& r : records) leaves.push_back(serialize_record(r));
    return leaves;
}

bool valid_id(const std::string& id) {
    if (id.empty()) return false;
    for (char c : id) {
        bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                  c == '-' || c == '_' || c == '.';
        if (!ok) return false;
    }
    return true;
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == '|') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    fields.push_back(std::move(cur));
    return fields;
}

} // namespace

Bytes serialize_record(const SignedRecord& record) {
    ByteWriter w;
    w.lp_str(record.record_id);
    w.lp_str(record.patient_id);
    w.lp(record.payload.nonce);
    w.lp(record.payload.body);
    w.lp(record.payload.auth_tag);
    return w.take();
}

std::string discard_reason_name(DiscardReason r) {
    switch (r) {
        case DiscardReason::missing_signature: return "missing_signature";
        case DiscardReason::unregistered_signer: return "unregistered_signer";
        case DiscardReason::bad_signature: return "bad_signature";
    }
    return "";
}

CloudStore::CloudStore(KeyCheck is_registered_key, size_t block_capacity)
    : is_registered_key_(std::move(is_registered_key)), block_capacity_(block_capacity) {
    if (block_capacity_ == 0) throw Error("block capacity must be positive");
}

void CloudStore::set_persist_dir(const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    persist_dir_ = dir;
}

std::string CloudStore::allocate_record_id(const std::string& patient_id) {
    uint64_t n = ++next_record_seq_[patient_id];
    return patient_id + "-r" + std::to_string(n);
}

CloudStore::OpenBlock& CloudStore::open_block(const std::string& patient_id) {
    auto it = open_.find(patient_id);
    if (it == open_.end()) {
        uint64_t seq = ++next_block_seq_[patient_id];
        OpenBlock blk;
        blk.block_id = patient_id + "-b" + pad4(seq);
        it = open_.emplace(patient_id, std::move(blk)).first;
    }
    return it->second;
}

IngestResult CloudStore::ingest(SignedRecord record, uint64_t tick) {
    IngestResult result;
    if (record.signature.empty()) {
        result.reason = DiscardReason::missing_signature;
        ++discarded_;
        return result;
    }
    if (!is_registered_key_(record.signer_public_key)) {
        result.reason = DiscardReason::unregistered_signer;
        ++discarded_;
        return result;
    }
    if (!crypto::verify(record.signer_public_key, serialize_record(record), record.signature)) {
        result.reason = DiscardReason::bad_signature;
        ++discarded_;
        return result;
    }

    auto& blk = open_block(record.patient_id);
    result.accepted = true;
    result.block_id = blk.block_id;
    result.record_index = blk.records.size();
    const std::string patient_id = record.patient_id;
    blk.records.push_back(std::move(record));
    ++accepted_;

    if (blk.records.size() >= block_capacity_) result.auto_sealed = seal_open(patient_id, tick);
    return result;
}

BlockAnnouncement CloudStore::seal_open(const std::string& patient_id, uint64_t tick) {
    auto it = open_.find(patient_id);
    DataBlock block;
    block.block_id = it->second.block_id;
    block.patient_id = patient_id;
    block.records = std::move(it->second.records);
    block.sealed_at = tick;
    block.merkle_root = merkle::build_tree(record_leaves(block.records)).root();
    open_.erase(it);

    BlockAnnouncement ann{block.block_id, patient_id, block.merkle_root};
    if (persist_dir_) write_block_file(*persist_dir_, block);
    seal_order_.push_back(block.block_id);
    sealed_.emplace(block.block_id, std::move(block));
    return ann;
}

BlockAnnouncement CloudStore::seal_block(const std::string& patient_id, uint64_t tick) {
    auto it = open_.find(patient_id);
    if (it == open_.end() || it->second.records.empty())
        throw Error("no open records to seal for patient " + patient_id);
    return seal_open(patient_id, tick);
}

std::vector<BlockAnnouncement> CloudStore::seal_all(uint64_t tick) {
    std::vector<BlockAnnouncement> out;
    // std::map keeps patient order deterministic
    for (auto it = open_.begin(); it != open_.end();) {
        const std::string patient_id = it->first;
        ++it;  // seal_open erases the entry
        out.push_back(seal_open(patient_id, tick));
    }
    return out;
}

CloudStore::FetchResult CloudStore::fetch_record(const std::string& block_id, size_t index) const {
    auto it = sealed_.find(block_id);
    if (it == sealed_.end()) throw Error("unknown or unsealed block: " + block_id);
    const DataBlock& block = it->second;
    if (index >= block.records.size())
        throw Error("record index out of range in block " + block_id);
    auto tree = merkle::build_tree(record_leaves(block.records));
    return {block.records[index], tree.prove(index)};
}

AuditResult CloudStore::audit_block(const std::string& block_id,
                                    const crypto::Digest& ledger_root) const {
    auto it = sealed_.find(block_id);
    if (it == sealed_.end()) throw Error("unknown block: " + block_id);
    return audit_records(block_id, it->second.records, it->second.merkle_root, ledger_root);
}

const DataBlock& CloudStore::sealed(const std::string& block_id) const {
    auto it = sealed_.find(block_id);
    if (it == sealed_.end()) throw Error("unknown block: " + block_id);
    return it->second;
}

std::filesystem::path write_block_file(const std::filesystem::path& dir, const DataBlock& block) {
    std::filesystem::create_directories(dir);
    auto path = dir / block.block_id;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write block file: " + path.string());
    out << "root|" << block.merkle_root.hex() << "\n";
    for (const auto& r : block.records) {
        out << "record|" << r.record_id << '|' << r.patient_id << '|' << to_hex(r.payload.nonce)
            << '|' << to_hex(r.payload.body) << '|' << to_hex(r.payload.auth_tag) << '|'
            << to_hex(r.signature.bytes) << '|' << r.signer_public_key.hex() << "\n";
    }
    return path;
}

ReadBlockResult read_block_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return {std::nullopt, "cannot open block file"};

    ParsedBlockFile parsed;
    std::string line;
    bool have_root = false;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) return {std::nullopt, "empty line " + std::to_string(line_no)};
        auto fields = split_fields(line);
        if (!have_root) {
            if (fields.size() != 2 || fields[0] != "root")
                return {std::nullopt, "malformed root line"};
            auto root = crypto::Digest::from_hex(fields[1]);
            if (!root) return {std::nullopt, "malformed root digest"};
            parsed.stored_root = *root;
            have_root = true;
            continue;
        }
        if (fields.size() != 8 || fields[0] != "record")
            return {std::nullopt, "malformed record line " + std::to_string(line_no)};

        SignedRecord r;
        r.record_id = fields[1];
        r.patient_id = fields[2];
        if (!valid_id(r.record_id) || !valid_id(r.patient_id))
            return {std::nullopt, "malformed id on line " + std::to_string(line_no)};
        auto nonce = from_hex(fields[3]);
        auto body = from_hex(fields[4]);
        auto tag = from_hex(fields[5]);
        auto sig = from_hex(fields[6]);
        auto signer = crypto::PublicKey::from_hex(fields[7]);
        if (!nonce || !body || !tag || !sig || !signer)
            return {std::nullopt, "malformed hex on line " + std::to_string(line_no)};
        r.payload.scheme = crypto::Scheme::symmetric;
        r.payload.nonce = std::move(*nonce);
        r.payload.body = std::move(*body);
        r.payload.auth_tag = std::move(*tag);
        r.signature.bytes = std::move(*sig);
        r.signature.signer = *signer;
        r.signer_public_key = *signer;
        parsed.records.push_back(std::move(r));
    }
    if (!have_root) return {std::nullopt, "missing root line"};
    if (parsed.records.empty()) return {std::nullopt, "block file has no records"};
    return {std::move(parsed), {}};
}

AuditResult audit_records(const std::string& block_id, const std::vector<SignedRecord>& records,
                          const std::optional<crypto::Digest>& stored_root,
                          const crypto::Digest& ledger_root) {
    if (records.empty()) return {false, "block " + block_id + ": no records"};

    for (size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        if (r.patient_id != records[0].patient_id)
            return {false, "block " + block_id + ": mixed patients"};
        if (!crypto::verify(r.signer_public_key, serialize_record(r), r.signature))
            return {false,
                    "block " + block_id + ": record " + std::to_string(i) + " signature invalid"};
    }

    auto root = merkle::build_tree(record_leaves(records)).root();
    if (stored_root && !(*stored_root == root))
        return {false, "block " + block_id + ": stored root mismatch"};
    if (!(root == ledger_root))
        return {false, "block " + block_id + ": root differs from ledger"};
    return {true, {}};
}

} // namespace rpmchain::cloud
