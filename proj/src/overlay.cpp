#include "rpmchain/overlay.hpp"

#include "rpmchain/error.hpp"
#include "rpmchain/hex.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>

namespace rpmchain::overlay {

namespace {

bool parse_u64(const std::string& s, uint64_t& out) {
    if (s.empty()) return false;
    auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc{} && res.ptr == s.data() + s.size();
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

const std::string& elect_cluster_head(Cluster& cluster,
                                      const std::map<std::string, int>& connectivity) {
    if (cluster.member_ids.empty())
        throw Error("cannot elect a head in empty cluster " + cluster.cluster_id);

    const std::string* best = nullptr;
    int best_degree = -1;
    for (const auto& id : cluster.member_ids) {  // set iterates in id order
        auto it = connectivity.find(id);
        int degree = it == connectivity.end() ? 0 : it->second;
        if (degree > best_degree) {
            best = &id;
            best_degree = degree;
        }
    }
    cluster.head_id = *best;
    return cluster.head_id;
}

std::string payload_kind_name(PayloadKind k) {
    return k == PayloadKind::data_block ? "data_block" : "txn";
}

std::optional<PayloadKind> parse_payload_kind(const std::string& s) {
    if (s == "data_block") return PayloadKind::data_block;
    if (s == "txn") return PayloadKind::txn;
    return std::nullopt;
}

Bytes chain_block_signing_bytes(const ChainBlock& block) {
    ByteWriter w;
    w.u64le(block.height);
    w.raw(block.prev_hash.view());
    w.raw(block.payload_root.view());
    w.u8(static_cast<uint8_t>(block.payload_kind));
    w.lp_str(block.cloud_block_ref);
    w.lp_str(block.authority_id);
    w.u64le(block.timestamp);
    return w.take();
}

Bytes serialize_chain_block(const ChainBlock& block) {
    ByteWriter w;
    w.raw(chain_block_signing_bytes(block));
    w.lp(block.authority_signature.bytes);
    return w.take();
}

void Overlay::add_cluster(const std::string& cluster_id) {
    if (clusters_.contains(cluster_id)) throw Error("duplicate cluster: " + cluster_id);
    Cluster c;
    c.cluster_id = cluster_id;
    clusters_.emplace(cluster_id, std::move(c));
    cluster_order_.push_back(cluster_id);
}

void Overlay::add_node(const Node& node, int connectivity_degree) {
    if (nodes_.contains(node.node_id)) throw Error("duplicate node: " + node.node_id);
    auto it = clusters_.find(node.cluster_id);
    if (it == clusters_.end()) throw Error("unknown cluster: " + node.cluster_id);
    it->second.member_ids.insert(node.node_id);
    nodes_.emplace(node.node_id, node);
    degrees_[node.node_id] = connectivity_degree;
}

const Node& Overlay::node(const std::string& node_id) const {
    auto it = nodes_.find(node_id);
    if (it == nodes_.end()) throw Error("unknown node: " + node_id);
    return it->second;
}

bool Overlay::has_node(const std::string& node_id) const { return nodes_.contains(node_id); }

const Cluster& Overlay::cluster(const std::string& cluster_id) const {
    auto it = clusters_.find(cluster_id);
    if (it == clusters_.end()) throw Error("unknown cluster: " + cluster_id);
    return it->second;
}

std::vector<std::string> Overlay::elect_heads() {
    std::vector<std::string> heads;
    heads.reserve(cluster_order_.size());
    for (const auto& cid : cluster_order_)
        heads.push_back(elect_cluster_head(clusters_.at(cid), degrees_));
    return heads;
}

void Overlay::register_requestee(const std::string& cluster_id, const std::string& node_id,
                                 const crypto::PublicKey& key) {
    auto it = clusters_.find(cluster_id);
    if (it == clusters_.end()) throw Error("unknown cluster: " + cluster_id);
    auto& c = it->second;
    const Node& n = node(node_id);
    if (n.role != Role::requestee)
        throw Error("node " + node_id + " is not a requestee");
    if (c.requestee_keys.contains(node_id))
        throw Error("requestee already registered: " + node_id);
    c.requestee_keys.emplace(node_id, key);
}

void Overlay::register_requester(const std::string& cluster_id, const std::string& node_id,
                                 const crypto::PublicKey& key) {
    auto it = clusters_.find(cluster_id);
    if (it == clusters_.end()) throw Error("unknown cluster: " + cluster_id);
    auto& c = it->second;
    const Node& n = node(node_id);
    if (n.role != Role::requester)
        throw Error("node " + node_id + " is not a requester");
    if (c.requester_keys.contains(node_id))
        throw Error("requester already registered: " + node_id);
    c.requester_keys.emplace(node_id, key);
}

bool Overlay::key_registered(const crypto::PublicKey& key) const {
    for (const auto& [cid, c] : clusters_) {
        for (const auto& [id, k] : c.requestee_keys)
            if (k == key) return true;
        for (const auto& [id, k] : c.requester_keys)
            if (k == key) return true;
    }
    return false;
}

bool Overlay::requestee_registered(const std::string& node_id) const {
    for (const auto& [cid, c] : clusters_)
        if (c.requestee_keys.contains(node_id)) return true;
    return false;
}

bool Overlay::requester_registered(const std::string& node_id) const {
    for (const auto& [cid, c] : clusters_)
        if (c.requester_keys.contains(node_id)) return true;
    return false;
}

const std::string& Overlay::head_of(const std::string& node_id) const {
    const Node& n = node(node_id);
    const Cluster& c = cluster(n.cluster_id);
    if (c.head_id.empty()) throw Error("cluster " + c.cluster_id + " has no elected head");
    return c.head_id;
}

Overlay::RouteResult Overlay::route_announcement(const cloud::BlockAnnouncement& ann,
                                                 const std::string& origin_ch,
                                                 const PoAConfig& config) const {
    if (config.authority_ids.empty()) throw Error("no cluster heads to route through");
    auto ring_pos = std::find(config.authority_ids.begin(), config.authority_ids.end(), origin_ch);
    if (ring_pos == config.authority_ids.end())
        throw Error("origin " + origin_ch + " is not a cluster head");

    const size_t n = config.authority_ids.size();
    size_t start = static_cast<size_t>(ring_pos - config.authority_ids.begin());
    for (size_t hop = 0; hop < n; ++hop) {
        const std::string& ch = config.authority_ids[(start + hop) % n];
        const Cluster& c = cluster(node(ch).cluster_id);
        if (c.member_ids.contains(ann.patient_id)) return {ch, hop};
    }
    // full pass, nobody claimed it: the origin keeps the digest
    return {origin_ch, n};
}

Ledger::Ledger(PoAConfig config, std::map<std::string, crypto::KeyPair> authority_keys)
    : config_(std::move(config)), authority_keys_(std::move(authority_keys)) {
    if (config_.authority_ids.empty()) throw Error("authority set must not be empty");
    for (const auto& id : config_.authority_ids)
        if (!authority_keys_.contains(id)) throw Error("no key pair for authority " + id);
}

void Ledger::set_fault(const std::string& authority_id, uint64_t refuse_from_tick) {
    if (!authority_keys_.contains(authority_id))
        throw Error("unknown authority for fault: " + authority_id);
    refuse_from_[authority_id] = refuse_from_tick;
}

bool Ledger::refusing(const std::string& authority_id, uint64_t tick) const {
    auto it = refuse_from_.find(authority_id);
    return it != refuse_from_.end() && tick >= it->second;
}

const std::string& Ledger::scheduled_authority() const {
    return config_.authority_ids[slot_ % config_.authority_ids.size()];
}

Ledger::MineResult Ledger::try_mine_once(const std::string& signer_id,
                                         const crypto::Digest& payload_root, PayloadKind kind,
                                         const std::string& cloud_block_ref, uint64_t tick) {
    if (!authority_keys_.contains(signer_id)) throw Error("unknown authority: " + signer_id);
    if (signer_id != scheduled_authority())
        return {MineStatus::rejected_not_your_turn, std::nullopt, 0};

    if (refusing(signer_id, tick)) {
        ++slot_;  // the slot is spent, rotation moves on
        return {MineStatus::rejected_refused, std::nullopt, 0};
    }

    size_t acks = 0;
    for (const auto& id : config_.authority_ids)
        if (!refusing(id, tick)) ++acks;

    if (acks < config_.quorum()) {
        ++slot_;
        return {MineStatus::rejected_no_quorum, std::nullopt, acks};
    }

    ChainBlock block;
    block.height = blocks_.size();
    block.prev_hash =
        blocks_.empty() ? crypto::Digest::zero() : crypto::sha256(serialize_chain_block(blocks_.back()));
    block.payload_root = payload_root;
    block.payload_kind = kind;
    block.cloud_block_ref = cloud_block_ref;
    block.authority_id = signer_id;
    block.timestamp = tick;
    block.authority_signature =
        crypto::sign(authority_keys_.at(signer_id).private_key, chain_block_signing_bytes(block));
    blocks_.push_back(block);
    ++slot_;
    return {MineStatus::appended, std::move(block), acks};
}

Ledger::MineResult Ledger::propose_and_mine(const std::string& keeper_ch,
                                            const crypto::Digest& payload_root, PayloadKind kind,
                                            const std::string& cloud_block_ref, uint64_t tick) {
    if (!authority_keys_.contains(keeper_ch))
        throw Error("proposer " + keeper_ch + " is not an authority");

    size_t best_acks = 0;
    for (size_t attempt = 0; attempt < config_.count(); ++attempt) {
        auto result = try_mine_once(scheduled_authority(), payload_root, kind, cloud_block_ref, tick);
        if (result.status == MineStatus::appended) return result;
        best_acks = std::max(best_acks, result.acks);
    }
    return {MineStatus::rejected_no_quorum, std::nullopt, best_acks};
}

std::map<std::string, crypto::PublicKey> Ledger::authority_public_keys() const {
    std::map<std::string, crypto::PublicKey> out;
    for (const auto& [id, kp] : authority_keys_) out.emplace(id, kp.public_key);
    return out;
}

size_t Ledger::ledger_bytes() const {
    size_t total = 0;
    for (const auto& b : blocks_) total += serialize_chain_block(b).size();
    return total;
}

ChainValidation validate_chain(std::span<const ChainBlock> blocks,
                               const std::map<std::string, crypto::PublicKey>& authority_keys) {
    for (size_t k = 0; k < blocks.size(); ++k) {
        const ChainBlock& b = blocks[k];
        if (b.height != k) return {false, k, "bad_height"};
        if (k == 0) {
            if (!(b.prev_hash == crypto::Digest::zero())) return {false, 0, "bad_genesis"};
        } else {
            if (!(b.prev_hash == crypto::sha256(serialize_chain_block(blocks[k - 1]))))
                return {false, k, "bad_link"};
        }
        auto key = authority_keys.find(b.authority_id);
        if (key == authority_keys.end()) return {false, k, "unknown_authority"};
        if (!crypto::verify(key->second, chain_block_signing_bytes(b), b.authority_signature))
            return {false, k, "bad_signature"};
    }
    return {true, 0, {}};
}

std::map<std::string, crypto::PublicKey> LedgerDump::authority_key_map() const {
    std::map<std::string, crypto::PublicKey> out;
    for (const auto& [id, key] : authorities) out.emplace(id, key);
    return out;
}

void write_ledger_dump(const std::filesystem::path& path, const Ledger& ledger) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write ledger dump: " + path.string());
    const auto keys = ledger.authority_public_keys();
    for (const auto& id : ledger.config().authority_ids)
        out << "authority|" << id << '|' << keys.at(id).hex() << "\n";
    for (const auto& b : ledger.blocks()) {
        out << b.height << '|' << b.prev_hash.hex() << '|' << b.payload_root.hex() << '|'
            << payload_kind_name(b.payload_kind) << '|'
            << (b.cloud_block_ref.empty() ? "-" : b.cloud_block_ref) << '|' << b.authority_id
            << '|' << to_hex(b.authority_signature.bytes) << '|' << b.timestamp << "\n";
    }
}

ReadDumpResult read_ledger_dump(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return {std::nullopt, "cannot open ledger dump"};

    LedgerDump dump;
    std::string line;
    size_t line_no = 0;
    bool blocks_started = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) return {std::nullopt, "empty line " + std::to_string(line_no)};
        auto fields = split_fields(line);

        if (fields[0] == "authority") {
            if (blocks_started)
                return {std::nullopt, "authority line after blocks, line " + std::to_string(line_no)};
            if (fields.size() != 3) return {std::nullopt, "malformed authority line"};
            auto key = crypto::PublicKey::from_hex(fields[2]);
            if (fields[1].empty() || !key) return {std::nullopt, "malformed authority line"};
            dump.authorities.emplace_back(fields[1], *key);
            continue;
        }

        blocks_started = true;
        if (fields.size() != 8)
            return {std::nullopt, "malformed block line " + std::to_string(line_no)};
        ChainBlock b;
        auto prev = crypto::Digest::from_hex(fields[1]);
        auto root = crypto::Digest::from_hex(fields[2]);
        auto kind = parse_payload_kind(fields[3]);
        auto sig = from_hex(fields[6]);
        if (!parse_u64(fields[0], b.height) || !prev || !root || !kind || fields[5].empty() ||
            !sig || !parse_u64(fields[7], b.timestamp))
            return {std::nullopt, "malformed block line " + std::to_string(line_no)};
        b.prev_hash = *prev;
        b.payload_root = *root;
        b.payload_kind = *kind;
        b.cloud_block_ref = fields[4] == "-" ? "" : fields[4];
        b.authority_id = fields[5];
        b.authority_signature.bytes = std::move(*sig);
        dump.blocks.push_back(std::move(b));
    }
    return {std::move(dump), {}};
}

} // namespace rpmchain::overlay
