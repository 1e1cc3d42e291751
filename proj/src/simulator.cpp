#include "rpmchain/simulator.hpp"

#include "rpmchain/audit.hpp"
#include "rpmchain/cloud_store.hpp"
#include "rpmchain/crypto.hpp"
#include "rpmchain/error.hpp"
#include "rpmchain/hex.hpp"
#include "rpmchain/txns.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace rpmchain::sim {

namespace {

Bytes node_key_seed(uint64_t run_seed, const std::string& node_id) {
    ByteWriter w;
    w.lp_str("rpmchain.node-key.v1");
    w.u64le(run_seed);
    w.lp_str(node_id);
    auto digest = crypto::sha256(w.view());
    return Bytes(digest.bytes.begin(), digest.bytes.end());
}

Bytes reading_plaintext(const contracts::HealthReading& r) {
    ByteWriter w;
    w.lp_str(r.patient_id);
    w.lp_str(r.metric.str());
    w.f64le(r.value);
    w.lp_str(r.unit);
    w.u64le(r.timestamp);
    return w.take();
}

struct Pipeline {
    Pipeline(const Scenario& scenario, const std::filesystem::path& out_dir)
        : rng(scenario.seed),
          store([this](const crypto::PublicKey& k) { return net.key_registered(k); }) {
        // Overlay topology and node keys.
        for (const auto& c : scenario.clusters) {
            net.add_cluster(c.cluster_id);
            for (const auto& m : c.members) {
                auto kp = crypto::generate_keypair(node_key_seed(scenario.seed, m.node_id));
                node_keys.emplace(m.node_id, kp);
                net.add_node({m.node_id, m.role, kp.public_key, c.cluster_id}, m.degree);
            }
        }
        auto heads = net.elect_heads();

        // Key registries, per the node's own cluster.
        for (const auto& c : scenario.clusters) {
            for (const auto& m : c.members) {
                const auto& pk = node_keys.at(m.node_id).public_key;
                if (m.role == overlay::Role::requestee)
                    net.register_requestee(c.cluster_id, m.node_id, pk);
                else
                    net.register_requester(c.cluster_id, m.node_id, pk);
            }
        }

        std::map<std::string, crypto::KeyPair> authority_keys;
        for (const auto& h : heads) authority_keys.emplace(h, node_keys.at(h));
        ledger.emplace(overlay::PoAConfig{heads}, std::move(authority_keys));
        for (const auto& f : scenario.faults) ledger->set_fault(f.authority_id, f.refuse_from_tick);

        for (const auto& p : scenario.patients) epochs.add_patient(p);

        store.set_persist_dir(out_dir / "cloud");
        access.emplace(epochs, net, *ledger, store, node_keys, rng);

        registry.emplace([this](const std::string& id) { return net.requestee_registered(id); },
                         [this](const std::string& id) { return net.requester_registered(id); });
        for (const auto& c : scenario.contracts)
            registry->deploy(c.patient_id, c.provider_id, c.metric, c.lower_bound, c.upper_bound);
    }

    void route_and_mine(const cloud::BlockAnnouncement& ann, const std::string& patient_id,
                        uint64_t tick, RunReport& report) {
        auto route = net.route_announcement(ann, net.head_of(patient_id), ledger->config());
        auto mined = ledger->propose_and_mine(route.keeper_id, ann.merkle_root,
                                              overlay::PayloadKind::data_block, ann.block_id, tick);
        if (mined.status != overlay::Ledger::MineStatus::appended) ++report.mines_rejected;
    }

    Drbg rng;
    overlay::Overlay net;
    std::map<std::string, crypto::KeyPair> node_keys;
    crypto::KeyEpochRegistry epochs;
    cloud::CloudStore store;
    std::optional<overlay::Ledger> ledger;
    std::optional<txns::AccessManager> access;
    std::optional<contracts::ContractRegistry> registry;
};

} // namespace

std::string RunReport::text() const {
    std::ostringstream out;
    out << "readings_processed=" << readings_processed << "\n"
        << "alerts_emitted=" << alerts_emitted << "\n"
        << "records_stored=" << records_stored << "\n"
        << "records_discarded=" << records_discarded << "\n"
        << "blocks_sealed=" << blocks_sealed << "\n"
        << "chain_height=" << chain_height << "\n"
        << "txns_issued=" << txns_issued << "\n"
        << "mines_rejected=" << mines_rejected << "\n";
    for (const auto& [id, n] : blocks_signed_by)
        out << "blocks_signed_by " << id << "=" << n << "\n";
    for (const auto& line : device_op_lines) out << line << "\n";
    out << "audit=" << (audit_pass ? "pass" : "fail") << "\n";
    if (!audit_pass) out << audit_detail;
    return out.str();
}

RunReport run_scenario(const Scenario& scenario, const std::filesystem::path& out_dir) {
    validate_scenario(scenario);

    std::filesystem::create_directories(out_dir);
    Pipeline p(scenario, out_dir);
    RunReport report;

    std::vector<std::string> alert_lines;

    // Every patient bootstraps a session key before any telemetry flows.
    for (const auto& patient : scenario.patients) p.access->txn1_create(patient, 0);

    uint64_t max_tick = 0;
    for (const auto& e : scenario.grants) max_tick = std::max(max_tick, e.tick);
    for (const auto& e : scenario.revokes) max_tick = std::max(max_tick, e.tick);
    for (const auto& e : scenario.device_ops) max_tick = std::max(max_tick, e.tick);
    if (!scenario.telemetry.empty())
        max_tick = std::max(max_tick, scenario.telemetry.back().timestamp);

    size_t next_reading = 0;
    for (uint64_t tick = 0; tick <= max_tick; ++tick) {
        for (const auto& g : scenario.grants)
            if (g.tick == tick) p.access->txn2_grant(g.patient_id, g.provider_id, tick);
        for (const auto& r : scenario.revokes)
            if (r.tick == tick) p.access->revoke_access(r.patient_id, r.provider_id, tick);
        for (const auto& d : scenario.device_ops) {
            if (d.tick != tick) continue;
            auto decision = p.access->request_device_operation(d.provider_id, d.device_id,
                                                               d.operation);
            report.device_op_lines.push_back(
                "device_op tick=" + std::to_string(tick) + " provider=" + d.provider_id +
                " device=" + d.device_id + " operation=" + d.operation +
                " decision=" + (decision.approved ? "approved" : "denied"));
        }

        for (; next_reading < scenario.telemetry.size() &&
               scenario.telemetry[next_reading].timestamp == tick;
             ++next_reading) {
            const auto& reading = scenario.telemetry[next_reading];
            ++report.readings_processed;

            std::vector<contracts::AlertEvent> alerts;
            for (const auto* contract : p.registry->matching(reading.patient_id, reading.metric))
                if (auto alert = contracts::evaluate(*contract, reading))
                    alerts.push_back(std::move(*alert));
            if (alerts.empty()) continue;  // in-band readings are not persisted

            // Store first so every alert has an auditable record.
            cloud::SignedRecord record;
            record.record_id = p.store.allocate_record_id(reading.patient_id);
            record.patient_id = reading.patient_id;
            record.payload = crypto::encrypt_sym(p.access->device_key(reading.patient_id),
                                                 reading_plaintext(reading), p.rng);
            const auto& device_keys = p.node_keys.at(reading.patient_id);
            record.signer_public_key = device_keys.public_key;
            record.signature =
                crypto::sign(device_keys.private_key, cloud::serialize_record(record));

            auto outcome = p.store.ingest(std::move(record), tick);
            if (outcome.accepted) {
                ++report.records_stored;
                if (outcome.auto_sealed)
                    p.route_and_mine(*outcome.auto_sealed, reading.patient_id, tick, report);
            } else {
                ++report.records_discarded;
            }

            for (auto& alert : alerts) {
                alert_lines.push_back(alert.log_line());
                ++report.alerts_emitted;
            }
        }
    }

    // Nothing stays stranded in an open block.
    for (const auto& ann : p.store.seal_all(max_tick))
        p.route_and_mine(ann, ann.patient_id, max_tick, report);

    report.blocks_sealed = p.store.sealed_ids().size();
    report.chain_height = p.ledger->blocks().size();
    report.txns_issued = p.access->txn_log().size();
    report.mines_rejected += p.access->mines_rejected();
    for (const auto& b : p.ledger->blocks()) ++report.blocks_signed_by[b.authority_id];

    {
        std::ofstream alerts(out_dir / "alerts.log", std::ios::binary);
        if (!alerts) throw Error("cannot write alerts.log");
        for (const auto& line : alert_lines) alerts << line << "\n";
    }
    {
        std::ofstream txlog(out_dir / "txns.log", std::ios::binary);
        if (!txlog) throw Error("cannot write txns.log");
        for (const auto& t : p.access->txn_log()) txlog << to_hex(txns::serialize_txn(t)) << "\n";
    }
    overlay::write_ledger_dump(out_dir / "ledger.dump", *p.ledger);

    auto audit = audit_run(out_dir / "ledger.dump", out_dir / "cloud");
    report.audit_pass = audit.exit_code == kExitOk;
    report.audit_detail = audit.report;
    return report;
}

} // namespace rpmchain::sim
