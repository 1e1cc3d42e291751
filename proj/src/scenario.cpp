#include "rpmchain/scenario.hpp"

#include "rpmchain/error.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace rpmchain::sim {

namespace {

using nlohmann::json;

overlay::Role parse_role(const std::string& s) {
    if (s == "requestee") return overlay::Role::requestee;
    if (s == "requester") return overlay::Role::requester;
    throw Error("scenario: unknown role '" + s + "'");
}

contracts::Metric parse_metric(const std::string& s) {
    auto m = contracts::Metric::parse(s);
    if (!m) throw Error("scenario: unknown metric '" + s + "'");
    return *m;
}

contracts::HealthReading parse_reading(const json& j) {
    contracts::HealthReading r;
    r.patient_id = j.at("patient_id").get<std::string>();
    r.metric = parse_metric(j.at("metric").get<std::string>());
    r.value = j.at("value").get<double>();
    r.unit = j.value("unit", std::string{});
    r.timestamp = j.at("tick").get<uint64_t>();
    return r;
}

std::vector<contracts::HealthReading> load_telemetry_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open telemetry file: " + path.string());
    std::vector<contracts::HealthReading> out;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            out.push_back(parse_reading(json::parse(line)));
        } catch (const json::exception& e) {
            throw Error("telemetry line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

} // namespace

Scenario parse_scenario_text(const std::string& text, const std::filesystem::path& base_dir) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(std::string("scenario: ") + e.what());
    }

    Scenario s;
    try {
        s.seed = j.value("seed", uint64_t{0});

        for (const auto& jc : j.at("clusters")) {
            ClusterSpec c;
            c.cluster_id = jc.at("cluster_id").get<std::string>();
            for (const auto& jm : jc.at("members")) {
                MemberSpec m;
                m.node_id = jm.at("node_id").get<std::string>();
                m.role = parse_role(jm.at("role").get<std::string>());
                m.degree = jm.value("degree", 0);
                c.members.push_back(std::move(m));
            }
            s.clusters.push_back(std::move(c));
        }

        for (const auto& jp : j.value("patients", json::array()))
            s.patients.push_back(jp.at("patient_id").get<std::string>());
        for (const auto& jp : j.value("providers", json::array()))
            s.providers.push_back(jp.at("provider_id").get<std::string>());

        for (const auto& jc : j.value("contracts", json::array())) {
            ContractSpec c;
            c.patient_id = jc.at("patient_id").get<std::string>();
            c.provider_id = jc.at("provider_id").get<std::string>();
            c.metric = parse_metric(jc.at("metric").get<std::string>());
            c.lower_bound = jc.at("lower_bound").get<double>();
            c.upper_bound = jc.at("upper_bound").get<double>();
            s.contracts.push_back(std::move(c));
        }

        for (const auto& jg : j.value("grants", json::array()))
            s.grants.push_back({jg.at("tick").get<uint64_t>(),
                                jg.at("patient_id").get<std::string>(),
                                jg.at("provider_id").get<std::string>()});
        for (const auto& jr : j.value("revokes", json::array()))
            s.revokes.push_back({jr.at("tick").get<uint64_t>(),
                                 jr.at("patient_id").get<std::string>(),
                                 jr.at("provider_id").get<std::string>()});
        for (const auto& jd : j.value("device_ops", json::array()))
            s.device_ops.push_back({jd.at("tick").get<uint64_t>(),
                                    jd.at("provider_id").get<std::string>(),
                                    jd.at("device_id").get<std::string>(),
                                    jd.at("operation").get<std::string>()});
        for (const auto& jf : j.value("faults", json::array()))
            s.faults.push_back({jf.at("authority_id").get<std::string>(),
                                jf.at("refuse_from_tick").get<uint64_t>()});

        if (j.contains("telemetry_file")) {
            auto rel = j.at("telemetry_file").get<std::string>();
            s.telemetry = load_telemetry_file(base_dir / rel);
        }
        for (const auto& jt : j.value("telemetry", json::array()))
            s.telemetry.push_back(parse_reading(jt));
    } catch (const json::exception& e) {
        throw Error(std::string("scenario: ") + e.what());
    }

    return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open scenario: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario_text(buf.str(), path.parent_path());
}

void validate_scenario(const Scenario& s) {
    if (s.clusters.empty()) throw Error("scenario: no clusters");

    std::set<std::string> cluster_ids;
    std::map<std::string, overlay::Role> roles;
    std::map<std::string, int> degrees;
    for (const auto& c : s.clusters) {
        if (c.cluster_id.empty()) throw Error("scenario: empty cluster id");
        if (!cluster_ids.insert(c.cluster_id).second)
            throw Error("scenario: duplicate cluster " + c.cluster_id);
        if (c.members.empty()) throw Error("scenario: cluster " + c.cluster_id + " is empty");
        for (const auto& m : c.members) {
            if (m.node_id.empty()) throw Error("scenario: empty node id");
            if (roles.count(m.node_id)) throw Error("scenario: duplicate node " + m.node_id);
            if (m.degree < 0) throw Error("scenario: negative degree for " + m.node_id);
            roles[m.node_id] = m.role;
            degrees[m.node_id] = m.degree;
        }
    }

    std::set<std::string> patients, providers;
    for (const auto& p : s.patients) {
        auto it = roles.find(p);
        if (it == roles.end()) throw Error("scenario: patient " + p + " is not a node");
        if (it->second != overlay::Role::requestee)
            throw Error("scenario: patient " + p + " must be a requestee node");
        if (!patients.insert(p).second) throw Error("scenario: duplicate patient " + p);
    }
    for (const auto& p : s.providers) {
        auto it = roles.find(p);
        if (it == roles.end()) throw Error("scenario: provider " + p + " is not a node");
        if (it->second != overlay::Role::requester)
            throw Error("scenario: provider " + p + " must be a requester node");
        if (!providers.insert(p).second) throw Error("scenario: duplicate provider " + p);
    }

    for (const auto& c : s.contracts) {
        if (!patients.count(c.patient_id))
            throw Error("scenario: contract references unknown patient " + c.patient_id);
        if (!providers.count(c.provider_id))
            throw Error("scenario: contract references unknown provider " + c.provider_id);
        if (c.lower_bound > c.upper_bound)
            throw Error("scenario: contract bounds inverted for " + c.patient_id);
    }

    auto check_pair = [&](const GrantEvent& g, const char* what) {
        if (!patients.count(g.patient_id))
            throw Error(std::string("scenario: ") + what + " references unknown patient " +
                        g.patient_id);
        if (!providers.count(g.provider_id))
            throw Error(std::string("scenario: ") + what + " references unknown provider " +
                        g.provider_id);
    };
    for (const auto& g : s.grants) check_pair(g, "grant");
    for (const auto& r : s.revokes) check_pair(r, "revoke");

    // Replay the grant/revoke schedule the way the tick loop runs it
    // (grants before revokes within a tick) so a revoke can never hit a
    // missing grant mid-run.
    uint64_t horizon = 0;
    for (const auto& g : s.grants) horizon = std::max(horizon, g.tick);
    for (const auto& r : s.revokes) horizon = std::max(horizon, r.tick);
    std::set<std::pair<std::string, std::string>> active;
    for (uint64_t tick = 0; tick <= horizon; ++tick) {
        for (const auto& g : s.grants)
            if (g.tick == tick) active.insert({g.patient_id, g.provider_id});
        for (const auto& r : s.revokes) {
            if (r.tick != tick) continue;
            if (!active.erase({r.patient_id, r.provider_id}))
                throw Error("scenario: revoke at tick " + std::to_string(tick) + " for " +
                            r.patient_id + "/" + r.provider_id + " has no active grant");
        }
    }
    for (const auto& d : s.device_ops) {
        if (!patients.count(d.device_id))
            throw Error("scenario: device op references unknown device " + d.device_id);
        if (!providers.count(d.provider_id))
            throw Error("scenario: device op references unknown provider " + d.provider_id);
    }

    // Heads are a pure function of the cluster layout, so fault targets can
    // be checked up front.
    std::set<std::string> heads;
    for (const auto& c : s.clusters) {
        overlay::Cluster tmp;
        tmp.cluster_id = c.cluster_id;
        for (const auto& m : c.members) tmp.member_ids.insert(m.node_id);
        heads.insert(overlay::elect_cluster_head(tmp, degrees));
    }
    for (const auto& f : s.faults)
        if (!heads.count(f.authority_id))
            throw Error("scenario: fault target " + f.authority_id + " is not a cluster head");

    uint64_t last_tick = 0;
    for (const auto& r : s.telemetry) {
        if (!patients.count(r.patient_id))
            throw Error("scenario: telemetry references unknown patient " + r.patient_id);
        if (!std::isfinite(r.value)) throw Error("scenario: non-finite telemetry value");
        if (r.timestamp < last_tick) throw Error("scenario: telemetry ticks must not decrease");
        last_tick = r.timestamp;
    }
}

} // namespace rpmchain::sim
