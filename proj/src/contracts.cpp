#include "rpmchain/contracts.hpp"

#include "rpmchain/error.hpp"

#include <charconv>

namespace rpmchain::contracts {

namespace {
// Shortest round-trip representation, so logs are byte-stable across runs.
std::string format_value(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}
} // namespace

std::string Metric::str() const {
    switch (kind) {
        case MetricKind::glucose: return "glucose";
        case MetricKind::heart_rate: return "heart_rate";
        case MetricKind::blood_pressure_systolic: return "blood_pressure_systolic";
        case MetricKind::respiration: return "respiration";
        case MetricKind::custom: return custom_name;
    }
    return "";
}

std::optional<Metric> Metric::parse(const std::string& name) {
    if (name == "glucose") return Metric{MetricKind::glucose, {}};
    if (name == "heart_rate") return Metric{MetricKind::heart_rate, {}};
    if (name == "blood_pressure_systolic") return Metric{MetricKind::blood_pressure_systolic, {}};
    if (name == "respiration") return Metric{MetricKind::respiration, {}};
    if (name.empty()) return std::nullopt;
    return Metric{MetricKind::custom, name};
}

std::string breach_name(Breach b) {
    return b == Breach::below_lower ? "below_lower" : "above_upper";
}

std::string AlertEvent::log_line() const {
    return "tick=" + std::to_string(emitted_at) + " contract=" + contract_id +
           " patient=" + reading.patient_id + " metric=" + reading.metric.str() +
           " value=" + format_value(reading.value) + " breach=" + breach_name(breach);
}

std::optional<AlertEvent> evaluate(const ThresholdContract& contract,
                                   const HealthReading& reading) {
    if (contract.status == ContractStatus::revoked)
        throw Error("contract " + contract.contract_id + " is revoked");
    if (reading.patient_id != contract.patient_id)
        throw Error("reading patient does not match contract " + contract.contract_id);
    if (!(reading.metric == contract.metric))
        throw Error("reading metric does not match contract " + contract.contract_id);

    // Strictly beyond the band; the bounds themselves are safe.
    if (reading.value > contract.upper_bound)
        return AlertEvent{contract.contract_id, reading, Breach::above_upper, reading.timestamp};
    if (reading.value < contract.lower_bound)
        return AlertEvent{contract.contract_id, reading, Breach::below_lower, reading.timestamp};
    return std::nullopt;
}

ContractRegistry::ContractRegistry(PartyCheck is_registered_patient,
                                   PartyCheck is_registered_provider)
    : is_registered_patient_(std::move(is_registered_patient)),
      is_registered_provider_(std::move(is_registered_provider)) {}

std::string ContractRegistry::deploy(const std::string& patient_id,
                                     const std::string& provider_id, const Metric& metric,
                                     double lower_bound, double upper_bound) {
    if (!is_registered_patient_(patient_id)) throw Error("unknown patient: " + patient_id);
    if (!is_registered_provider_(provider_id)) throw Error("unknown provider: " + provider_id);
    if (lower_bound > upper_bound)
        throw Error("lower bound exceeds upper bound for contract on " + patient_id);

    ThresholdContract contract;
    contract.contract_id = "ct" + std::to_string(next_id_++);
    contract.patient_id = patient_id;
    contract.provider_id = provider_id;
    contract.metric = metric;
    contract.lower_bound = lower_bound;
    contract.upper_bound = upper_bound;
    contract.status = ContractStatus::active;

    deploy_order_.push_back(contract.contract_id);
    auto id = contract.contract_id;
    contracts_.emplace(id, std::move(contract));
    return id;
}

void ContractRegistry::revoke(const std::string& contract_id, const std::string& requester_id) {
    auto it = contracts_.find(contract_id);
    if (it == contracts_.end()) throw Error("unknown contract: " + contract_id);
    if (it->second.patient_id != requester_id)
        throw Error("only the patient may revoke contract " + contract_id);
    it->second.status = ContractStatus::revoked;
}

const ThresholdContract& ContractRegistry::get(const std::string& contract_id) const {
    auto it = contracts_.find(contract_id);
    if (it == contracts_.end()) throw Error("unknown contract: " + contract_id);
    return it->second;
}

std::vector<const ThresholdContract*> ContractRegistry::matching(const std::string& patient_id,
                                                                 const Metric& metric) const {
    std::vector<const ThresholdContract*> out;
    for (const auto& id : deploy_order_) {
        const auto& c = contracts_.at(id);
        if (c.status == ContractStatus::active && c.patient_id == patient_id &&
            c.metric == metric)
            out.push_back(&c);
    }
    return out;
}

} // namespace rpmchain::contracts
