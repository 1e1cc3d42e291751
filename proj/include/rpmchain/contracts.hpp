#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace rpmchain::contracts {

// Threshold smart contracts: a patient/provider pair agrees on a safe band
// for one metric; every reading outside the band raises an alert and a
// data-forwarding action. Boundary values are inside the band (no alert).

enum class MetricKind : uint8_t {
    glucose,
    heart_rate,
    blood_pressure_systolic,
    respiration,
    custom,
};

struct Metric {
    MetricKind kind = MetricKind::glucose;
    std::string custom_name;  // set iff kind == custom

    bool operator==(const Metric&) const = default;
    auto operator<=>(const Metric&) const = default;

    std::string str() const;
    static std::optional<Metric> parse(const std::string& name);
};

struct HealthReading {
    std::string patient_id;
    Metric metric;
    double value = 0.0;
    std::string unit;
    uint64_t timestamp = 0;  // logical tick
};

enum class Breach : uint8_t { below_lower, above_upper };

std::string breach_name(Breach b);

struct AlertEvent {
    std::string contract_id;
    HealthReading reading;
    Breach breach;
    uint64_t emitted_at = 0;

    // `tick=<t> contract=<id> patient=<id> metric=<m> value=<v> breach=<kind>`
    std::string log_line() const;
};

enum class ContractStatus : uint8_t { active, revoked };

struct ThresholdContract {
    std::string contract_id;
    std::string patient_id;
    std::string provider_id;
    Metric metric;
    double lower_bound = 0.0;
    double upper_bound = 0.0;
    ContractStatus status = ContractStatus::active;
};

// Stateless in the reading: same (contract, reading) gives the same result.
// Throws Error on metric/patient mismatch or a revoked contract.
std::optional<AlertEvent> evaluate(const ThresholdContract& contract,
                                   const HealthReading& reading);

class ContractRegistry {
public:
    using PartyCheck = std::function<bool(const std::string&)>;

    ContractRegistry(PartyCheck is_registered_patient, PartyCheck is_registered_provider);

    // Fresh active contract; throws if a party is unknown or lower > upper.
    std::string deploy(const std::string& patient_id, const std::string& provider_id,
                       const Metric& metric, double lower_bound, double upper_bound);

    // Only the contract's patient may revoke. Permanent within a run.
    void revoke(const std::string& contract_id, const std::string& requester_id);

    const ThresholdContract& get(const std::string& contract_id) const;

    // Active contracts matching the reading's (patient, metric), deploy order.
    std::vector<const ThresholdContract*> matching(const std::string& patient_id,
                                                   const Metric& metric) const;

    const std::vector<std::string>& ids() const { return deploy_order_; }

private:
    PartyCheck is_registered_patient_;
    PartyCheck is_registered_provider_;
    std::map<std::string, ThresholdContract> contracts_;
    std::vector<std::string> deploy_order_;
    uint64_t next_id_ = 1;
};

} // namespace rpmchain::contracts
