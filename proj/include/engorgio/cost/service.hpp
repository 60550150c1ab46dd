#pragma once

#include "engorgio/cost/flops.hpp"
#include "engorgio/rng.hpp"

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

namespace engorgio::cost {

inline constexpr std::int64_t kPromptOverhead = 32;

struct ServiceModel {
    std::int64_t capacity = 2;        // C: token generations per batch
    double batch_seconds = 1.0;       // T_b
    std::int64_t requests = 10;       // r
    std::int64_t attackers = 0;       // k
    std::int64_t normal_tokens = 100; // c_n
    std::int64_t attack_avg_len = 1032;  // z; each attacker costs z - 32

    std::int64_t attack_tokens() const { return attack_avg_len - kPromptOverhead; }
    std::int64_t total_tokens() const;
    void validate() const;
};

struct ServiceResult {
    std::int64_t total_tokens = 0;
    std::int64_t batches = 0;
    double l_total = 0.0;
    double l_req = 0.0;
    // Requests per minute over the makespan; empty when l_total == 0.
    std::optional<double> throughput;
};

// L_total = ceil(((r - k) c_n + k (z - 32)) / C) * T_b, L_req = L_total / r.
ServiceResult simulate_service(const ServiceModel& service);

enum class SlotPolicy {
    Pooled,              // a request may fill several slots of one batch
    OneTokenPerRequest,  // strict auto-regressive: at most one slot per request per batch
};

struct EventResult {
    double l_total = 0.0;          // makespan
    double l_req = 0.0;            // makespan / r
    double mean_completion = 0.0;  // mean per-request completion time
};

// Token-level batch simulation with every request arriving at time 0.
// The rng shuffles the queue order.
EventResult discrete_event_check(const ServiceModel& service, Rng& rng, SlotPolicy policy = SlotPolicy::Pooled);

struct ServiceRow {
    std::int64_t attackers;
    std::int64_t requests;
    std::int64_t capacity;
    ServiceResult result;
};

std::vector<ServiceRow> service_grid(const ServiceModel& base, std::span<const std::int64_t> attackers,
                                     std::span<const std::int64_t> capacities);

void write_flops_csv(std::ostream& out, std::span<const FlopsPoint> curve);
void write_service_csv(std::ostream& out, std::span<const ServiceRow> rows);

} // namespace engorgio::cost
