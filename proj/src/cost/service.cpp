#include "engorgio/cost/service.hpp"

#include "engorgio/error.hpp"
#include "engorgio/format.hpp"

#include <algorithm>
#include <deque>
#include <string>

namespace engorgio::cost {

std::int64_t ServiceModel::total_tokens() const {
    return (requests - attackers) * normal_tokens + attackers * attack_tokens();
}

void ServiceModel::validate() const {
    if (capacity < 1) {
        throw ConfigError("service: capacity must be >= 1");
    }
    if (!(batch_seconds > 0.0)) {
        throw ConfigError("service: batch_seconds must be > 0");
    }
    if (requests < 1) {
        throw ConfigError("service: requests must be >= 1");
    }
    if (attackers < 0 || attackers > requests) {
        throw ConfigError("service: attackers must lie in [0, requests]");
    }
    if (normal_tokens < 0) {
        throw ConfigError("service: normal_tokens must be >= 0");
    }
    if (attack_avg_len < kPromptOverhead) {
        throw ConfigError("service: attack_avg_len must be >= " + std::to_string(kPromptOverhead));
    }
}

ServiceResult simulate_service(const ServiceModel& service) {
    service.validate();
    ServiceResult r;
    r.total_tokens = service.total_tokens();
    r.batches = (r.total_tokens + service.capacity - 1) / service.capacity;
    r.l_total = static_cast<double>(r.batches) * service.batch_seconds;
    r.l_req = r.l_total / static_cast<double>(service.requests);
    if (r.l_total > 0.0) {
        r.throughput = static_cast<double>(service.requests) / (r.l_total / 60.0);
    }
    return r;
}

EventResult discrete_event_check(const ServiceModel& service, Rng& rng, SlotPolicy policy) {
    service.validate();
    std::vector<std::int64_t> need;
    need.reserve(static_cast<std::size_t>(service.requests));
    for (std::int64_t i = 0; i < service.requests; ++i) {
        need.push_back(i < service.attackers ? service.attack_tokens() : service.normal_tokens);
    }
    // Fisher-Yates
    for (std::size_t i = need.size(); i > 1; --i) {
        std::swap(need[i - 1], need[rng.index(i)]);
    }

    std::vector<std::int64_t> done_batch(need.size(), 0);
    std::deque<std::size_t> queue;
    for (std::size_t i = 0; i < need.size(); ++i) {
        if (need[i] > 0) {
            queue.push_back(i);
        }
    }
    std::int64_t batch = 0;
    while (!queue.empty()) {
        ++batch;
        std::int64_t slots = service.capacity;
        if (policy == SlotPolicy::Pooled) {
            while (slots > 0 && !queue.empty()) {
                const std::size_t req = queue.front();
                const std::int64_t take = std::min(slots, need[req]);
                need[req] -= take;
                slots -= take;
                if (need[req] == 0) {
                    done_batch[req] = batch;
                    queue.pop_front();
                }
            }
        } else {
            std::deque<std::size_t> next;
            while (slots > 0 && !queue.empty()) {
                const std::size_t req = queue.front();
                queue.pop_front();
                --need[req];
                --slots;
                if (need[req] == 0) {
                    done_batch[req] = batch;
                } else {
                    next.push_back(req);
                }
            }
            // Served requests rejoin behind the ones that waited.
            queue.insert(queue.end(), next.begin(), next.end());
        }
    }

    EventResult out;
    double sum = 0.0;
    for (std::int64_t b : done_batch) {
        const double t = static_cast<double>(b) * service.batch_seconds;
        out.l_total = std::max(out.l_total, t);
        sum += t;
    }
    out.l_req = out.l_total / static_cast<double>(service.requests);
    out.mean_completion = sum / static_cast<double>(service.requests);
    return out;
}

std::vector<ServiceRow> service_grid(const ServiceModel& base, std::span<const std::int64_t> attackers,
                                     std::span<const std::int64_t> capacities) {
    std::vector<ServiceRow> rows;
    for (std::int64_t c : capacities) {
        for (std::int64_t k : attackers) {
            ServiceModel s = base;
            s.capacity = c;
            s.attackers = k;
            rows.push_back({k, s.requests, c, simulate_service(s)});
        }
    }
    return rows;
}

void write_flops_csv(std::ostream& out, std::span<const FlopsPoint> curve) {
    out << "out_len,prompt_flops,output_flops,total_flops\n";
    for (const FlopsPoint& p : curve) {
        out << p.out_len << ',' << p.cost.prompt << ',' << p.cost.output << ',' << p.cost.total() << '\n';
    }
}

void write_service_csv(std::ostream& out, std::span<const ServiceRow> rows) {
    out << "k,r,C,L_total,L_req,throughput\n";
    for (const ServiceRow& row : rows) {
        out << row.attackers << ',' << row.requests << ',' << row.capacity << ',' << format_double(row.result.l_total)
            << ',' << format_double(row.result.l_req) << ',';
        if (row.result.throughput) {
            out << format_double(*row.result.throughput);
        }
        out << '\n';
    }
}

} // namespace engorgio::cost
