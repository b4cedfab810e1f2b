#include "satsched/missions.hpp"

#include <algorithm>
#include <stdexcept>

#include "satsched/rng.hpp"

namespace satsched::mission {

std::array<double, 3> attribute_weights(const AttributeProfile& profile) {
    std::array<bool, 3> seen{false, false, false};
    for (Attribute a : profile.ranking) {
        const int idx = static_cast<int>(a);
        if (idx < 0 || idx > 2 || seen[idx])
            throw std::invalid_argument("attribute_weights: ranking is not a permutation");
        seen[idx] = true;
    }
    // Rank position p beats the 2-p attributes below it (1 point each) and
    // scores 0.5 against itself: row sums 2.5 / 1.5 / 0.5 over a grand total
    // of 4.5.
    std::array<double, 3> weights{};
    for (int p = 0; p < 3; ++p) {
        const double row_sum = 0.5 + static_cast<double>(2 - p);
        weights[static_cast<int>(profile.ranking[p])] = row_sum / 4.5;
    }
    return weights;
}

double mission_priority(const AttributeProfile& profile) {
    const auto w = attribute_weights(profile);
    double p = 0.0;
    for (int f = 0; f < 3; ++f) p += w[f] * profile.value[f];
    return p;
}

double burst_priority(const std::vector<double>& common_priorities) {
    double top = 0.0;
    for (double p : common_priorities) top = std::max(top, p);
    return top + 1.0;
}

std::vector<int> even_spread(int total, int bins) {
    if (bins <= 0) throw std::invalid_argument("even_spread: bins must be positive");
    if (total < 0) throw std::invalid_argument("even_spread: negative total");
    std::vector<int> out(bins);
    long long prev = 0;
    for (int b = 0; b < bins; ++b) {
        const long long cum = static_cast<long long>(b + 1) * total / bins;
        out[b] = static_cast<int>(cum - prev);
        prev = cum;
    }
    return out;
}

MissionGenerator::MissionGenerator(std::uint64_t run_seed, int cycle_slots)
    : run_seed_(run_seed), cycle_slots_(cycle_slots) {
    if (cycle_slots <= 0)
        throw std::invalid_argument("mission generator: cycle must be positive");
}

void MissionGenerator::add_domain(const DomainConfig& config) {
    if (config.orbit_count <= 0 || config.sats_per_orbit <= 0)
        throw std::invalid_argument("mission generator: empty constellation");
    if (config.spec.common_total < 0 || config.spec.burst_rate < 0.0)
        throw std::invalid_argument("mission generator: negative mission load");
    DomainState state;
    state.config = config;
    state.per_sat_total =
        even_spread(config.spec.common_total, config.orbit_count * config.sats_per_orbit);
    domains_.push_back(std::move(state));
}

int MissionGenerator::common_count_at(int domain, const SatelliteId& sat, int slot) const {
    if (slot < 1 || slot > cycle_slots_) return 0;
    const DomainState& state = domains_.at(domain - 1);
    const int flat = (sat.orbit - 1) * state.config.sats_per_orbit + (sat.index - 1);
    const int total = state.per_sat_total.at(flat);
    // Bresenham schedule: the same largest-remainder rule applied over slots.
    const long long upto = static_cast<long long>(slot) * total / cycle_slots_;
    const long long before = static_cast<long long>(slot - 1) * total / cycle_slots_;
    return static_cast<int>(upto - before);
}

std::vector<Mission> MissionGenerator::generate(int domain, int slot, int episode) {
    if (domain < 1 || domain > domain_count())
        throw std::out_of_range("mission generator: unknown domain");
    std::vector<Mission> out;
    if (slot < 1 || slot > cycle_slots_) return out;

    const DomainState& state = domains_[domain - 1];
    const MissionGenSpec& spec = state.config.spec;
    for (int orbit = 1; orbit <= state.config.orbit_count; ++orbit) {
        for (int index = 1; index <= state.config.sats_per_orbit; ++index) {
            const SatelliteId origin{domain, orbit, index};
            const int commons = common_count_at(domain, origin, slot);
            for (int c = 0; c < commons; ++c) {
                out.push_back({next_uid_++, state.config.common_priority,
                               spec.common_volume_bits, slot, spec.common_survival_slots,
                               origin, MissionKind::common});
            }
            if (spec.burst_rate > 0.0) {
                const int flat =
                    (orbit - 1) * state.config.sats_per_orbit + (index - 1);
                RngStream stream({run_seed_, 0x6275727374ULL,
                                  static_cast<std::uint64_t>(episode),
                                  static_cast<std::uint64_t>(domain),
                                  static_cast<std::uint64_t>(flat),
                                  static_cast<std::uint64_t>(slot)});
                const int bursts = stream.poisson(spec.burst_rate);
                for (int b = 0; b < bursts; ++b) {
                    out.push_back({next_uid_++, burst_priority_, spec.burst_volume_bits,
                                   slot, spec.burst_survival_slots, origin,
                                   MissionKind::burst});
                }
            }
        }
    }
    return out;
}

std::vector<Mission> age_missions(std::vector<Mission>& queue) {
    std::vector<Mission> expired;
    std::vector<Mission> kept;
    kept.reserve(queue.size());
    for (Mission& m : queue) {
        m.survival_slots -= 1;
        if (m.survival_slots <= 0)
            expired.push_back(m);
        else
            kept.push_back(m);
    }
    queue.swap(kept);
    return expired;
}

} // namespace satsched::mission
