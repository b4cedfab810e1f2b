#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "satsched/types.hpp"

namespace satsched::mission {

enum class MissionKind { common, burst };

inline const char* to_string(MissionKind k) {
    return k == MissionKind::common ? "common" : "burst";
}

/// One mission: (priority, volume, birth slot, remaining survival, origin).
struct Mission {
    std::uint64_t uid = 0;
    double priority = 0.0;
    double volume_bits = 0.0;
    int birth_slot = 0;
    int survival_slots = 0;  // remaining; the mission expires when this hits 0
    SatelliteId origin;
    MissionKind kind = MissionKind::common;
};

/// The three mission attributes scored by the priority model.
enum class Attribute { volume = 0, arrival = 1, delay = 2 };

/// Per-domain priority inputs: a strict importance ranking of the three
/// attributes plus a quantitative value for each.
struct AttributeProfile {
    std::array<Attribute, 3> ranking{Attribute::volume, Attribute::arrival,
                                     Attribute::delay}; // most important first
    std::array<double, 3> value{0.0, 0.0, 0.0};         // indexed by Attribute
};

/// Pairwise-comparison weights for a strict 3-attribute ranking. Each
/// attribute scores 1 against those ranked below it, 0.5 against itself,
/// 0 otherwise; row sums are normalized by the grand total, which lands on
/// {5/9, 3/9, 1/9} for every strict ranking. Returned array is indexed by
/// Attribute. Throws std::invalid_argument when the ranking is not a
/// permutation.
std::array<double, 3> attribute_weights(const AttributeProfile& profile);

/// Weighted sum of attribute values under the ranking-derived weights.
double mission_priority(const AttributeProfile& profile);

/// Shared priority of burst missions: strictly above every common priority.
double burst_priority(const std::vector<double>& common_priorities);

/// Largest-remainder spread of `total` items over `bins` bins: bin b gets
/// floor((b+1)*total/bins) - floor(b*total/bins). Sums exactly to total,
/// every bin within one item of total/bins. Throws on bins <= 0 or total < 0.
std::vector<int> even_spread(int total, int bins);

/// Generation plan for one domain.
struct MissionGenSpec {
    int common_total = 0;              // whole domain, whole planning cycle
    double common_volume_bits = 0.0;
    int common_survival_slots = 1;
    double burst_rate = 0.0;           // Poisson mean per satellite per slot
    double burst_volume_bits = 0.0;
    int burst_survival_slots = 3;
};

/**
 * @brief Deterministic mission source for all domains of a scenario.
 *
 * Common missions follow a fixed largest-remainder schedule (exact totals,
 * no randomness): the domain total is spread over satellites in flat
 * orbit-major order, then each satellite's count is spread over the cycle's
 * slots. Burst missions are Poisson draws keyed on
 * (seed, episode, domain, satellite, slot), so any generation order and any
 * replay with the same seed produce the identical stream. Uids are assigned
 * in deterministic iteration order and are unique for the generator's
 * lifetime.
 */
class MissionGenerator {
  public:
    struct DomainConfig {
        MissionGenSpec spec;
        double common_priority = 0.0;
        int orbit_count = 0;
        int sats_per_orbit = 0;
    };

    MissionGenerator(std::uint64_t run_seed, int cycle_slots);

    /// Domains are 1-based and must be added in order 1..K.
    void add_domain(const DomainConfig& config);

    /// Burst priority shared by all domains (computed by the scenario loader
    /// as strictly above every common priority).
    void set_burst_priority(double priority) { burst_priority_ = priority; }

    int domain_count() const { return static_cast<int>(domains_.size()); }

    /// All missions born in `domain` at `slot` of `episode`, across its
    /// satellites in flat order. Empty for slots outside [1, cycle].
    std::vector<Mission> generate(int domain, int slot, int episode);

    /// Commons a single satellite receives at a slot (schedule lookup).
    int common_count_at(int domain, const SatelliteId& sat, int slot) const;

  private:
    std::uint64_t run_seed_;
    int cycle_slots_;
    double burst_priority_ = 0.0;
    std::uint64_t next_uid_ = 1;

    struct DomainState {
        DomainConfig config;
        std::vector<int> per_sat_total; // commons per satellite, flat order
    };
    std::vector<DomainState> domains_;
};

/// Ages every mission by one slot in place; missions whose survival hits 0
/// are removed and returned.
std::vector<Mission> age_missions(std::vector<Mission>& queue);

} // namespace satsched::mission
