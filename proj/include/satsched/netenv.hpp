#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "satsched/scenario.hpp"
#include "satsched/types.hpp"
#include "satsched/vec3.hpp"

namespace satsched::net {

// ---------------------------------------------------------------------------
// Static topology
// ---------------------------------------------------------------------------

/// Equal-stride pick of `count` flat indices out of `total` (orbit-major
/// flattening): index q maps to floor(q * total / count). Throws when count
/// is not in [1, total].
std::vector<int> equal_stride_indices(int total, int count);

/// Greedy closest-pair perfect matching between two equally sized position
/// sets: repeatedly take the globally closest still-unmatched pair (ties by
/// lowest indices). Returns index pairs (into a, into b).
std::vector<std::pair<int, int>> greedy_closest_matching(const std::vector<Vec3>& a,
                                                         const std::vector<Vec3>& b);

/// Static per-satellite record: identity, class, and relay wiring.
struct NodeStatic {
    SatelliteId id;
    SatClass cls = SatClass::ncs;
    // Four-chain intra-domain relays: same orbit j-1, j+1, adjacent orbits
    // i-1, i+1 (wrap-around). A slot is invalid when wrap-around degenerates
    // to the satellite itself (single-orbit or single-satellite domains).
    std::array<SatelliteId, 4> intra_relays{};
    std::array<bool, 4> intra_valid{false, false, false, false};
    // CS only: auxiliary domains (ascending) and the IDL partner in each.
    std::vector<int> aux_domains;
    std::vector<SatelliteId> inter_relays;
};

/**
 * @brief Flattened multi-domain constellation with relay wiring.
 *
 * Flat order is domain-major, then orbit-major. Cross-domain satellites are
 * the equal-stride pick per domain with count = the smallest domain size.
 * With at most three domains every other domain is auxiliary; beyond that
 * each domain keeps the two closest by mean epoch distance. IDL partners
 * are a greedy closest-pair matching of the two CS sets at the epoch slot,
 * shared by both directions of a domain pair.
 */
struct Topology {
    std::vector<NodeStatic> nodes;
    std::vector<int> domain_offset; // flat base per domain (size K+1)
    std::vector<std::vector<int>> cs_flat; // per domain, ascending flat ids

    int size() const { return static_cast<int>(nodes.size()); }
    int flat(const SatelliteId& id) const;
    const NodeStatic& node(const SatelliteId& id) const { return nodes[flat(id)]; }
    int domain_of_flat(int flat_id) const { return nodes[flat_id].id.domain; }
};

Topology build_topology(const ScenarioConfig& cfg);

// ---------------------------------------------------------------------------
// Per-slot snapshot and observations
// ---------------------------------------------------------------------------

struct LinkState {
    bool visible = false;
    double rate_bps = 0.0;
    double distance_km = 0.0;
};

/// Quasi-static link picture at the start of a slot.
struct SlotSnapshot {
    int slot = 1;
    std::vector<Vec3> pos_km;                        // per flat satellite
    std::vector<double> sunlit_s;                    // per flat satellite
    std::vector<std::array<LinkState, 4>> intra;     // aligned with intra_relays
    std::vector<std::vector<LinkState>> inter;       // aligned with aux_domains
    std::vector<std::vector<LinkState>> sgl;         // per station, station order
};

/// Raw per-satellite state 4-tuple (pre-normalization values).
struct SatState4 {
    double storage_rel = 0.0;     // B_max / B; equals B_max when the buffer is empty
    double energy_rel = 0.0;      // E / (E_min + E_o)
    double sgl_rate_avg_bps = 0.0;// mean rate over visible ground links, 0 if none
    double survival_avg = 0.0;    // mean remaining survival of buffered missions
};

/// One processed joint-state entry; every component normalized into [0, 2].
struct JsiEntry {
    double storage = 0.0;
    double energy = 0.0;
    double rate = 0.0;
    double survival = 0.0;
};

using JointState = std::vector<JsiEntry>;

/// Normalizes the storage/energy/rate components of a raw state (survival is
/// handled by the joint-state builders, which apply the ratio rules).
JsiEntry normalize_state(const SatState4& s, double reference_sgl_bps);

/// Intra-domain joint state: 5 entries (self, then the 4 relay slots).
/// Invalid relay slots produce zero entries.
JointState build_bms_jsi(const SatState4& self, const std::array<SatState4, 4>& relays,
                         const std::array<bool, 4>& relay_valid, double reference_sgl_bps);

/// Cross-domain joint state: entry 0 is the componentwise mean of the BMS
/// entries, followed by one processed entry per auxiliary-domain partner.
JointState build_tms_jsi(const SatState4& self, const JointState& bms,
                         const std::vector<SatState4>& inter_states,
                         double reference_sgl_bps);

// ---------------------------------------------------------------------------
// Actions
// ---------------------------------------------------------------------------

/// What a satellite actually does with its one outgoing link this slot.
struct ResolvedAction {
    enum class Kind { idle, ground, intra, inter };
    Kind kind = Kind::idle;
    int relay_slot = -1; // intra: 0..3
    int domain = 0;      // inter: target auxiliary domain

    std::string str() const;
};

/// Policy decision record for one satellite and one slot. The layer flags
/// tell the reward logic which experience streams exist: two-layer policies
/// set tms/bms, single-layer (flat) policies set flat. A cross-domain pick
/// by a two-layer policy sets only tms (the partner is forced, no intra
/// stage runs).
struct ActionTrace {
    bool tms_acted = false;
    int tms_choice = -1; // 0 = own domain, 1.. = aux_domains index + 1
    bool bms_acted = false;
    int bms_choice = -1; // 0 = self/ground, 1..4 = relay slot + 1
    bool flat_acted = false;
    int flat_choice = -1; // 0..4 as bms, 5.. = aux_domains index + 5
    ResolvedAction resolved;
};

/// Everything a policy needs to act at one slot.
struct SlotContext {
    int slot = 1;
    SlotSnapshot snap;
    std::vector<SatState4> state;                 // per flat satellite
    std::vector<JointState> bms_jsi;              // 5 entries each
    std::vector<JointState> tms_jsi;              // CS: 1 + |aux|, NCS: empty
    std::vector<JointState> flat_jsi;             // 5 + |aux| (NCS: 5)
    std::vector<std::array<bool, 5>> bms_feasible;
    std::vector<std::vector<bool>> tms_feasible;  // CS: width 1 + |aux|
    std::vector<std::vector<bool>> flat_feasible; // width 5 + |aux|

    bool bms_any(int flat_id) const {
        for (bool b : bms_feasible[flat_id])
            if (b) return true;
        return false;
    }
};

// ---------------------------------------------------------------------------
// Transmission planning
// ---------------------------------------------------------------------------

/// One satellite's committed use of its single outgoing link.
struct TransferPlan {
    bool active = false;
    LinkKind kind = LinkKind::isl;
    int target_flat = -1; // receiving satellite (ground: -1)
    int station_id = 0;   // ground target (satellite: 0)
    double rate_bps = 0.0;
    std::vector<std::uint64_t> uids; // whole missions, service order
    double bits = 0.0;
    double e_tr_j = 0.0; // transmit energy, paid on planned bits
};

/// Greedy whole-mission prefix plan: buffer sorted by (priority desc,
/// survival asc, uid asc), missions taken until the slot volume tau * rate
/// is exhausted, the transmit+nominal energy would cross the reserve floor,
/// or the buffer runs out.
TransferPlan plan_transmission(const std::vector<mission::Mission>& buffer,
                               double battery_j, const energy::PowerParams& power,
                               double tau_s, double rate_bps, LinkKind kind);

// ---------------------------------------------------------------------------
// Slot outcome and ledgers
// ---------------------------------------------------------------------------

/// Per-layer reward bookkeeping for one satellite and one slot. Bit counts
/// stay raw for metrics; `reward` is (profit - penalty) / scale clipped to
/// [-2, 2] for the learners.
struct RewardRecord {
    bool present = false;
    double profit_bits = 0.0;
    double penalty_bits = 0.0;
    double reward = 0.0;
};

struct EnergyRow {
    int slot = 0;
    int flat_id = 0;
    double e_start_j = 0.0;
    double e_tr_j = 0.0;
    double e_r_j = 0.0;
    double e_o_j = 0.0;
    double harvest_available_j = 0.0;
    double harvest_stored_j = 0.0;
    double e_end_j = 0.0;
};

struct SlotLogRow {
    int slot = 0;
    int flat_id = 0;
    char layer = 'b'; // 'b' intra stage / flat, 't' cross-domain stage
    std::string action;
    double profit_bits = 0.0;
    double penalty_bits = 0.0;
    int delivered = 0;
    int expired = 0;
    int rejected = 0;
};

struct SlotOutcome {
    int slot = 0;
    std::vector<RewardRecord> bms; // per flat satellite
    std::vector<RewardRecord> tms;
    std::vector<int> delivered_count;
    std::vector<int> expired_count;
    std::vector<int> rejected_count; // whole missions the sender failed to place
    long long generated_now = 0;     // missions injected for the next slot
};

/// Episode-scope ledger: conservation counters, per-domain/kind completions,
/// invariant violations, and optional per-slot logs.
struct RunLedger {
    long long generated = 0;
    long long delivered = 0;
    long long expired = 0;
    long long dropped = 0; // no storage room at injection
    double delivered_bits = 0.0;
    std::vector<long long> delivered_by_domain; // by delivering satellite
    long long delivered_common = 0;
    long long delivered_burst = 0;
    double bms_reward_sum = 0.0;
    double tms_reward_sum = 0.0;
    std::vector<std::string> violations;
    std::vector<EnergyRow> energy_rows;  // filled when recording is on
    std::vector<SlotLogRow> slot_rows;
};

struct EpisodeMetrics {
    long long generated = 0;
    long long delivered = 0;
    long long expired = 0;
    long long dropped = 0;
    long long buffered = 0;
    double mcr = 0.0;
    std::vector<long long> delivered_by_domain;
    long long delivered_common = 0;
    long long delivered_burst = 0;
    double bms_reward_sum = 0.0;
    double tms_reward_sum = 0.0;
};

// ---------------------------------------------------------------------------
// Environment
// ---------------------------------------------------------------------------

/**
 * @brief Discrete-time multi-domain network environment.
 *
 * Drives the quasi-static slot loop: begin_slot() freezes topology, rates,
 * states, and feasible sets at the slot start; commit_slot() executes one
 * resolved action per satellite (deterministic flat order), handles receiver
 * admission, ground deliveries with delayed origin credits, mission aging,
 * next-slot injection, and the battery ledger. Every stochastic draw is
 * keyed on (seed, episode, entity, slot), so a run is a pure function of
 * (scenario, seed).
 */
class NetworkEnv {
  public:
    NetworkEnv(const ScenarioConfig& cfg, std::uint64_t run_seed);

    void reset(int episode);

    /// Context for the current slot (cached; cheap to call repeatedly).
    const SlotContext& begin_slot();

    /// Executes one slot. `traces` must have one entry per flat satellite;
    /// resolved actions must be feasible for the current slot (the policies
    /// mask, so an infeasible action here is a logic error).
    SlotOutcome commit_slot(const std::vector<ActionTrace>& traces);

    int slot() const { return slot_; }
    int horizon() const { return cfg_.slots; }
    int episode() const { return episode_; }

    const ScenarioConfig& config() const { return cfg_; }
    const Topology& topology() const { return topo_; }
    RunLedger& ledger() { return ledger_; }
    const RunLedger& ledger() const { return ledger_; }
    EpisodeMetrics metrics() const;

    void set_recording(bool energy_rows, bool slot_rows) {
        record_energy_ = energy_rows;
        record_slots_ = slot_rows;
    }

    // Node inspection (tests, exports).
    double battery_j(int flat_id) const { return battery_[flat_id]; }
    const std::vector<mission::Mission>& buffer(int flat_id) const { return buffer_[flat_id]; }
    double buffered_bits(int flat_id) const { return buffered_bits_[flat_id]; }
    long long buffered_missions() const;
    const NodeClassConfig& node_class(int flat_id) const;

    // Direct state mutation for focused tests.
    void test_set_battery(int flat_id, double joules) { battery_[flat_id] = joules; }
    void test_push_mission(int flat_id, const mission::Mission& m);

  private:
    SlotContext compute_context(int slot);
    void inject_missions(int slot);
    void check_invariants(const std::vector<double>& e_start,
                          const std::vector<double>& consumed,
                          const std::vector<bool>& moved_bits);

    ScenarioConfig cfg_;
    std::uint64_t run_seed_;
    Topology topo_;
    mission::MissionGenerator generator_;
    int episode_ = 0;
    int slot_ = 1;

    std::vector<std::vector<mission::Mission>> buffer_;
    std::vector<double> buffered_bits_;
    std::vector<double> battery_;

    RunLedger ledger_;
    bool record_energy_ = false;
    bool record_slots_ = false;

    std::optional<SlotContext> ctx_;
};

} // namespace satsched::net
