#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "satsched/energy.hpp"
#include "satsched/linkbudget.hpp"
#include "satsched/missions.hpp"
#include "satsched/orbit.hpp"

namespace satsched {

/// Hardware class: battery/power constants plus on-board storage.
struct NodeClassConfig {
    energy::PowerParams power;
    double b_max_bits = 6.0e10;
};

/// One administrative domain: its constellation and its mission profile.
struct DomainConfig {
    std::string name;
    std::string mission_kind; // free label for reports ("cm", "om", ...)
    orbit::Sofm sofm;
    mission::MissionGenSpec missions;
    mission::AttributeProfile attributes;
    double common_priority = 0.0; // derived from attributes in finalize()
};

struct TrainConfig {
    double gamma = 0.99;
    double lr_actor = 2.5e-4;
    double lr_critic = 1.0e-4;
    int minibatch_bms = 72;
    int minibatch_tms = 72;
    int episodes = 500;
    double rmsprop_decay = 0.99;
    double rmsprop_eps = 1.0e-8;
    int hidden_block = 32; // width of each first-stage component block
    int hidden_merge = 64; // width of the merge layer
    bool shared_weights = false;
};

/**
 * @brief Complete description of one experiment setup.
 *
 * Loaded from JSON (load_scenario / parse_scenario) or built directly in
 * code; either way finalize() must run before use: it validates every field,
 * derives the common priorities from the attribute profiles, the shared
 * burst priority (strictly above all commons), and the reward normalization
 * scale (largest configured mission volume).
 */
struct ScenarioConfig {
    std::string name = "unnamed";
    std::uint64_t seed = 0;
    double tau_s = 100.0;
    int slots = 216;
    orbit::EarthModel earth;
    orbit::SunModel sun;
    std::vector<orbit::GroundStation> stations;
    linkbudget::RfParams rf;
    linkbudget::RateModel rate_model;
    NodeClassConfig ncs;
    NodeClassConfig cs;
    std::vector<DomainConfig> domains;
    TrainConfig train;

    // Derived by finalize().
    double burst_priority = 0.0;
    double reward_scale_bits = 1.0;

    int domain_count() const { return static_cast<int>(domains.size()); }
    const DomainConfig& domain(int k) const { return domains.at(k - 1); }

    /// Validates and computes the derived fields. Throws
    /// std::invalid_argument naming the offending field.
    void finalize();
};

/// Parses a scenario from a JSON document. Unknown keys are rejected so a
/// typo cannot silently fall back to a default.
ScenarioConfig parse_scenario(const nlohmann::json& doc);

/// Loads and parses a scenario file.
ScenarioConfig load_scenario(const std::string& path);

/// Canonical JSON image of the effective config (keys sorted, derived fields
/// excluded). Two configs hash equal iff every loaded field matches.
nlohmann::json scenario_to_json(const ScenarioConfig& cfg);

/// FNV-1a 64-bit over the canonical dump; echoed in every report.
std::uint64_t config_hash(const ScenarioConfig& cfg);

std::uint64_t fnv1a64(const std::string& bytes);

} // namespace satsched
