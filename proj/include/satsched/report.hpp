#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "satsched/agents.hpp"

namespace satsched::harness {

/// One experiment: a policy run for a number of episodes under one seed.
struct RunSpec {
    learn::PolicyKind kind = learn::PolicyKind::hicms;
    std::uint64_t seed = 0;
    int episodes = 1;
    bool train = true;          // explore and update vs. greedy evaluation
    std::string load_policy;    // optional checkpoint to start from
    std::string save_policy;    // optional checkpoint written after the run
    bool record_final = false;  // capture energy/slot logs on the last episode
    int log_every = 50;         // progress cadence on stderr (0 silences)
};

struct EpisodeRow {
    int episode = 0;
    net::EpisodeMetrics m;
};

/// Everything a run produces. CSV/JSON writers below consume this verbatim,
/// so identical runs produce byte-identical files.
struct RunReport {
    std::string policy;
    std::uint64_t seed = 0;
    std::uint64_t config_hash = 0;
    int domain_count = 0;
    std::vector<EpisodeRow> rows;
    double final_mcr_mean = 0.0; // mean completion ratio, last up-to-20 episodes
    std::vector<net::EnergyRow> final_energy; // last episode, when recorded
    std::vector<net::SlotLogRow> final_slots;
    std::vector<std::string> violations;      // accumulated across all episodes
    std::vector<std::string> sat_names;       // flat id -> "domain-orbit-index"
};

RunReport run_policy(const ScenarioConfig& cfg, const RunSpec& spec);

void write_metrics_csv(const std::string& path, const RunReport& report);
void write_summary_json(const std::string& path, const RunReport& report);
void write_energy_csv(const std::string& path, const RunReport& report);
void write_slots_csv(const std::string& path, const RunReport& report);

/// Runs `spec` once per value of a scenario field addressed by a dotted path
/// into the scenario JSON (for example "rate_model.sgl_bps"). Throws
/// std::invalid_argument naming the path when it does not address a numeric
/// field of the scenario.
struct SweepResult {
    std::string axis;
    std::vector<double> values;
    std::vector<RunReport> reports;
};

SweepResult run_sweep(const std::string& scenario_path, const std::string& axis,
                      const std::vector<double>& values, const RunSpec& spec);

void write_sweep_csv(const std::string& path, const SweepResult& sweep);

} // namespace satsched::harness
