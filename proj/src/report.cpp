#include "satsched/report.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <stdexcept>

#include <json.hpp>

#include "satsched/policy_io.hpp"

namespace satsched::harness {

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
    return os;
}

} // namespace

RunReport run_policy(const ScenarioConfig& cfg, const RunSpec& spec) {
    net::NetworkEnv env(cfg, spec.seed);
    learn::Scheduler sched(env.config(), env.topology(), spec.kind, spec.seed);
    const std::uint64_t hash = config_hash(cfg);
    if (!spec.load_policy.empty()) io::load_policy(spec.load_policy, sched, hash);

    RunReport report;
    report.policy = learn::to_string(spec.kind);
    report.seed = spec.seed;
    report.config_hash = hash;
    report.domain_count = cfg.domain_count();
    for (const net::NodeStatic& node : env.topology().nodes)
        report.sat_names.push_back(node.id.str());

    for (int ep = 1; ep <= spec.episodes; ++ep) {
        if (spec.record_final && ep == spec.episodes) env.set_recording(true, true);
        const net::EpisodeMetrics m = learn::run_episode(env, sched, ep, spec.train);
        report.rows.push_back({ep, m});
        for (const std::string& v : env.ledger().violations)
            report.violations.push_back("episode " + std::to_string(ep) + ", " + v);
        if (spec.log_every > 0 && (ep % spec.log_every == 0 || ep == spec.episodes))
            std::cerr << report.policy << " seed " << spec.seed << " episode " << ep
                      << "/" << spec.episodes << " mcr " << m.mcr << "\n";
    }

    const net::RunLedger& last = env.ledger();
    report.final_energy = last.energy_rows;
    report.final_slots = last.slot_rows;

    const int window = std::min<int>(20, static_cast<int>(report.rows.size()));
    double acc = 0.0;
    for (int i = static_cast<int>(report.rows.size()) - window;
         i < static_cast<int>(report.rows.size()); ++i)
        acc += report.rows[i].m.mcr;
    report.final_mcr_mean = window > 0 ? acc / window : 0.0;

    if (!spec.save_policy.empty()) io::save_policy(spec.save_policy, sched, hash);
    return report;
}

void write_metrics_csv(const std::string& path, const RunReport& report) {
    std::ofstream os = open_out(path);
    os << "episode,policy,seed,generated,delivered,expired,dropped,buffered,mcr,"
          "delivered_common,delivered_burst";
    for (int k = 1; k <= report.domain_count; ++k) os << ",delivered_d" << k;
    os << ",bms_reward_sum,tms_reward_sum\n";
    for (const EpisodeRow& row : report.rows) {
        const net::EpisodeMetrics& m = row.m;
        os << row.episode << ',' << report.policy << ',' << report.seed << ','
           << m.generated << ',' << m.delivered << ',' << m.expired << ',' << m.dropped
           << ',' << m.buffered << ',' << fmt(m.mcr) << ',' << m.delivered_common << ','
           << m.delivered_burst;
        for (long long d : m.delivered_by_domain) os << ',' << d;
        os << ',' << fmt(m.bms_reward_sum) << ',' << fmt(m.tms_reward_sum) << '\n';
    }
}

void write_summary_json(const std::string& path, const RunReport& report) {
    nlohmann::ordered_json j;
    j["policy"] = report.policy;
    j["seed"] = report.seed;
    char hash[24];
    std::snprintf(hash, sizeof hash, "%016llx",
                  static_cast<unsigned long long>(report.config_hash));
    j["config_hash"] = hash;
    j["episodes"] = report.rows.size();
    j["final_mcr_mean"] = report.final_mcr_mean;
    if (!report.rows.empty()) {
        const net::EpisodeMetrics& m = report.rows.back().m;
        j["last_episode"] = {{"generated", m.generated}, {"delivered", m.delivered},
                             {"expired", m.expired},     {"dropped", m.dropped},
                             {"buffered", m.buffered},   {"mcr", m.mcr}};
    }
    j["invariant_violations"] = report.violations.size();
    std::ofstream os = open_out(path);
    os << j.dump(2) << '\n';
}

void write_energy_csv(const std::string& path, const RunReport& report) {
    std::ofstream os = open_out(path);
    os << "slot,sat,e_start_j,e_tr_j,e_r_j,e_o_j,harvest_available_j,harvest_stored_j,"
          "e_end_j\n";
    for (const net::EnergyRow& r : report.final_energy)
        os << r.slot << ',' << report.sat_names[r.flat_id] << ',' << fmt(r.e_start_j)
           << ',' << fmt(r.e_tr_j) << ',' << fmt(r.e_r_j) << ',' << fmt(r.e_o_j) << ','
           << fmt(r.harvest_available_j) << ',' << fmt(r.harvest_stored_j) << ','
           << fmt(r.e_end_j) << '\n';
}

void write_slots_csv(const std::string& path, const RunReport& report) {
    std::ofstream os = open_out(path);
    os << "slot,sat,layer,action,profit_bits,penalty_bits,delivered,expired,rejected\n";
    for (const net::SlotLogRow& r : report.final_slots)
        os << r.slot << ',' << report.sat_names[r.flat_id] << ',' << r.layer << ','
           << r.action << ',' << fmt(r.profit_bits) << ',' << fmt(r.penalty_bits) << ','
           << r.delivered << ',' << r.expired << ',' << r.rejected << '\n';
}

SweepResult run_sweep(const std::string& scenario_path, const std::string& axis,
                      const std::vector<double>& values, const RunSpec& spec) {
    std::ifstream is(scenario_path);
    if (!is) throw std::runtime_error("cannot open scenario '" + scenario_path + "'");
    nlohmann::json base;
    try {
        base = nlohmann::json::parse(is);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error("scenario '" + scenario_path + "': " + e.what());
    }

    std::string pointer = "/";
    for (char c : axis) pointer += c == '.' ? '/' : c;
    const nlohmann::json::json_pointer jp(pointer);
    if (!base.contains(jp) || !base.at(jp).is_number())
        throw std::invalid_argument(
            "sweep axis '" + axis +
            "' does not address a numeric scenario field (examples: "
            "rate_model.sgl_bps, tau_s, classes.ncs.e_max_j, "
            "domains.0.missions.common_total)");

    SweepResult sweep;
    sweep.axis = axis;
    sweep.values = values;
    for (double v : values) {
        nlohmann::json patched = base;
        patched[jp] = v;
        const ScenarioConfig cfg = parse_scenario(patched);
        sweep.reports.push_back(run_policy(cfg, spec));
    }
    return sweep;
}

void write_sweep_csv(const std::string& path, const SweepResult& sweep) {
    std::ofstream os = open_out(path);
    os << "axis,value,policy,seed,final_mcr_mean,last_generated,last_delivered\n";
    for (std::size_t i = 0; i < sweep.values.size(); ++i) {
        const RunReport& r = sweep.reports[i];
        const net::EpisodeMetrics& m = r.rows.back().m;
        os << sweep.axis << ',' << fmt(sweep.values[i]) << ',' << r.policy << ','
           << r.seed << ',' << fmt(r.final_mcr_mean) << ',' << m.generated << ','
           << m.delivered << '\n';
    }
}

} // namespace satsched::harness
