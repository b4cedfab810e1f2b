#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "satsched/report.hpp"

namespace fs = std::filesystem;
using namespace satsched;

namespace {

struct CliArgs {
    std::string scenario;
    std::string policy = "hicms";
    std::uint64_t seed = 0;
    bool seed_set = false;
    int episodes = 0; // 0: subcommand default
    std::string out_dir = "out";
    std::string save_policy;
    std::string load_policy;
    std::vector<std::string> exports;
    bool quiet = false;
    std::string axis;
    std::vector<double> values;
    bool sweep_train = false;
    int episode = 1; // dump-missions
};

int log_cadence(bool quiet) {
    if (quiet) return 0;
    if (const char* env = std::getenv("SATSCHED_LOG")) return std::atoi(env);
    return 50;
}

void add_common(CLI::App* cmd, CliArgs& args, bool with_policy) {
    cmd->add_option("--scenario", args.scenario, "scenario JSON file")
        ->required()
        ->check(CLI::ExistingFile);
    if (with_policy)
        cmd->add_option("--policy", args.policy,
                        "policy: hicms, idms, ncms, icms, bts");
    cmd->add_option("--seed", args.seed, "run seed (default: the scenario's)")
        ->each([&args](const std::string&) { args.seed_set = true; });
    cmd->add_option("--episodes", args.episodes, "episode count override");
    cmd->add_option("--out", args.out_dir, "output directory (default: out)");
    cmd->add_flag("--quiet", args.quiet, "suppress progress lines");
}

harness::RunSpec make_spec(const ScenarioConfig& cfg, const CliArgs& args, bool train,
                           int default_episodes) {
    harness::RunSpec spec;
    spec.kind = learn::parse_policy_kind(args.policy);
    spec.seed = args.seed_set ? args.seed : cfg.seed;
    spec.episodes = args.episodes > 0 ? args.episodes : default_episodes;
    spec.train = train;
    spec.load_policy = args.load_policy;
    spec.save_policy = args.save_policy;
    spec.log_every = log_cadence(args.quiet);
    for (const std::string& e : args.exports)
        if (e == "energy" || e == "slots") spec.record_final = true;
    return spec;
}

void write_outputs(const CliArgs& args, const harness::RunReport& report) {
    fs::create_directories(args.out_dir);
    const fs::path dir(args.out_dir);
    harness::write_metrics_csv((dir / "metrics.csv").string(), report);
    harness::write_summary_json((dir / "summary.json").string(), report);
    for (const std::string& e : args.exports) {
        if (e == "energy")
            harness::write_energy_csv((dir / "energy.csv").string(), report);
        else if (e == "slots")
            harness::write_slots_csv((dir / "slots.csv").string(), report);
        else
            throw CLI::ValidationError("--export", "expected 'energy' or 'slots'");
    }
    if (!report.violations.empty()) {
        std::cerr << report.violations.size() << " invariant violation(s); first: "
                  << report.violations.front() << "\n";
    }
    std::cout << report.policy << " seed " << report.seed << ": final_mcr_mean "
              << report.final_mcr_mean << " over " << report.rows.size()
              << " episode(s); outputs in " << args.out_dir << "\n";
}

int cmd_run(const CliArgs& args, bool train) {
    const ScenarioConfig cfg = load_scenario(args.scenario);
    // Training defaults to the scenario's episode budget, evaluation to one.
    const int default_episodes = train ? cfg.train.episodes : 1;
    const harness::RunSpec spec = make_spec(cfg, args, train, default_episodes);
    if (train && !(spec.kind == learn::PolicyKind::hicms ||
                   spec.kind == learn::PolicyKind::idms ||
                   spec.kind == learn::PolicyKind::icms))
        throw std::invalid_argument("policy '" + args.policy + "' has nothing to train");
    const harness::RunReport report = harness::run_policy(cfg, spec);
    write_outputs(args, report);
    return 0;
}

int cmd_sweep(const CliArgs& args) {
    const ScenarioConfig base = load_scenario(args.scenario);
    harness::RunSpec spec = make_spec(base, args, args.sweep_train, 1);
    spec.record_final = false;
    const harness::SweepResult sweep =
        harness::run_sweep(args.scenario, args.axis, args.values, spec);
    fs::create_directories(args.out_dir);
    const std::string path = (fs::path(args.out_dir) / "sweep.csv").string();
    harness::write_sweep_csv(path, sweep);
    std::cout << "sweep over " << args.axis << " (" << args.values.size()
              << " values) written to " << path << "\n";
    return 0;
}

int cmd_inspect(const CliArgs& args) {
    const ScenarioConfig cfg = load_scenario(args.scenario);
    net::NetworkEnv env(cfg, args.seed_set ? args.seed : cfg.seed);
    const net::Topology& topo = env.topology();
    char hash[24];
    std::snprintf(hash, sizeof hash, "%016llx",
                  static_cast<unsigned long long>(config_hash(cfg)));
    std::cout << "scenario: " << cfg.name << "\nconfig_hash: " << hash
              << "\nslots: " << cfg.slots << " x " << cfg.tau_s << " s\n";
    for (int k = 1; k <= cfg.domain_count(); ++k) {
        const DomainConfig& d = cfg.domain(k);
        std::cout << "domain " << k << " (" << d.name << "): "
                  << d.sofm.orbit_count() * d.sofm.sats_per_orbit() << " sats = "
                  << d.sofm.orbit_count() << " orbits x " << d.sofm.sats_per_orbit()
                  << ", priority " << d.common_priority << "\n";
    }
    std::cout << "burst priority: " << cfg.burst_priority << "\n";
    for (std::size_t k = 0; k < topo.cs_flat.size(); ++k) {
        std::cout << "cross-domain sats, domain " << k + 1 << ":";
        for (int f : topo.cs_flat[k]) {
            std::cout << " " << topo.nodes[f].id.str() << "->[";
            for (std::size_t a = 0; a < topo.nodes[f].inter_relays.size(); ++a)
                std::cout << (a ? " " : "") << topo.nodes[f].inter_relays[a].str();
            std::cout << "]";
        }
        std::cout << "\n";
    }
    for (const auto& gs : cfg.stations)
        std::cout << "station " << gs.id << " (" << gs.name << "): lat " << gs.lat_deg
                  << ", lon " << gs.lon_deg << ", min elevation " << gs.min_elevation_deg
                  << "\n";
    const net::SlotContext& ctx = env.begin_slot();
    int isl = 0, idl = 0, sgl = 0;
    for (int f = 0; f < topo.size(); ++f) {
        for (const auto& l : ctx.snap.intra[f]) isl += l.visible;
        for (const auto& l : ctx.snap.inter[f]) idl += l.visible;
        for (const auto& l : ctx.snap.sgl[f]) sgl += l.visible;
    }
    std::cout << "slot 1 visibility: " << isl << " intra links, " << idl
              << " cross-domain links, " << sgl << " ground links\n";
    return 0;
}

int cmd_dump_missions(const CliArgs& args) {
    const ScenarioConfig cfg = load_scenario(args.scenario);
    const std::uint64_t seed = args.seed_set ? args.seed : cfg.seed;
    mission::MissionGenerator gen(seed, cfg.slots);
    for (int k = 1; k <= cfg.domain_count(); ++k) {
        const DomainConfig& d = cfg.domain(k);
        gen.add_domain({d.missions, d.common_priority, d.sofm.orbit_count(),
                        d.sofm.sats_per_orbit()});
    }
    gen.set_burst_priority(cfg.burst_priority);
    for (int k = 1; k <= cfg.domain_count(); ++k) {
        long long commons = 0, bursts = 0;
        double bits = 0.0;
        std::vector<std::string> sample;
        for (int t = 1; t <= cfg.slots; ++t)
            for (const mission::Mission& m : gen.generate(k, t, args.episode)) {
                (m.kind == mission::MissionKind::common ? commons : bursts) += 1;
                bits += m.volume_bits;
                if (sample.size() < 5)
                    sample.push_back("  uid " + std::to_string(m.uid) + " " +
                                     mission::to_string(m.kind) + " at " + m.origin.str() +
                                     " slot " + std::to_string(m.birth_slot) + " prio " +
                                     std::to_string(m.priority));
            }
        std::cout << "domain " << k << " episode " << args.episode << ": " << commons
                  << " common + " << bursts << " burst missions, " << bits
                  << " bits total\n";
        for (const std::string& s : sample) std::cout << s << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"multi-domain satellite network mission scheduling"};
    app.require_subcommand(1);
    CliArgs args;

    CLI::App* train = app.add_subcommand("train", "train a learned policy");
    add_common(train, args, true);
    train->add_option("--save-policy", args.save_policy, "checkpoint file to write");
    train->add_option("--load-policy", args.load_policy, "checkpoint to resume from");
    train->add_option("--export", args.exports,
                      "final-episode logs: energy and/or slots");

    CLI::App* eval = app.add_subcommand("eval", "evaluate a policy greedily");
    add_common(eval, args, true);
    eval->add_option("--load-policy", args.load_policy, "checkpoint to evaluate");
    eval->add_option("--export", args.exports, "final-episode logs: energy and/or slots");

    CLI::App* baseline = app.add_subcommand("baseline", "run a rule-based policy");
    add_common(baseline, args, true);
    baseline->add_option("--export", args.exports,
                         "final-episode logs: energy and/or slots");

    CLI::App* sweep = app.add_subcommand("sweep", "run a policy across one axis");
    add_common(sweep, args, true);
    sweep->add_option("--axis", args.axis, "dotted scenario field, e.g. rate_model.sgl_bps")
        ->required();
    sweep->add_option("--values", args.values, "comma-separated values to sweep")
        ->required()
        ->delimiter(',');
    sweep->add_flag("--train", args.sweep_train, "train at each point (default: run greedily)");

    CLI::App* inspect = app.add_subcommand("inspect-topology", "print the static topology");
    add_common(inspect, args, false);

    CLI::App* dump = app.add_subcommand("dump-missions", "print mission generation totals");
    add_common(dump, args, false);
    dump->add_option("--episode", args.episode, "episode to generate (default 1)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (train->parsed()) return cmd_run(args, true);
        if (eval->parsed()) return cmd_run(args, false);
        if (baseline->parsed()) {
            const learn::PolicyKind kind = learn::parse_policy_kind(args.policy);
            if (kind != learn::PolicyKind::ncms && kind != learn::PolicyKind::bts)
                throw std::invalid_argument(
                    "baseline expects a rule policy (ncms or bts); use train/eval for "
                    "learned ones");
            return cmd_run(args, false);
        }
        if (sweep->parsed()) return cmd_sweep(args);
        if (inspect->parsed()) return cmd_inspect(args);
        if (dump->parsed()) return cmd_dump_missions(args);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
