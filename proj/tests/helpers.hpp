#pragma once

#include "satsched/scenario.hpp"

namespace satsched::test {

/// Equatorial MEO ring: every neighbor pair stays mutually visible and the
/// geometry barely moves over a handful of slots, so transfer scripts can be
/// checked by hand. All rates are pinned: ground 60 Mbps, satellite links a
/// degenerate 100 Mbps band. One station sits on the equator at longitude 0,
/// directly beneath satellite 1 at the epoch. No missions are generated;
/// tests inject exactly what they need.
inline ScenarioConfig micro_ring(int sats = 3, int slots = 6, double b_max_bits = 4.0e9) {
    ScenarioConfig cfg;
    cfg.name = "micro_ring";
    cfg.tau_s = 100.0;
    cfg.slots = slots;
    cfg.stations.push_back({0, "equator", 0.0, 0.0, 10.0});
    cfg.rate_model.mode = linkbudget::RateModel::Mode::table;
    cfg.rate_model.table_sgl_bps = 60.0e6;
    cfg.rate_model.isl_band_lo_bps = 100.0e6;
    cfg.rate_model.isl_band_hi_bps = 100.0e6;
    cfg.rate_model.reference_sgl_bps = 60.0e6;
    cfg.ncs.power.e_max_j = 1.0e5;
    cfg.ncs.b_max_bits = b_max_bits;
    cfg.cs.power.e_max_j = 2.0e5;
    cfg.cs.b_max_bits = b_max_bits;

    DomainConfig d;
    d.name = "ring";
    d.mission_kind = "generic";
    orbit::OrbitRow row;
    row.altitude_km = 19100.0;
    row.inclination_deg = 0.0;
    row.raan_deg = 0.0;
    for (int j = 0; j < sats; ++j) row.mean_anomaly_deg.push_back(360.0 * j / sats);
    d.sofm.rows.push_back(row);
    cfg.domains.push_back(d);

    cfg.train.minibatch_bms = 2;
    cfg.train.minibatch_tms = 2;
    cfg.train.episodes = 1;
    cfg.finalize();
    return cfg;
}

/// Two concentric equatorial rings (domains), phase-shifted so cross-domain
/// partners are adjacent. Same pinned rates and single station as micro_ring.
inline ScenarioConfig micro_two_rings(int sats = 3, int slots = 6,
                                      double b_max_bits = 8.0e9) {
    ScenarioConfig cfg = micro_ring(sats, slots, b_max_bits);
    cfg.name = "micro_two_rings";
    DomainConfig d2 = cfg.domains[0];
    d2.name = "ring2";
    d2.sofm.rows[0].altitude_km = 20500.0;
    for (int j = 0; j < sats; ++j)
        d2.sofm.rows[0].mean_anomaly_deg[j] = 360.0 * j / sats + 10.0;
    cfg.domains.push_back(d2);
    cfg.finalize();
    return cfg;
}

/// A mission with every identity field explicit; survival defaults to 3.
inline mission::Mission make_mission(std::uint64_t uid, double volume_bits,
                                     SatelliteId origin, double priority = 1.0,
                                     int survival = 3, int birth = 1) {
    mission::Mission m;
    m.uid = uid;
    m.priority = priority;
    m.volume_bits = volume_bits;
    m.birth_slot = birth;
    m.survival_slots = survival;
    m.origin = origin;
    m.kind = mission::MissionKind::common;
    return m;
}

} // namespace satsched::test
