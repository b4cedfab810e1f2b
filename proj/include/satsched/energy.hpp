#pragma once

#include <span>

#include "satsched/types.hpp"

namespace satsched::energy {

/// Per-class power/battery constants. The reserve floor is derived:
/// e_min = e_max - eta * e_max.
struct PowerParams {
    double p_sst_w = 20.0; // satellite-satellite transmit
    double p_set_w = 20.0; // satellite-ground transmit
    double p_sr_w = 10.0;  // receive
    double p_o_w = 5.0;    // nominal operations
    double p_h_w = 20.0;   // harvest
    double eta = 0.75;     // usable fraction of the battery
    double e_max_j = 1.0e5;

    double e_min_j() const { return e_max_j - eta * e_max_j; }

    void validate() const;
};

/// One link's share of a slot: bits moved at a given rate over a given kind.
struct LinkLoad {
    double bits = 0.0;
    double rate_bps = 0.0;
    LinkKind kind = LinkKind::isl;
};

/// Transmit energy: sum of (bits / rate) * transmit power, where the power
/// is p_sst for satellite-satellite legs and p_set for ground legs.
/// Throws std::domain_error on negative bits or a non-positive rate with
/// bits to move.
double e_transmit(std::span<const LinkLoad> loads, const PowerParams& power);

/// Receive energy: sum of (bits / rate) * p_sr over incoming legs.
double e_receive(std::span<const LinkLoad> loads, const PowerParams& power);

/// Nominal operations energy p_o * tau.
double e_nominal(const PowerParams& power, double tau_s);

double e_total(double e_tr_j, double e_r_j, double e_o_j);

/// Harvest available this slot: p_h * min(tau, sunlit seconds).
double e_harvest(const PowerParams& power, double sunlit_s, double tau_s);

/// Battery update for one slot.
struct EnergyDelta {
    double consumed_j = 0.0;
    double harvest_available_j = 0.0;
    double harvest_stored_j = 0.0; // truncated by the battery cap
    double e_after_j = 0.0;
};

/// Applies consumption then harvest, truncating harvest at the battery cap
/// so e_after <= e_max exactly and e_after - e_now == stored - consumed.
/// Consumption below zero means the scheduler admitted an illegal plan;
/// that is a bug, so it throws std::logic_error.
EnergyDelta apply_energy(double e_now_j, double consumed_j, double harvest_j,
                         const PowerParams& power);

} // namespace satsched::energy
