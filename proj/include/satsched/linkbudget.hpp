#pragma once

#include <cstdint>

#include "satsched/types.hpp"

namespace satsched::linkbudget {

constexpr double SPEED_OF_LIGHT_M_S = 299792458.0;
constexpr double BOLTZMANN_J_K = 1.380649e-23;

/**
 * @brief RF chain parameters shared by the rate equations.
 *
 * Ratios (gain product, Eb/N0 requirement, margin, pointing loss) are linear,
 * not dB. The gain product is normally left at 0 and filled in by
 * calibrated_gain_product(), which sizes the antennas so the inter-satellite
 * equation hits the reference rate at the reference distance; that absorbs
 * any uncertainty in the individual chain constants.
 */
struct RfParams {
    double p_sst_w = 20.0;            // inter-satellite transmit power
    double p_set_w = 20.0;            // satellite-to-ground transmit power
    double gain_product = 0.0;        // G_tr * G_re
    double f_hz = 26.0e9;             // carrier
    double k_boltz = BOLTZMANN_J_K;
    double t_n_k = 290.0;             // receiver noise temperature
    double ebn0_req = 10.0;           // required Eb/N0
    double margin = 2.0;              // link margin
    double bandwidth_hz = 20.0e6;     // Shannon bandwidth for ground links
    double l_p = 1.0;                 // extra path factor on the ground link
    double noise_w = 0.0;             // ground-link noise power; 0 -> k*T_n*B

    double effective_noise_w() const {
        return noise_w > 0.0 ? noise_w : k_boltz * t_n_k * bandwidth_hz;
    }
};

/// How per-slot channel capacities are produced.
///   table    - ground links at a fixed rate, satellite-satellite links drawn
///              uniformly per (edge, slot) from a band (deterministic, keyed);
///   analytic - both computed from the RF equations and slot geometry.
struct RateModel {
    enum class Mode { table, analytic };
    Mode mode = Mode::table;
    double table_sgl_bps = 60.0e6;
    double isl_band_lo_bps = 80.0e6;
    double isl_band_hi_bps = 160.0e6;
    double reference_sgl_bps = 60.0e6; // state-normalization scale

    /// Throws std::invalid_argument on a degenerate band or rate.
    void validate() const;
};

/// Free-space path loss (4 pi d f / c)^2, linear. Distance in kilometres.
/// Throws std::domain_error when distance or frequency is not positive.
double free_space_loss(double distance_km, double f_hz);

/// Inter-satellite capacity: P_sst * G / (k * T_n * Eb/N0_req * L * margin).
double isl_rate_bps(const RfParams& rf, double distance_km);

/// Ground-link Shannon capacity B * log2(1 + SNR) with
/// SNR = P_set * G * l_p / (N * L).
double sgl_rate_bps(const RfParams& rf, double distance_km);

/// Gain product that makes isl_rate_bps() equal target_bps at ref_distance.
double calibrated_gain_product(const RfParams& rf, double ref_distance_km = 2000.0,
                               double target_bps = 160.0e6);

/// Capacity of one link for one slot under the chosen model. Table-mode
/// satellite-satellite draws are keyed on (seed, unordered endpoints, slot),
/// so replays and evaluation order cannot change them. Endpoint codes must
/// be unique across satellites and stations (the caller owns the encoding).
double slot_rate_bps(const RateModel& model, const RfParams& rf, LinkKind kind,
                     double distance_km, std::uint64_t seed, std::uint64_t endpoint_a,
                     std::uint64_t endpoint_b, int slot);

} // namespace satsched::linkbudget
