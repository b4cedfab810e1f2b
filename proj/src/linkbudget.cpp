#include "satsched/linkbudget.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "satsched/rng.hpp"

namespace satsched::linkbudget {

void RateModel::validate() const {
    if (table_sgl_bps <= 0.0)
        throw std::invalid_argument("rate model: ground-link rate must be positive");
    if (isl_band_lo_bps <= 0.0 || isl_band_hi_bps < isl_band_lo_bps)
        throw std::invalid_argument("rate model: degenerate satellite-link band");
    if (reference_sgl_bps <= 0.0)
        throw std::invalid_argument("rate model: reference rate must be positive");
}

double free_space_loss(double distance_km, double f_hz) {
    if (distance_km <= 0.0) throw std::domain_error("free_space_loss: distance <= 0");
    if (f_hz <= 0.0) throw std::domain_error("free_space_loss: frequency <= 0");
    const double d_m = distance_km * 1000.0;
    const double ratio = 4.0 * M_PI * d_m * f_hz / SPEED_OF_LIGHT_M_S;
    return ratio * ratio;
}

double isl_rate_bps(const RfParams& rf, double distance_km) {
    const double loss = free_space_loss(distance_km, rf.f_hz);
    return rf.p_sst_w * rf.gain_product /
           (rf.k_boltz * rf.t_n_k * rf.ebn0_req * loss * rf.margin);
}

double sgl_rate_bps(const RfParams& rf, double distance_km) {
    const double loss = free_space_loss(distance_km, rf.f_hz);
    const double snr = rf.p_set_w * rf.gain_product * rf.l_p /
                       (rf.effective_noise_w() * loss);
    return rf.bandwidth_hz * std::log2(1.0 + snr);
}

double calibrated_gain_product(const RfParams& rf, double ref_distance_km,
                               double target_bps) {
    // Invert the ISL equation at the reference point.
    const double loss = free_space_loss(ref_distance_km, rf.f_hz);
    return target_bps * rf.k_boltz * rf.t_n_k * rf.ebn0_req * loss * rf.margin / rf.p_sst_w;
}

double slot_rate_bps(const RateModel& model, const RfParams& rf, LinkKind kind,
                     double distance_km, std::uint64_t seed, std::uint64_t endpoint_a,
                     std::uint64_t endpoint_b, int slot) {
    if (model.mode == RateModel::Mode::analytic) {
        return kind == LinkKind::sgl ? sgl_rate_bps(rf, distance_km)
                                     : isl_rate_bps(rf, distance_km);
    }
    if (kind == LinkKind::sgl) return model.table_sgl_bps;
    const std::uint64_t lo = std::min(endpoint_a, endpoint_b);
    const std::uint64_t hi = std::max(endpoint_a, endpoint_b);
    RngStream stream({seed, 0x7261746573ULL, lo, hi, static_cast<std::uint64_t>(slot)});
    return stream.uniform(model.isl_band_lo_bps, model.isl_band_hi_bps);
}

} // namespace satsched::linkbudget
