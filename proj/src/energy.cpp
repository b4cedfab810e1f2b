#include "satsched/energy.hpp"

#include <algorithm>
#include <stdexcept>

namespace satsched::energy {

void PowerParams::validate() const {
    if (p_sst_w < 0.0 || p_set_w < 0.0 || p_sr_w < 0.0 || p_o_w < 0.0 || p_h_w < 0.0)
        throw std::invalid_argument("power: negative power rating");
    if (eta < 0.0 || eta > 1.0)
        throw std::invalid_argument("power: eta outside [0, 1]");
    if (e_max_j <= 0.0) throw std::invalid_argument("power: e_max must be positive");
}

namespace {

double leg_seconds(const LinkLoad& leg) {
    if (leg.bits < 0.0) throw std::domain_error("energy: negative bit volume");
    if (leg.bits == 0.0) return 0.0;
    if (leg.rate_bps <= 0.0) throw std::domain_error("energy: bits without a positive rate");
    return leg.bits / leg.rate_bps;
}

} // namespace

double e_transmit(std::span<const LinkLoad> loads, const PowerParams& power) {
    double joules = 0.0;
    for (const LinkLoad& leg : loads) {
        const double power_w = leg.kind == LinkKind::sgl ? power.p_set_w : power.p_sst_w;
        joules += leg_seconds(leg) * power_w;
    }
    return joules;
}

double e_receive(std::span<const LinkLoad> loads, const PowerParams& power) {
    double joules = 0.0;
    for (const LinkLoad& leg : loads) joules += leg_seconds(leg) * power.p_sr_w;
    return joules;
}

double e_nominal(const PowerParams& power, double tau_s) {
    if (tau_s < 0.0) throw std::domain_error("energy: negative slot length");
    return power.p_o_w * tau_s;
}

double e_total(double e_tr_j, double e_r_j, double e_o_j) { return e_tr_j + e_r_j + e_o_j; }

double e_harvest(const PowerParams& power, double sunlit_s, double tau_s) {
    if (sunlit_s < 0.0 || tau_s < 0.0) throw std::domain_error("energy: negative duration");
    return power.p_h_w * std::min(sunlit_s, tau_s);
}

EnergyDelta apply_energy(double e_now_j, double consumed_j, double harvest_j,
                         const PowerParams& power) {
    if (consumed_j < 0.0 || harvest_j < 0.0)
        throw std::logic_error("energy: negative consumption or harvest");
    const double drained = e_now_j - consumed_j;
    if (drained < 0.0)
        throw std::logic_error("energy: consumption drove battery below zero");
    const double stored = std::min(harvest_j, power.e_max_j - drained);
    return {consumed_j, harvest_j, stored, drained + stored};
}

} // namespace satsched::energy
