#include "satsched/orbit.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace satsched::orbit {

namespace {

double wrap_360(double deg) {
    double w = std::fmod(deg, 360.0);
    if (w < 0.0) w += 360.0;
    return w;
}

double elapsed_s(int slot, double tau_s) { return (slot - 1) * tau_s; }

} // namespace

void Sofm::validate_and_normalize() {
    if (rows.empty()) throw std::invalid_argument("sofm: no orbits");
    const std::size_t j = rows.front().mean_anomaly_deg.size();
    for (auto& row : rows) {
        if (row.mean_anomaly_deg.size() != j)
            throw std::invalid_argument("sofm: ragged satellite counts across orbits");
        if (row.mean_anomaly_deg.empty())
            throw std::invalid_argument("sofm: orbit with no satellites");
        if (row.altitude_km <= 0.0)
            throw std::invalid_argument("sofm: non-positive altitude");
        if (row.eccentricity < 0.0 || row.eccentricity >= 1.0)
            throw std::invalid_argument("sofm: eccentricity outside [0, 1)");
        row.inclination_deg = wrap_360(row.inclination_deg);
        row.arg_perigee_deg = wrap_360(row.arg_perigee_deg);
        row.raan_deg = wrap_360(row.raan_deg);
        for (auto& ma : row.mean_anomaly_deg) ma = wrap_360(ma);
    }
}

double orbital_period_s(double altitude_km, const EarthModel& earth) {
    const double a = earth.radius_km + altitude_km;
    return 2.0 * M_PI * std::sqrt(a * a * a / MU_EARTH_KM3_S2);
}

double solve_kepler(double mean_anomaly_rad, double eccentricity, double tol) {
    // Newton on f(E) = E - e sin E - M. Starting at E = M converges in a
    // handful of steps for e < 1.
    double e_anom = mean_anomaly_rad;
    for (int iter = 0; iter < 64; ++iter) {
        const double f = e_anom - eccentricity * std::sin(e_anom) - mean_anomaly_rad;
        const double fp = 1.0 - eccentricity * std::cos(e_anom);
        const double step = f / fp;
        e_anom -= step;
        if (std::abs(step) < tol) return e_anom;
    }
    return e_anom; // e < 1 guarantees convergence long before this
}

EciPosition propagate(const Sofm& sofm, const SatelliteId& sat, int slot, double tau_s) {
    if (sat.orbit < 1 || sat.orbit > sofm.orbit_count())
        throw std::out_of_range("propagate: orbit index outside sofm");
    const OrbitRow& row = sofm.rows[sat.orbit - 1];
    if (sat.index < 1 || sat.index > static_cast<int>(row.mean_anomaly_deg.size()))
        throw std::out_of_range("propagate: satellite index outside orbit");

    const double a = EARTH_RADIUS_KM + row.altitude_km;
    const double n = std::sqrt(MU_EARTH_KM3_S2 / (a * a * a)); // mean motion [rad/s]
    const double m0 = row.mean_anomaly_deg[sat.index - 1] * DEG;
    const double m = m0 + n * elapsed_s(slot, tau_s);
    const double e = row.eccentricity;

    double nu;    // true anomaly
    double r;     // orbit radius
    if (e == 0.0) {
        nu = m;
        r = a;
    } else {
        const double e_anom = solve_kepler(m, e);
        nu = 2.0 * std::atan2(std::sqrt(1.0 + e) * std::sin(e_anom / 2.0),
                              std::sqrt(1.0 - e) * std::cos(e_anom / 2.0));
        r = a * (1.0 - e * std::cos(e_anom));
    }

    // Perifocal position, then the 3-1-3 rotation Rz(Omega) Rx(I) Rz(omega).
    const double xp = r * std::cos(nu);
    const double yp = r * std::sin(nu);

    const double co = std::cos(row.arg_perigee_deg * DEG);
    const double so = std::sin(row.arg_perigee_deg * DEG);
    const double ci = std::cos(row.inclination_deg * DEG);
    const double si = std::sin(row.inclination_deg * DEG);
    const double cr = std::cos(row.raan_deg * DEG);
    const double sr = std::sin(row.raan_deg * DEG);

    const double x1 = co * xp - so * yp;
    const double y1 = so * xp + co * yp;
    const double y2 = ci * y1;
    const double z2 = si * y1;

    return {{cr * x1 - sr * y2, sr * x1 + cr * y2, z2}, slot};
}

double geocentric_angle_deg(const Vec3& a, const Vec3& b) {
    if (a.norm() == 0.0 || b.norm() == 0.0)
        throw std::invalid_argument("geocentric_angle: zero-length vector");
    // atan2 form is stable near 0 and 180 where acos loses digits.
    return std::atan2(a.cross(b).norm(), a.dot(b)) / DEG;
}

double max_geocentric_angle_deg(double r_a_km, double r_b_km, const EarthModel& earth) {
    const double g = earth.grazing_radius_km();
    if (r_a_km <= g || r_b_km <= g)
        throw std::domain_error("max_geocentric_angle: radius at or below grazing sphere");
    return (std::acos(g / r_a_km) + std::acos(g / r_b_km)) / DEG;
}

bool pair_visible(const Vec3& a, const Vec3& b, const EarthModel& earth) {
    const double theta = geocentric_angle_deg(a, b);
    const double theta_max = max_geocentric_angle_deg(a.norm(), b.norm(), earth);
    return theta <= theta_max;
}

bool isl_visible(const Sofm& sofm, const SatelliteId& a, const SatelliteId& b, int slot,
                 double tau_s, const EarthModel& earth) {
    const EciPosition pa = propagate(sofm, a, slot, tau_s);
    const EciPosition pb = propagate(sofm, b, slot, tau_s);
    return pair_visible(pa.r_km, pb.r_km, earth);
}

Vec3 station_eci(const GroundStation& gs, int slot, double tau_s, const EarthModel& earth) {
    if (std::abs(gs.lat_deg) > 90.0)
        throw std::invalid_argument("station: latitude outside [-90, 90]");
    const double theta = earth.gmst0_deg * DEG + earth.rotation_rad_s * elapsed_s(slot, tau_s);
    const double lon = gs.lon_deg * DEG + theta;
    const double clat = std::cos(gs.lat_deg * DEG);
    return {earth.radius_km * clat * std::cos(lon),
            earth.radius_km * clat * std::sin(lon),
            earth.radius_km * std::sin(gs.lat_deg * DEG)};
}

double elevation_deg(const EciPosition& pos, const GroundStation& gs, double tau_s,
                     const EarthModel& earth) {
    const Vec3 site = station_eci(gs, pos.slot, tau_s, earth);
    const Vec3 zenith = site.normalized();
    const Vec3 to_sat = pos.r_km - site;
    const double range = to_sat.norm();
    if (range == 0.0) return 90.0;
    return std::asin(std::clamp(to_sat.dot(zenith) / range, -1.0, 1.0)) / DEG;
}

bool sgl_visible(const EciPosition& pos, const GroundStation& gs, double tau_s,
                 const EarthModel& earth) {
    return elevation_deg(pos, gs, tau_s, earth) >= gs.min_elevation_deg;
}

Vec3 sun_direction(int slot, double tau_s, const SunModel& sun) {
    const double days = elapsed_s(slot, tau_s) / 86400.0;
    const double lon = (sun.longitude0_deg + sun.advance_deg_per_day * days) * DEG;
    return {std::cos(lon), std::sin(lon), 0.0};
}

bool in_shadow(const Vec3& pos_km, const Vec3& sun_dir, const EarthModel& earth) {
    const double along = pos_km.dot(sun_dir);
    if (along >= 0.0) return false; // sun side of the terminator plane
    const Vec3 perp = pos_km - sun_dir * along;
    return perp.norm() < earth.radius_km;
}

double sunlit_seconds(const EciPosition& pos, double tau_s, const SunModel& sun,
                      const EarthModel& earth) {
    const Vec3 s = sun_direction(pos.slot, tau_s, sun);
    return in_shadow(pos.r_km, s, earth) ? 0.0 : tau_s;
}

} // namespace satsched::orbit
