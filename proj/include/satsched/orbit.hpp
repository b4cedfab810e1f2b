#pragma once

#include <vector>

#include "satsched/types.hpp"
#include "satsched/vec3.hpp"

namespace satsched::orbit {

// Physical constants.
constexpr double MU_EARTH_KM3_S2 = 398600.4418;   // GM of Earth [km^3/s^2]
constexpr double EARTH_RADIUS_KM = 6371.0;        // mean spherical radius [km]
constexpr double EARTH_ROT_RAD_S = 7.2921159e-5;  // sidereal rotation rate [rad/s]
constexpr double DEG = 0.017453292519943295;      // pi / 180

/**
 * @brief One orbit of a constellation: shared elements plus the mean anomaly
 *        of every satellite riding it.
 *
 * Altitude is measured from the mean Earth radius to the semi-major axis.
 * All angles are degrees and are normalized to [0, 360) on construction of
 * the owning Sofm.
 */
struct OrbitRow {
    double altitude_km = 0.0;      // h
    double eccentricity = 0.0;     // e, in [0, 1)
    double inclination_deg = 0.0;  // I
    double arg_perigee_deg = 0.0;  // omega
    double raan_deg = 0.0;         // Omega
    std::vector<double> mean_anomaly_deg; // M at epoch, one entry per satellite
};

/**
 * @brief Satellite orbit feature matrix for one domain: the full geometric
 *        description of its constellation at the scenario epoch.
 *
 * Every orbit must carry the same number of satellites (grid constellation).
 * validate() enforces that plus the element ranges; the scenario loader calls
 * it once so the propagator can stay assertion-free.
 */
struct Sofm {
    std::vector<OrbitRow> rows;

    int orbit_count() const { return static_cast<int>(rows.size()); }
    int sats_per_orbit() const {
        return rows.empty() ? 0 : static_cast<int>(rows.front().mean_anomaly_deg.size());
    }
    int size() const { return orbit_count() * sats_per_orbit(); }

    /// Throws std::invalid_argument on ragged rows, e outside [0,1), or
    /// non-positive altitude. Normalizes all angles into [0, 360).
    void validate_and_normalize();
};

/// Inertial position at the start of a slot. Slots are 1-based; slot 1 is
/// the epoch itself (zero elapsed time).
struct EciPosition {
    Vec3 r_km;
    int slot = 1;
};

struct GroundStation {
    int id = 0;
    std::string name;
    double lat_deg = 0.0;
    double lon_deg = 0.0;
    double min_elevation_deg = 10.0;
};

/// Spherical rotating Earth used for grazing tests and station geometry.
struct EarthModel {
    double radius_km = EARTH_RADIUS_KM;
    double grazing_margin_km = 0.0;       // added to the radius for LOS tests
    double rotation_rad_s = EARTH_ROT_RAD_S;
    double gmst0_deg = 0.0;               // Greenwich angle at the epoch

    double grazing_radius_km() const { return radius_km + grazing_margin_km; }
};

/// Coarse sun: a unit direction in the equatorial plane that drifts along
/// the mean ecliptic rate. Good enough for cylindrical-shadow eclipses.
struct SunModel {
    double longitude0_deg = 0.0;
    double advance_deg_per_day = 0.9856;
};

/// Circular-orbit period 2*pi*sqrt(a^3/mu) for a satellite at the given
/// altitude [s].
double orbital_period_s(double altitude_km, const EarthModel& earth = {});

/// Solves Kepler's equation M = E - e*sin(E) by Newton iteration.
/// Inputs and output in radians; tol is on |E_{n+1} - E_n|.
double solve_kepler(double mean_anomaly_rad, double eccentricity, double tol = 1e-12);

/// ECI position of one satellite at the start of `slot`. Closed-form for
/// circular orbits, Newton-Kepler otherwise. Throws std::out_of_range when
/// the id does not address a satellite of this sofm.
EciPosition propagate(const Sofm& sofm, const SatelliteId& sat, int slot, double tau_s);

/// Angle subtended at the geocentre by two position vectors, degrees in
/// [0, 180]. Throws std::invalid_argument when either vector is zero.
double geocentric_angle_deg(const Vec3& a, const Vec3& b);

/// Largest geocentric separation at which two satellites at radii r_a, r_b
/// still clear the grazing sphere: acos(g/r_a) + acos(g/r_b).
/// Throws std::domain_error when a radius is at or below the grazing radius.
double max_geocentric_angle_deg(double r_a_km, double r_b_km, const EarthModel& earth = {});

/// Line-of-sight test between two inertial positions (Earth occlusion only).
bool pair_visible(const Vec3& a, const Vec3& b, const EarthModel& earth = {});

/// Visibility between two satellites of the same constellation at a slot.
bool isl_visible(const Sofm& sofm, const SatelliteId& a, const SatelliteId& b, int slot,
                 double tau_s, const EarthModel& earth = {});

/// Station position in ECI at the start of a slot (rotating Earth).
Vec3 station_eci(const GroundStation& gs, int slot, double tau_s, const EarthModel& earth = {});

/// Elevation of the satellite above the station's horizon plane [deg].
double elevation_deg(const EciPosition& pos, const GroundStation& gs, double tau_s,
                     const EarthModel& earth = {});

/// Station visibility: elevation >= min_elevation (inclusive threshold).
bool sgl_visible(const EciPosition& pos, const GroundStation& gs, double tau_s,
                 const EarthModel& earth = {});

/// Unit sun direction at the start of a slot.
Vec3 sun_direction(int slot, double tau_s, const SunModel& sun = {});

/// True when the point sits inside the cylindrical Earth shadow.
bool in_shadow(const Vec3& pos_km, const Vec3& sun_dir, const EarthModel& earth = {});

/// Sunlit duration credited to the slot: tau when the satellite is outside
/// the shadow cylinder at slot start, 0 otherwise (quasi-static evaluation,
/// like every other per-slot quantity).
double sunlit_seconds(const EciPosition& pos, double tau_s, const SunModel& sun = {},
                      const EarthModel& earth = {});

} // namespace satsched::orbit
