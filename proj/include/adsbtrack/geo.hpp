#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

#include "adsbtrack/errors.hpp"

namespace adsbtrack::geo {

inline constexpr double kWgs84A = 6378137.0;
inline constexpr double kWgs84F = 1.0 / 298.257223563;
inline constexpr double kZoneHalfWidthDeg = 6.0;

inline constexpr double deg2rad(double d) { return d * std::numbers::pi / 180.0; }
inline constexpr double rad2deg(double r) { return r * 180.0 / std::numbers::pi; }

// One raw broadcast sample: geodetic position plus speed/heading/pitch.
// psi is measured clockwise from true north, theta positive upward.
struct AdsbRecord {
    double t = 0.0;      // seconds since track start
    double lon = 0.0;    // degrees
    double lat = 0.0;    // degrees
    double alt = 0.0;    // meters (treated verbatim as local z)
    double v = 0.0;      // m/s
    double psi = 0.0;    // radians
    double theta = 0.0;  // radians

    void validate() const {
        if (!(lat >= -90.0 && lat <= 90.0)) throw DataError("latitude out of [-90, 90]: " + std::to_string(lat));
        if (!(lon >= -180.0 && lon <= 180.0)) throw DataError("longitude out of [-180, 180]: " + std::to_string(lon));
        if (!(v >= 0.0)) throw DataError("negative speed: " + std::to_string(v));
        if (!(theta >= -std::numbers::pi / 2 && theta <= std::numbers::pi / 2))
            throw DataError("pitch out of [-pi/2, pi/2]: " + std::to_string(theta));
    }
};

// Cartesian observation o_k in the local east/north/up frame.
struct Observation {
    double t = 0.0;
    double x = 0.0, y = 0.0, z = 0.0;     // meters
    double vx = 0.0, vy = 0.0, vz = 0.0;  // m/s
};

struct ProjectionConfig {
    double central_meridian = 117.0;   // degrees
    double false_easting = 500000.0;   // meters
    double a = kWgs84A;                // semi-major axis, meters
    double f = kWgs84F;                // flattening

    void validate() const {
        if (!(a > 0.0)) throw ConfigError("ellipsoid semi-major axis must be positive");
        if (!(f > 0.0 && f < 1.0)) throw ConfigError("flattening must lie in (0, 1)");
    }

    // Default origin policy: center the zone on the first record, rounded to
    // a whole degree so coordinates stay small.
    static ProjectionConfig for_longitude(double lon_deg) {
        ProjectionConfig cfg;
        cfg.central_meridian = std::round(lon_deg);
        return cfg;
    }
};

// Transverse Mercator with unit central scale, evaluated with the Krueger
// series in the third flattening n. Terms through n^6 keep the truncation
// error under 1e-4 m for |dlon| <= 3 degrees (the n^4 term is already below
// 2e-5 m on WGS-84).
class GaussKruger {
public:
    explicit GaussKruger(const ProjectionConfig& cfg) : cfg_(cfg) {
        cfg.validate();
        const double f = cfg.f;
        n_ = f / (2.0 - f);
        e2_ = f * (2.0 - f);
        e_ = std::sqrt(e2_);
        const double n = n_, n2 = n * n, n3 = n2 * n, n4 = n3 * n, n5 = n4 * n, n6 = n5 * n;
        rect_radius_ = cfg.a / (1.0 + n) * (1.0 + n2 / 4.0 + n4 / 64.0 + n6 / 256.0);

        alpha_ = {0.0,
                  n / 2.0 - 2.0 / 3.0 * n2 + 5.0 / 16.0 * n3 + 41.0 / 180.0 * n4 - 127.0 / 288.0 * n5 + 7891.0 / 37800.0 * n6,
                  13.0 / 48.0 * n2 - 3.0 / 5.0 * n3 + 557.0 / 1440.0 * n4 + 281.0 / 630.0 * n5 - 1983433.0 / 1935360.0 * n6,
                  61.0 / 240.0 * n3 - 103.0 / 140.0 * n4 + 15061.0 / 26880.0 * n5 + 167603.0 / 181440.0 * n6,
                  49561.0 / 161280.0 * n4 - 179.0 / 168.0 * n5 + 6601661.0 / 7257600.0 * n6,
                  34729.0 / 80640.0 * n5 - 3418889.0 / 1995840.0 * n6,
                  212378941.0 / 319334400.0 * n6};
        beta_ = {0.0,
                 n / 2.0 - 2.0 / 3.0 * n2 + 37.0 / 96.0 * n3 - 1.0 / 360.0 * n4 - 81.0 / 512.0 * n5 + 96199.0 / 604800.0 * n6,
                 1.0 / 48.0 * n2 + 1.0 / 15.0 * n3 - 437.0 / 1440.0 * n4 + 46.0 / 105.0 * n5 - 1118711.0 / 3870720.0 * n6,
                 17.0 / 480.0 * n3 - 37.0 / 840.0 * n4 - 209.0 / 4480.0 * n5 + 5569.0 / 90720.0 * n6,
                 4397.0 / 161280.0 * n4 - 11.0 / 504.0 * n5 - 830251.0 / 7257600.0 * n6,
                 4583.0 / 161280.0 * n5 - 108847.0 / 3991680.0 * n6,
                 20648693.0 / 638668800.0 * n6};
    }

    // geodetic -> (easting, northing); includes the false easting
    std::pair<double, double> forward(double lat_deg, double lon_deg) const {
        check_zone(lon_deg);
        if (!(lat_deg >= -90.0 && lat_deg <= 90.0))
            throw DataError("latitude out of [-90, 90]: " + std::to_string(lat_deg));
        const double phi = deg2rad(lat_deg);
        const double lam = deg2rad(delta_lon(lon_deg));

        const double chi = conformal_lat(phi);
        const double tchi = std::tan(chi);
        const double xip = std::atan2(tchi, std::cos(lam));
        const double etap = std::asinh(std::sin(lam) / std::hypot(tchi, std::cos(lam)));

        double xi = xip, eta = etap;
        for (int j = 1; j <= 6; ++j) {
            xi += alpha_[static_cast<std::size_t>(j)] * std::sin(2.0 * j * xip) * std::cosh(2.0 * j * etap);
            eta += alpha_[static_cast<std::size_t>(j)] * std::cos(2.0 * j * xip) * std::sinh(2.0 * j * etap);
        }
        return {cfg_.false_easting + rect_radius_ * eta, rect_radius_ * xi};
    }

    // (easting, northing) -> geodetic (lat_deg, lon_deg)
    std::pair<double, double> inverse(double easting, double northing) const {
        if (!std::isfinite(easting) || !std::isfinite(northing))
            throw DataError("non-finite projected coordinates");
        const double xi = northing / rect_radius_;
        const double eta = (easting - cfg_.false_easting) / rect_radius_;

        double xip = xi, etap = eta;
        for (int j = 1; j <= 6; ++j) {
            xip -= beta_[static_cast<std::size_t>(j)] * std::sin(2.0 * j * xi) * std::cosh(2.0 * j * eta);
            etap -= beta_[static_cast<std::size_t>(j)] * std::cos(2.0 * j * xi) * std::sinh(2.0 * j * eta);
        }
        const double chi = std::atan2(std::sin(xip), std::hypot(std::sinh(etap), std::cos(xip)));
        const double lam = std::atan2(std::sinh(etap), std::cos(xip));
        return {rad2deg(geodetic_from_conformal(chi)), cfg_.central_meridian + rad2deg(lam)};
    }

    double delta_lon(double lon_deg) const {
        return std::remainder(lon_deg - cfg_.central_meridian, 360.0);
    }

    void check_zone(double lon_deg) const {
        const double d = delta_lon(lon_deg);
        if (!(std::abs(d) < kZoneHalfWidthDeg)) {
            std::ostringstream msg;
            msg << "longitude " << lon_deg << " deg lies " << std::abs(d)
                << " deg from central meridian " << cfg_.central_meridian
                << " deg; zone limit is +/-" << kZoneHalfWidthDeg << " deg";
            throw DataError(msg.str());
        }
    }

    double rectifying_radius() const { return rect_radius_; }
    const ProjectionConfig& config() const { return cfg_; }

    double conformal_lat(double phi) const {
        const double s = std::sin(phi);
        const double psi = std::asinh(std::tan(phi)) - e_ * std::atanh(e_ * s);
        return std::atan(std::sinh(psi));
    }

private:
    // Newton solve of conformal_lat(phi) = chi; quadratic convergence from
    // phi = chi, iteration capped defensively.
    double geodetic_from_conformal(double chi) const {
        double phi = chi;
        for (int it = 0; it < 20; ++it) {
            const double c = conformal_lat(phi);
            const double cphi = std::cos(phi);
            const double dchidphi = std::cos(c) * (1.0 - e2_) / (cphi * (1.0 - e2_ * std::sin(phi) * std::sin(phi)));
            const double step = (chi - c) / dchidphi;
            phi += step;
            if (std::abs(step) < 1e-15) break;
        }
        return phi;
    }

    ProjectionConfig cfg_;
    double n_ = 0.0, e_ = 0.0, e2_ = 0.0;
    double rect_radius_ = 0.0;
    std::array<double, 7> alpha_{}, beta_{};
};

struct ProjectedPoint {
    double x, y, z;
};

inline ProjectedPoint project(const AdsbRecord& rec, const ProjectionConfig& cfg) {
    rec.validate();
    const GaussKruger tm(cfg);
    const auto [x, y] = tm.forward(rec.lat, rec.lon);
    return {x, y, rec.alt};
}

inline std::pair<double, double> unproject(double x, double y, const ProjectionConfig& cfg) {
    const GaussKruger tm(cfg);
    return tm.inverse(x, y);
}

struct VelocityComponents {
    double vx, vy, vz;
};

// (v, psi, theta) -> east/north/up components; norm is preserved exactly up
// to rounding.
inline VelocityComponents decompose_velocity(double v, double psi, double theta) {
    if (!(v >= 0.0)) throw DataError("negative speed: " + std::to_string(v));
    const double ct = std::cos(theta);
    return {v * ct * std::sin(psi), v * ct * std::cos(psi), v * std::sin(theta)};
}

// Inverse of decompose_velocity; zero velocity maps to zero angles.
inline void recompose_velocity(double vx, double vy, double vz, double& v, double& psi, double& theta) {
    v = std::sqrt(vx * vx + vy * vy + vz * vz);
    if (v == 0.0) {
        psi = 0.0;
        theta = 0.0;
        return;
    }
    psi = std::atan2(vx, vy);
    if (psi < 0.0) psi += 2.0 * std::numbers::pi;
    const double r = std::clamp(vz / v, -1.0, 1.0);
    theta = std::asin(r);
}

inline Observation to_observation(const AdsbRecord& rec, const ProjectionConfig& cfg) {
    const ProjectedPoint p = project(rec, cfg);
    const VelocityComponents vc = decompose_velocity(rec.v, rec.psi, rec.theta);
    return {rec.t, p.x, p.y, p.z, vc.vx, vc.vy, vc.vz};
}

}  // namespace adsbtrack::geo
