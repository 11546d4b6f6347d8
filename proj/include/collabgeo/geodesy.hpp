#pragma once

#include <compare>

namespace collabgeo {

/// A latitude/longitude position in degrees.
///
/// Latitude must lie in [-90, 90]. Longitude may be given in any finite range
/// and is normalized into (-180, 180] on construction, so two points that name
/// the same meridian compare equal.
class GeoPoint {
public:
    GeoPoint() = default;
    /// Throws InvalidInput for non-finite values or |lat| > 90.
    GeoPoint(double lat, double lon);

    double lat() const noexcept { return lat_; }
    double lon() const noexcept { return lon_; }

    friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
    friend auto operator<=>(const GeoPoint&, const GeoPoint&) = default;

private:
    double lat_ = 0.0;
    double lon_ = 0.0;
};

/// Reference ellipsoid, semi-major axis in kilometers.
class Ellipsoid {
public:
    /// Throws InvalidInput unless semi_major_km > 0 and 0 <= flattening < 1.
    Ellipsoid(double semi_major_km, double flattening);

    static const Ellipsoid& wgs84() noexcept;

    double semi_major_km() const noexcept { return a_; }
    double flattening() const noexcept { return f_; }
    double semi_minor_km() const noexcept { return a_ * (1.0 - f_); }

private:
    double a_;
    double f_;
};

inline constexpr double kWgs84SemiMajorKm = 6378.137;
inline constexpr double kWgs84Flattening = 1.0 / 298.257223563;
/// IUGG mean Earth radius R1 = (2a + b) / 3 for WGS-84.
inline constexpr double kMeanEarthRadiusKm = 6371.0088;

enum class DistanceMode { Geodesic, Spherical };

/// Shortest path length on the ellipsoid, in kilometers.
///
/// Solved with Vincenty's inverse iteration (converged when the change in the
/// auxiliary longitude drops below 1e-12 rad, at most 200 iterations). Pairs on
/// which that iteration fails, which happens only close to the antipode, are
/// handed to Karney's Newton solver on the starting azimuth, which always
/// terminates. Both routes are accurate to well under a millimeter.
///
/// The arguments are put into a canonical order first, so the result is
/// exactly symmetric in its arguments.
double geodesic_distance(const GeoPoint& a, const GeoPoint& b,
                         const Ellipsoid& e = Ellipsoid::wgs84());

/// Haversine central-angle distance on a sphere of the given radius.
/// Throws InvalidInput if radius_km is not a positive finite number.
double great_circle_distance(const GeoPoint& a, const GeoPoint& b,
                             double radius_km = kMeanEarthRadiusKm);

/// Dispatches on mode; spherical mode uses kMeanEarthRadiusKm.
double distance_km(const GeoPoint& a, const GeoPoint& b, DistanceMode mode,
                   const Ellipsoid& e = Ellipsoid::wgs84());

namespace detail {

/// Vincenty's inverse formula. Returns a negative value when the iteration
/// fails to converge or leaves the valid lambda range.
double vincenty_inverse_km(double lat1, double lon1, double lat2, double lon2,
                           const Ellipsoid& e);

/// Karney's inverse solution (distance only).
double karney_inverse_km(double lat1, double lon1, double lat2, double lon2,
                         const Ellipsoid& e);

}  // namespace detail

}  // namespace collabgeo
