#include <doctest.h>

#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <vector>

#include "collabgeo/error.hpp"
#include "collabgeo/geodesy.hpp"
#include "test_support.hpp"

using namespace collabgeo;

namespace {

struct ReferenceRow {
    double lat1, lon1, lat2, lon2, km;
};

// Values produced offline by GeographicLib (see make_geodesic_reference.py).
std::vector<ReferenceRow> reference_rows() {
    std::ifstream in(testing::fixture("geodesic_reference.csv"));
    REQUIRE(in);
    std::string line;
    std::getline(in, line);
    std::vector<ReferenceRow> rows;
    while (std::getline(in, line)) {
        std::istringstream s(line);
        ReferenceRow r{};
        char comma;
        s >> r.lat1 >> comma >> r.lon1 >> comma >> r.lat2 >> comma >> r.lon2 >> comma >> r.km;
        rows.push_back(r);
    }
    return rows;
}

GeoPoint random_point(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> lat(-90.0, 90.0), lon(-180.0, 180.0);
    return {lat(rng), lon(rng)};
}

}  // namespace

TEST_CASE("GeoPoint validates and normalizes") {
    CHECK(GeoPoint(10, 190).lon() == doctest::Approx(-170));
    CHECK(GeoPoint(10, -180).lon() == 180.0);
    CHECK(GeoPoint(10, 180).lon() == 180.0);
    CHECK(GeoPoint(10, 540).lon() == 180.0);
    CHECK(GeoPoint(10, -190).lon() == doctest::Approx(170));
    CHECK(GeoPoint(0, 360) == GeoPoint(0, 0));
    CHECK(GeoPoint(90, 0).lat() == 90.0);
    CHECK_THROWS_AS(GeoPoint(90.0001, 0), InvalidInput);
    CHECK_THROWS_AS(GeoPoint(-91, 0), InvalidInput);
    CHECK_THROWS_AS(GeoPoint(std::nan(""), 0), InvalidInput);
    CHECK_THROWS_AS(GeoPoint(0, std::numeric_limits<double>::infinity()), InvalidInput);
}

TEST_CASE("Ellipsoid parameters") {
    const auto& w = Ellipsoid::wgs84();
    CHECK(w.semi_major_km() == 6378.137);
    CHECK(w.flattening() == 1.0 / 298.257223563);
    CHECK_THROWS_AS(Ellipsoid(0, 0), InvalidInput);
    CHECK_THROWS_AS(Ellipsoid(6378, 1.0), InvalidInput);
    CHECK_THROWS_AS(Ellipsoid(6378, -0.1), InvalidInput);
    CHECK_NOTHROW(Ellipsoid(6378, 0.0));
}

TEST_CASE("geodesic distance: fixed values") {
    // Meridian quadrant and equatorial quarter.
    CHECK(std::fabs(geodesic_distance({0, 0}, {90, 0}) - 10001.965729313) < 1e-3);
    CHECK(std::fabs(geodesic_distance({0, 0}, {0, 90}) - 6378.137 * std::numbers::pi / 2) < 1e-3);
    CHECK(geodesic_distance({12.5, -33.25}, {12.5, -33.25}) == 0.0);
    CHECK(geodesic_distance({0, 180}, {0, -180}) == 0.0);

    const double harvard_mit = geodesic_distance({42.3770, -71.1167}, {42.3601, -71.0942});
    CHECK(std::fabs(harvard_mit - 2.61) <= 0.05 * 2.61);
    CHECK(std::fabs(harvard_mit - 2.637991196) < 1e-6);

    // Near antipodal, where Vincenty fails.
    CHECK(detail::vincenty_inverse_km(0, 0, 0.5, 179.7, Ellipsoid::wgs84()) < 0);
    CHECK(std::fabs(geodesic_distance({0, 0}, {0.5, 179.7}) - 19944.127420750) < 1e-6);
    // Equatorial antipodes take the meridian.
    CHECK(std::fabs(geodesic_distance({0, 0}, {0, 180}) - 2 * 10001.965729313) < 1e-6);
}

TEST_CASE("geodesic distance matches the frozen reference table") {
    const auto rows = reference_rows();
    REQUIRE(rows.size() >= 600);
    double worst = 0, worst_karney = 0;
    int vincenty_failures = 0;
    for (const auto& r : rows) {
        const double d = geodesic_distance({r.lat1, r.lon1}, {r.lat2, r.lon2});
        worst = std::max(worst, std::fabs(d - r.km));
        const double k = detail::karney_inverse_km(r.lat1, r.lon1, r.lat2, r.lon2, Ellipsoid::wgs84());
        worst_karney = std::max(worst_karney, std::fabs(k - r.km));
        if (detail::vincenty_inverse_km(r.lat1, r.lon1, r.lat2, r.lon2, Ellipsoid::wgs84()) < 0) ++vincenty_failures;
    }
    INFO("worst combined error km: " << worst << ", Karney alone: " << worst_karney);
    CHECK(worst < 1e-6);
    CHECK(worst_karney < 1e-9);
    CHECK(vincenty_failures > 0);  // the table exercises the fallback
}

TEST_CASE("geodesic distance: symmetry, identity, bounds over random pairs") {
    std::mt19937_64 rng(20210301);
    const double half_circumference = std::numbers::pi * kWgs84SemiMajorKm;
    for (int i = 0; i < 10000; ++i) {
        const GeoPoint a = random_point(rng), b = random_point(rng);
        const double ab = geodesic_distance(a, b);
        REQUIRE(std::isfinite(ab));
        CHECK(std::fabs(ab - geodesic_distance(b, a)) < 1e-9);
        CHECK(geodesic_distance(a, a) == 0.0);
        CHECK(ab >= 0.0);
        CHECK(ab <= half_circumference);
    }
}

TEST_CASE("equatorial distance is a times the longitude difference") {
    // Holds while the equator is the shortest path, i.e. up to (1 - f) * 180 degrees.
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> lon(-180, 180), delta(0, 179);
    for (int i = 0; i < 2000; ++i) {
        const double l1 = lon(rng), d = delta(rng);
        const double expected = kWgs84SemiMajorKm * d * std::numbers::pi / 180.0;
        CHECK(std::fabs(geodesic_distance({0, l1}, {0, l1 + d}) - expected) < 1e-6);
    }
}

TEST_CASE("near-antipodal pairs converge") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> lat(-3, 3), lon(176, 180);
    for (int i = 0; i < 2000; ++i) {
        const double d = geodesic_distance({0, 0}, {lat(rng), lon(rng)});
        CHECK(std::isfinite(d));
        CHECK(d > 19000);
        CHECK(d <= std::numbers::pi * kWgs84SemiMajorKm);
    }
}

TEST_CASE("great circle distance") {
    const double r = kMeanEarthRadiusKm;
    CHECK(std::fabs(great_circle_distance({0, 0}, {0, 180}) - std::numbers::pi * r) < 1e-3);
    CHECK(std::fabs(great_circle_distance({0, 0}, {0, 90}) - std::numbers::pi / 2 * r) < 1e-3);
    // The round 6371 km radius gives the commonly quoted figures.
    CHECK(std::fabs(great_circle_distance({0, 0}, {0, 180}, 6371.0) - 20015.087) < 1e-3);
    CHECK(std::fabs(great_circle_distance({0, 0}, {0, 90}, 6371.0) - 10007.543) < 1e-3);
    CHECK(great_circle_distance({5, 5}, {5, 5}) == 0.0);
    CHECK_THROWS_AS(great_circle_distance({0, 0}, {1, 1}, 0.0), InvalidInput);
    CHECK_THROWS_AS(great_circle_distance({0, 0}, {1, 1}, std::nan("")), InvalidInput);
    CHECK(distance_km({0, 0}, {0, 90}, DistanceMode::Spherical) == great_circle_distance({0, 0}, {0, 90}));
    CHECK(distance_km({0, 0}, {0, 90}, DistanceMode::Geodesic) == geodesic_distance({0, 0}, {0, 90}));
}

TEST_CASE("geodesic and great circle agree within 0.6 percent") {
    std::mt19937_64 rng(4242);
    for (int i = 0; i < 10000; ++i) {
        const GeoPoint a = random_point(rng), b = random_point(rng);
        const double g = geodesic_distance(a, b);
        const double s = great_circle_distance(a, b);
        CHECK(std::fabs(s - g) < 0.006 * g + 1e-9);
        CHECK(std::fabs(s - great_circle_distance(b, a)) < 1e-9);
    }
}

TEST_CASE("other ellipsoids") {
    // On a sphere the geodesic is the great circle.
    const Ellipsoid sphere(kMeanEarthRadiusKm, 0.0);
    std::mt19937_64 rng(5);
    for (int i = 0; i < 500; ++i) {
        const GeoPoint a = random_point(rng), b = random_point(rng);
        CHECK(geodesic_distance(a, b, sphere) == doctest::Approx(great_circle_distance(a, b)).epsilon(1e-9));
    }
}
