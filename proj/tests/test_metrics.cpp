#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "collabgeo/error.hpp"
#include "collabgeo/metrics.hpp"

using namespace collabgeo;

namespace {

AffiliationRecord aff(std::string id, double lat, double lon, const char* country = nullptr) {
    return {std::move(id), GeoPoint(lat, lon), country ? CountryCode::parse(country) : std::nullopt};
}

PublicationTeam make_team(std::vector<AffiliationRecord> affs, int year = 2000) {
    PublicationTeam t;
    t.id = "k";
    t.year = year;
    t.affiliations = std::move(affs);
    return t;
}

PublicationTeam random_team(std::mt19937_64& rng, std::size_t m) {
    static const char* codes[] = {"US", "CN", "DE", "FR"};
    std::uniform_real_distribution<double> lat(-80, 80), lon(-180, 180);
    std::vector<AffiliationRecord> affs;
    std::set<std::string> used;
    while (affs.size() < m) {
        std::string id = "a" + std::to_string(rng() % 1000);
        if (!used.insert(id).second) continue;
        affs.push_back(aff(id, lat(rng), lon(rng), codes[rng() % 4]));
    }
    return make_team(std::move(affs));
}

// Point C with |AC| = 4 km and |BC| = 5 km where A = (0, 0), B = 3 km east on
// the equator; found by Newton iteration on the geodesic distance itself.
GeoPoint solve_345_apex() {
    const double a = kWgs84SemiMajorKm;
    const GeoPoint A(0, 0), B(0, 3.0 / a * 180.0 / std::numbers::pi);
    double lat = 4.0 / 110.574, lon = 0.0;
    for (int it = 0; it < 50; ++it) {
        const auto f = [&](double la, double lo) {
            const GeoPoint c(la, lo);
            return std::pair{geodesic_distance(A, c) - 4.0, geodesic_distance(B, c) - 5.0};
        };
        const auto [f1, f2] = f(lat, lon);
        if (std::fabs(f1) < 1e-12 && std::fabs(f2) < 1e-12) break;
        const double h = 1e-7;
        const auto [a1, a2] = f(lat + h, lon);
        const auto [b1, b2] = f(lat, lon + h);
        const double j11 = (a1 - f1) / h, j21 = (a2 - f2) / h, j12 = (b1 - f1) / h, j22 = (b2 - f2) / h;
        const double det = j11 * j22 - j12 * j21;
        lat -= (j22 * f1 - j12 * f2) / det;
        lon -= (-j21 * f1 + j11 * f2) / det;
    }
    return {lat, lon};
}

}  // namespace

TEST_CASE("pair_set sizes and order") {
    std::mt19937_64 rng(1);
    CHECK(pair_set(random_team(rng, 2)).size() == 1);
    CHECK(pair_set(random_team(rng, 4)).size() == 6);
    const auto team = random_team(rng, 5);
    const auto pairs = pair_set(team);
    CHECK(pairs.size() == 10);
    std::set<std::pair<std::string, std::string>> oracle;
    for (std::size_t i = 0; i < team.m(); ++i) {
        for (std::size_t j = 0; j < team.m(); ++j) {
            if (i == j) continue;
            auto x = team.affiliations[i].id, y = team.affiliations[j].id;
            if (y < x) std::swap(x, y);
            oracle.insert({x, y});
        }
    }
    std::set<std::pair<std::string, std::string>> got;
    for (const auto& p : pairs) {
        CHECK(p.first < p.second);
        got.insert({p.first, p.second});
    }
    CHECK(got == oracle);
    CHECK(std::is_sorted(pairs.begin(), pairs.end()));
    CHECK_THROWS_AS(pair_set(random_team(rng, 1)), NotACollaboration);
    CHECK_THROWS_AS(pair_set(make_team({})), NotACollaboration);
}

TEST_CASE("indicators on constructed teams") {
    SUBCASE("a single pair") {
        const auto td = team_distances(make_team({aff("a", 10, 10), aff("b", 11, 12)}));
        const double d = geodesic_distance({10, 10}, {11, 12});
        CHECK(*td.ave_gd == d);
        CHECK(*td.max_gd == d);
        CHECK(*td.min_gd == d);
    }
    SUBCASE("pair distances 3, 4, 5 km") {
        const double lon_b = 3.0 / kWgs84SemiMajorKm * 180.0 / std::numbers::pi;
        const GeoPoint c = solve_345_apex();
        const auto td = team_distances(make_team({aff("A", 0, 0), aff("B", 0, lon_b), aff("C", c.lat(), c.lon())}));
        REQUIRE(td.pair_distances.size() == 3);
        CHECK(std::fabs(*td.ave_gd - 4.0) < 1e-9);
        CHECK(std::fabs(*td.max_gd - 5.0) < 1e-9);
        CHECK(std::fabs(*td.min_gd - 3.0) < 1e-9);
    }
    SUBCASE("Harvard and MIT") {
        const auto td = team_distances(
            make_team({aff("harvard", 42.3770, -71.1167, "US"), aff("mit", 42.3601, -71.0942, "US")}));
        for (const double v : {*td.ave_gd, *td.max_gd, *td.min_gd}) CHECK(std::fabs(v - 2.61) <= 0.05 * 2.61);
        CHECK(td.scope == Scope::Domestic);
    }
    SUBCASE("shared campus") {
        const auto td = team_distances(make_team({aff("x", 5, 5, "US"), aff("y", 5, 5, "US"), aff("z", 5, 5, "US")}));
        CHECK(*td.ave_gd == 0.0);
        CHECK(*td.max_gd == 0.0);
        CHECK(td.scope == Scope::Domestic);
    }
    SUBCASE("single affiliation") {
        const auto team = make_team({aff("x", 5, 5, "US")});
        CHECK_THROWS_AS(team_distances(team), NotACollaboration);
        const auto td = measure_team(team);
        CHECK_FALSE(td.ave_gd);
        CHECK_FALSE(td.max_gd);
        CHECK_FALSE(td.min_gd);
        CHECK(td.pair_distances.empty());
        CHECK(td.scope == Scope::SingleAffiliation);
        CHECK(td.country_count == 1);
    }
    SUBCASE("spherical model") {
        const auto team = make_team({aff("a", 0, 0), aff("b", 0, 90)});
        const auto td = team_distances(team, DistanceModel{DistanceMode::Spherical, Ellipsoid::wgs84()});
        CHECK(*td.ave_gd == great_circle_distance({0, 0}, {0, 90}));
    }
}

TEST_CASE("indicator oracle over 1000 random teams") {
    std::mt19937_64 rng(20200601);
    for (int n = 0; n < 1000; ++n) {
        const std::size_t m = 2 + rng() % 5;
        const auto team = random_team(rng, m);
        const auto td = team_distances(team);
        // Brute-force double loop in input order.
        double sum = 0, hi = -1, lo = 1e300;
        std::size_t count = 0;
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = i + 1; j < m; ++j) {
                const double d = geodesic_distance(team.affiliations[i].location, team.affiliations[j].location);
                sum += d;
                hi = std::max(hi, d);
                lo = std::min(lo, d);
                ++count;
            }
        }
        CHECK(td.pair_distances.size() == m * (m - 1) / 2);
        CHECK(count == td.pair_distances.size());
        CHECK(std::fabs(*td.ave_gd - sum / static_cast<double>(count)) < 1e-9);
        CHECK(std::fabs(*td.max_gd - hi) < 1e-9);
        CHECK(std::fabs(*td.min_gd - lo) < 1e-9);
        CHECK(*td.min_gd <= *td.ave_gd);
        CHECK(*td.ave_gd <= *td.max_gd);
        if (m == 2) {
            CHECK(*td.ave_gd == *td.max_gd);
            CHECK(*td.ave_gd == *td.min_gd);
        }
        for (std::size_t p = 1; p < td.pair_distances.size(); ++p) {
            CHECK(td.pair_distances[p - 1].pair < td.pair_distances[p].pair);
        }
    }
}

TEST_CASE("classification") {
    CHECK(classify_scope(make_team({aff("a", 1, 1, "US"), aff("b", 2, 2, "US"), aff("c", 3, 3, "US")})) ==
          Scope::Domestic);
    CHECK(classify_scope(make_team({aff("a", 1, 1, "US"), aff("b", 2, 2, "CN")})) == Scope::International);
    CHECK(classify_scope(make_team({aff("a", 1, 1)})) == Scope::SingleAffiliation);
    CHECK_THROWS_AS(classify_scope(make_team({aff("a", 1, 1, "US"), aff("b", 2, 2)})), Unclassifiable);
    CHECK(country_count(make_team({aff("a", 1, 1, "US"), aff("b", 2, 2, "US"), aff("c", 3, 3, "CN")})) == 2);
    CHECK(country_count(make_team({aff("a", 1, 1, "US")})) == 1);
    CHECK_THROWS_AS(country_count(make_team({aff("a", 1, 1)})), Unclassifiable);

    const auto td = measure_team(make_team({aff("a", 1, 1, "US"), aff("b", 2, 2)}));
    CHECK_FALSE(td.scope);
    CHECK_FALSE(td.country_count);
    CHECK(td.ave_gd);
    CHECK(to_string(Scope::Domestic) == "domestic");
}

TEST_CASE("country count and scope agree with a set-union oracle") {
    std::mt19937_64 rng(77);
    for (int n = 0; n < 1000; ++n) {
        const auto team = random_team(rng, 1 + rng() % 6);
        std::set<std::string> oracle;
        for (const auto& a : team.affiliations) oracle.insert(a.country->str());
        const int k = country_count(team);
        CHECK(k == static_cast<int>(oracle.size()));
        const Scope s = classify_scope(team);
        if (team.m() == 1) {
            CHECK(s == Scope::SingleAffiliation);
        } else {
            CHECK((s == Scope::Domestic) == (k == 1));
            CHECK((s == Scope::International) == (k >= 2));
        }
        const auto td = measure_team(team);
        CHECK(td.country_count == k);
        CHECK(td.scope == s);
    }
}
