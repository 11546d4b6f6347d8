#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "collabgeo/corpus.hpp"
#include "collabgeo/geodesy.hpp"

namespace collabgeo {

enum class Scope { SingleAffiliation, Domestic, International };

std::string_view to_string(Scope s) noexcept;

/// How pair distances are measured.
struct DistanceModel {
    DistanceMode mode = DistanceMode::Geodesic;
    Ellipsoid ellipsoid = Ellipsoid::wgs84();

    double operator()(const GeoPoint& a, const GeoPoint& b) const {
        return distance_km(a, b, mode, ellipsoid);
    }
};

/// Unordered affiliation pair, stored with first < second.
struct AffiliationPair {
    std::string first;
    std::string second;
    friend bool operator==(const AffiliationPair&, const AffiliationPair&) = default;
    friend auto operator<=>(const AffiliationPair&, const AffiliationPair&) = default;
};

struct PairDistance {
    AffiliationPair pair;
    std::optional<CountryCode> first_country;
    std::optional<CountryCode> second_country;
    double km = 0.0;
};

struct TeamMember {
    std::string id;
    std::optional<CountryCode> country;
};

/// Per-publication distance indicators.
///
/// For m >= 2, pair_distances holds all m(m-1)/2 pairs sorted by id pair and
/// min_gd <= ave_gd <= max_gd. For m == 1 the indicators are absent.
/// scope is nullopt when a multi-affiliation team has an unresolved country.
struct TeamDistances {
    std::string publication_id;
    int year = 0;
    std::size_t m = 0;
    std::vector<TeamMember> members;
    std::vector<PairDistance> pair_distances;
    std::optional<double> ave_gd;
    std::optional<double> max_gd;
    std::optional<double> min_gd;
    std::optional<Scope> scope;
    std::optional<int> country_count;  // nullopt when any country is unresolved
};

/// All unordered pairs of the team's affiliations, sorted by (first, second).
/// Throws NotACollaboration for m < 2.
std::vector<AffiliationPair> pair_set(const PublicationTeam& team);

/// Indicators for a collaboration. Throws NotACollaboration for m < 2.
TeamDistances team_distances(const PublicationTeam& team, const DistanceModel& model = {});

/// Same as team_distances but accepts m == 1, yielding absent indicators and
/// SingleAffiliation scope.
TeamDistances measure_team(const PublicationTeam& team, const DistanceModel& model = {});

/// SingleAffiliation iff m == 1; Domestic iff every country equals; else
/// International. Throws Unclassifiable if any country is missing for m >= 2.
Scope classify_scope(const PublicationTeam& team);

/// Number of distinct countries. Throws Unclassifiable if any is missing.
int country_count(const PublicationTeam& team);

}  // namespace collabgeo
