#include "collabgeo/metrics.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "collabgeo/error.hpp"

namespace collabgeo {

std::string_view to_string(Scope s) noexcept {
    switch (s) {
        case Scope::SingleAffiliation: return "single";
        case Scope::Domestic: return "domestic";
        case Scope::International: return "international";
    }
    return "unknown";
}

namespace {

void require_collaboration(const PublicationTeam& team) {
    if (team.m() < 2) {
        throw NotACollaboration("publication " + team.id + " has " + std::to_string(team.m()) +
                                " affiliation(s)");
    }
}

// Affiliation indices ordered by id, so pairs come out sorted.
std::vector<std::size_t> order_by_id(const PublicationTeam& team) {
    std::vector<std::size_t> idx(team.m());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return team.affiliations[a].id < team.affiliations[b].id;
    });
    return idx;
}

std::optional<int> distinct_countries(const PublicationTeam& team) {
    std::vector<CountryCode> codes;
    codes.reserve(team.m());
    for (const auto& a : team.affiliations) {
        if (!a.country) return std::nullopt;
        codes.push_back(*a.country);
    }
    std::sort(codes.begin(), codes.end());
    return static_cast<int>(std::unique(codes.begin(), codes.end()) - codes.begin());
}

}  // namespace

std::vector<AffiliationPair> pair_set(const PublicationTeam& team) {
    require_collaboration(team);
    const auto idx = order_by_id(team);
    std::vector<AffiliationPair> pairs;
    pairs.reserve(team.m() * (team.m() - 1) / 2);
    for (std::size_t i = 0; i < idx.size(); ++i) {
        for (std::size_t j = i + 1; j < idx.size(); ++j) {
            pairs.push_back({team.affiliations[idx[i]].id, team.affiliations[idx[j]].id});
        }
    }
    return pairs;
}

TeamDistances measure_team(const PublicationTeam& team, const DistanceModel& model) {
    TeamDistances td;
    td.publication_id = team.id;
    td.year = team.year;
    td.m = team.m();
    td.members.reserve(team.m());
    for (const auto& a : team.affiliations) td.members.push_back({a.id, a.country});
    td.country_count = distinct_countries(team);

    if (td.m < 2) {
        td.scope = Scope::SingleAffiliation;
        return td;
    }
    if (td.country_count) td.scope = *td.country_count == 1 ? Scope::Domestic : Scope::International;

    const auto idx = order_by_id(team);
    td.pair_distances.reserve(td.m * (td.m - 1) / 2);
    double sum = 0.0;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const auto& a = team.affiliations[idx[i]];
        for (std::size_t j = i + 1; j < idx.size(); ++j) {
            const auto& b = team.affiliations[idx[j]];
            const double km = model(a.location, b.location);
            td.pair_distances.push_back({{a.id, b.id}, a.country, b.country, km});
            sum += km;
            lo = std::min(lo, km);
            hi = std::max(hi, km);
        }
    }
    const double mean = sum / static_cast<double>(td.pair_distances.size());
    td.ave_gd = std::clamp(mean, lo, hi);  // rounding can push a mean of equal terms past an extreme
    td.max_gd = hi;
    td.min_gd = lo;
    return td;
}

TeamDistances team_distances(const PublicationTeam& team, const DistanceModel& model) {
    require_collaboration(team);
    return measure_team(team, model);
}

Scope classify_scope(const PublicationTeam& team) {
    if (team.m() == 1) return Scope::SingleAffiliation;
    if (team.m() == 0) throw NotACollaboration("publication " + team.id + " has no affiliations");
    const auto n = distinct_countries(team);
    if (!n) throw Unclassifiable("publication " + team.id + " has an unresolved country");
    return *n == 1 ? Scope::Domestic : Scope::International;
}

int country_count(const PublicationTeam& team) {
    const auto n = distinct_countries(team);
    if (!n) throw Unclassifiable("publication " + team.id + " has an unresolved country");
    return *n;
}

}  // namespace collabgeo
