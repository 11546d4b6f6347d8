#include "collabgeo/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "collabgeo/error.hpp"

namespace collabgeo {

namespace {

constexpr int kFixedPointBits = 40;

}  // namespace

void ExactSum::add(double x) {
    if (!(std::fabs(x) < 4194304.0)) throw InvalidInput("ExactSum term out of range");
    acc_ += static_cast<__int128>(std::llround(std::ldexp(x, kFixedPointBits)));
}

double ExactSum::value() const noexcept {
    return std::ldexp(static_cast<double>(acc_), -kFixedPointBits);
}

void IndicatorMeans::add(const TeamDistances& td) {
    ++count;
    ave.add(*td.ave_gd);
    max.add(*td.max_gd);
    min.add(*td.min_gd);
}

void IndicatorMeans::merge(const IndicatorMeans& o) noexcept {
    count += o.count;
    ave.merge(o.ave);
    max.merge(o.max);
    min.merge(o.min);
}

namespace {

std::optional<double> mean_of(const ExactSum& s, std::uint64_t n) {
    if (n == 0) return std::nullopt;
    return s.value() / static_cast<double>(n);
}

}  // namespace

std::optional<double> IndicatorMeans::mean_ave() const { return mean_of(ave, count); }
std::optional<double> IndicatorMeans::mean_max() const { return mean_of(max, count); }
std::optional<double> IndicatorMeans::mean_min() const { return mean_of(min, count); }

std::string_view to_string(ScopeFilter s) noexcept {
    switch (s) {
        case ScopeFilter::All: return "all";
        case ScopeFilter::Domestic: return "domestic";
        case ScopeFilter::International: return "international";
    }
    return "unknown";
}

void Buckets::merge(const Buckets& o) noexcept {
    for (std::size_t i = 0; i < 5; ++i) {
        affiliations[i] += o.affiliations[i];
        countries[i] += o.countries[i];
    }
    countries_unresolved += o.countries_unresolved;
}

void Tally::add(const TeamDistances& td) {
    ++publications;
    if (td.m < 2) {
        ++single_affiliation;
        return;
    }
    ++multi_affiliation;
    means[static_cast<std::size_t>(ScopeFilter::All)].add(td);
    if (!td.scope) {
        ++unclassifiable;
    } else if (*td.scope == Scope::Domestic) {
        ++domestic;
        means[static_cast<std::size_t>(ScopeFilter::Domestic)].add(td);
    } else if (*td.scope == Scope::International) {
        ++international;
        means[static_cast<std::size_t>(ScopeFilter::International)].add(td);
    }
}

void Tally::merge(const Tally& o) noexcept {
    publications += o.publications;
    single_affiliation += o.single_affiliation;
    multi_affiliation += o.multi_affiliation;
    domestic += o.domestic;
    international += o.international;
    unclassifiable += o.unclassifiable;
    for (std::size_t i = 0; i < means.size(); ++i) means[i].merge(o.means[i]);
}

std::optional<double> Tally::multi_affiliation_share() const {
    if (publications == 0) return std::nullopt;
    return static_cast<double>(multi_affiliation) / static_cast<double>(publications);
}

StageDefinition::StageDefinition(std::vector<Stage> stages) : stages_(std::move(stages)) {
    if (stages_.empty()) throw InvalidStage("no stages defined");
    for (std::size_t i = 0; i < stages_.size(); ++i) {
        const Stage& s = stages_[i];
        if (s.start_year > s.end_year) {
            throw InvalidStage("stage '" + s.label + "' ends before it starts");
        }
        if (i > 0) {
            const Stage& prev = stages_[i - 1];
            if (s.start_year <= prev.end_year) {
                throw InvalidStage("stage '" + s.label + "' overlaps '" + prev.label + "'");
            }
            if (s.start_year != prev.end_year + 1) {
                throw InvalidStage("gap between stage '" + prev.label + "' and '" + s.label + "'");
            }
        }
    }
}

StageDefinition StageDefinition::defaults() {
    return StageDefinition({{"Stage 1", 1950, 1996}, {"Stage 2", 1997, 2009}, {"Stage 3", 2010, 2019}});
}

std::optional<std::size_t> StageDefinition::index_of(int year) const noexcept {
    if (year < first_year() || year > last_year()) return std::nullopt;
    const auto it = std::upper_bound(stages_.begin(), stages_.end(), year,
                                     [](int y, const Stage& s) { return y < s.start_year; });
    return static_cast<std::size_t>(it - stages_.begin()) - 1;
}

void StageDefinition::require_covers(int start_year, int end_year) const {
    if (first_year() != start_year || last_year() != end_year) {
        throw InvalidStage("stages cover " + std::to_string(first_year()) + "-" +
                           std::to_string(last_year()) + " but the analysis window is " +
                           std::to_string(start_year) + "-" + std::to_string(end_year));
    }
}

namespace {

struct PairTally {
    std::uint64_t count = 0;
    double km = 0.0;
};

std::uint64_t pair_key(std::uint32_t a, std::uint32_t b) {
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(a) << 32) | b;
}

std::string country_label(const std::optional<CountryCode>& a, const std::optional<CountryCode>& b) {
    if (!a || !b) return {};
    if (*a == *b) return a->str();
    return *a < *b ? a->str() + "-" + b->str() : b->str() + "-" + a->str();
}

void add_country_tallies(std::map<CountryCode, CountryTally>& out, const TeamDistances& td) {
    std::vector<CountryCode> codes;
    for (const auto& m : td.members) {
        if (m.country) codes.push_back(*m.country);
    }
    std::sort(codes.begin(), codes.end());
    codes.erase(std::unique(codes.begin(), codes.end()), codes.end());
    for (const auto& c : codes) {
        CountryTally& t = out[c];
        ++t.publications;
        if (td.country_count && *td.country_count == 1) ++t.single_country;
        if (td.scope == Scope::International) ++t.international;
    }
}

bool in_scope(const TeamDistances& td, ScopeFilter scope) {
    if (td.m < 2) return false;
    switch (scope) {
        case ScopeFilter::All: return true;
        case ScopeFilter::Domestic: return td.scope == Scope::Domestic;
        case ScopeFilter::International: return td.scope == Scope::International;
    }
    return false;
}

}  // namespace

struct CollaborationAggregator::Impl {
    explicit Impl(StageDefinition s) : stages(std::move(s)) {
        stage_tallies.resize(stages.size());
        stage_countries.resize(stages.size());
        pairs.resize(stages.size());
    }

    StageDefinition stages;
    YearlySeries yearly;
    std::vector<Tally> stage_tallies;
    std::vector<std::map<CountryCode, CountryTally>> stage_countries;
    std::uint64_t outside = 0;

    // Interned affiliation ids; country is the first one seen for the id.
    std::unordered_map<std::string, std::uint32_t> ids;
    std::vector<std::string> names;
    std::vector<std::optional<CountryCode>> countries;
    std::vector<std::uint64_t> publication_counts;

    // pairs[stage][scope] : pair key -> tally
    std::vector<std::array<std::unordered_map<std::uint64_t, PairTally>, 3>> pairs;

    std::uint32_t intern(const std::string& id, const std::optional<CountryCode>& country) {
        const auto [it, inserted] = ids.try_emplace(id, static_cast<std::uint32_t>(names.size()));
        if (inserted) {
            names.push_back(id);
            countries.push_back(country);
            publication_counts.push_back(0);
        } else if (!countries[it->second] && country) {
            countries[it->second] = country;
        }
        return it->second;
    }
};

CollaborationAggregator::CollaborationAggregator(StageDefinition stages)
    : impl_(std::make_unique<Impl>(std::move(stages))) {}
CollaborationAggregator::~CollaborationAggregator() = default;
CollaborationAggregator::CollaborationAggregator(CollaborationAggregator&&) noexcept = default;
CollaborationAggregator& CollaborationAggregator::operator=(CollaborationAggregator&&) noexcept = default;

void CollaborationAggregator::add(const TeamDistances& td) {
    Impl& s = *impl_;
    YearRow& row = s.yearly[td.year];
    row.tally.add(td);
    ++row.buckets.affiliations[bucket_index(td.m)];
    if (td.country_count) ++row.buckets.countries[bucket_index(static_cast<std::size_t>(*td.country_count))];
    else ++row.buckets.countries_unresolved;

    std::vector<std::uint32_t> member_ids;
    member_ids.reserve(td.members.size());
    for (const auto& m : td.members) {
        const std::uint32_t id = s.intern(m.id, m.country);
        ++s.publication_counts[id];
        member_ids.push_back(id);
    }

    const auto stage = s.stages.index_of(td.year);
    if (!stage) {
        ++s.outside;
        return;
    }
    s.stage_tallies[*stage].add(td);
    add_country_tallies(s.stage_countries[*stage], td);

    if (td.m < 2) return;
    // Pair distances are aligned with the members sorted by id.
    std::vector<std::size_t> order(td.members.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return td.members[a].id < td.members[b].id; });
    std::size_t p = 0;
    for (std::size_t i = 0; i < order.size(); ++i) {
        for (std::size_t j = i + 1; j < order.size(); ++j, ++p) {
            const std::uint64_t key = pair_key(member_ids[order[i]], member_ids[order[j]]);
            const double km = td.pair_distances[p].km;
            for (const ScopeFilter scope : kAllScopeFilters) {
                if (!in_scope(td, scope)) continue;
                auto& tally = s.pairs[*stage][static_cast<std::size_t>(scope)][key];
                tally.km = tally.count == 0 ? km : std::min(tally.km, km);
                ++tally.count;
            }
        }
    }
}

void CollaborationAggregator::merge(const CollaborationAggregator& other) {
    Impl& s = *impl_;
    const Impl& o = *other.impl_;
    if (!(s.stages == o.stages)) throw InvalidArgument("cannot merge aggregators with different stages");

    for (const auto& [year, row] : o.yearly) {
        YearRow& mine = s.yearly[year];
        mine.tally.merge(row.tally);
        mine.buckets.merge(row.buckets);
    }
    for (std::size_t i = 0; i < s.stages.size(); ++i) {
        s.stage_tallies[i].merge(o.stage_tallies[i]);
        for (const auto& [code, t] : o.stage_countries[i]) {
            CountryTally& mine = s.stage_countries[i][code];
            mine.publications += t.publications;
            mine.single_country += t.single_country;
            mine.international += t.international;
        }
    }
    s.outside += o.outside;

    std::vector<std::uint32_t> remap(o.names.size());
    for (std::size_t i = 0; i < o.names.size(); ++i) {
        remap[i] = s.intern(o.names[i], o.countries[i]);
        s.publication_counts[remap[i]] += o.publication_counts[i];
    }
    for (std::size_t st = 0; st < s.stages.size(); ++st) {
        for (std::size_t sc = 0; sc < 3; ++sc) {
            auto& mine = s.pairs[st][sc];
            for (const auto& [key, t] : o.pairs[st][sc]) {
                const auto a = remap[static_cast<std::uint32_t>(key >> 32)];
                const auto b = remap[static_cast<std::uint32_t>(key & 0xffffffffu)];
                auto& m = mine[pair_key(a, b)];
                m.km = m.count == 0 ? t.km : std::min(m.km, t.km);
                m.count += t.count;
            }
        }
    }
}

const StageDefinition& CollaborationAggregator::stages() const noexcept { return impl_->stages; }

const YearlySeries& CollaborationAggregator::yearly() const noexcept { return impl_->yearly; }

std::uint64_t CollaborationAggregator::outside_stages() const noexcept { return impl_->outside; }

std::vector<StageSummary> CollaborationAggregator::stage_summaries() const {
    std::vector<StageSummary> out;
    for (std::size_t i = 0; i < impl_->stages.size(); ++i) {
        out.push_back({impl_->stages.stages()[i], impl_->stage_tallies[i], impl_->stage_countries[i]});
    }
    return out;
}

PairRanking CollaborationAggregator::top_pairs(std::size_t stage_index, ScopeFilter scope,
                                               std::size_t k) const {
    if (k == 0) throw InvalidArgument("top_pairs needs k >= 1");
    if (stage_index >= impl_->stages.size()) throw InvalidArgument("stage index out of range");
    const Impl& s = *impl_;
    const auto& tallies = s.pairs[stage_index][static_cast<std::size_t>(scope)];
    std::vector<std::pair<std::uint64_t, const PairTally*>> entries;
    entries.reserve(tallies.size());
    for (const auto& [key, t] : tallies) entries.emplace_back(key, &t);
    const auto ids_of = [&](std::uint64_t key) {
        const auto& a = s.names[static_cast<std::uint32_t>(key >> 32)];
        const auto& b = s.names[static_cast<std::uint32_t>(key & 0xffffffffu)];
        return a < b ? std::pair<const std::string&, const std::string&>(a, b)
                     : std::pair<const std::string&, const std::string&>(b, a);
    };
    const auto better = [&](const auto& x, const auto& y) {
        if (x.second->count != y.second->count) return x.second->count > y.second->count;
        return ids_of(x.first) < ids_of(y.first);
    };
    const std::size_t n = std::min(k, entries.size());
    std::partial_sort(entries.begin(), entries.begin() + static_cast<std::ptrdiff_t>(n), entries.end(), better);

    PairRanking out;
    for (std::size_t i = 0; i < n; ++i) {
        const auto [key, t] = entries[i];
        const auto a = static_cast<std::uint32_t>(key >> 32);
        const auto b = static_cast<std::uint32_t>(key & 0xffffffffu);
        const auto [first, second] = ids_of(key);
        out.push_back({{first, second}, country_label(s.countries[a], s.countries[b]), t->count, t->km});
    }
    return out;
}

std::vector<std::pair<std::string, std::uint64_t>> CollaborationAggregator::affiliation_counts() const {
    std::vector<std::pair<std::string, std::uint64_t>> out;
    out.reserve(impl_->names.size());
    for (std::size_t i = 0; i < impl_->names.size(); ++i) {
        out.emplace_back(impl_->names[i], impl_->publication_counts[i]);
    }
    std::sort(out.begin(), out.end());
    return out;
}

YearlySeries build_yearly_series(std::span<const TeamDistances> teams) {
    YearlySeries yearly;
    for (const auto& td : teams) {
        YearRow& row = yearly[td.year];
        row.tally.add(td);
        ++row.buckets.affiliations[bucket_index(td.m)];
        if (td.country_count) ++row.buckets.countries[bucket_index(static_cast<std::size_t>(*td.country_count))];
        else ++row.buckets.countries_unresolved;
    }
    return yearly;
}

std::map<int, std::optional<double>> multi_affiliation_share_series(const YearlySeries& yearly) {
    std::map<int, std::optional<double>> out;
    for (const auto& [year, row] : yearly) out[year] = row.tally.multi_affiliation_share();
    return out;
}

std::map<int, Buckets> bucket_counts(std::span<const TeamDistances> teams) {
    std::map<int, Buckets> out;
    for (const auto& [year, row] : build_yearly_series(teams)) out[year] = row.buckets;
    return out;
}

std::vector<StageSummary> stage_summaries(std::span<const TeamDistances> teams,
                                          const StageDefinition& stages) {
    CollaborationAggregator agg(stages);
    for (const auto& td : teams) agg.add(td);
    return agg.stage_summaries();
}

PairRanking top_pairs(std::span<const TeamDistances> teams, const Stage& stage, ScopeFilter scope,
                      std::size_t k) {
    CollaborationAggregator agg(StageDefinition({stage}));
    for (const auto& td : teams) agg.add(td);
    return agg.top_pairs(0, scope, k);
}

}  // namespace collabgeo
