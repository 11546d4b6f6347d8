#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "collabgeo/corpus.hpp"
#include "collabgeo/metrics.hpp"

namespace collabgeo {

/// Order-independent sum of doubles. Each term is rounded to a multiple of
/// 2^-40 and accumulated in 128-bit integer arithmetic, so any permutation or
/// partition of the same terms produces the same bits. Terms must satisfy
/// |x| < 2^22.
class ExactSum {
public:
    void add(double x);
    void merge(const ExactSum& other) noexcept { acc_ += other.acc_; }
    double value() const noexcept;
    friend bool operator==(const ExactSum&, const ExactSum&) = default;

private:
    __int128 acc_ = 0;
};

/// Running means of AveGD/MaxGD/MinGD over a set of publications.
struct IndicatorMeans {
    std::uint64_t count = 0;
    ExactSum ave, max, min;

    void add(const TeamDistances& td);
    void merge(const IndicatorMeans& o) noexcept;
    std::optional<double> mean_ave() const;
    std::optional<double> mean_max() const;
    std::optional<double> mean_min() const;
    friend bool operator==(const IndicatorMeans&, const IndicatorMeans&) = default;
};

/// Scope selector for aggregates; All means every m >= 2 publication,
/// including those whose countries could not be resolved.
enum class ScopeFilter { All = 0, Domestic = 1, International = 2 };
inline constexpr std::array<ScopeFilter, 3> kAllScopeFilters = {
    ScopeFilter::All, ScopeFilter::Domestic, ScopeFilter::International};
std::string_view to_string(ScopeFilter s) noexcept;

/// Bucket index for a count: 1, 2, 3, 4, 5+ map to 0..4.
constexpr std::size_t bucket_index(std::size_t n) noexcept { return n >= 5 ? 4 : (n == 0 ? 0 : n - 1); }

struct Buckets {
    std::array<std::uint64_t, 5> affiliations{};
    std::array<std::uint64_t, 5> countries{};
    std::uint64_t countries_unresolved = 0;  // any affiliation without a country

    void merge(const Buckets& o) noexcept;
    friend bool operator==(const Buckets&, const Buckets&) = default;
};

/// Publication tallies shared by yearly and stage aggregates.
struct Tally {
    std::uint64_t publications = 0;
    std::uint64_t single_affiliation = 0;
    std::uint64_t multi_affiliation = 0;
    std::uint64_t domestic = 0;
    std::uint64_t international = 0;
    std::uint64_t unclassifiable = 0;
    std::array<IndicatorMeans, 3> means{};  // indexed by ScopeFilter

    void add(const TeamDistances& td);
    void merge(const Tally& o) noexcept;
    /// multi / publications, absent when there are no publications.
    std::optional<double> multi_affiliation_share() const;
    const IndicatorMeans& scope(ScopeFilter s) const { return means[static_cast<std::size_t>(s)]; }
    friend bool operator==(const Tally&, const Tally&) = default;
};

struct YearRow {
    Tally tally;
    Buckets buckets;
    friend bool operator==(const YearRow&, const YearRow&) = default;
};

using YearlySeries = std::map<int, YearRow>;

struct Stage {
    std::string label;
    int start_year = 0;
    int end_year = 0;
    friend bool operator==(const Stage&, const Stage&) = default;
};

/// Ordered, contiguous, non-overlapping year ranges.
class StageDefinition {
public:
    /// Throws InvalidStage when empty, inverted, overlapping or gapped.
    explicit StageDefinition(std::vector<Stage> stages);

    /// 1950-1996, 1997-2009, 2010-2019.
    static StageDefinition defaults();

    const std::vector<Stage>& stages() const noexcept { return stages_; }
    std::size_t size() const noexcept { return stages_.size(); }
    int first_year() const noexcept { return stages_.front().start_year; }
    int last_year() const noexcept { return stages_.back().end_year; }
    std::optional<std::size_t> index_of(int year) const noexcept;

    /// Throws InvalidStage unless the stages cover [start_year, end_year] exactly.
    void require_covers(int start_year, int end_year) const;

    friend bool operator==(const StageDefinition&, const StageDefinition&) = default;

private:
    std::vector<Stage> stages_;
};

struct CountryTally {
    std::uint64_t publications = 0;    // publications with at least one affiliation there
    std::uint64_t single_country = 0;  // all affiliations in this one country
    std::uint64_t international = 0;   // international collaborations involving it
    friend bool operator==(const CountryTally&, const CountryTally&) = default;
};

struct StageSummary {
    Stage stage;
    Tally tally;
    std::map<CountryCode, CountryTally> countries;
    friend bool operator==(const StageSummary&, const StageSummary&) = default;
};

struct RankedPair {
    AffiliationPair pair;
    /// "US" for a same-country pair, "CN-US" (sorted) for a cross-country
    /// pair, empty when either side is unresolved.
    std::string countries;
    std::uint64_t count = 0;
    double km = 0.0;
    friend bool operator==(const RankedPair&, const RankedPair&) = default;
};

/// Sorted by count descending, then by id pair ascending.
using PairRanking = std::vector<RankedPair>;

/// Associative-commutative reduction over TeamDistances. Workers each fill an
/// aggregator and merge them in any order; counts come out identical and means
/// bit-identical to a single pass.
class CollaborationAggregator {
public:
    explicit CollaborationAggregator(StageDefinition stages = StageDefinition::defaults());
    ~CollaborationAggregator();
    CollaborationAggregator(CollaborationAggregator&&) noexcept;
    CollaborationAggregator& operator=(CollaborationAggregator&&) noexcept;
    CollaborationAggregator(const CollaborationAggregator&) = delete;
    CollaborationAggregator& operator=(const CollaborationAggregator&) = delete;

    void add(const TeamDistances& td);
    void merge(const CollaborationAggregator& other);

    const StageDefinition& stages() const noexcept;
    const YearlySeries& yearly() const noexcept;
    std::vector<StageSummary> stage_summaries() const;
    /// Publications whose year falls in no stage.
    std::uint64_t outside_stages() const noexcept;

    /// Throws InvalidArgument if k == 0 or stage_index is out of range.
    PairRanking top_pairs(std::size_t stage_index, ScopeFilter scope, std::size_t k) const;

    /// Publication count per affiliation id, sorted by id.
    std::vector<std::pair<std::string, std::uint64_t>> affiliation_counts() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// Free-function views over a materialized stream.

YearlySeries build_yearly_series(std::span<const TeamDistances> teams);

/// Share of multi-affiliation publications per year; absent for empty years.
std::map<int, std::optional<double>> multi_affiliation_share_series(const YearlySeries& yearly);

std::map<int, Buckets> bucket_counts(std::span<const TeamDistances> teams);

std::vector<StageSummary> stage_summaries(std::span<const TeamDistances> teams,
                                          const StageDefinition& stages);

/// Pairs counted over in-stage, in-scope publications (each publication
/// contributes all of its m(m-1)/2 pairs). Throws InvalidArgument if k == 0.
PairRanking top_pairs(std::span<const TeamDistances> teams, const Stage& stage, ScopeFilter scope,
                      std::size_t k);

/// Least-squares power-law fit of the affiliation productivity distribution.
/// Fit is log10(frequency) = intercept - exponent * log10(n).
struct PowerLawFit {
    double exponent = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    std::uint64_t fit_min = 0;  // smallest publication count covered by the fit
    std::uint64_t fit_max = 0;  // largest
    std::size_t points = 0;
    std::size_t affiliations = 0;
    double mle_exponent = 0.0;  // discrete maximum-likelihood estimate, n_min = 1
};

struct PowerLawOptions {
    std::uint64_t linear_max = 10;    // unit-width bins for counts 1..linear_max
    int bins_per_decade = 5;          // logarithmic bins above linear_max
    std::uint64_t min_bin_count = 5;  // bins with fewer affiliations are left out
    std::size_t min_affiliations = 10;
};

/// Fits the distribution of per-affiliation publication counts.
/// Throws InsufficientData with fewer than min_affiliations counts or fewer
/// than two usable bins.
PowerLawFit fit_power_law_counts(std::span<const std::uint64_t> per_affiliation_counts,
                                 const PowerLawOptions& options = {});

/// Counts publications per affiliation, then fit_power_law_counts.
PowerLawFit fit_power_law(std::span<const PublicationTeam> teams, const PowerLawOptions& options = {});

}  // namespace collabgeo
