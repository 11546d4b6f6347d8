#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace collabgeo {

/// Synthetic corpus profiles:
///   "uniform"       mixed team sizes (mean m = 3), some unresolved countries
///   "multi25"       exactly 25% multi-affiliation publications
///   "powerlaw<a>"   single-affiliation publications whose per-affiliation
///                   counts follow a discrete power law with exponent a
///                   (size = number of affiliations), e.g. "powerlaw2.5"
///   "paper"         background corpus with embedded Harvard/MIT (28, before
///                   1997) and USTC/Microsoft (153, 1997-2009) collaborations
struct FixtureOptions {
    std::uint64_t seed = 1;
    std::size_t size = 1000;
    std::string profile = "uniform";
    std::size_t pool = 500;  // affiliation pool for uniform/multi25/paper
    int start_year = 1950;
    int end_year = 2019;
    double unresolved_fraction = 0.02;  // affiliations written without a country
};

struct YearTruth {
    std::uint64_t publications = 0;
    std::uint64_t single_affiliation = 0;
    std::uint64_t multi_affiliation = 0;
    std::uint64_t domestic = 0;
    std::uint64_t international = 0;
    std::uint64_t unclassifiable = 0;
    std::array<std::uint64_t, 5> affiliation_buckets{};
    std::array<std::uint64_t, 5> country_buckets{};
    std::uint64_t country_unresolved = 0;
};

struct EmbeddedPair {
    std::string first;
    std::string second;
    std::uint64_t count = 0;
    int first_year = 0;
    int last_year = 0;
};

/// Ground truth recorded by the generator while it draws the corpus.
struct FixtureTruth {
    std::string profile;
    std::uint64_t seed = 0;
    std::uint64_t publications = 0;
    std::uint64_t affiliations_used = 0;
    std::map<int, YearTruth> years;
    std::optional<double> multi_share;
    std::optional<double> exponent;
    std::vector<EmbeddedPair> embedded_pairs;
};

/// Writes line records to out and returns the truth. Deterministic for a
/// given options value. Throws InvalidArgument for size 0 or an unknown profile.
FixtureTruth generate_fixture(const FixtureOptions& options, std::ostream& out);

/// JSON sidecar.
void write_truth(std::ostream& out, const FixtureTruth& truth);
FixtureTruth read_truth(std::istream& in);

}  // namespace collabgeo
