#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "collabgeo/geodesy.hpp"

namespace collabgeo {

/// ISO-3166 alpha-2 country code, always two uppercase ASCII letters.
class CountryCode {
public:
    /// Accepts two ASCII letters in either case; anything else yields nullopt.
    static std::optional<CountryCode> parse(std::string_view text);

    std::string str() const { return {chars_.data(), 2}; }

    friend bool operator==(const CountryCode&, const CountryCode&) = default;
    friend auto operator<=>(const CountryCode&, const CountryCode&) = default;

private:
    std::array<char, 2> chars_{};
};

struct AffiliationRecord {
    std::string id;
    GeoPoint location;
    std::optional<CountryCode> country;
};

/// One publication and its deduplicated affiliation set.
struct PublicationTeam {
    std::string id;
    int year = 0;
    std::vector<AffiliationRecord> affiliations;  // unique by id, input order
    std::vector<std::string> authors;             // optional, may be empty

    std::size_t m() const noexcept { return affiliations.size(); }
};

/// Tallies for one ingestion pass. Every input record lands in exactly one of
/// accepted or a dropped_* bucket.
struct IngestReport {
    std::uint64_t total_records = 0;
    std::uint64_t accepted = 0;
    std::uint64_t dropped_malformed = 0;
    std::uint64_t dropped_no_affiliation = 0;
    std::uint64_t dropped_bad_coords = 0;
    std::uint64_t dropped_bad_year = 0;

    // Informational; these do not change the record count.
    std::uint64_t deduplicated_affiliations = 0;
    std::uint64_t coordinate_conflicts = 0;
    std::uint64_t affiliations_dropped_bad_coords = 0;
    std::uint64_t invalid_country_codes = 0;

    std::uint64_t dropped() const noexcept {
        return dropped_malformed + dropped_no_affiliation + dropped_bad_coords + dropped_bad_year;
    }
    bool balanced() const noexcept { return accepted + dropped() == total_records; }

    IngestReport& operator+=(const IngestReport& other) noexcept;
    friend bool operator==(const IngestReport&, const IngestReport&) = default;
};

enum class InputFormat { LineRecords, DelimitedEdges };

enum class MissingCoordinatePolicy { DropPublication, DropAffiliation };

struct IngestOptions {
    int min_year = 1900;
    int max_year = 2100;
    MissingCoordinatePolicy missing_coordinates = MissingCoordinatePolicy::DropPublication;
};

/// Pull-based reader over a record stream. Holds at most one record group in
/// memory, plus the first-seen location of every affiliation id so that
/// conflicting metadata for the same id resolves to the first occurrence.
///
/// Line records are one JSON object per line:
///   {"id": "...", "year": 2001, "affiliations": [{"id": "...", "lat": .., "lon": .., "country": "US"}]}
/// Delimited edges carry a header naming the columns publication_id, year,
/// affiliation_id, lat, lon and optionally country; comma or tab separated,
/// one row per publication/affiliation edge, rows of one publication adjacent.
class RecordReader {
public:
    RecordReader(std::istream& in, InputFormat format, IngestOptions options = {});
    ~RecordReader();
    RecordReader(RecordReader&&) noexcept;
    RecordReader& operator=(RecordReader&&) noexcept;

    /// Next accepted team, or nullopt at end of input. Malformed input is
    /// tallied and skipped. Throws IoError if the stream goes bad.
    std::optional<PublicationTeam> next();

    /// Switches to another stream (e.g. the next input file) while keeping the
    /// affiliation registry and the running report. Call after next() has
    /// returned nullopt for the current stream.
    void continue_with(std::istream& in);

    const IngestReport& report() const noexcept;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

struct ParsedCorpus {
    std::vector<PublicationTeam> teams;
    IngestReport report;
};

ParsedCorpus parse_records(std::istream& in, InputFormat format, const IngestOptions& options = {});

/// Teams with start_year <= year <= end_year, in input order.
/// Throws InvalidArgument when start_year > end_year.
std::vector<PublicationTeam> filter_by_years(std::span<const PublicationTeam> teams,
                                             int start_year, int end_year);

struct CorpusStats {
    std::uint64_t publications = 0;
    std::uint64_t unique_affiliations = 0;
    std::optional<std::uint64_t> unique_authors;  // only when author data is present

    friend bool operator==(const CorpusStats&, const CorpusStats&) = default;
};

CorpusStats corpus_stats(std::span<const PublicationTeam> teams);

/// Serializes teams as line records, readable by parse_records.
void write_records(std::ostream& out, std::span<const PublicationTeam> teams);

}  // namespace collabgeo
