#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "collabgeo/analytics.hpp"
#include "collabgeo/corpus.hpp"
#include "collabgeo/fixture.hpp"
#include "collabgeo/geodesy.hpp"

namespace collabgeo {

inline constexpr int kSchemaVersion = 1;

struct RunConfig {
    std::vector<std::filesystem::path> inputs;
    InputFormat format = InputFormat::LineRecords;
    std::optional<std::filesystem::path> boundary_file;
    double snap_radius_km = 25.0;
    int start_year = 1950;
    int end_year = 2019;
    StageDefinition stages = StageDefinition::defaults();
    std::size_t top_k = 5;
    MissingCoordinatePolicy missing_coordinates = MissingCoordinatePolicy::DropPublication;
    std::filesystem::path output_dir;
    DistanceMode distance_mode = DistanceMode::Geodesic;
    /// Map-phase threads; 0 picks the hardware concurrency. Outputs do not
    /// depend on it, so it is not part of the serialized config.
    unsigned workers = 1;
};

// Text forms used on the command line and in run_config.json.
InputFormat parse_input_format(std::string_view s);  // line-records | delimited-edges
DistanceMode parse_distance_mode(std::string_view s);  // geodesic | spherical
MissingCoordinatePolicy parse_missing_policy(std::string_view s);  // drop-publication | drop-affiliation
Stage parse_stage(std::string_view s);  // "label:1950-1996"
std::string_view to_string(InputFormat f) noexcept;
std::string_view to_string(DistanceMode m) noexcept;
std::string_view to_string(MissingCoordinatePolicy p) noexcept;

/// Throws InvalidArgument / InvalidStage / IoError for an unusable config:
/// missing inputs, unreadable files, a bad window, stages that do not cover
/// the window, top_k == 0, a negative snap radius.
void validate_config(const RunConfig& config, bool needs_output_dir);

/// run_config.json contents.
std::string serialize_config(const RunConfig& config);

/// Everything the analyze command computes before writing.
struct AnalysisResult {
    IngestReport ingest;
    std::uint64_t outside_window = 0;
    std::uint64_t boundary_resolved = 0;  // unique affiliations given a country by the boundary file
    std::uint64_t unresolved = 0;         // unique affiliations the boundary file could not place
    CollaborationAggregator aggregator;
    std::optional<PowerLawFit> power_law;
    std::vector<std::string> warnings;

    explicit AnalysisResult(StageDefinition stages) : aggregator(std::move(stages)) {}
};

/// Streams every input through ingestion, country resolution, the window
/// filter and the per-team map phase, reducing into one aggregator.
AnalysisResult analyze(const RunConfig& config);

/// Writes every output file into dir (which must exist).
void write_outputs(const AnalysisResult& result, const RunConfig& config, const std::filesystem::path& dir);

/// Names of the files write_outputs produces.
const std::vector<std::string>& output_file_names();

/// Kilometers with two decimals, as in the human tables.
std::string format_km(double km);

/// Shortest text that reads back to the same double.
std::string format_double(double x);

// Subcommands. Each returns the process exit status and writes diagnostics to err.
int run_validate(const RunConfig& config, std::ostream& out, std::ostream& err);
int run_analyze(const RunConfig& config, std::ostream& out, std::ostream& err);
int run_distance(double lat1, double lon1, double lat2, double lon2, DistanceMode mode, std::ostream& out,
                 std::ostream& err);
/// Writes the corpus to records and the truth sidecar to truth.
int run_gen_fixture(const FixtureOptions& options, const std::filesystem::path& records,
                    const std::filesystem::path& truth, std::ostream& out, std::ostream& err);

}  // namespace collabgeo
