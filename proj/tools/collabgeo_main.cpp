// collabgeo command-line front end.
#include <iostream>

#include <CLI11.hpp>

#include "collabgeo/error.hpp"
#include "collabgeo/pipeline.hpp"

namespace {

using namespace collabgeo;

struct RunFlags {
    std::vector<std::string> inputs;
    std::string format = "line-records";
    std::string boundaries;
    double snap_radius_km = 25.0;
    int start_year = 1950;
    int end_year = 2019;
    std::vector<std::string> stages;
    std::size_t top_k = 5;
    std::string missing = "drop-publication";
    std::string output_dir;
    std::string distance_mode = "geodesic";
    unsigned workers = 1;

    void attach(CLI::App& cmd, bool with_output) {
        cmd.add_option("-i,--input", inputs, "Input file(s), read in order")->required();
        cmd.add_option("-f,--format", format, "line-records | delimited-edges")->capture_default_str();
        cmd.add_option("--boundaries", boundaries, "GeoJSON country boundaries for records without a country");
        cmd.add_option("--snap-radius", snap_radius_km, "Nearest-border snap radius in km")->capture_default_str();
        cmd.add_option("--start-year", start_year, "First year of the analysis window")->capture_default_str();
        cmd.add_option("--end-year", end_year, "Last year of the analysis window")->capture_default_str();
        cmd.add_option("--stage", stages, "Stage as label:start-end; repeat for each stage");
        cmd.add_option("--top-k", top_k, "Pairs per stage in the rankings")->capture_default_str();
        cmd.add_option("--missing-coordinates", missing, "drop-publication | drop-affiliation")
            ->capture_default_str();
        cmd.add_option("--distance-mode", distance_mode, "geodesic | spherical")->capture_default_str();
        cmd.add_option("-j,--workers", workers, "Map-phase threads, 0 = all cores")->capture_default_str();
        if (with_output) cmd.add_option("-o,--output-dir", output_dir, "Directory for the outputs")->required();
    }

    RunConfig to_config() const {
        RunConfig c;
        for (const auto& p : inputs) c.inputs.emplace_back(p);
        c.format = parse_input_format(format);
        if (!boundaries.empty()) c.boundary_file = boundaries;
        c.snap_radius_km = snap_radius_km;
        c.start_year = start_year;
        c.end_year = end_year;
        if (!stages.empty()) {
            std::vector<Stage> parsed;
            for (const auto& s : stages) parsed.push_back(parse_stage(s));
            c.stages = StageDefinition(std::move(parsed));
        }
        c.top_k = top_k;
        c.missing_coordinates = parse_missing_policy(missing);
        c.output_dir = output_dir;
        c.distance_mode = parse_distance_mode(distance_mode);
        c.workers = workers;
        return c;
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Geographic distance analytics for research-team collaboration"};
    app.set_config("--config", "", "TOML/INI config file; command-line flags take precedence");
    app.require_subcommand(1);

    RunFlags validate_flags;
    auto* validate = app.add_subcommand("validate", "Parse and check input without computing distances");
    validate_flags.attach(*validate, false);

    RunFlags analyze_flags;
    auto* analyze = app.add_subcommand("analyze", "Run the full analysis and write all outputs");
    analyze_flags.attach(*analyze, true);

    std::array<double, 4> coords{};
    std::string mode = "geodesic";
    auto* distance = app.add_subcommand("distance", "Distance in km between two points");
    distance->add_option("lat1", coords[0])->required();
    distance->add_option("lon1", coords[1])->required();
    distance->add_option("lat2", coords[2])->required();
    distance->add_option("lon2", coords[3])->required();
    distance->add_option("-m,--mode", mode, "geodesic | spherical")->capture_default_str();

    FixtureOptions fixture;
    std::string fixture_out, truth_out;
    auto* gen = app.add_subcommand("gen-fixture", "Write a synthetic corpus and its ground-truth sidecar");
    gen->add_option("--seed", fixture.seed)->capture_default_str();
    gen->add_option("--size", fixture.size, "Publications, or affiliations for powerlaw profiles")
        ->capture_default_str();
    gen->add_option("--profile", fixture.profile, "uniform | multi25 | powerlaw<a> | paper")->capture_default_str();
    gen->add_option("--pool", fixture.pool, "Affiliation pool size")->capture_default_str();
    gen->add_option("--start-year", fixture.start_year)->capture_default_str();
    gen->add_option("--end-year", fixture.end_year)->capture_default_str();
    gen->add_option("--unresolved-fraction", fixture.unresolved_fraction,
                    "Share of affiliations written without a country")
        ->capture_default_str();
    gen->add_option("-o,--output", fixture_out, "Records file (line records)")->required();
    gen->add_option("--truth", truth_out, "Sidecar path, default <output>.truth.json");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*validate) return run_validate(validate_flags.to_config(), std::cout, std::cerr);
        if (*analyze) return run_analyze(analyze_flags.to_config(), std::cout, std::cerr);
        if (*distance) {
            return run_distance(coords[0], coords[1], coords[2], coords[3], parse_distance_mode(mode), std::cout,
                                std::cerr);
        }
        if (*gen) {
            if (truth_out.empty()) truth_out = fixture_out + ".truth.json";
            return run_gen_fixture(fixture, fixture_out, truth_out, std::cout, std::cerr);
        }
    } catch (const collabgeo::Error& e) {
        std::cerr << "collabgeo: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
