#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "collabgeo/error.hpp"
#include "collabgeo/pipeline.hpp"
#include "test_support.hpp"

using namespace collabgeo;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    int status;
    std::string out;
    std::string err;
};

Outcome validate(const std::string& fixture_name) {
    RunConfig c;
    c.inputs = {testing::fixture(fixture_name)};
    std::ostringstream out, err;
    const int rc = run_validate(c, out, err);
    return {rc, out.str(), err.str()};
}

Outcome analyze_into(RunConfig c, const fs::path& dir) {
    c.output_dir = dir;
    std::ostringstream out, err;
    const int rc = run_analyze(c, out, err);
    return {rc, out.str(), err.str()};
}

Outcome distance(double a, double b, double c, double d) {
    std::ostringstream out, err;
    const int rc = run_distance(a, b, c, d, DistanceMode::Geodesic, out, err);
    return {rc, out.str(), err.str()};
}

// Runs the built executable through the shell, capturing stdout.
Outcome run_binary(const std::string& args, const fs::path& scratch) {
    const fs::path out = scratch / "stdout.txt";
    const std::string cmd = std::string("\"") + COLLABGEO_CLI + "\" " + args + " > \"" + out.string() + "\" 2>&1";
    const int raw = std::system(cmd.c_str());
    return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, testing::slurp(out), {}};
}

fs::path write_paper_fixture(const testing::TempDir& dir, std::size_t size = 500) {
    FixtureOptions opt;
    opt.profile = "paper";
    opt.size = size;
    opt.seed = 5;
    std::ostringstream sink;
    const fs::path records = dir / "paper.jsonl";
    REQUIRE(run_gen_fixture(opt, records, dir / "paper.truth.json", sink, sink) == 0);
    return records;
}

std::vector<std::string> body_lines(const fs::path& file) {
    std::istringstream in(testing::slurp(file));
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

void check_same_tree(const fs::path& a, const fs::path& b) {
    for (const auto& name : output_file_names()) {
        INFO(name);
        CHECK(testing::slurp(a / name) == testing::slurp(b / name));
    }
}

}  // namespace

TEST_CASE("option parsing helpers") {
    CHECK(parse_input_format("line-records") == InputFormat::LineRecords);
    CHECK(parse_input_format("delimited-edges") == InputFormat::DelimitedEdges);
    CHECK_THROWS_AS(parse_input_format("xml"), InvalidArgument);
    CHECK(parse_distance_mode("spherical") == DistanceMode::Spherical);
    CHECK_THROWS_AS(parse_distance_mode("flat"), InvalidArgument);
    CHECK(parse_missing_policy("drop-affiliation") == MissingCoordinatePolicy::DropAffiliation);
    CHECK_THROWS_AS(parse_missing_policy("keep"), InvalidArgument);
    const Stage s = parse_stage("Stage 1:1950-1996");
    CHECK(s == Stage{"Stage 1", 1950, 1996});
    CHECK(parse_stage("a:b:2000-2001").label == "a:b");
    CHECK_THROWS_AS(parse_stage("1950-1996"), InvalidStage);
    CHECK_THROWS_AS(parse_stage("x:1950"), InvalidStage);
    CHECK_THROWS_AS(parse_stage("x:19x0-1996"), InvalidStage);
    CHECK(format_km(2.637991) == "2.64");
    CHECK(format_km(0.0) == "0.00");
    CHECK(format_double(0.1) == "0.1");
}

TEST_CASE("validate command") {
    const auto three = validate("three_records.jsonl");
    CHECK(three.status == 0);
    CHECK(three.out.find("accepted=3\n") != std::string::npos);

    const auto bad = validate("all_malformed.jsonl");
    CHECK(bad.status != 0);
    CHECK(bad.out.find("accepted=0\n") != std::string::npos);
    CHECK(bad.out.find("dropped_malformed=4\n") != std::string::npos);

    const auto mixed = validate("mixed_10.jsonl");
    CHECK(mixed.status == 0);
    CHECK(mixed.out.find("total_records=10\n") != std::string::npos);
    CHECK(mixed.out.find("accepted=9\n") != std::string::npos);
    CHECK(mixed.out.find("dropped_malformed=1\n") != std::string::npos);
    CHECK(mixed.out.find("dropped_bad_coords=0\n") != std::string::npos);

    const auto missing = validate("does_not_exist.jsonl");
    CHECK(missing.status != 0);
    CHECK(missing.err.find("does_not_exist.jsonl") != std::string::npos);
}

TEST_CASE("distance command") {
    const auto hm = distance(42.3770, -71.1167, 42.3601, -71.0942);
    CHECK(hm.status == 0);
    const double km = std::stod(hm.out);
    CHECK(std::fabs(km - 2.61) <= 0.05 * 2.61);
    CHECK(distance(10, 20, 10, 20).out == "0.00\n");
    CHECK(distance(0, 0, 0, 90).out == "10018.75\n");
    const auto bad = distance(91, 0, 0, 0);
    CHECK(bad.status != 0);
    CHECK_FALSE(bad.err.empty());
}

TEST_CASE("analyze: paper-shaped corpus") {
    testing::TempDir dir("analyze");
    RunConfig c;
    c.inputs = {write_paper_fixture(dir)};
    const auto r = analyze_into(c, dir / "out");
    REQUIRE(r.status == 0);
    CHECK(r.out.find("top_domestic=harvard/mit(28,") != std::string::npos);
    CHECK(r.out.find("top_international=microsoft/ustc(153,") != std::string::npos);
    CHECK(r.out.find("multi_affiliation_share=") != std::string::npos);
    for (const auto& name : output_file_names()) {
        INFO(name);
        REQUIRE(fs::exists(dir / "out" / name));
    }
    CHECK_FALSE(fs::exists(dir / "out" / ".collabgeo-staging"));
    for (const auto& name : output_file_names()) {
        const auto lines = body_lines(dir / "out" / name);
        REQUIRE_FALSE(lines.empty());
        if (name.ends_with(".json")) CHECK(lines[1].find("\"schema_version\": 1") != std::string::npos);
        else CHECK(lines[0] == "# collabgeo-schema: 1");
    }
    const auto dom = body_lines(dir / "out" / "top_pairs_domestic.csv");
    CHECK(dom[1] == "stage,rank,affiliation_1,affiliation_2,countries,count,distance_km");
    CHECK(dom[2].rfind("Stage 1,1,harvard,mit,US,28,", 0) == 0);
    const auto table = testing::slurp(dir / "out" / "top_pairs_international.txt");
    CHECK(table.find("9400.23") != std::string::npos);

    SUBCASE("reruns and worker counts give identical bytes") {
        REQUIRE(analyze_into(c, dir / "again").status == 0);
        check_same_tree(dir / "out", dir / "again");
        c.workers = 3;
        REQUIRE(analyze_into(c, dir / "threads").status == 0);
        check_same_tree(dir / "out", dir / "threads");
    }
    SUBCASE("shuffled input gives identical bytes") {
        auto lines = body_lines(c.inputs[0]);
        std::reverse(lines.begin(), lines.end());
        std::ofstream rev(dir / "reversed.jsonl");
        for (const auto& l : lines) rev << l << "\n";
        rev.close();
        RunConfig rc = c;
        rc.inputs = {dir / "reversed.jsonl"};
        REQUIRE(analyze_into(rc, dir / "reversed").status == 0);
        for (const auto& name : output_file_names()) {
            if (name == "run_config.json") continue;
            INFO(name);
            CHECK(testing::slurp(dir / "out" / name) == testing::slurp(dir / "reversed" / name));
        }
    }
}

TEST_CASE("analyze: empty input") {
    testing::TempDir dir("empty");
    std::ofstream(dir / "empty.jsonl").close();
    RunConfig c;
    c.inputs = {dir / "empty.jsonl"};
    const auto r = analyze_into(c, dir / "out");
    CHECK(r.status == 0);
    CHECK(r.err.find("warning") != std::string::npos);
    CHECK(r.out.find("publications=0") != std::string::npos);
    for (const auto& name : {"yearly_series.csv", "buckets.csv", "stage_country_counts.csv",
                             "top_pairs_domestic.csv", "top_pairs_international.csv", "powerlaw_fit.csv"}) {
        INFO(name);
        CHECK(body_lines(dir / "out" / name).size() == 2);  // schema line and column header
    }
    // Every stage is listed, with zero counts.
    const auto stages = body_lines(dir / "out" / "stage_summary.csv");
    REQUIRE(stages.size() == 5);
    CHECK(stages[2].rfind("Stage 1,1950,1996,0,0,0,,0,0,0", 0) == 0);
}

TEST_CASE("analyze: failures leave no partial outputs") {
    testing::TempDir dir("fail");
    RunConfig c;
    c.inputs = {testing::fixture("three_records.jsonl")};
    c.boundary_file = testing::fixture("missing_code.geojson");
    const auto r = analyze_into(c, dir / "out");
    CHECK(r.status != 0);
    CHECK(r.err.find("feature 0") != std::string::npos);
    CHECK(fs::is_empty(dir / "out"));

    SUBCASE("bad configs are rejected before any work") {
        RunConfig bad = c;
        bad.boundary_file.reset();
        bad.start_year = 1960;
        CHECK(analyze_into(bad, dir / "o2").status != 0);
        CHECK_FALSE(fs::exists(dir / "o2"));
        bad = c;
        bad.boundary_file.reset();
        bad.top_k = 0;
        CHECK(analyze_into(bad, dir / "o3").status != 0);
        bad.top_k = 5;
        bad.inputs.push_back(dir / "missing.jsonl");
        CHECK(analyze_into(bad, dir / "o4").status != 0);
        bad.inputs.clear();
        CHECK(analyze_into(bad, dir / "o5").status != 0);
    }
}

TEST_CASE("analyze: boundary resolution and the year window") {
    testing::TempDir dir("geo");
    {
        std::ofstream f(dir / "in.jsonl");
        f << R"({"id": "a", "year": 2000, "affiliations": [{"id": "w", "lat": 2, "lon": 2}, {"id": "e", "lat": 5, "lon": 15}]})"
          << "\n"
          << R"({"id": "b", "year": 2001, "affiliations": [{"id": "w", "lat": 2, "lon": 2}, {"id": "w2", "lat": 3, "lon": 3}]})"
          << "\n"
          << R"({"id": "c", "year": 2002, "affiliations": [{"id": "e", "lat": 5, "lon": 15, "country": "US"}, {"id": "sea", "lat": 50, "lon": 50}]})"
          << "\n"
          << R"({"id": "d", "year": 1930, "affiliations": [{"id": "w", "lat": 2, "lon": 2}]})" << "\n";
    }
    RunConfig c;
    c.inputs = {dir / "in.jsonl"};
    c.boundary_file = testing::fixture("two_countries.geojson");
    const AnalysisResult res = analyze(c);
    CHECK(res.outside_window == 1);
    CHECK(res.boundary_resolved == 3);
    CHECK(res.unresolved == 1);
    Tally total;
    for (const auto& [year, row] : res.aggregator.yearly()) total.merge(row.tally);
    CHECK(total.publications == 3);
    CHECK(total.international == 1);
    CHECK(total.domestic == 1);
    CHECK(total.unclassifiable == 1);
    const auto intl = res.aggregator.top_pairs(1, ScopeFilter::International, 5);
    REQUIRE(intl.size() == 1);
    CHECK(intl[0].countries == "XA-XB");

    SUBCASE("a second input shares the affiliation registry") {
        std::ofstream g(dir / "more.jsonl");
        g << R"({"id": "z", "year": 2005, "affiliations": [{"id": "w", "lat": 40, "lon": 40}, {"id": "e", "lat": 5, "lon": 15}]})"
          << "\n";
        g.close();
        RunConfig two = c;
        two.inputs.push_back(dir / "more.jsonl");
        const AnalysisResult r2 = analyze(two);
        CHECK(r2.ingest.coordinate_conflicts == 1);
        CHECK(r2.ingest.total_records == 5);
        const auto pairs = r2.aggregator.top_pairs(1, ScopeFilter::International, 5);
        REQUIRE(pairs.size() == 1);
        CHECK(pairs[0].count == 2);
    }
}

TEST_CASE("serialized config") {
    RunConfig c;
    c.inputs = {"a.jsonl", "b.jsonl"};
    c.stages = StageDefinition({{"one", 1950, 1980}, {"two", 1981, 2019}});
    c.top_k = 7;
    const auto text = serialize_config(c);
    CHECK(text.find("\"schema_version\": 1") != std::string::npos);
    CHECK(text.find("\"top_k\": 7") != std::string::npos);
    CHECK(text.find("\"label\": \"two\"") != std::string::npos);
    CHECK(text.find("\"distance_mode\": \"geodesic\"") != std::string::npos);
    CHECK(text.find("\"snap_radius_km\": 25.0") != std::string::npos);
    CHECK(text.find("workers") == std::string::npos);
}

TEST_CASE("gen-fixture command writes records and sidecar deterministically") {
    testing::TempDir dir("gen");
    FixtureOptions opt;
    opt.seed = 1;
    opt.size = 100;
    std::ostringstream out, err;
    REQUIRE(run_gen_fixture(opt, dir / "a.jsonl", dir / "a.truth.json", out, err) == 0);
    REQUIRE(run_gen_fixture(opt, dir / "b.jsonl", dir / "b.truth.json", out, err) == 0);
    CHECK(testing::slurp(dir / "a.jsonl") == testing::slurp(dir / "b.jsonl"));
    CHECK(testing::slurp(dir / "a.truth.json") == testing::slurp(dir / "b.truth.json"));
    opt.size = 0;
    CHECK(run_gen_fixture(opt, dir / "c.jsonl", dir / "c.truth.json", out, err) != 0);
}

TEST_CASE("executable end to end") {
    testing::TempDir dir("bin");
    const auto d = run_binary("distance 42.3770 -71.1167 42.3601 -71.0942", dir.path());
    CHECK(d.status == 0);
    CHECK(d.out == "2.64\n");
    CHECK(run_binary("distance 0 0 0 90", dir.path()).out == "10018.75\n");
    CHECK(run_binary("distance 95 0 0 0", dir.path()).status != 0);
    CHECK(run_binary("", dir.path()).status != 0);

    const auto v = run_binary("validate -i \"" + testing::fixture("mixed_10.jsonl").string() + "\"", dir.path());
    CHECK(v.status == 0);
    CHECK(v.out.find("accepted=9") != std::string::npos);
    CHECK(run_binary("validate -i \"" + testing::fixture("all_malformed.jsonl").string() + "\"", dir.path()).status != 0);
    const auto csv = run_binary("validate -f delimited-edges -i \"" + testing::fixture("edges.csv").string() + "\"",
                                dir.path());
    CHECK(csv.out.find("accepted=3") != std::string::npos);

    const auto g = run_binary("gen-fixture --profile paper --size 300 -o \"" + (dir / "p.jsonl").string() + "\"",
                              dir.path());
    REQUIRE(g.status == 0);
    CHECK(fs::exists(dir / "p.jsonl.truth.json"));

    SUBCASE("config file values apply and flags win") {
        std::ofstream cfg(dir / "run.toml");
        cfg << "[analyze]\ntop-k=1\ndistance-mode=\"spherical\"\nstage=[\"early:1950-1990\",\"late:1991-2019\"]\n";
        cfg.close();
        const auto a = run_binary("--config \"" + (dir / "run.toml").string() + "\" analyze -i \"" +
                                      (dir / "p.jsonl").string() + "\" -o \"" + (dir / "out").string() +
                                      "\" --top-k 2 -j 2",
                                  dir.path());
        REQUIRE(a.status == 0);
        const auto config = testing::slurp(dir / "out" / "run_config.json");
        CHECK(config.find("\"top_k\": 2") != std::string::npos);
        CHECK(config.find("\"distance_mode\": \"spherical\"") != std::string::npos);
        CHECK(config.find("\"label\": \"late\"") != std::string::npos);
    }
    SUBCASE("bad stage flags fail") {
        const auto a = run_binary("analyze -i \"" + (dir / "p.jsonl").string() + "\" -o \"" +
                                      (dir / "bad").string() + "\" --stage x:1950-1990 --stage y:1992-2019",
                                  dir.path());
        CHECK(a.status != 0);
        CHECK(a.out.find("gap") != std::string::npos);
    }
}
