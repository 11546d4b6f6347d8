#include "collabgeo/pipeline.hpp"

#include <charconv>
#include <condition_variable>
#include <cstdio>
#include <deque>
#include <exception>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>
#include <unordered_map>

#include <json.hpp>

#include "collabgeo/error.hpp"
#include "collabgeo/georesolve.hpp"
#include "collabgeo/metrics.hpp"

namespace collabgeo {

namespace fs = std::filesystem;

InputFormat parse_input_format(std::string_view s) {
    if (s == "line-records" || s == "jsonl") return InputFormat::LineRecords;
    if (s == "delimited-edges" || s == "csv" || s == "tsv") return InputFormat::DelimitedEdges;
    throw InvalidArgument("unknown input format '" + std::string(s) + "'");
}

DistanceMode parse_distance_mode(std::string_view s) {
    if (s == "geodesic") return DistanceMode::Geodesic;
    if (s == "spherical") return DistanceMode::Spherical;
    throw InvalidArgument("unknown distance mode '" + std::string(s) + "'");
}

MissingCoordinatePolicy parse_missing_policy(std::string_view s) {
    if (s == "drop-publication") return MissingCoordinatePolicy::DropPublication;
    if (s == "drop-affiliation") return MissingCoordinatePolicy::DropAffiliation;
    throw InvalidArgument("unknown missing-coordinate policy '" + std::string(s) + "'");
}

Stage parse_stage(std::string_view s) {
    const auto colon = s.rfind(':');
    const auto bad = [&] { return InvalidStage("stage must look like 'label:1950-1996', got '" + std::string(s) + "'"); };
    if (colon == std::string_view::npos || colon == 0) throw bad();
    const auto range = s.substr(colon + 1);
    const auto dash = range.find('-', 1);
    if (dash == std::string_view::npos) throw bad();
    Stage st;
    st.label = std::string(s.substr(0, colon));
    const auto parse_int = [&](std::string_view t, int& v) {
        const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
        if (ec != std::errc{} || p != t.data() + t.size()) throw bad();
    };
    parse_int(range.substr(0, dash), st.start_year);
    parse_int(range.substr(dash + 1), st.end_year);
    return st;
}

std::string_view to_string(InputFormat f) noexcept {
    return f == InputFormat::LineRecords ? "line-records" : "delimited-edges";
}

std::string_view to_string(DistanceMode m) noexcept { return m == DistanceMode::Geodesic ? "geodesic" : "spherical"; }

std::string_view to_string(MissingCoordinatePolicy p) noexcept {
    return p == MissingCoordinatePolicy::DropPublication ? "drop-publication" : "drop-affiliation";
}

void validate_config(const RunConfig& c, bool needs_output_dir) {
    if (c.inputs.empty()) throw InvalidArgument("no input files given");
    for (const auto& p : c.inputs) {
        std::ifstream probe(p);
        if (!probe) throw IoError("cannot read input '" + p.string() + "'");
    }
    if (c.boundary_file) {
        std::ifstream probe(*c.boundary_file);
        if (!probe) throw IoError("cannot read boundary file '" + c.boundary_file->string() + "'");
    }
    if (!(c.snap_radius_km >= 0.0)) throw InvalidArgument("snap radius must be >= 0 km");
    if (c.start_year > c.end_year) throw InvalidArgument("year window is inverted");
    if (c.top_k == 0) throw InvalidArgument("top-k must be at least 1");
    c.stages.require_covers(c.start_year, c.end_year);
    if (needs_output_dir) {
        if (c.output_dir.empty()) throw InvalidArgument("no output directory given");
        std::error_code ec;
        if (fs::exists(c.output_dir, ec) && !fs::is_directory(c.output_dir, ec)) {
            throw IoError("output path '" + c.output_dir.string() + "' is not a directory");
        }
    }
}

std::string serialize_config(const RunConfig& c) {
    nlohmann::ordered_json doc;
    doc["schema_version"] = kSchemaVersion;
    doc["inputs"] = nlohmann::ordered_json::array();
    for (const auto& p : c.inputs) doc["inputs"].push_back(p.string());
    doc["input_format"] = to_string(c.format);
    doc["boundary_file"] = c.boundary_file ? nlohmann::ordered_json(c.boundary_file->string()) : nullptr;
    doc["snap_radius_km"] = c.snap_radius_km;
    doc["year_window"] = {c.start_year, c.end_year};
    doc["stages"] = nlohmann::ordered_json::array();
    for (const auto& s : c.stages.stages()) {
        doc["stages"].push_back({{"label", s.label}, {"start_year", s.start_year}, {"end_year", s.end_year}});
    }
    doc["top_k"] = c.top_k;
    doc["missing_coordinates"] = to_string(c.missing_coordinates);
    doc["distance_mode"] = to_string(c.distance_mode);
    return doc.dump(2) + "\n";
}

std::string format_km(double km) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", km);
    return buf;
}

std::string format_double(double x) {
    char buf[64];
    const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, p);
}

namespace {

using Batch = std::vector<PublicationTeam>;

// Fans batches of teams out to worker threads, each reducing into its own
// aggregator. The aggregator contract makes the merged result independent
// of which worker saw which batch.
class MapPhase {
public:
    MapPhase(unsigned workers, const StageDefinition& stages, DistanceModel model)
        : model_(model) {
        for (unsigned i = 0; i < workers; ++i) partials_.emplace_back(stages);
        if (workers > 1) {
            for (unsigned i = 0; i < workers; ++i) threads_.emplace_back([this, i] { work(i); });
        }
    }

    ~MapPhase() { stop(); }

    void submit(Batch batch) {
        if (threads_.empty()) {
            process(partials_.front(), batch);
            return;
        }
        std::unique_lock lock(mu_);
        space_.wait(lock, [&] { return queue_.size() < 2 * threads_.size() || failure_; });
        if (failure_) std::rethrow_exception(failure_);
        queue_.push_back(std::move(batch));
        ready_.notify_one();
    }

    CollaborationAggregator finish() {
        stop();
        if (failure_) std::rethrow_exception(failure_);
        CollaborationAggregator total = std::move(partials_.front());
        for (std::size_t i = 1; i < partials_.size(); ++i) total.merge(partials_[i]);
        return total;
    }

private:
    void process(CollaborationAggregator& agg, const Batch& batch) const {
        for (const auto& team : batch) agg.add(measure_team(team, model_));
    }

    void work(unsigned index) {
        while (true) {
            Batch batch;
            {
                std::unique_lock lock(mu_);
                ready_.wait(lock, [&] { return !queue_.empty() || done_; });
                if (queue_.empty()) return;
                batch = std::move(queue_.front());
                queue_.pop_front();
                space_.notify_one();
            }
            try {
                process(partials_[index], batch);
            } catch (...) {
                std::lock_guard lock(mu_);
                if (!failure_) failure_ = std::current_exception();
                done_ = true;
                queue_.clear();
                ready_.notify_all();
                space_.notify_all();
                return;
            }
        }
    }

    void stop() {
        {
            std::lock_guard lock(mu_);
            done_ = true;
        }
        ready_.notify_all();
        for (auto& t : threads_) {
            if (t.joinable()) t.join();
        }
    }

    DistanceModel model_;
    std::vector<CollaborationAggregator> partials_;
    std::vector<std::thread> threads_;
    std::mutex mu_;
    std::condition_variable ready_, space_;
    std::deque<Batch> queue_;
    bool done_ = false;
    std::exception_ptr failure_;
};

constexpr std::size_t kBatchSize = 4096;

}  // namespace

AnalysisResult analyze(const RunConfig& config) {
    validate_config(config, false);

    AnalysisResult result(config.stages);
    std::optional<CountryBoundarySet> boundaries;
    if (config.boundary_file) {
        boundaries = load_boundaries(*config.boundary_file);
        for (const auto& w : boundaries->warnings()) result.warnings.push_back("boundaries: " + w);
    }

    unsigned workers = config.workers;
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    MapPhase phase(workers, config.stages, DistanceModel{config.distance_mode, Ellipsoid::wgs84()});

    // The reader's registry pins each affiliation id to one location, so the
    // boundary lookup can be cached by id.
    std::unordered_map<std::string, std::optional<CountryCode>> resolved;
    IngestOptions ingest;
    ingest.missing_coordinates = config.missing_coordinates;

    std::optional<RecordReader> reader;
    Batch batch;
    batch.reserve(kBatchSize);
    for (const auto& path : config.inputs) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw IoError("cannot read input '" + path.string() + "'");
        if (!reader) reader.emplace(in, config.format, ingest);
        else reader->continue_with(in);
        while (auto team = reader->next()) {
            if (team->year < config.start_year || team->year > config.end_year) {
                ++result.outside_window;
                continue;
            }
            if (boundaries) {
                for (auto& a : team->affiliations) {
                    if (a.country) continue;
                    auto [it, inserted] = resolved.try_emplace(a.id);
                    if (inserted) {
                        it->second = resolve_country(a.location, *boundaries, config.snap_radius_km);
                        ++(it->second ? result.boundary_resolved : result.unresolved);
                    }
                    a.country = it->second;
                }
            }
            batch.push_back(std::move(*team));
            if (batch.size() == kBatchSize) {
                phase.submit(std::move(batch));
                batch = Batch();
                batch.reserve(kBatchSize);
            }
        }
        if (in.bad()) throw IoError("read failure on '" + path.string() + "'");
    }
    if (!batch.empty()) phase.submit(std::move(batch));
    result.aggregator = phase.finish();
    result.ingest = reader->report();

    std::vector<std::uint64_t> counts;
    for (const auto& [id, n] : result.aggregator.affiliation_counts()) counts.push_back(n);
    try {
        result.power_law = fit_power_law_counts(counts);
    } catch (const InsufficientData& e) {
        result.warnings.push_back(std::string("power-law fit skipped: ") + e.what());
    }
    if (result.ingest.accepted == 0) result.warnings.push_back("no publications were accepted from the input");
    return result;
}

namespace {

void emit_report(std::ostream& out, const IngestReport& r) {
    out << "total_records=" << r.total_records << "\n"
        << "accepted=" << r.accepted << "\n"
        << "dropped_malformed=" << r.dropped_malformed << "\n"
        << "dropped_no_affiliation=" << r.dropped_no_affiliation << "\n"
        << "dropped_bad_coords=" << r.dropped_bad_coords << "\n"
        << "dropped_bad_year=" << r.dropped_bad_year << "\n"
        << "deduplicated_affiliations=" << r.deduplicated_affiliations << "\n"
        << "coordinate_conflicts=" << r.coordinate_conflicts << "\n"
        << "affiliations_dropped_bad_coords=" << r.affiliations_dropped_bad_coords << "\n"
        << "invalid_country_codes=" << r.invalid_country_codes << "\n";
}

}  // namespace

int run_validate(const RunConfig& config, std::ostream& out, std::ostream& err) {
    try {
        validate_config(config, false);
        IngestOptions ingest;
        ingest.missing_coordinates = config.missing_coordinates;
        std::optional<RecordReader> reader;
        for (const auto& path : config.inputs) {
            std::ifstream in(path, std::ios::binary);
            if (!in) throw IoError("cannot read input '" + path.string() + "'");
            if (!reader) reader.emplace(in, config.format, ingest);
            else reader->continue_with(in);
            while (reader->next()) {
            }
            if (in.bad()) throw IoError("read failure on '" + path.string() + "'");
        }
        const IngestReport& r = reader->report();
        emit_report(out, r);
        if (r.accepted == 0) {
            err << "collabgeo: no valid publication records\n";
            return 1;
        }
        return 0;
    } catch (const std::exception& e) {
        err << "collabgeo: " << e.what() << "\n";
        return 2;
    }
}

int run_analyze(const RunConfig& config, std::ostream& out, std::ostream& err) {
    fs::path staging;
    std::vector<fs::path> placed;
    const auto cleanup = [&] {
        std::error_code ec;
        for (const auto& p : placed) fs::remove(p, ec);
        if (!staging.empty()) fs::remove_all(staging, ec);
    };
    try {
        validate_config(config, true);
        fs::create_directories(config.output_dir);
        staging = config.output_dir / ".collabgeo-staging";
        fs::remove_all(staging);
        fs::create_directory(staging);

        const AnalysisResult result = analyze(config);
        write_outputs(result, config, staging);
        for (const auto& name : output_file_names()) {
            const fs::path target = config.output_dir / name;
            fs::rename(staging / name, target);
            placed.push_back(target);
        }
        fs::remove_all(staging);

        for (const auto& w : result.warnings) err << "collabgeo: warning: " << w << "\n";

        const Tally total = [&] {
            Tally t;
            for (const auto& [year, row] : result.aggregator.yearly()) t.merge(row.tally);
            return t;
        }();
        out << "publications=" << total.publications;
        const auto share = total.multi_affiliation_share();
        out << " multi_affiliation_share=" << (share ? format_double(*share) : "NA");
        for (const ScopeFilter scope : {ScopeFilter::Domestic, ScopeFilter::International}) {
            std::optional<RankedPair> best;
            std::string stage_label;
            for (std::size_t i = 0; i < result.aggregator.stages().size(); ++i) {
                const auto top = result.aggregator.top_pairs(i, scope, 1);
                if (!top.empty() && (!best || top.front().count > best->count)) {
                    best = top.front();
                    stage_label = result.aggregator.stages().stages()[i].label;
                }
            }
            out << " top_" << to_string(scope) << "=";
            if (best) {
                out << best->pair.first << "/" << best->pair.second << "(" << best->count << ", "
                    << format_km(best->km) << " km, " << stage_label << ")";
            } else {
                out << "none";
            }
        }
        out << "\n";
        return 0;
    } catch (const std::exception& e) {
        cleanup();
        err << "collabgeo: " << e.what() << "\n";
        return 2;
    }
}

int run_distance(double lat1, double lon1, double lat2, double lon2, DistanceMode mode, std::ostream& out,
                 std::ostream& err) {
    try {
        const GeoPoint a(lat1, lon1);
        const GeoPoint b(lat2, lon2);
        out << format_km(distance_km(a, b, mode, Ellipsoid::wgs84())) << "\n";
        return 0;
    } catch (const std::exception& e) {
        err << "collabgeo: " << e.what() << "\n";
        return 2;
    }
}

int run_gen_fixture(const FixtureOptions& options, const fs::path& records, const fs::path& truth_path,
                    std::ostream& out, std::ostream& err) {
    try {
        std::ofstream rec(records, std::ios::binary);
        if (!rec) throw IoError("cannot write '" + records.string() + "'");
        const FixtureTruth truth = generate_fixture(options, rec);
        rec.close();
        if (!rec) throw IoError("write failure on '" + records.string() + "'");
        std::ofstream side(truth_path, std::ios::binary);
        if (!side) throw IoError("cannot write '" + truth_path.string() + "'");
        write_truth(side, truth);
        side.close();
        if (!side) throw IoError("write failure on '" + truth_path.string() + "'");
        out << "wrote " << truth.publications << " publications to " << records.string() << "\n";
        return 0;
    } catch (const std::exception& e) {
        err << "collabgeo: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace collabgeo
