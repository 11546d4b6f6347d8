#include <fstream>
#include <sstream>

#include <json.hpp>

#include "collabgeo/error.hpp"
#include "collabgeo/pipeline.hpp"

namespace collabgeo {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

const std::string kHeaderLine = "# collabgeo-schema: " + std::to_string(kSchemaVersion) + "\n";

std::string opt(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

ojson opt_json(const std::optional<double>& v) { return v ? ojson(*v) : ojson(nullptr); }

// CSV cells here are ids and labels; quote only when needed.
std::string cell(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string q = "\"";
    for (const char c : s) {
        if (c == '"') q += '"';
        q += c;
    }
    return q + "\"";
}

void write_file(const fs::path& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot create '" + path.string() + "'");
    out << body;
    out.close();
    if (!out) throw IoError("write failure on '" + path.string() + "'");
}

void tally_columns(std::ostringstream& out) {
    out << "publications,single_affiliation,multi_affiliation,multi_affiliation_share,domestic,international,"
           "unclassifiable";
    for (const ScopeFilter s : kAllScopeFilters) {
        const auto n = std::string(to_string(s));
        out << "," << n << "_count," << n << "_mean_ave_gd_km," << n << "_mean_max_gd_km," << n << "_mean_min_gd_km";
    }
}

void tally_cells(std::ostringstream& out, const Tally& t) {
    out << t.publications << "," << t.single_affiliation << "," << t.multi_affiliation << ","
        << opt(t.multi_affiliation_share()) << "," << t.domestic << "," << t.international << ","
        << t.unclassifiable;
    for (const ScopeFilter s : kAllScopeFilters) {
        const IndicatorMeans& m = t.scope(s);
        out << "," << m.count << "," << opt(m.mean_ave()) << "," << opt(m.mean_max()) << "," << opt(m.mean_min());
    }
}

std::string yearly_csv(const CollaborationAggregator& agg) {
    std::ostringstream out;
    out << kHeaderLine << "year,";
    tally_columns(out);
    out << "\n";
    for (const auto& [year, row] : agg.yearly()) {
        out << year << ",";
        tally_cells(out, row.tally);
        out << "\n";
    }
    return out.str();
}

std::string buckets_csv(const CollaborationAggregator& agg) {
    std::ostringstream out;
    out << kHeaderLine
        << "year,affiliations_1,affiliations_2,affiliations_3,affiliations_4,affiliations_5plus,"
           "countries_1,countries_2,countries_3,countries_4,countries_5plus,countries_unresolved\n";
    for (const auto& [year, row] : agg.yearly()) {
        out << year;
        for (const auto n : row.buckets.affiliations) out << "," << n;
        for (const auto n : row.buckets.countries) out << "," << n;
        out << "," << row.buckets.countries_unresolved << "\n";
    }
    return out.str();
}

std::string stage_csv(const std::vector<StageSummary>& stages) {
    std::ostringstream out;
    out << kHeaderLine << "stage,start_year,end_year,";
    tally_columns(out);
    out << "\n";
    for (const auto& s : stages) {
        out << cell(s.stage.label) << "," << s.stage.start_year << "," << s.stage.end_year << ",";
        tally_cells(out, s.tally);
        out << "\n";
    }
    return out.str();
}

std::string stage_country_csv(const std::vector<StageSummary>& stages) {
    std::ostringstream out;
    out << kHeaderLine << "stage,country,publications,single_country,international\n";
    for (const auto& s : stages) {
        for (const auto& [code, t] : s.countries) {
            out << cell(s.stage.label) << "," << code.str() << "," << t.publications << "," << t.single_country
                << "," << t.international << "\n";
        }
    }
    return out.str();
}

std::string pairs_csv(const CollaborationAggregator& agg, ScopeFilter scope, std::size_t k) {
    std::ostringstream out;
    out << kHeaderLine << "stage,rank,affiliation_1,affiliation_2,countries,count,distance_km\n";
    for (std::size_t i = 0; i < agg.stages().size(); ++i) {
        const auto& label = agg.stages().stages()[i].label;
        std::size_t rank = 0;
        for (const auto& p : agg.top_pairs(i, scope, k)) {
            out << cell(label) << "," << ++rank << "," << cell(p.pair.first) << "," << cell(p.pair.second) << ","
                << p.countries << "," << p.count << "," << format_double(p.km) << "\n";
        }
    }
    return out.str();
}

std::string pairs_table(const CollaborationAggregator& agg, ScopeFilter scope, std::size_t k) {
    std::ostringstream out;
    out << kHeaderLine;
    for (std::size_t i = 0; i < agg.stages().size(); ++i) {
        const Stage& st = agg.stages().stages()[i];
        const auto ranking = agg.top_pairs(i, scope, k);
        std::vector<std::array<std::string, 6>> rows;
        rows.push_back({"rank", "affiliation_1", "affiliation_2", "countries", "count", "km"});
        std::size_t rank = 0;
        for (const auto& p : ranking) {
            rows.push_back({std::to_string(++rank), p.pair.first, p.pair.second, p.countries.empty() ? "-" : p.countries,
                            std::to_string(p.count), format_km(p.km)});
        }
        std::array<std::size_t, 6> width{};
        for (const auto& r : rows) {
            for (std::size_t c = 0; c < 6; ++c) width[c] = std::max(width[c], r[c].size());
        }
        out << "\n" << st.label << " (" << st.start_year << "-" << st.end_year << "), " << to_string(scope) << "\n";
        if (ranking.empty()) {
            out << "(no pairs)\n";
            continue;
        }
        for (const auto& r : rows) {
            std::string line;
            for (std::size_t c = 0; c < 6; ++c) {
                const bool numeric = c == 0 || c >= 4;
                const std::string pad(width[c] - r[c].size(), ' ');
                line += numeric ? pad + r[c] : r[c] + pad;
                if (c + 1 < 6) line += "  ";
            }
            while (!line.empty() && line.back() == ' ') line.pop_back();
            out << line << "\n";
        }
    }
    return out.str();
}

std::string powerlaw_csv(const std::optional<PowerLawFit>& fit) {
    std::ostringstream out;
    out << kHeaderLine << "exponent,intercept,r_squared,fit_min,fit_max,points,affiliations,mle_exponent\n";
    if (fit) {
        out << format_double(fit->exponent) << "," << format_double(fit->intercept) << ","
            << format_double(fit->r_squared) << "," << fit->fit_min << "," << fit->fit_max << "," << fit->points
            << "," << fit->affiliations << "," << format_double(fit->mle_exponent) << "\n";
    }
    return out.str();
}

ojson report_json(const AnalysisResult& r) {
    const IngestReport& i = r.ingest;
    ojson doc;
    doc["schema_version"] = kSchemaVersion;
    doc["total_records"] = i.total_records;
    doc["accepted"] = i.accepted;
    doc["dropped_malformed"] = i.dropped_malformed;
    doc["dropped_no_affiliation"] = i.dropped_no_affiliation;
    doc["dropped_bad_coords"] = i.dropped_bad_coords;
    doc["dropped_bad_year"] = i.dropped_bad_year;
    doc["deduplicated_affiliations"] = i.deduplicated_affiliations;
    doc["coordinate_conflicts"] = i.coordinate_conflicts;
    doc["affiliations_dropped_bad_coords"] = i.affiliations_dropped_bad_coords;
    doc["invalid_country_codes"] = i.invalid_country_codes;
    doc["outside_year_window"] = r.outside_window;
    doc["boundary_resolved_affiliations"] = r.boundary_resolved;
    doc["boundary_unresolved_affiliations"] = r.unresolved;
    return doc;
}

ojson pair_json(const PairRanking& ranking) {
    if (ranking.empty()) return nullptr;
    const RankedPair& p = ranking.front();
    return {{"affiliation_1", p.pair.first}, {"affiliation_2", p.pair.second}, {"countries", p.countries},
            {"count", p.count}, {"distance_km", p.km}};
}

ojson summary_json(const AnalysisResult& r, const std::vector<StageSummary>& stages) {
    const auto& agg = r.aggregator;
    Tally total;
    for (const auto& [year, row] : agg.yearly()) total.merge(row.tally);

    ojson doc;
    doc["schema_version"] = kSchemaVersion;
    doc["publications"] = total.publications;
    doc["single_affiliation"] = total.single_affiliation;
    doc["multi_affiliation"] = total.multi_affiliation;
    doc["multi_affiliation_share"] = opt_json(total.multi_affiliation_share());
    doc["domestic"] = total.domestic;
    doc["international"] = total.international;
    doc["unclassifiable"] = total.unclassifiable;
    doc["affiliations"] = agg.affiliation_counts().size();
    doc["years"] = agg.yearly().empty() ? ojson(nullptr)
                                        : ojson{agg.yearly().begin()->first, agg.yearly().rbegin()->first};
    for (const ScopeFilter s : kAllScopeFilters) {
        const IndicatorMeans& m = total.scope(s);
        doc["mean_gd_km"][std::string(to_string(s))] = {
            {"count", m.count}, {"ave", opt_json(m.mean_ave())}, {"max", opt_json(m.mean_max())},
            {"min", opt_json(m.mean_min())}};
    }
    doc["stages"] = ojson::array();
    for (std::size_t i = 0; i < stages.size(); ++i) {
        const auto& s = stages[i];
        doc["stages"].push_back({{"label", s.stage.label},
                                 {"start_year", s.stage.start_year},
                                 {"end_year", s.stage.end_year},
                                 {"publications", s.tally.publications},
                                 {"multi_affiliation_share", opt_json(s.tally.multi_affiliation_share())},
                                 {"top_domestic", pair_json(agg.top_pairs(i, ScopeFilter::Domestic, 1))},
                                 {"top_international", pair_json(agg.top_pairs(i, ScopeFilter::International, 1))}});
    }
    if (r.power_law) {
        doc["power_law"] = {{"exponent", r.power_law->exponent},
                            {"r_squared", r.power_law->r_squared},
                            {"mle_exponent", r.power_law->mle_exponent}};
    } else {
        doc["power_law"] = nullptr;
    }
    doc["warnings"] = r.warnings;
    return doc;
}

}  // namespace

const std::vector<std::string>& output_file_names() {
    static const std::vector<std::string> names = {
        "yearly_series.csv",          "buckets.csv",
        "stage_summary.csv",          "stage_country_counts.csv",
        "top_pairs_domestic.csv",     "top_pairs_international.csv",
        "top_pairs_domestic.txt",     "top_pairs_international.txt",
        "powerlaw_fit.csv",           "summary.json",
        "ingest_report.json",         "run_config.json",
    };
    return names;
}

void write_outputs(const AnalysisResult& r, const RunConfig& config, const fs::path& dir) {
    const auto& agg = r.aggregator;
    const auto stages = agg.stage_summaries();
    write_file(dir / "yearly_series.csv", yearly_csv(agg));
    write_file(dir / "buckets.csv", buckets_csv(agg));
    write_file(dir / "stage_summary.csv", stage_csv(stages));
    write_file(dir / "stage_country_counts.csv", stage_country_csv(stages));
    write_file(dir / "top_pairs_domestic.csv", pairs_csv(agg, ScopeFilter::Domestic, config.top_k));
    write_file(dir / "top_pairs_international.csv", pairs_csv(agg, ScopeFilter::International, config.top_k));
    write_file(dir / "top_pairs_domestic.txt", pairs_table(agg, ScopeFilter::Domestic, config.top_k));
    write_file(dir / "top_pairs_international.txt", pairs_table(agg, ScopeFilter::International, config.top_k));
    write_file(dir / "powerlaw_fit.csv", powerlaw_csv(r.power_law));
    write_file(dir / "summary.json", summary_json(r, stages).dump(2) + "\n");
    write_file(dir / "ingest_report.json", report_json(r).dump(2) + "\n");
    write_file(dir / "run_config.json", serialize_config(config));
}

}  // namespace collabgeo
