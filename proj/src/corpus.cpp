#include "collabgeo/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "collabgeo/error.hpp"

namespace collabgeo {

using nlohmann::json;

std::optional<CountryCode> CountryCode::parse(std::string_view text) {
    if (text.size() != 2) return std::nullopt;
    CountryCode code;
    for (std::size_t i = 0; i < 2; ++i) {
        const unsigned char c = static_cast<unsigned char>(text[i]);
        if (c > 127 || !std::isalpha(c)) return std::nullopt;
        code.chars_[i] = static_cast<char>(std::toupper(c));
    }
    return code;
}

IngestReport& IngestReport::operator+=(const IngestReport& o) noexcept {
    total_records += o.total_records;
    accepted += o.accepted;
    dropped_malformed += o.dropped_malformed;
    dropped_no_affiliation += o.dropped_no_affiliation;
    dropped_bad_coords += o.dropped_bad_coords;
    dropped_bad_year += o.dropped_bad_year;
    deduplicated_affiliations += o.deduplicated_affiliations;
    coordinate_conflicts += o.coordinate_conflicts;
    affiliations_dropped_bad_coords += o.affiliations_dropped_bad_coords;
    invalid_country_codes += o.invalid_country_codes;
    return *this;
}

namespace {

// Raw affiliation as read from input, before validation.
struct RawAffiliation {
    std::string id;
    std::optional<double> lat;
    std::optional<double> lon;
    std::optional<std::string> country;
};

struct RawRecord {
    std::string id;
    std::optional<long long> year;
    std::vector<RawAffiliation> affiliations;
    std::vector<std::string> authors;
    bool malformed = false;
};

std::optional<double> parse_double(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    if (s.empty()) return std::nullopt;
    double v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

std::optional<long long> parse_integer(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

std::optional<std::string> json_id(const json& j) {
    if (j.is_string()) {
        auto s = j.get<std::string>();
        if (s.empty()) return std::nullopt;
        return s;
    }
    if (j.is_number_integer()) return std::to_string(j.get<long long>());
    return std::nullopt;
}

std::optional<double> json_number(const json& obj, const char* key) {
    const auto it = obj.find(key);
    if (it == obj.end() || !it->is_number()) return std::nullopt;
    return it->get<double>();
}

RawRecord parse_json_line(std::string_view line) {
    RawRecord rec;
    json j = json::parse(line.begin(), line.end(), nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        rec.malformed = true;
        return rec;
    }
    const auto id_it = j.find("id");
    auto id = id_it == j.end() ? std::nullopt : json_id(*id_it);
    if (!id) {
        rec.malformed = true;
        return rec;
    }
    rec.id = std::move(*id);

    const auto year_it = j.find("year");
    if (year_it == j.end() || !year_it->is_number()) {
        rec.malformed = true;
        return rec;
    }
    if (year_it->is_number_integer()) {
        rec.year = year_it->get<long long>();
    } else {
        const double y = year_it->get<double>();
        if (!(std::isfinite(y) && y == std::floor(y) && std::fabs(y) < 1e9)) {
            rec.malformed = true;
            return rec;
        }
        rec.year = static_cast<long long>(y);
    }

    if (const auto a = j.find("affiliations"); a != j.end() && !a->is_null()) {
        if (!a->is_array()) {
            rec.malformed = true;
            return rec;
        }
        for (const auto& entry : *a) {
            if (!entry.is_object()) {
                rec.malformed = true;
                return rec;
            }
            const auto aid_it = entry.find("id");
            auto aid = aid_it == entry.end() ? std::nullopt : json_id(*aid_it);
            if (!aid) {
                rec.malformed = true;
                return rec;
            }
            RawAffiliation raw{std::move(*aid), json_number(entry, "lat"), json_number(entry, "lon"),
                               std::nullopt};
            if (const auto c = entry.find("country"); c != entry.end() && c->is_string()) {
                raw.country = c->get<std::string>();
            }
            rec.affiliations.push_back(std::move(raw));
        }
    }
    if (const auto a = j.find("authors"); a != j.end() && a->is_array()) {
        for (const auto& author : *a) {
            if (auto s = json_id(author)) rec.authors.push_back(std::move(*s));
        }
    }
    return rec;
}

// RFC 4180-style field splitting with double-quote escaping.
bool split_delimited(std::string_view line, char delim, std::vector<std::string>& out) {
    out.clear();
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
        } else if (c == '"' && field.empty()) {
            quoted = true;
        } else if (c == delim) {
            out.push_back(std::move(field));
            field.clear();
        } else {
            field.push_back(c);
        }
    }
    if (quoted) return false;
    out.push_back(std::move(field));
    return true;
}

std::string_view trim_line(std::string_view s) {
    if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
    return s;
}

bool blank(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

struct FirstSeen {
    GeoPoint location;
    std::optional<CountryCode> country;
};

}  // namespace

struct RecordReader::Impl {
    std::istream* in;
    InputFormat format;
    IngestOptions options;
    IngestReport report;
    std::unordered_map<std::string, FirstSeen> registry;

    // delimited-edges state
    bool header_read = false;
    char delim = ',';
    int col_pub = -1, col_year = -1, col_aff = -1, col_lat = -1, col_lon = -1, col_country = -1;
    std::size_t columns = 0;
    std::vector<std::string> fields;
    std::optional<std::vector<std::string>> pending_row;
    bool pending_malformed_row = false;

    std::string line;

    bool read_line() {
        if (!std::getline(*in, line)) {
            if (in->bad()) throw IoError("input stream read failure");
            return false;
        }
        return true;
    }

    std::optional<RawRecord> next_raw();
    std::optional<RawRecord> next_json();
    std::optional<RawRecord> next_delimited();
    bool read_header();
    std::optional<PublicationTeam> validate(RawRecord raw);
};

std::optional<RawRecord> RecordReader::Impl::next_raw() {
    return format == InputFormat::LineRecords ? next_json() : next_delimited();
}

std::optional<RawRecord> RecordReader::Impl::next_json() {
    while (read_line()) {
        const auto view = trim_line(line);
        if (blank(view)) continue;
        return parse_json_line(view);
    }
    return std::nullopt;
}

bool RecordReader::Impl::read_header() {
    while (read_line()) {
        auto view = trim_line(line);
        if (view.size() >= 3 && view.substr(0, 3) == "\xEF\xBB\xBF") view.remove_prefix(3);
        if (blank(view)) continue;
        delim = view.find('\t') != std::string_view::npos ? '\t' : ',';
        if (!split_delimited(view, delim, fields)) break;
        columns = fields.size();
        for (std::size_t i = 0; i < fields.size(); ++i) {
            std::string name = fields[i];
            std::transform(name.begin(), name.end(), name.begin(),
                           [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
            const int idx = static_cast<int>(i);
            if (name == "publication_id") col_pub = idx;
            else if (name == "year") col_year = idx;
            else if (name == "affiliation_id") col_aff = idx;
            else if (name == "lat") col_lat = idx;
            else if (name == "lon") col_lon = idx;
            else if (name == "country") col_country = idx;
        }
        if (col_pub < 0 || col_year < 0 || col_aff < 0 || col_lat < 0 || col_lon < 0) {
            throw IoError("delimited input header must name publication_id, year, "
                          "affiliation_id, lat, lon");
        }
        return true;
    }
    throw IoError("delimited input has no header row");
}

std::optional<RawRecord> RecordReader::Impl::next_delimited() {
    if (!header_read) {
        read_header();
        header_read = true;
    }
    // A row that cannot be split or lacks a publication id is its own
    // malformed record.
    auto fetch_row = [this]() -> std::optional<std::vector<std::string>> {
        while (read_line()) {
            const auto view = trim_line(line);
            if (blank(view)) continue;
            std::vector<std::string> row;
            if (!split_delimited(view, delim, row) || row.size() != columns ||
                row[col_pub].empty()) {
                pending_malformed_row = true;
                return std::vector<std::string>{};
            }
            return row;
        }
        return std::nullopt;
    };

    if (!pending_row) {
        pending_row = fetch_row();
        if (!pending_row) return std::nullopt;
    }
    if (pending_malformed_row) {
        pending_malformed_row = false;
        pending_row.reset();
        RawRecord bad;
        bad.malformed = true;
        return bad;
    }

    RawRecord rec;
    rec.id = (*pending_row)[col_pub];
    const auto year_text = (*pending_row)[col_year];
    rec.year = parse_integer(year_text);
    if (!rec.year) rec.malformed = true;

    auto absorb = [&](const std::vector<std::string>& row) {
        if (row[col_year] != year_text) rec.malformed = true;
        if (row[col_aff].empty()) return;  // edge without affiliation
        RawAffiliation raw{row[col_aff], parse_double(row[col_lat]), parse_double(row[col_lon]),
                           std::nullopt};
        if (col_country >= 0 && !row[col_country].empty()) raw.country = row[col_country];
        rec.affiliations.push_back(std::move(raw));
    };
    absorb(*pending_row);
    pending_row.reset();

    while (true) {
        auto row = fetch_row();
        if (!row) break;
        if (pending_malformed_row || (*row)[col_pub] != rec.id) {
            pending_row = std::move(row);
            break;
        }
        absorb(*row);
    }
    return rec;
}

std::optional<PublicationTeam> RecordReader::Impl::validate(RawRecord raw) {
    ++report.total_records;
    if (raw.malformed) {
        ++report.dropped_malformed;
        return std::nullopt;
    }
    if (*raw.year < options.min_year || *raw.year > options.max_year) {
        ++report.dropped_bad_year;
        return std::nullopt;
    }
    if (raw.affiliations.empty()) {
        ++report.dropped_no_affiliation;
        return std::nullopt;
    }

    PublicationTeam team;
    team.id = std::move(raw.id);
    team.year = static_cast<int>(*raw.year);
    team.authors = std::move(raw.authors);

    std::unordered_set<std::string> seen;
    IngestReport delta;
    bool any_bad_coords = false;
    for (auto& a : raw.affiliations) {
        if (!seen.insert(a.id).second) {
            ++delta.deduplicated_affiliations;
            continue;
        }
        std::optional<GeoPoint> location;
        if (a.lat && a.lon && std::isfinite(*a.lat) && std::isfinite(*a.lon) &&
            std::fabs(*a.lat) <= 90.0 && std::fabs(*a.lon) <= 180.0) {
            location = GeoPoint(*a.lat, *a.lon);
        }
        if (!location) {
            any_bad_coords = true;
            ++delta.affiliations_dropped_bad_coords;
            continue;
        }
        std::optional<CountryCode> country;
        if (a.country) {
            country = CountryCode::parse(*a.country);
            if (!country) ++delta.invalid_country_codes;
        }
        team.affiliations.push_back(AffiliationRecord{std::move(a.id), *location, country});
    }

    if (any_bad_coords && options.missing_coordinates == MissingCoordinatePolicy::DropPublication) {
        // Whole publication goes; per-affiliation drops are not reported then.
        delta.affiliations_dropped_bad_coords = 0;
        report.deduplicated_affiliations += delta.deduplicated_affiliations;
        report.invalid_country_codes += delta.invalid_country_codes;
        ++report.dropped_bad_coords;
        return std::nullopt;
    }
    if (team.affiliations.empty()) {
        report += delta;
        ++report.dropped_bad_coords;
        return std::nullopt;
    }

    for (auto& a : team.affiliations) {
        const auto [it, inserted] = registry.try_emplace(a.id, FirstSeen{a.location, a.country});
        if (!inserted) {
            const FirstSeen& first = it->second;
            if (first.location != a.location || (a.country && first.country && *a.country != *first.country)) {
                ++delta.coordinate_conflicts;
            }
            a.location = first.location;
            if (first.country) a.country = first.country;
            else if (a.country) it->second.country = a.country;
        }
    }

    report += delta;
    ++report.accepted;
    return team;
}

RecordReader::RecordReader(std::istream& in, InputFormat format, IngestOptions options)
    : impl_(std::make_unique<Impl>()) {
    impl_->in = &in;
    impl_->format = format;
    impl_->options = options;
}

RecordReader::~RecordReader() = default;
RecordReader::RecordReader(RecordReader&&) noexcept = default;
RecordReader& RecordReader::operator=(RecordReader&&) noexcept = default;

std::optional<PublicationTeam> RecordReader::next() {
    while (auto raw = impl_->next_raw()) {
        if (auto team = impl_->validate(std::move(*raw))) return team;
    }
    return std::nullopt;
}

void RecordReader::continue_with(std::istream& in) {
    impl_->in = &in;
    impl_->header_read = false;
    impl_->pending_row.reset();
    impl_->pending_malformed_row = false;
}

const IngestReport& RecordReader::report() const noexcept { return impl_->report; }

ParsedCorpus parse_records(std::istream& in, InputFormat format, const IngestOptions& options) {
    ParsedCorpus corpus;
    RecordReader reader(in, format, options);
    while (auto team = reader.next()) corpus.teams.push_back(std::move(*team));
    corpus.report = reader.report();
    return corpus;
}

std::vector<PublicationTeam> filter_by_years(std::span<const PublicationTeam> teams,
                                             int start_year, int end_year) {
    if (start_year > end_year) {
        throw InvalidArgument("year window is inverted: " + std::to_string(start_year) + " > " +
                              std::to_string(end_year));
    }
    std::vector<PublicationTeam> kept;
    for (const auto& t : teams) {
        if (t.year >= start_year && t.year <= end_year) kept.push_back(t);
    }
    return kept;
}

CorpusStats corpus_stats(std::span<const PublicationTeam> teams) {
    CorpusStats stats;
    std::unordered_set<std::string_view> affiliations;
    std::unordered_set<std::string_view> authors;
    bool have_authors = false;
    for (const auto& t : teams) {
        ++stats.publications;
        for (const auto& a : t.affiliations) affiliations.insert(a.id);
        if (!t.authors.empty()) have_authors = true;
        for (const auto& au : t.authors) authors.insert(au);
    }
    stats.unique_affiliations = affiliations.size();
    if (have_authors) stats.unique_authors = authors.size();
    return stats;
}

void write_records(std::ostream& out, std::span<const PublicationTeam> teams) {
    for (const auto& t : teams) {
        json affs = json::array();
        for (const auto& a : t.affiliations) {
            json entry = {{"id", a.id}, {"lat", a.location.lat()}, {"lon", a.location.lon()}};
            if (a.country) entry["country"] = a.country->str();
            affs.push_back(std::move(entry));
        }
        json rec = {{"id", t.id}, {"year", t.year}, {"affiliations", std::move(affs)}};
        if (!t.authors.empty()) rec["authors"] = t.authors;
        out << rec.dump() << '\n';
    }
    if (!out) throw IoError("failed to write records");
}

}  // namespace collabgeo
