#include "collabgeo/fixture.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <set>

#include <json.hpp>

#include "collabgeo/error.hpp"

namespace collabgeo {

namespace {

using nlohmann::json;

// Raw mt19937_64 output mapped by hand so the byte stream does not depend on
// the standard library's distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
    std::uint64_t below(std::uint64_t n) {  // [0, n)
        return static_cast<std::uint64_t>((static_cast<unsigned __int128>(engine_()) * n) >> 64);
    }
    int year(int lo, int hi) { return lo + static_cast<int>(below(static_cast<std::uint64_t>(hi - lo + 1))); }

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
    }

private:
    std::mt19937_64 engine_;
};

struct SyntheticCountry {
    const char* code;
    double lat;
    double lon;
};

constexpr SyntheticCountry kCountries[] = {
    {"US", 39.0, -98.0}, {"CN", 33.0, 108.0}, {"GB", 53.0, -1.5}, {"DE", 51.0, 10.0},
    {"FR", 46.5, 2.5},   {"JP", 36.5, 138.5}, {"IN", 22.0, 79.0}, {"CA", 53.0, -110.0},
    {"ES", 40.0, -3.5},  {"AU", -25.0, 134.0}, {"BR", -10.0, -52.0}, {"SG", 1.35, 103.82},
};

struct SyntheticAffiliation {
    std::string id;
    double lat;
    double lon;
    std::optional<std::string> country;
};

std::vector<SyntheticAffiliation> make_pool(Rng& rng, std::size_t n, double unresolved_fraction) {
    std::vector<SyntheticAffiliation> pool;
    pool.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& c = kCountries[rng.below(std::size(kCountries))];
        char id[32];
        std::snprintf(id, sizeof id, "A%05zu", i);
        SyntheticAffiliation a{id, c.lat + rng.uniform(-2.0, 2.0), c.lon + rng.uniform(-2.0, 2.0), c.code};
        if (rng.uniform01() < unresolved_fraction) a.country.reset();
        pool.push_back(std::move(a));
    }
    return pool;
}

// Team sizes 1..7 with mean exactly 3.
std::size_t draw_team_size(Rng& rng) {
    static constexpr double kWeights[] = {0.25, 0.20, 0.20, 0.15, 0.10, 0.05, 0.05};
    double u = rng.uniform01();
    for (std::size_t i = 0; i < std::size(kWeights); ++i) {
        if (u < kWeights[i]) return i + 1;
        u -= kWeights[i];
    }
    return std::size(kWeights);
}

std::size_t draw_multi_size(Rng& rng) {
    std::size_t m;
    do {
        m = draw_team_size(rng);
    } while (m < 2);
    return m;
}

// Devroye's rejection sampler for the zeta (discrete power-law) distribution.
std::uint64_t draw_zeta(Rng& rng, double a) {
    const double b = std::pow(2.0, a - 1.0);
    while (true) {
        const double u = 1.0 - rng.uniform01();  // (0, 1]
        const double v = rng.uniform01();
        const double x = std::floor(std::pow(u, -1.0 / (a - 1.0)));
        if (!(x < 1e6)) continue;
        const double t = std::pow(1.0 + 1.0 / x, a - 1.0);
        if (v * x * (t - 1.0) / (b - 1.0) <= t / b) return static_cast<std::uint64_t>(x);
    }
}

struct PlannedPublication {
    int year;
    std::vector<std::size_t> members;  // indices into the affiliation table
    bool repeat_first = false;         // list the first affiliation twice
};

class Writer {
public:
    Writer(std::ostream& out, const std::vector<SyntheticAffiliation>& affs, FixtureTruth& truth)
        : out_(out), affs_(affs), truth_(truth) {}

    void emit(const PlannedPublication& p) {
        char id[32];
        std::snprintf(id, sizeof id, "P%08llu", static_cast<unsigned long long>(next_id_++));
        json list = json::array();
        for (const auto idx : p.members) list.push_back(entry(idx));
        if (p.repeat_first) list.push_back(entry(p.members.front()));
        out_ << json{{"id", id}, {"year", p.year}, {"affiliations", std::move(list)}}.dump() << '\n';
        record(p);
    }

    std::uint64_t used() const { return used_.size(); }

private:
    json entry(std::size_t idx) const {
        const auto& a = affs_[idx];
        json e = {{"id", a.id}, {"lat", a.lat}, {"lon", a.lon}};
        if (a.country) e["country"] = *a.country;
        return e;
    }

    void record(const PlannedPublication& p) {
        YearTruth& y = truth_.years[p.year];
        ++truth_.publications;
        ++y.publications;
        const std::size_t m = p.members.size();
        ++y.affiliation_buckets[std::min<std::size_t>(m, 5) - 1];
        std::set<std::string> countries;
        bool unresolved = false;
        for (const auto idx : p.members) {
            used_.insert(idx);
            if (affs_[idx].country) countries.insert(*affs_[idx].country);
            else unresolved = true;
        }
        if (unresolved) ++y.country_unresolved;
        else ++y.country_buckets[std::min<std::size_t>(countries.size(), 5) - 1];
        if (m == 1) {
            ++y.single_affiliation;
            return;
        }
        ++y.multi_affiliation;
        if (unresolved) ++y.unclassifiable;
        else if (countries.size() == 1) ++y.domestic;
        else ++y.international;
    }

    std::ostream& out_;
    const std::vector<SyntheticAffiliation>& affs_;
    FixtureTruth& truth_;
    std::uint64_t next_id_ = 0;
    std::set<std::size_t> used_;
};

std::vector<std::size_t> pick_distinct(Rng& rng, std::size_t m, std::size_t pool) {
    std::vector<std::size_t> chosen;
    while (chosen.size() < m) {
        const auto idx = static_cast<std::size_t>(rng.below(pool));
        if (std::find(chosen.begin(), chosen.end(), idx) == chosen.end()) chosen.push_back(idx);
    }
    return chosen;
}

}  // namespace

FixtureTruth generate_fixture(const FixtureOptions& opt, std::ostream& out) {
    if (opt.size == 0) throw InvalidArgument("fixture size must be at least 1");
    if (opt.start_year > opt.end_year) throw InvalidArgument("fixture year range is inverted");

    FixtureTruth truth;
    truth.profile = opt.profile;
    truth.seed = opt.seed;
    Rng rng(opt.seed);

    if (opt.profile.rfind("powerlaw", 0) == 0) {
        double a = 0;
        try {
            a = std::stod(opt.profile.substr(8));
        } catch (const std::exception&) {
            throw InvalidArgument("powerlaw profile needs an exponent, e.g. powerlaw2.5");
        }
        if (!(a > 1.5 && a < 10)) throw InvalidArgument("powerlaw exponent must lie in (1.5, 10)");
        std::vector<SyntheticAffiliation> affs = make_pool(rng, opt.size, 0.0);
        Writer w(out, affs, truth);
        for (std::size_t i = 0; i < affs.size(); ++i) {
            const auto n = draw_zeta(rng, a);
            for (std::uint64_t k = 0; k < n; ++k) w.emit({rng.year(opt.start_year, opt.end_year), {i}});
        }
        truth.exponent = a;
        truth.affiliations_used = w.used();
        return truth;
    }

    if (opt.pool < 7) throw InvalidArgument("affiliation pool must hold at least 7 affiliations");

    if (opt.profile == "uniform" || opt.profile == "multi25") {
        auto affs = make_pool(rng, opt.pool, opt.unresolved_fraction);
        Writer w(out, affs, truth);
        std::vector<bool> multi;
        if (opt.profile == "multi25") {
            const std::size_t n_multi = (opt.size + 2) / 4;
            multi.assign(opt.size, false);
            std::fill(multi.begin(), multi.begin() + static_cast<std::ptrdiff_t>(n_multi), true);
            rng.shuffle(multi);
        }
        for (std::size_t i = 0; i < opt.size; ++i) {
            std::size_t m;
            if (multi.empty()) m = draw_team_size(rng);
            else m = multi[i] ? draw_multi_size(rng) : 1;
            PlannedPublication p{rng.year(opt.start_year, opt.end_year), pick_distinct(rng, m, affs.size())};
            p.repeat_first = rng.uniform01() < 0.05;
            w.emit(p);
        }
        truth.affiliations_used = w.used();
        const auto multi_total = [&] {
            std::uint64_t n = 0;
            for (const auto& [y, t] : truth.years) n += t.multi_affiliation;
            return n;
        }();
        truth.multi_share = static_cast<double>(multi_total) / static_cast<double>(truth.publications);
        return truth;
    }

    if (opt.profile == "paper") {
        auto affs = make_pool(rng, opt.pool, 0.0);
        const std::size_t background = affs.size();
        const auto add = [&](const char* id, double lat, double lon, const char* country) {
            affs.push_back({id, lat, lon, std::string(country)});
            return affs.size() - 1;
        };
        const auto harvard = add("harvard", 42.3770, -71.1167, "US");
        const auto mit = add("mit", 42.3601, -71.0942, "US");
        const auto ustc = add("ustc", 31.8389, 117.2640, "CN");
        const auto microsoft = add("microsoft", 47.6423, -122.1391, "US");
        const auto tsinghua = add("tsinghua", 40.0000, 116.3264, "CN");
        const auto kit = add("kit", 49.0094, 8.4124, "DE");
        const auto iitb = add("iit-bombay", 19.1334, 72.9133, "IN");

        struct Embed {
            std::size_t a, b;
            std::uint64_t count;
            int first, last;
        };
        const Embed embeds[] = {
            {harvard, mit, 28, 1950, 1996},
            {kit, iitb, 16, 1950, 1996},
            {ustc, microsoft, 153, 1997, 2009},
            {tsinghua, microsoft, 131, 1997, 2009},
        };

        std::vector<PlannedPublication> plan;
        for (std::size_t i = 0; i < opt.size; ++i) {
            const std::size_t m = draw_team_size(rng);
            plan.push_back({rng.year(opt.start_year, opt.end_year), pick_distinct(rng, m, background)});
        }
        for (const auto& e : embeds) {
            for (std::uint64_t k = 0; k < e.count; ++k) plan.push_back({rng.year(e.first, e.last), {e.a, e.b}});
            truth.embedded_pairs.push_back({affs[e.a].id, affs[e.b].id, e.count, e.first, e.last});
        }
        rng.shuffle(plan);
        Writer w(out, affs, truth);
        for (const auto& p : plan) w.emit(p);
        truth.affiliations_used = w.used();
        return truth;
    }

    throw InvalidArgument("unknown fixture profile '" + opt.profile + "'");
}

void write_truth(std::ostream& out, const FixtureTruth& t) {
    json years = json::object();
    for (const auto& [year, y] : t.years) {
        years[std::to_string(year)] = {
            {"publications", y.publications},
            {"single_affiliation", y.single_affiliation},
            {"multi_affiliation", y.multi_affiliation},
            {"domestic", y.domestic},
            {"international", y.international},
            {"unclassifiable", y.unclassifiable},
            {"affiliation_buckets", y.affiliation_buckets},
            {"country_buckets", y.country_buckets},
            {"country_unresolved", y.country_unresolved},
        };
    }
    json pairs = json::array();
    for (const auto& p : t.embedded_pairs) {
        pairs.push_back({{"first", p.first}, {"second", p.second}, {"count", p.count},
                         {"first_year", p.first_year}, {"last_year", p.last_year}});
    }
    json doc = {
        {"schema_version", 1},
        {"profile", t.profile},
        {"seed", t.seed},
        {"publications", t.publications},
        {"affiliations_used", t.affiliations_used},
        {"years", std::move(years)},
        {"embedded_pairs", std::move(pairs)},
        {"multi_share", t.multi_share ? json(*t.multi_share) : json(nullptr)},
        {"exponent", t.exponent ? json(*t.exponent) : json(nullptr)},
    };
    out << doc.dump(2) << '\n';
}

FixtureTruth read_truth(std::istream& in) {
    const json doc = json::parse(in);
    FixtureTruth t;
    t.profile = doc.at("profile").get<std::string>();
    t.seed = doc.at("seed").get<std::uint64_t>();
    t.publications = doc.at("publications").get<std::uint64_t>();
    t.affiliations_used = doc.at("affiliations_used").get<std::uint64_t>();
    for (const auto& [key, y] : doc.at("years").items()) {
        YearTruth yt;
        yt.publications = y.at("publications");
        yt.single_affiliation = y.at("single_affiliation");
        yt.multi_affiliation = y.at("multi_affiliation");
        yt.domestic = y.at("domestic");
        yt.international = y.at("international");
        yt.unclassifiable = y.at("unclassifiable");
        yt.affiliation_buckets = y.at("affiliation_buckets").get<std::array<std::uint64_t, 5>>();
        yt.country_buckets = y.at("country_buckets").get<std::array<std::uint64_t, 5>>();
        yt.country_unresolved = y.at("country_unresolved");
        t.years[std::stoi(key)] = yt;
    }
    for (const auto& p : doc.at("embedded_pairs")) {
        t.embedded_pairs.push_back({p.at("first"), p.at("second"), p.at("count"), p.at("first_year"),
                                    p.at("last_year")});
    }
    if (!doc.at("multi_share").is_null()) t.multi_share = doc.at("multi_share").get<double>();
    if (!doc.at("exponent").is_null()) t.exponent = doc.at("exponent").get<double>();
    return t;
}

}  // namespace collabgeo
