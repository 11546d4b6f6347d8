#include "collabgeo/georesolve.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "collabgeo/error.hpp"

namespace collabgeo {

namespace {

constexpr double kOnEdgeTolerance = 1e-12;
constexpr double kKmPerDegree = kMeanEarthRadiusKm * std::numbers::pi / 180.0;

void validate_ring(const Ring& ring) {
    if (ring.size() < 4) throw InvalidInput("ring has fewer than 4 vertices");
    if (ring.front() != ring.back()) throw InvalidInput("ring is not closed");
    for (const auto& v : ring) {
        if (!std::isfinite(v.lon) || !std::isfinite(v.lat) || std::fabs(v.lat) > 90.0 ||
            std::fabs(v.lon) > 540.0) {
            throw InvalidInput("ring vertex out of range");
        }
    }
}

bool crosses_antimeridian(const Ring& ring) {
    for (std::size_t i = 1; i < ring.size(); ++i) {
        if (std::fabs(ring[i].lon - ring[i - 1].lon) > 180.0) return true;
    }
    return false;
}

// Sutherland-Hodgman against a vertical half-plane. keep_below selects
// lon <= bound, otherwise lon >= bound. Input and output are open rings.
std::vector<Vertex> clip(const std::vector<Vertex>& poly, double bound, bool keep_below) {
    std::vector<Vertex> out;
    if (poly.empty()) return out;
    auto inside = [&](const Vertex& v) { return keep_below ? v.lon <= bound : v.lon >= bound; };
    auto cross = [&](const Vertex& a, const Vertex& b) {
        const double t = (bound - a.lon) / (b.lon - a.lon);
        return Vertex{bound, a.lat + t * (b.lat - a.lat)};
    };
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Vertex& cur = poly[i];
        const Vertex& prev = poly[(i + poly.size() - 1) % poly.size()];
        const bool ci = inside(cur), pi = inside(prev);
        if (ci) {
            if (!pi) out.push_back(cross(prev, cur));
            out.push_back(cur);
        } else if (pi) {
            out.push_back(cross(prev, cur));
        }
    }
    return out;
}

double signed_area(const Ring& r) {
    double s = 0;
    for (std::size_t i = 1; i < r.size(); ++i) s += r[i - 1].lon * r[i].lat - r[i].lon * r[i - 1].lat;
    return s / 2;
}

bool on_segment(const Vertex& a, const Vertex& b, double lon, double lat) {
    const double cross = (b.lon - a.lon) * (lat - a.lat) - (b.lat - a.lat) * (lon - a.lon);
    const double len = std::hypot(b.lon - a.lon, b.lat - a.lat);
    if (std::fabs(cross) > kOnEdgeTolerance * std::max(1.0, len)) return false;
    return lon >= std::min(a.lon, b.lon) - kOnEdgeTolerance &&
           lon <= std::max(a.lon, b.lon) + kOnEdgeTolerance &&
           lat >= std::min(a.lat, b.lat) - kOnEdgeTolerance &&
           lat <= std::max(a.lat, b.lat) + kOnEdgeTolerance;
}

// Distance in km from p to segment ab, in an equirectangular frame centered on p.
double segment_distance_km(const GeoPoint& p, const Vertex& a, const Vertex& b) {
    const double k = std::cos(p.lat() * std::numbers::pi / 180.0);
    const double ax = std::remainder(a.lon - p.lon(), 360.0) * k * kKmPerDegree;
    const double ay = (a.lat - p.lat()) * kKmPerDegree;
    double bx = std::remainder(b.lon - p.lon(), 360.0) * k * kKmPerDegree;
    const double by = (b.lat - p.lat()) * kKmPerDegree;
    // keep the segment contiguous when it straddles the wrap point
    const double span = 360.0 * k * kKmPerDegree;
    if (bx - ax > span / 2) bx -= span;
    else if (ax - bx > span / 2) bx += span;
    const double dx = bx - ax, dy = by - ay;
    const double len2 = dx * dx + dy * dy;
    double t = len2 > 0 ? -(ax * dx + ay * dy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return std::hypot(ax + t * dx, ay + t * dy);
}

bool near_box(const BoundingBox& box, const GeoPoint& p, double radius_km) {
    const double dlat = radius_km / kKmPerDegree;
    if (p.lat() < box.min_lat - dlat || p.lat() > box.max_lat + dlat) return false;
    const double cos_lat = std::cos(std::min(89.0, std::fabs(p.lat()) + dlat) * std::numbers::pi / 180.0);
    const double dlon = radius_km / (kKmPerDegree * cos_lat);
    if (dlon >= 180.0) return true;
    for (const double shift : {0.0, 360.0, -360.0}) {
        const double lon = p.lon() + shift;
        if (lon >= box.min_lon - dlon && lon <= box.max_lon + dlon) return true;
    }
    return false;
}

}  // namespace

BoundingBox BoundingBox::of(const std::vector<Ring>& rings) {
    BoundingBox b{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
                  -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (const auto& r : rings) {
        for (const auto& v : r) {
            b.min_lon = std::min(b.min_lon, v.lon);
            b.max_lon = std::max(b.max_lon, v.lon);
            b.min_lat = std::min(b.min_lat, v.lat);
            b.max_lat = std::max(b.max_lat, v.lat);
        }
    }
    return b;
}

void BoundingBox::extend(const BoundingBox& o) noexcept {
    min_lon = std::min(min_lon, o.min_lon);
    max_lon = std::max(max_lon, o.max_lon);
    min_lat = std::min(min_lat, o.min_lat);
    max_lat = std::max(max_lat, o.max_lat);
}

namespace detail {

std::vector<Ring> split_at_antimeridian(const Ring& ring) {
    if (!crosses_antimeridian(ring)) return {ring};

    // Unwrap so consecutive vertices never jump by more than 180 degrees.
    std::vector<Vertex> open;
    open.reserve(ring.size() + 2);
    open.push_back(ring.front());
    for (std::size_t i = 1; i + 1 < ring.size(); ++i) {
        Vertex v = ring[i];
        v.lon = open.back().lon + std::remainder(v.lon - open.back().lon, 360.0);
        open.push_back(v);
    }
    const double closing = open.back().lon + std::remainder(ring.front().lon - open.back().lon, 360.0);
    if (std::fabs(closing - open.front().lon) > 180.0) {
        // The ring winds around a pole; close it along that pole.
        double mean_lat = 0;
        for (const auto& v : open) mean_lat += v.lat;
        const double pole = mean_lat >= 0 ? 90.0 : -90.0;
        open.push_back({closing, pole});
        open.push_back({open.front().lon, pole});
    }

    std::vector<Ring> out;
    for (const double shift : {-720.0, -360.0, 0.0, 360.0, 720.0}) {
        std::vector<Vertex> shifted = open;
        for (auto& v : shifted) v.lon += shift;
        auto piece = clip(clip(shifted, 180.0, true), -180.0, false);
        if (piece.size() < 3) continue;
        Ring r(piece.begin(), piece.end());
        r.push_back(r.front());
        if (std::fabs(signed_area(r)) <= 1e-12) continue;
        out.push_back(std::move(r));
    }
    return out;
}

bool polygon_contains(const BoundaryPolygon& polygon, double lon, double lat) {
    if (!polygon.bbox.contains(lon, lat)) return false;
    bool inside = false;
    for (const auto& ring : polygon.rings) {
        for (std::size_t i = 1; i < ring.size(); ++i) {
            const Vertex& a = ring[i - 1];
            const Vertex& b = ring[i];
            if (on_segment(a, b, lon, lat)) return true;
            if ((a.lat > lat) != (b.lat > lat)) {
                const double x = a.lon + (lat - a.lat) / (b.lat - a.lat) * (b.lon - a.lon);
                if (lon < x) inside = !inside;
            }
        }
    }
    return inside;
}

}  // namespace detail

CountryBoundarySet::CountryBoundarySet(std::vector<Feature> features) {
    std::map<CountryCode, CountryBoundary> by_code;
    for (auto& f : features) {
        auto [it, inserted] = by_code.try_emplace(f.code);
        CountryBoundary& country = it->second;
        if (inserted) country.code = f.code;
        for (auto& rings : f.polygons) {
            if (rings.empty()) throw InvalidInput("polygon without rings");
            for (const auto& r : rings) validate_ring(r);
            // Split every ring; pieces of an exterior and its holes stay in one
            // even-odd polygon, which remains correct after clipping.
            BoundaryPolygon poly;
            for (const auto& r : rings) {
                for (auto& piece : detail::split_at_antimeridian(r)) poly.rings.push_back(std::move(piece));
            }
            if (poly.rings.empty()) continue;
            poly.bbox = BoundingBox::of(poly.rings);
            if (country.polygons.empty()) country.bbox = poly.bbox;
            else country.bbox.extend(poly.bbox);
            country.polygons.push_back(std::move(poly));
        }
    }
    for (auto& [code, country] : by_code) {
        if (!country.polygons.empty()) countries_.push_back(std::move(country));
    }
}

namespace {

Ring ring_from_json(const nlohmann::json& coords) {
    if (!coords.is_array()) throw InvalidInput("ring is not an array");
    Ring ring;
    ring.reserve(coords.size());
    for (const auto& pos : coords) {
        if (!pos.is_array() || pos.size() < 2 || !pos[0].is_number() || !pos[1].is_number()) {
            throw InvalidInput("position is not [lon, lat]");
        }
        ring.push_back({pos[0].get<double>(), pos[1].get<double>()});
    }
    return ring;
}

std::vector<Ring> polygon_from_json(const nlohmann::json& coords) {
    if (!coords.is_array() || coords.empty()) throw InvalidInput("polygon has no rings");
    std::vector<Ring> rings;
    for (const auto& r : coords) rings.push_back(ring_from_json(r));
    return rings;
}

}  // namespace

CountryBoundarySet parse_boundaries(const std::string& text,
                                    const std::vector<std::string>& code_properties) {
    using nlohmann::json;
    json doc = json::parse(text, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) throw LoadError("boundary file is not valid JSON");
    const auto feats = doc.find("features");
    if (doc.value("type", "") != "FeatureCollection" || feats == doc.end() || !feats->is_array()) {
        throw LoadError("boundary file is not a FeatureCollection");
    }

    std::vector<CountryBoundarySet::Feature> features;
    for (std::size_t idx = 0; idx < feats->size(); ++idx) {
        const json& f = (*feats)[idx];
        const std::string where = "feature " + std::to_string(idx) + ": ";
        if (!f.is_object()) throw LoadError(where + "not an object");

        std::optional<CountryCode> code;
        if (const auto props = f.find("properties"); props != f.end() && props->is_object()) {
            for (const auto& key : code_properties) {
                const auto v = props->find(key);
                if (v != props->end() && v->is_string()) {
                    code = CountryCode::parse(v->get<std::string>());
                    if (code) break;
                }
            }
        }
        if (!code) throw LoadError(where + "missing or invalid country code");

        const auto geom = f.find("geometry");
        if (geom == f.end() || !geom->is_object()) throw LoadError(where + "missing geometry");
        const std::string type = geom->value("type", "");
        const auto coords = geom->find("coordinates");
        if (coords == geom->end()) throw LoadError(where + "geometry without coordinates");

        CountryBoundarySet::Feature feature{*code, {}};
        try {
            if (type == "Polygon") {
                feature.polygons.push_back(polygon_from_json(*coords));
            } else if (type == "MultiPolygon") {
                if (!coords->is_array()) throw InvalidInput("multipolygon is not an array");
                for (const auto& p : *coords) feature.polygons.push_back(polygon_from_json(p));
            } else {
                throw InvalidInput("unsupported geometry type '" + type + "'");
            }
            for (const auto& poly : feature.polygons) {
                for (const auto& r : poly) validate_ring(r);
            }
        } catch (const InvalidInput& e) {
            throw LoadError(where + e.what());
        }
        features.push_back(std::move(feature));
    }

    CountryBoundarySet set(std::move(features));
    if (set.empty()) set.add_warning("boundary file contains no features");
    return set;
}

CountryBoundarySet load_boundaries(const std::filesystem::path& path,
                                   const std::vector<std::string>& code_properties) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LoadError("cannot open boundary file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_boundaries(buf.str(), code_properties);
}

std::optional<CountryCode> resolve_country(const GeoPoint& p, const CountryBoundarySet& boundaries,
                                           double snap_radius_km) {
    // countries() is sorted by code, so the first hit is the lowest code.
    for (const auto& c : boundaries.countries()) {
        if (!c.bbox.contains(p.lon(), p.lat())) continue;
        for (const auto& poly : c.polygons) {
            if (detail::polygon_contains(poly, p.lon(), p.lat())) return c.code;
        }
    }
    if (!(snap_radius_km > 0)) return std::nullopt;

    std::optional<CountryCode> best;
    double best_km = snap_radius_km;
    for (const auto& c : boundaries.countries()) {
        if (!near_box(c.bbox, p, snap_radius_km)) continue;
        for (const auto& poly : c.polygons) {
            if (!near_box(poly.bbox, p, snap_radius_km)) continue;
            for (const auto& ring : poly.rings) {
                for (std::size_t i = 1; i < ring.size(); ++i) {
                    const double d = segment_distance_km(p, ring[i - 1], ring[i]);
                    if (d < best_km || (d == best_km && !best)) {
                        best_km = d;
                        best = c.code;
                    }
                }
            }
        }
    }
    return best;
}

}  // namespace collabgeo
