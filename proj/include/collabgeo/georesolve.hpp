#pragma once

#include <filesystem>
#include <initializer_list>
#include <optional>
#include <string>
#include <vector>

#include "collabgeo/corpus.hpp"
#include "collabgeo/geodesy.hpp"

namespace collabgeo {

/// Planar boundary vertex in degrees. Unlike GeoPoint, longitude is kept as
/// given so rings split at the antimeridian can carry both -180 and +180.
struct Vertex {
    double lon = 0.0;
    double lat = 0.0;
    friend bool operator==(const Vertex&, const Vertex&) = default;
};

using Ring = std::vector<Vertex>;

struct BoundingBox {
    double min_lon = 0.0, min_lat = 0.0, max_lon = 0.0, max_lat = 0.0;

    static BoundingBox of(const std::vector<Ring>& rings);
    bool contains(double lon, double lat) const noexcept {
        return lon >= min_lon && lon <= max_lon && lat >= min_lat && lat <= max_lat;
    }
    void extend(const BoundingBox& other) noexcept;
};

/// One polygon: exterior ring plus holes, evaluated with the even-odd rule.
struct BoundaryPolygon {
    std::vector<Ring> rings;
    BoundingBox bbox;
};

struct CountryBoundary {
    CountryCode code;
    std::vector<BoundaryPolygon> polygons;
    BoundingBox bbox;
};

/// Immutable set of country outlines, sorted by country code.
class CountryBoundarySet {
public:
    CountryBoundarySet() = default;

    /// Each element is (code, polygons, each polygon a list of rings).
    /// Rings must be closed with at least four vertices; rings that cross the
    /// antimeridian are split at +/-180. Entries sharing a code are merged.
    /// Throws InvalidInput on an invalid ring.
    struct Feature {
        CountryCode code;
        std::vector<std::vector<Ring>> polygons;
    };
    explicit CountryBoundarySet(std::vector<Feature> features);

    const std::vector<CountryBoundary>& countries() const noexcept { return countries_; }
    std::size_t size() const noexcept { return countries_.size(); }
    bool empty() const noexcept { return countries_.empty(); }

    /// Non-fatal notes from loading (e.g. empty collection).
    const std::vector<std::string>& warnings() const noexcept { return warnings_; }
    void add_warning(std::string w) { warnings_.push_back(std::move(w)); }

private:
    std::vector<CountryBoundary> countries_;
    std::vector<std::string> warnings_;
};

/// Property names probed, in order, for a feature's alpha-2 code.
inline const std::vector<std::string> kDefaultCodeProperties = {
    "iso_a2", "ISO_A2", "iso_3166_1_alpha_2", "cca2", "country_code", "code"};

/// Loads a GeoJSON FeatureCollection of Polygon/MultiPolygon features.
/// Throws LoadError, naming the feature index, for a missing file, malformed
/// geometry, or a feature without a valid alpha-2 code.
CountryBoundarySet load_boundaries(const std::filesystem::path& path,
                                   const std::vector<std::string>& code_properties = kDefaultCodeProperties);

/// Same, from GeoJSON text already in memory.
CountryBoundarySet parse_boundaries(const std::string& geojson,
                                    const std::vector<std::string>& code_properties = kDefaultCodeProperties);

inline constexpr double kDefaultSnapRadiusKm = 25.0;

/// Country containing p. Points on a boundary count as inside; when several
/// countries contain p the lowest code wins. Failing containment, the country
/// with the nearest boundary within snap_radius_km wins (ties: lowest code).
/// nullopt means unresolved.
std::optional<CountryCode> resolve_country(const GeoPoint& p, const CountryBoundarySet& boundaries,
                                           double snap_radius_km = kDefaultSnapRadiusKm);

namespace detail {

/// Even-odd test over the rings of one polygon; boundary points return true.
bool polygon_contains(const BoundaryPolygon& polygon, double lon, double lat);

/// Splits a closed ring that crosses the antimeridian into rings that stay
/// within [-180, 180]. Rings that do not cross are returned unchanged.
std::vector<Ring> split_at_antimeridian(const Ring& ring);

}  // namespace detail

}  // namespace collabgeo
