#include "gallat/grid.hpp"

#include <cmath>

#include "gallat/errors.hpp"

namespace gallat {

namespace {
constexpr double kEarthRadiusKm = 6371.0088;
constexpr double kDegToRad = 3.14159265358979323846 / 180.0;
} // namespace

void GridSpec::validate() const {
    if (n_rows == 0 || n_cols == 0) {
        throw ContractError("GridSpec: grid must have at least one cell");
    }
    if (!(max_lat > min_lat) || !(max_lon > min_lon)) {
        throw ContractError("GridSpec: degenerate bounding box");
    }
}

double GridSpec::center_lat(std::size_t cell) const {
    const std::size_t r = cell / n_cols;
    return min_lat + (max_lat - min_lat) * (static_cast<double>(r) + 0.5) /
                         static_cast<double>(n_rows);
}

double GridSpec::center_lon(std::size_t cell) const {
    const std::size_t c = cell % n_cols;
    return min_lon + (max_lon - min_lon) * (static_cast<double>(c) + 0.5) /
                         static_cast<double>(n_cols);
}

std::optional<std::size_t> GridSpec::locate(double lat, double lon) const {
    if (lat < min_lat || lat > max_lat || lon < min_lon || lon > max_lon) {
        return std::nullopt;
    }
    auto clamp_idx = [](double frac, std::size_t n) {
        auto idx = static_cast<long>(frac * static_cast<double>(n));
        if (idx < 0) idx = 0;
        if (idx >= static_cast<long>(n)) idx = static_cast<long>(n) - 1;
        return static_cast<std::size_t>(idx);
    };
    const std::size_t r = clamp_idx((lat - min_lat) / (max_lat - min_lat), n_rows);
    const std::size_t c = clamp_idx((lon - min_lon) / (max_lon - min_lon), n_cols);
    return r * n_cols + c;
}

double haversine_km(double lat1, double lon1, double lat2, double lon2) {
    const double phi1 = lat1 * kDegToRad;
    const double phi2 = lat2 * kDegToRad;
    const double dphi = (lat2 - lat1) * kDegToRad;
    const double dlam = (lon2 - lon1) * kDegToRad;
    const double a = std::sin(dphi / 2) * std::sin(dphi / 2) +
                     std::cos(phi1) * std::cos(phi2) * std::sin(dlam / 2) * std::sin(dlam / 2);
    return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(a)));
}

GeoMatrix geo_matrix(const GridSpec& grid) {
    grid.validate();
    const std::size_t n = grid.cell_count();
    GeoMatrix geo;
    geo.n = n;
    geo.dist = Matrix::zeros(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double d = haversine_km(grid.center_lat(i), grid.center_lon(i),
                                          grid.center_lat(j), grid.center_lon(j));
            geo.dist(i, j) = d;
            geo.dist(j, i) = d;
        }
    }
    return geo;
}

double cell_diagonal_km(const GridSpec& grid) {
    grid.validate();
    const double dlat = (grid.max_lat - grid.min_lat) / static_cast<double>(grid.n_rows);
    const double dlon = (grid.max_lon - grid.min_lon) / static_cast<double>(grid.n_cols);
    const double lat0 = grid.min_lat + 0.5 * dlat;
    const double lon0 = grid.min_lon + 0.5 * dlon;
    return haversine_km(lat0, lon0, lat0 + dlat, lon0 + dlon);
}

double default_geo_radius_km(const GridSpec& grid) {
    return 1.05 * cell_diagonal_km(grid);
}

} // namespace gallat
