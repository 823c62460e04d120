#pragma once

#include <cstddef>
#include <optional>

#include "gallat/matrix.hpp"

namespace gallat {

/// Rectangular bounding box evenly divided into n_rows x n_cols cells.
/// Cells are numbered row-major; cell (r, c) has index r * n_cols + c.
struct GridSpec {
    double min_lat = 0.0;
    double min_lon = 0.0;
    double max_lat = 0.0;
    double max_lon = 0.0;
    std::size_t n_rows = 0;
    std::size_t n_cols = 0;

    std::size_t cell_count() const { return n_rows * n_cols; }
    void validate() const;

    double center_lat(std::size_t cell) const;
    double center_lon(std::size_t cell) const;

    /// Cell containing (lat, lon), or nullopt when outside the box.
    /// Points on the max edge fold into the last cell.
    std::optional<std::size_t> locate(double lat, double lon) const;
};

/// Pairwise center-to-center distances in km. Symmetric, zero diagonal.
struct GeoMatrix {
    std::size_t n = 0;
    Matrix dist;

    double operator()(std::size_t i, std::size_t j) const { return dist(i, j); }
};

double haversine_km(double lat1, double lon1, double lat2, double lon2);

GeoMatrix geo_matrix(const GridSpec& grid);

/// Distance between the centers of two diagonally adjacent cells. The
/// default geographic-neighborhood radius is 1.05x this value, which on
/// a uniform grid selects the 8 surrounding cells.
double cell_diagonal_km(const GridSpec& grid);

double default_geo_radius_km(const GridSpec& grid);

} // namespace gallat
