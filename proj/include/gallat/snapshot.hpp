#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gallat/grid.hpp"

namespace gallat {

/// One time slot's demand graph: counts(i, j) trips from cell i to cell j.
/// A zero count means no edge.
struct SnapshotGraph {
    std::size_t slot = 0;
    std::size_t n = 0;
    std::vector<std::int64_t> counts; // row-major n x n

    SnapshotGraph() = default;
    SnapshotGraph(std::size_t slot_, std::size_t n_)
        : slot(slot_), n(n_), counts(n_ * n_, 0) {}

    std::int64_t& at(std::size_t i, std::size_t j) { return counts[i * n + j]; }
    std::int64_t at(std::size_t i, std::size_t j) const { return counts[i * n + j]; }

    std::int64_t out_degree(std::size_t i) const;
    std::int64_t in_degree(std::size_t j) const;
    std::int64_t total() const;
};

struct NeighborSets {
    std::vector<std::size_t> forward;  // j with counts(i, j) > 0
    std::vector<std::size_t> backward; // j with counts(j, i) > 0
    std::vector<std::size_t> geo;      // j != i with dist(i, j) <= radius
};

/// Statistics-driven multipliers applied to neighbor features before the
/// attention scores. Keys are exactly the corresponding neighbor sets.
struct PreWeights {
    std::map<std::size_t, double> a; // forward, demand share
    std::map<std::size_t, double> b; // backward, demand share
    std::map<std::size_t, double> c; // geo, inverse-distance share
    double epsilon = 0.0;
};

NeighborSets neighborhoods(const SnapshotGraph& g, const GeoMatrix& geo, std::size_t i,
                           double radius_km);

PreWeights pre_weights(const SnapshotGraph& g, const GeoMatrix& geo, const NeighborSets& sets,
                       std::size_t i, double epsilon);

struct TripRecord {
    std::int64_t start_time = 0; // unix seconds
    double origin_lat = 0.0;
    double origin_lon = 0.0;
    double dest_lat = 0.0;
    double dest_lon = 0.0;
};

struct BuildReport {
    std::size_t kept = 0;
    std::size_t dropped_bbox = 0;
    std::size_t dropped_time = 0;
};

/// Buckets trips into per-slot graphs by trip START time. Trips with
/// either endpoint outside the grid, or starting outside the span, are
/// dropped and counted.
std::vector<SnapshotGraph> build_snapshots(const std::vector<TripRecord>& trips,
                                           const GridSpec& grid, std::int64_t slot_len_s,
                                           std::int64_t span_begin, std::int64_t span_end,
                                           BuildReport* report = nullptr);

// Snapshot CSV: header `slot,origin,dest,count`, nonzero entries only.
// The slot count is not recoverable from the file (trailing empty slots
// would vanish), so readers state it.
void write_snapshot_csv(const std::string& path, const std::vector<SnapshotGraph>& seq);
std::vector<SnapshotGraph> read_snapshot_csv(const std::string& path, std::size_t n,
                                             std::size_t num_slots);

} // namespace gallat
