#include "gallat/snapshot.hpp"

#include <charconv>
#include <fstream>

#include "gallat/errors.hpp"

namespace gallat {

std::int64_t SnapshotGraph::out_degree(std::size_t i) const {
    std::int64_t s = 0;
    for (std::size_t j = 0; j < n; ++j) s += at(i, j);
    return s;
}

std::int64_t SnapshotGraph::in_degree(std::size_t j) const {
    std::int64_t s = 0;
    for (std::size_t i = 0; i < n; ++i) s += at(i, j);
    return s;
}

std::int64_t SnapshotGraph::total() const {
    std::int64_t s = 0;
    for (std::int64_t c : counts) s += c;
    return s;
}

NeighborSets neighborhoods(const SnapshotGraph& g, const GeoMatrix& geo, std::size_t i,
                           double radius_km) {
    if (i >= g.n || g.n != geo.n) {
        throw ContractError("neighborhoods: node " + std::to_string(i) + " out of range for n=" +
                            std::to_string(g.n));
    }
    if (!(radius_km > 0.0)) throw ContractError("neighborhoods: radius must be positive");
    NeighborSets sets;
    for (std::size_t j = 0; j < g.n; ++j) {
        if (g.at(i, j) > 0) sets.forward.push_back(j);
        if (g.at(j, i) > 0) sets.backward.push_back(j);
        if (j != i && geo(i, j) <= radius_km) sets.geo.push_back(j);
    }
    return sets;
}

PreWeights pre_weights(const SnapshotGraph& g, const GeoMatrix& geo, const NeighborSets& sets,
                       std::size_t i, double epsilon) {
    PreWeights pw;
    pw.epsilon = epsilon;

    double out_sum = 0.0;
    for (std::size_t j : sets.forward) out_sum += static_cast<double>(g.at(i, j));
    for (std::size_t j : sets.forward) {
        pw.a[j] = static_cast<double>(g.at(i, j)) / (out_sum + epsilon);
    }

    double in_sum = 0.0;
    for (std::size_t j : sets.backward) in_sum += static_cast<double>(g.at(j, i));
    for (std::size_t j : sets.backward) {
        pw.b[j] = static_cast<double>(g.at(j, i)) / (in_sum + epsilon);
    }

    double inv_sum = 0.0;
    for (std::size_t j : sets.geo) inv_sum += 1.0 / geo(i, j);
    for (std::size_t j : sets.geo) {
        pw.c[j] = (1.0 / geo(i, j)) / inv_sum;
    }
    return pw;
}

std::vector<SnapshotGraph> build_snapshots(const std::vector<TripRecord>& trips,
                                           const GridSpec& grid, std::int64_t slot_len_s,
                                           std::int64_t span_begin, std::int64_t span_end,
                                           BuildReport* report) {
    grid.validate();
    if (slot_len_s <= 0) throw ContractError("build_snapshots: slot length must be positive");
    if (span_end <= span_begin) throw ContractError("build_snapshots: empty time span");
    if ((span_end - span_begin) % slot_len_s != 0) {
        throw ContractError("build_snapshots: slot length must divide the span evenly");
    }
    const auto num_slots = static_cast<std::size_t>((span_end - span_begin) / slot_len_s);
    const std::size_t n = grid.cell_count();

    std::vector<SnapshotGraph> seq;
    seq.reserve(num_slots);
    for (std::size_t t = 0; t < num_slots; ++t) seq.emplace_back(t, n);

    BuildReport rep;
    for (const TripRecord& trip : trips) {
        if (trip.start_time < span_begin || trip.start_time >= span_end) {
            ++rep.dropped_time;
            continue;
        }
        const auto origin = grid.locate(trip.origin_lat, trip.origin_lon);
        const auto dest = grid.locate(trip.dest_lat, trip.dest_lon);
        if (!origin || !dest) {
            ++rep.dropped_bbox;
            continue;
        }
        const auto t = static_cast<std::size_t>((trip.start_time - span_begin) / slot_len_s);
        ++seq[t].at(*origin, *dest);
        ++rep.kept;
    }
    if (report) *report = rep;
    return seq;
}

void write_snapshot_csv(const std::string& path, const std::vector<SnapshotGraph>& seq) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "slot,origin,dest,count\n";
    for (const SnapshotGraph& g : seq) {
        for (std::size_t i = 0; i < g.n; ++i) {
            for (std::size_t j = 0; j < g.n; ++j) {
                const std::int64_t c = g.at(i, j);
                if (c != 0) out << g.slot << ',' << i << ',' << j << ',' << c << '\n';
            }
        }
    }
    if (!out) throw IoError("write failed: " + path);
}

std::vector<SnapshotGraph> read_snapshot_csv(const std::string& path, std::size_t n,
                                             std::size_t num_slots) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    std::string line;
    if (!std::getline(in, line)) throw FormatError(path + ": empty file (row 1)");
    if (line == "slot,origin,dest,count\r") line.pop_back();
    if (line != "slot,origin,dest,count") {
        throw FormatError(path + ": bad header (row 1): " + line);
    }

    std::vector<SnapshotGraph> seq;
    seq.reserve(num_slots);
    for (std::size_t t = 0; t < num_slots; ++t) seq.emplace_back(t, n);

    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::size_t fields[4];
        const char* p = line.data();
        const char* end = p + line.size();
        for (int f = 0; f < 4; ++f) {
            auto [next, ec] = std::from_chars(p, end, fields[f]);
            if (ec != std::errc()) {
                throw FormatError(path + ": bad value (row " + std::to_string(row) + ")");
            }
            p = next;
            if (f < 3) {
                if (p == end || *p != ',') {
                    throw FormatError(path + ": expected 4 columns (row " + std::to_string(row) +
                                      ")");
                }
                ++p;
            }
        }
        const auto [slot, i, j, c] = fields;
        if (slot >= num_slots || i >= n || j >= n) {
            throw FormatError(path + ": index out of range (row " + std::to_string(row) + ")");
        }
        seq[slot].at(i, j) = static_cast<std::int64_t>(c);
    }
    return seq;
}

} // namespace gallat
