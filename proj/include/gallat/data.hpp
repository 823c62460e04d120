#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "gallat/rng.hpp"
#include "gallat/snapshot.hpp"

namespace gallat {

// ---- calendar helpers (UTC + fixed offset; no DST) ----

std::int64_t days_from_civil(int year, unsigned month, unsigned day);
std::int64_t civil_to_unix(int year, unsigned month, unsigned day, unsigned hh, unsigned mm,
                           unsigned ss);
/// Day of week with Monday = 0 for a unix timestamp's calendar day.
std::size_t day_of_week_mon0(std::int64_t unix_seconds);
/// "YYYY-MM-DD HH:MM:SS" (seconds optional) to unix seconds; false on
/// malformed input. `utc_offset_s` is the fixed offset the wall-clock
/// text is written in.
bool parse_timestamp(std::string_view text, std::int64_t utc_offset_s, std::int64_t& out);

struct IngestReport {
    std::size_t parsed = 0;
    std::size_t malformed = 0;
    std::size_t first_malformed_row = 0; // 1-based, 0 = none
    std::size_t dropped_bbox = 0;
    std::size_t dropped_time = 0;
};

/// Trip CSV with header `start_time,origin_lat,origin_lon,dest_lat,dest_lon`.
/// Malformed rows are skipped and counted; a missing file or bad header
/// aborts with the offending row number.
std::vector<TripRecord> read_trip_csv(const std::string& path, std::int64_t utc_offset_s,
                                      IngestReport* report = nullptr);

std::vector<SnapshotGraph> ingest_csv(const std::string& path, const GridSpec& grid,
                                      std::int64_t slot_len_s, std::int64_t span_begin,
                                      std::int64_t span_end, std::int64_t utc_offset_s,
                                      IngestReport* report = nullptr);

void write_trip_csv(const std::string& path, const std::vector<TripRecord>& trips,
                    std::int64_t utc_offset_s);

// ---- synthetic mobility generator ----

enum class CellRole { residential, business, transit, nightlife };

char role_code(CellRole r);

struct SynthConfig {
    GridSpec grid{39.80, 116.30, 40.00, 116.50, 5, 5};
    std::size_t days = 42;
    std::size_t slots_per_day = 24; // l
    std::size_t dow0 = 0;           // day 0's day of week
    std::vector<CellRole> roles;    // per cell; empty = default layout
    double weekend_scale = 2.0 / 3.0; // applied to every rate on Sat/Sun
    double rate_scale = 1.0;        // global multiplier on all rates
    std::uint64_t seed = 0;

    std::size_t num_slots() const { return days * slots_per_day; }
};

/// Default layout: interior cells are business, the border residential,
/// with transit cells at the top/bottom edge midpoints and nightlife at
/// the left/right edge midpoints.
std::vector<CellRole> default_roles(const GridSpec& grid);

/// Planted expected trip counts per slot: a time-of-day profile per
/// role pair (morning residential->business, evening reversed, nightlife
/// peaks late) times the weekend multiplier.
class RateModel {
public:
    RateModel(const SynthConfig& cfg);
    double rate(std::size_t origin, std::size_t dest, std::size_t tod, std::size_t dow) const;
    std::size_t n() const { return roles_.size(); }

private:
    std::vector<CellRole> roles_;
    std::size_t slots_per_day_;
    double weekend_scale_;
    double rate_scale_;
};

struct SynthResult {
    std::vector<SnapshotGraph> snapshots;
    SynthConfig config; // with roles filled in
};

/// Draws counts ~ Poisson(rate) with one derived rng stream per slot, so
/// the output is independent of any evaluation order.
SynthResult synth_generate(const SynthConfig& cfg);

/// Ground-truth rates, `slot_of_day,dow,origin,dest,rate` per row.
void write_rates_csv(const std::string& path, const SynthConfig& cfg);

} // namespace gallat
