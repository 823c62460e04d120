#include "gallat/data.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>

#include "gallat/errors.hpp"

namespace gallat {

std::int64_t days_from_civil(int year, unsigned month, unsigned day) {
    year -= month <= 2;
    const std::int64_t era = (year >= 0 ? year : year - 399) / 400;
    const auto yoe = static_cast<unsigned>(year - era * 400);
    const unsigned doy = (153 * (month + (month > 2 ? -3 : 9)) + 2) / 5 + day - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

std::int64_t civil_to_unix(int year, unsigned month, unsigned day, unsigned hh, unsigned mm,
                           unsigned ss) {
    return days_from_civil(year, month, day) * 86400 + hh * 3600 + mm * 60 + ss;
}

std::size_t day_of_week_mon0(std::int64_t unix_seconds) {
    std::int64_t days = unix_seconds / 86400;
    if (unix_seconds < 0 && unix_seconds % 86400 != 0) --days;
    return static_cast<std::size_t>(((days + 3) % 7 + 7) % 7); // 1970-01-01 was a Thursday
}

bool parse_timestamp(std::string_view text, std::int64_t utc_offset_s, std::int64_t& out) {
    int y = 0;
    unsigned mo = 0, d = 0, hh = 0, mi = 0, ss = 0;
    char buf[32];
    if (text.size() >= sizeof buf) return false;
    std::memcpy(buf, text.data(), text.size());
    buf[text.size()] = '\0';
    const int got = std::sscanf(buf, "%d-%u-%u %u:%u:%u", &y, &mo, &d, &hh, &mi, &ss);
    if (got < 5) return false;
    if (mo < 1 || mo > 12 || d < 1 || d > 31 || hh > 23 || mi > 59 || ss > 59) return false;
    out = civil_to_unix(y, mo, d, hh, mi, ss) - utc_offset_s;
    return true;
}

namespace {

bool parse_double(std::string_view s, double& out) {
    if (s.empty()) return false;
    char buf[64];
    if (s.size() >= sizeof buf) return false;
    std::memcpy(buf, s.data(), s.size());
    buf[s.size()] = '\0';
    char* end = nullptr;
    out = std::strtod(buf, &end);
    return end == buf + s.size() && std::isfinite(out);
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

constexpr const char* kTripHeader = "start_time,origin_lat,origin_lon,dest_lat,dest_lon";

} // namespace

std::vector<TripRecord> read_trip_csv(const std::string& path, std::int64_t utc_offset_s,
                                      IngestReport* report) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    std::string line;
    if (!std::getline(in, line)) throw FormatError(path + ": empty file (row 1)");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kTripHeader) {
        throw FormatError(path + ": bad header (row 1), expected `" + kTripHeader + "`");
    }

    IngestReport rep;
    std::vector<TripRecord> trips;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_fields(line);
        TripRecord t;
        const bool ok = fields.size() == 5 &&
                        parse_timestamp(fields[0], utc_offset_s, t.start_time) &&
                        parse_double(fields[1], t.origin_lat) &&
                        parse_double(fields[2], t.origin_lon) &&
                        parse_double(fields[3], t.dest_lat) &&
                        parse_double(fields[4], t.dest_lon);
        if (!ok) {
            ++rep.malformed;
            if (rep.first_malformed_row == 0) rep.first_malformed_row = row;
            continue;
        }
        trips.push_back(t);
        ++rep.parsed;
    }
    if (report) *report = rep;
    return trips;
}

std::vector<SnapshotGraph> ingest_csv(const std::string& path, const GridSpec& grid,
                                      std::int64_t slot_len_s, std::int64_t span_begin,
                                      std::int64_t span_end, std::int64_t utc_offset_s,
                                      IngestReport* report) {
    IngestReport rep;
    const std::vector<TripRecord> trips = read_trip_csv(path, utc_offset_s, &rep);
    BuildReport build;
    auto seq = build_snapshots(trips, grid, slot_len_s, span_begin, span_end, &build);
    rep.dropped_bbox = build.dropped_bbox;
    rep.dropped_time = build.dropped_time;
    if (report) *report = rep;
    return seq;
}

void write_trip_csv(const std::string& path, const std::vector<TripRecord>& trips,
                    std::int64_t utc_offset_s) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << kTripHeader << '\n';
    for (const TripRecord& t : trips) {
        const std::int64_t local = t.start_time + utc_offset_s;
        std::int64_t days = local / 86400;
        std::int64_t sod = local % 86400;
        if (sod < 0) {
            sod += 86400;
            --days;
        }
        // civil date from day number (inverse of days_from_civil)
        std::int64_t z = days + 719468;
        const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
        const auto doe = static_cast<unsigned>(z - era * 146097);
        const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
        const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
        const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
        const unsigned mp = (5 * doy + 2) / 153;
        const unsigned d = doy - (153 * mp + 2) / 5 + 1;
        const unsigned m = mp + (mp < 10 ? 3 : -9);
        char buf[160];
        std::snprintf(buf, sizeof buf, "%04lld-%02u-%02u %02lld:%02lld:%02lld,%.8f,%.8f,%.8f,%.8f",
                      static_cast<long long>(y + (m <= 2)), m, d,
                      static_cast<long long>(sod / 3600), static_cast<long long>(sod / 60 % 60),
                      static_cast<long long>(sod % 60), t.origin_lat, t.origin_lon, t.dest_lat,
                      t.dest_lon);
        out << buf << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

char role_code(CellRole r) {
    switch (r) {
    case CellRole::residential: return 'R';
    case CellRole::business: return 'B';
    case CellRole::transit: return 'T';
    case CellRole::nightlife: return 'N';
    }
    return '?';
}

std::vector<CellRole> default_roles(const GridSpec& grid) {
    const std::size_t rows = grid.n_rows, cols = grid.n_cols;
    std::vector<CellRole> roles(rows * cols, CellRole::residential);
    // business core: up to 2x2 interior cells near the center
    if (rows >= 3 && cols >= 3) {
        const std::size_t r0 = std::max<std::size_t>(1, rows / 2 - 1);
        const std::size_t c0 = std::max<std::size_t>(1, cols / 2 - 1);
        for (std::size_t r = r0; r < std::min(r0 + 2, rows - 1); ++r) {
            for (std::size_t c = c0; c < std::min(c0 + 2, cols - 1); ++c) {
                roles[r * cols + c] = CellRole::business;
            }
        }
    }
    if (rows >= 2 && cols >= 3) {
        roles[cols / 2] = CellRole::transit;                      // top edge midpoint
        roles[(rows - 1) * cols + cols / 2] = CellRole::transit;  // bottom edge midpoint
    }
    if (rows >= 3 && cols >= 2) {
        roles[(rows / 2) * cols] = CellRole::nightlife;           // left edge midpoint
        roles[(rows / 2) * cols + cols - 1] = CellRole::nightlife; // right edge midpoint
    }
    return roles;
}

namespace {

// 1 inside [lo, hi] o'clock, cosine ramp outside, circular in 24h.
// Flat tops keep each flow's rate at its designed value across its whole
// active window instead of only at a single peak hour.
double window(double hour, double lo, double hi, double ramp) {
    double d = 0.0;
    if (hour < lo || hour > hi) {
        const double to_lo = std::min(std::fabs(hour - lo), 24.0 - std::fabs(hour - lo));
        const double to_hi = std::min(std::fabs(hour - hi), 24.0 - std::fabs(hour - hi));
        d = std::min(to_lo, to_hi);
    }
    if (d >= ramp) return 0.0;
    return 0.5 * (1.0 + std::cos(3.14159265358979323846 * d / ramp));
}

} // namespace

RateModel::RateModel(const SynthConfig& cfg)
    : roles_(cfg.roles.empty() ? default_roles(cfg.grid) : cfg.roles),
      slots_per_day_(cfg.slots_per_day),
      weekend_scale_(cfg.weekend_scale),
      rate_scale_(cfg.rate_scale) {
    if (roles_.size() != cfg.grid.cell_count()) {
        throw ContractError("RateModel: roles size does not match the grid");
    }
}

double RateModel::rate(std::size_t origin, std::size_t dest, std::size_t tod,
                       std::size_t dow) const {
    const double hour = static_cast<double>(tod) * 24.0 / static_cast<double>(slots_per_day_);
    // Windows are disjoint at whole hours, so each hour has one active
    // regime and a single shared destination profile across its origins.
    const double am = window(hour, 7.0, 9.0, 0.75);
    const double day = window(hour, 10.0, 16.0, 0.75);
    const double pm = window(hour, 17.0, 19.0, 0.75);
    const double night = window(hour, 20.0, 21.0, 0.75);
    const double late = window(hour, 22.0, 23.0, 0.75);

    const CellRole o = roles_[origin];
    const CellRole d = roles_[dest];
    // Flows sit near one expected trip per pair-slot inside their
    // windows; everything else is a trickle. Real OD matrices are
    // sparse, and hour-scale means far below one are mostly noise.
    double r = 0.0008;

    if (o == CellRole::residential && d == CellRole::business) r += 1.0 * am + 0.5 * day;
    if (o == CellRole::business && d == CellRole::residential) r += 1.0 * pm;
    if (o == CellRole::business && d == CellRole::business) r += 1.0 * day;
    if (o == CellRole::residential && d == CellRole::nightlife) r += 1.0 * night;
    if (o == CellRole::business && d == CellRole::nightlife) r += 1.0 * night;
    if (o == CellRole::nightlife && d == CellRole::residential) r += 1.2 * late;
    if (o == CellRole::nightlife && d == CellRole::nightlife) r += 1.0 * night;
    if (o == CellRole::transit && d == CellRole::business) r += 1.0 * am;
    if (o == CellRole::transit && d == CellRole::residential) r += 1.0 * late;

    const bool weekend = dow >= 5;
    return rate_scale_ * (weekend ? weekend_scale_ * r : r);
}

SynthResult synth_generate(const SynthConfig& cfg) {
    cfg.grid.validate();
    if (cfg.days == 0 || cfg.slots_per_day == 0) {
        throw ContractError("synth_generate: need at least one slot");
    }
    SynthResult result;
    result.config = cfg;
    if (result.config.roles.empty()) result.config.roles = default_roles(cfg.grid);
    const RateModel rates(result.config);
    const std::size_t n = cfg.grid.cell_count();
    const std::size_t num_slots = cfg.num_slots();

    result.snapshots.reserve(num_slots);
    for (std::size_t t = 0; t < num_slots; ++t) {
        const std::size_t tod = t % cfg.slots_per_day;
        const std::size_t dow = (t / cfg.slots_per_day + cfg.dow0) % 7;
        Rng slot_rng(mix_seed(cfg.seed, t));
        SnapshotGraph g(t, n);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                g.at(i, j) = slot_rng.poisson(rates.rate(i, j, tod, dow));
            }
        }
        result.snapshots.push_back(std::move(g));
    }
    return result;
}

void write_rates_csv(const std::string& path, const SynthConfig& cfg) {
    SynthConfig full = cfg;
    if (full.roles.empty()) full.roles = default_roles(cfg.grid);
    const RateModel rates(full);
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "slot_of_day,dow,origin,dest,rate\n";
    const std::size_t n = cfg.grid.cell_count();
    char buf[32];
    for (std::size_t tod = 0; tod < cfg.slots_per_day; ++tod) {
        for (std::size_t dow = 0; dow < 7; ++dow) {
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < n; ++j) {
                    std::snprintf(buf, sizeof buf, "%.10g", rates.rate(i, j, tod, dow));
                    out << tod << ',' << dow << ',' << i << ',' << j << ',' << buf << '\n';
                }
            }
        }
    }
    if (!out) throw IoError("write failed: " + path);
}

} // namespace gallat
