#include <cmath>
#include <cstdio>
#include <fstream>

#include "doctest.h"
#include "gallat/data.hpp"
#include "gallat/errors.hpp"

using namespace gallat;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name, const std::string& content) : path(name) {
        std::ofstream out(path);
        out << content;
    }
    ~TempFile() { std::remove(path.c_str()); }
};

const GridSpec kGrid{0.0, 0.0, 0.4, 0.2, 4, 2};

} // namespace

TEST_CASE("calendar helpers") {
    CHECK(days_from_civil(1970, 1, 1) == 0);
    CHECK(day_of_week_mon0(0) == 3);                              // 1970-01-01: Thursday
    CHECK(day_of_week_mon0(civil_to_unix(2026, 8, 8, 12, 0, 0)) == 5); // a Saturday
    std::int64_t ts = 0;
    REQUIRE(parse_timestamp("2019-06-01 08:12:00", 0, ts));
    CHECK(ts == civil_to_unix(2019, 6, 1, 8, 12, 0));
    REQUIRE(parse_timestamp("2019-06-01 08:12", 3600, ts)); // seconds optional, +1h offset
    CHECK(ts == civil_to_unix(2019, 6, 1, 8, 12, 0) - 3600);
    CHECK_FALSE(parse_timestamp("junk", 0, ts));
    CHECK_FALSE(parse_timestamp("2019-13-01 08:12:00", 0, ts));
}

TEST_CASE("ingest: empty body gives all-zero snapshots and no drops") {
    const TempFile file("trips_empty.csv", "start_time,origin_lat,origin_lon,dest_lat,dest_lon\n");
    IngestReport rep;
    const auto seq = ingest_csv(file.path, kGrid, 3600, 0, 86400, 0, &rep);
    REQUIRE(seq.size() == 24);
    for (const auto& g : seq) CHECK(g.total() == 0);
    CHECK(rep.parsed == 0);
    CHECK(rep.malformed == 0);
    CHECK(rep.dropped_bbox == 0);
}

TEST_CASE("ingest: malformed rows are skipped and counted") {
    std::string body = "start_time,origin_lat,origin_lon,dest_lat,dest_lon\n";
    for (int i = 0; i < 5; ++i) {
        body += "1970-01-01 03:00:00,0.05,0.05,0.35,0.15\n";
    }
    body += "1970-01-01 26:00:00,0.05,0.05,0.35,0.15\n"; // bad hour
    for (int i = 0; i < 4; ++i) {
        body += "1970-01-01 04:30:00,0.15,0.05,0.05,0.15\n";
    }
    const TempFile file("trips_malformed.csv", body);
    IngestReport rep;
    const auto seq = ingest_csv(file.path, kGrid, 3600, 0, 86400, 0, &rep);
    CHECK(rep.parsed == 9);
    CHECK(rep.malformed == 1);
    CHECK(rep.first_malformed_row == 7);
    CHECK(seq[3].at(0, 7) == 5);
    CHECK(seq[4].at(2, 1) == 4);

    std::int64_t total = 0;
    for (const auto& g : seq) total += g.total();
    CHECK(static_cast<std::size_t>(total) + rep.dropped_bbox + rep.dropped_time == rep.parsed);
}

TEST_CASE("ingest: missing file and bad header") {
    CHECK_THROWS_AS(ingest_csv("no_such_file.csv", kGrid, 3600, 0, 86400, 0, nullptr), IoError);
    const TempFile file("trips_badheader.csv", "time,lat,lon\n");
    CHECK_THROWS_WITH_AS(ingest_csv(file.path, kGrid, 3600, 0, 86400, 0, nullptr),
                         doctest::Contains("row 1"), FormatError);
}

TEST_CASE("trip csv round-trips through write and read") {
    std::vector<TripRecord> trips;
    TripRecord t;
    t.start_time = civil_to_unix(2019, 6, 3, 14, 30, 5);
    t.origin_lat = 0.05;
    t.origin_lon = 0.06;
    t.dest_lat = 0.35;
    t.dest_lon = 0.15;
    trips.push_back(t);
    t.start_time += 7200;
    trips.push_back(t);
    const std::string path = "trips_roundtrip.csv";
    write_trip_csv(path, trips, 0);
    IngestReport rep;
    const auto back = read_trip_csv(path, 0, &rep);
    REQUIRE(back.size() == 2);
    CHECK(rep.malformed == 0);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(back[i].start_time == trips[i].start_time);
        CHECK(back[i].origin_lat == doctest::Approx(trips[i].origin_lat).epsilon(1e-8));
    }
    std::remove(path.c_str());
}

TEST_CASE("synthetic generator: deterministic, right shape, nonnegative") {
    SynthConfig cfg;
    cfg.days = 3;
    cfg.seed = 7;
    const SynthResult a = synth_generate(cfg);
    const SynthResult b = synth_generate(cfg);
    REQUIRE(a.snapshots.size() == cfg.num_slots());
    for (std::size_t t = 0; t < a.snapshots.size(); ++t) {
        CHECK(a.snapshots[t].counts == b.snapshots[t].counts);
        for (std::int64_t c : a.snapshots[t].counts) CHECK(c >= 0);
    }
    SynthConfig other = cfg;
    other.seed = 8;
    const SynthResult c = synth_generate(other);
    bool any_diff = false;
    for (std::size_t t = 0; t < a.snapshots.size(); ++t) {
        any_diff = any_diff || a.snapshots[t].counts != c.snapshots[t].counts;
    }
    CHECK(any_diff);
}

TEST_CASE("synthetic generator: zero rates give empty graphs") {
    SynthConfig cfg;
    cfg.days = 2;
    cfg.rate_scale = 0.0;
    const SynthResult r = synth_generate(cfg);
    for (const auto& g : r.snapshots) CHECK(g.total() == 0);
}

TEST_CASE("empirical slot means recover the planted rates") {
    SynthConfig cfg;
    cfg.days = 42;
    cfg.seed = 123;
    const SynthResult r = synth_generate(cfg);
    const RateModel rates(r.config);

    // Morning commute pair: residential corner (0) into the business
    // block (6); tod 8 on weekdays.
    auto check_pair = [&](std::size_t i, std::size_t j, std::size_t tod) {
        double sum = 0.0;
        std::size_t days = 0;
        for (std::size_t day = 0; day < cfg.days; ++day) {
            const std::size_t dow = day % 7;
            if (dow >= 5) continue;
            sum += static_cast<double>(r.snapshots[day * 24 + tod].at(i, j));
            ++days;
        }
        const double mean = sum / static_cast<double>(days);
        const double rate = rates.rate(i, j, tod, 0);
        const double se = std::sqrt(rate / static_cast<double>(days));
        CHECK(std::fabs(mean - rate) <= 3.0 * se + 1e-12);
    };
    check_pair(0, 6, 8);   // residential -> business, morning peak
    check_pair(6, 0, 18);  // business -> residential, evening peak
    check_pair(6, 7, 13);  // business -> business, midday
}

TEST_CASE("same time-of-day marginals are periodic in expectation") {
    SynthConfig cfg;
    const RateModel rates(SynthConfig{});
    // weekday rates depend only on time of day, so dow 0 and dow 3 agree
    for (std::size_t tod : {3u, 8u, 13u, 22u}) {
        CHECK(rates.rate(0, 6, tod, 0) == doctest::Approx(rates.rate(0, 6, tod, 3)));
        CHECK(rates.rate(0, 6, tod, 5) == doctest::Approx(cfg.weekend_scale *
                                                          rates.rate(0, 6, tod, 0)));
    }
}

TEST_CASE("default roles tile the grid as documented") {
    const GridSpec grid{0.0, 0.0, 0.5, 0.5, 5, 5};
    const auto roles = default_roles(grid);
    CHECK(roles[12] == CellRole::business);   // center
    CHECK(roles[0] == CellRole::residential); // corner
    CHECK(roles[2] == CellRole::transit);     // top mid
    CHECK(roles[22] == CellRole::transit);    // bottom mid
    CHECK(roles[10] == CellRole::nightlife);  // left mid
    CHECK(roles[14] == CellRole::nightlife);  // right mid
}

TEST_CASE("rates csv exports the planted tensor") {
    SynthConfig cfg;
    cfg.days = 1;
    const std::string path = "rates_test.csv";
    write_rates_csv(path, cfg);
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "slot_of_day,dow,origin,dest,rate");
    std::size_t rows = 0;
    std::string line;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == cfg.slots_per_day * 7 * 25 * 25);
    in.close();
    std::remove(path.c_str());
}
