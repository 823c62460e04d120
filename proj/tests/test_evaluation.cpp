#include <algorithm>

#include "doctest.h"
#include "gallat/errors.hpp"
#include "gallat/evaluation.hpp"
#include "oracles.hpp"

using namespace gallat;

TEST_CASE("metric hand values") {
    const std::vector<double> pred{3.0};
    const std::vector<double> truth{1.0};
    const auto m = metrics(pred, truth, 0);
    REQUIRE(m.has_value());
    CHECK(m->mape == doctest::Approx(1.0)); // |3-1| / (1+1)
    CHECK(m->mae == doctest::Approx(2.0));
    CHECK(m->count == 1);
}

TEST_CASE("perfect predictions score zero at every threshold") {
    const std::vector<double> v{1.0, 4.0, 6.0, 9.0};
    for (int k : kThresholds) {
        const auto m = metrics(v, v, k);
        REQUIRE(m.has_value());
        CHECK(m->mape == 0.0);
        CHECK(m->mae == 0.0);
    }
}

TEST_CASE("threshold filter is strict") {
    const std::vector<double> pred{0.0, 0.0, 0.0};
    const std::vector<double> truth{1.0, 4.0, 6.0};
    const auto m3 = metrics(pred, truth, 3);
    REQUIRE(m3.has_value());
    CHECK(m3->count == 2); // 4 and 6 only

    const std::vector<double> t2{1.0, 3.0, 4.0};
    const auto strict = metrics(pred, t2, 3);
    REQUIRE(strict.has_value());
    CHECK(strict->count == 1); // 3 itself is excluded
}

TEST_CASE("no qualifying instance yields an explicit empty, not zero") {
    const std::vector<double> pred{1.0, 2.0};
    const std::vector<double> truth{0.0, 3.0};
    CHECK_FALSE(metrics(pred, truth, 5).has_value());
}

TEST_CASE("metrics reject mismatched lengths") {
    const std::vector<double> a{1.0};
    const std::vector<double> b{1.0, 2.0};
    CHECK_THROWS_AS(metrics(a, b, 0), ContractError);
}

TEST_CASE("metrics are permutation invariant and counts shrink with k") {
    Rng rng(80);
    std::vector<double> pred(50), truth(50);
    for (std::size_t i = 0; i < 50; ++i) {
        pred[i] = rng.uniform(0.0, 8.0);
        truth[i] = static_cast<double>(rng.below(9));
    }
    std::vector<std::size_t> order(50);
    for (std::size_t i = 0; i < 50; ++i) order[i] = i;
    rng.shuffle(order);
    std::vector<double> pred2(50), truth2(50);
    for (std::size_t i = 0; i < 50; ++i) {
        pred2[i] = pred[order[i]];
        truth2[i] = truth[order[i]];
    }
    std::size_t prev_count = 51;
    for (int k : kThresholds) {
        const auto base = metrics(pred, truth, k);
        const auto moved = metrics(pred2, truth2, k);
        REQUIRE(base.has_value() == moved.has_value());
        if (base) {
            CHECK(base->mape == doctest::Approx(moved->mape).epsilon(1e-12));
            CHECK(base->mae == doctest::Approx(moved->mae).epsilon(1e-12));
            CHECK(base->count == moved->count);
            CHECK(base->count <= prev_count);
            prev_count = base->count;
        }
    }
}

TEST_CASE("accumulator agrees with the one-shot metric") {
    Rng rng(81);
    std::vector<double> pred(40), truth(40);
    for (std::size_t i = 0; i < 40; ++i) {
        pred[i] = rng.uniform(0.0, 10.0);
        truth[i] = static_cast<double>(rng.below(8));
    }
    MetricAccumulator acc;
    acc.add_all(pred, truth);
    for (int k : kThresholds) {
        const auto direct = metrics(pred, truth, k);
        const auto streamed = acc.at(k);
        REQUIRE(direct.has_value() == streamed.has_value());
        if (direct) {
            CHECK(direct->mape == doctest::Approx(streamed->mape).epsilon(1e-12));
            CHECK(direct->mae == doctest::Approx(streamed->mae).epsilon(1e-12));
        }
    }
}

TEST_CASE("history average over matching slots") {
    // l = 4 slots/day; dow0 = 0. Slot 2 of day 0 and slot 2 of day 7
    // share time-of-day and weekday.
    std::vector<SnapshotGraph> seq;
    for (std::size_t t = 0; t < 60; ++t) seq.emplace_back(t, 2);
    seq[2].at(0, 1) = 2;
    seq[2 + 28].at(0, 1) = 4;

    const std::size_t target = 2 + 56; // same tod+dow, two matches before history_end
    const Matrix od = ha_baseline_od(seq, 58, target, 4, 0);
    CHECK(od(0, 1) == doctest::Approx(3.0));
    const auto demand = ha_baseline_demand(seq, 58, target, 4, 0);
    CHECK(demand[0] == doctest::Approx(3.0));

    // with only one match the mean is that slot exactly
    const Matrix single = ha_baseline_od(seq, 20, target, 4, 0);
    CHECK(single(0, 1) == doctest::Approx(2.0));

    // swapping the contents of the two matching slots leaves the mean alone
    std::vector<SnapshotGraph> swapped = seq;
    std::swap(swapped[2], swapped[2 + 28]);
    swapped[2].slot = 2;
    swapped[2 + 28].slot = 2 + 28;
    const Matrix od2 = ha_baseline_od(swapped, 58, target, 4, 0);
    CHECK(od2(0, 1) == doctest::Approx(od(0, 1)));
}

TEST_CASE("history average needs at least one match") {
    std::vector<SnapshotGraph> seq;
    for (std::size_t t = 0; t < 60; ++t) seq.emplace_back(t, 2);
    CHECK_THROWS_AS(ha_baseline_od(seq, 2, 58, 4, 0), InsufficientHistoryError);
}

TEST_CASE("chronological split follows the 14-day / 10% rule") {
    const SplitSpec s = split(28 * 24, 24);
    CHECK(s.total - s.val_end == 336);
    CHECK(s.val_end - s.train_end == 33); // floor(336 / 10)
    CHECK(s.train_end == 303);

    const SplitSpec tiny = split(80, 4); // 20 days of 4 slots
    CHECK(tiny.total - tiny.val_end == 56);
    CHECK(tiny.val_end - tiny.train_end == 2);
    CHECK(tiny.train_end == 22);

    CHECK_THROWS_AS(split(14 * 24, 24), ContractError);
    CHECK_THROWS_AS(split(100, 24), ContractError);
}
