#include <cmath>

#include "doctest.h"
#include "gallat/errors.hpp"
#include "gallat/transfer.hpp"
#include "oracles.hpp"

using namespace gallat;
namespace a = gallat::ad;

TEST_CASE("zero weights give the sigmoid midpoint") {
    Rng rng(70);
    const std::size_t n = 5, d_e = 2;
    TransferParams params = TransferParams::init(n, d_e, rng);
    params.demand_w->value.fill(0.0);
    params.demand_b->value.fill(0.0);
    const a::Var rep = a::constant(oracle::random_matrix(n, 4 * d_e, rng));
    const auto [norm, counts] = predict_demand(rep, params, 40.0);
    for (std::size_t i = 0; i < n; ++i) {
        CHECK(norm->value(i, 0) == doctest::Approx(0.5));
        CHECK(counts->value(i, 0) == doctest::Approx(20.0));
    }
}

TEST_CASE("demand stays inside (0, D_max)") {
    Rng rng(71);
    const std::size_t n = 6, d_e = 3;
    const double d_max = 17.0;
    for (int rep = 0; rep < 20; ++rep) {
        const TransferParams params = TransferParams::init(n, d_e, rng);
        const a::Var m = a::constant(oracle::random_matrix(n, 4 * d_e, rng, -10.0, 10.0));
        const auto [norm, counts] = predict_demand(m, params, d_max);
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(counts->value(i, 0) > 0.0);
            CHECK(counts->value(i, 0) < d_max);
        }
    }
}

TEST_CASE("demand head gradients pass finite differences") {
    Rng rng(72);
    const std::size_t n = 4, d_e = 2;
    const TransferParams params = TransferParams::init(n, d_e, rng);
    const a::Var m = a::constant(oracle::random_matrix(n, 4 * d_e, rng));
    const a::Var target = a::constant(oracle::random_matrix(n, 1, rng, 0.0, 1.0));
    auto build = [&] { return a::smooth_l1(predict_demand(m, params, 10.0).first, target); };
    auto f = [&] { return a::scalar_value(build()); };
    a::zero_grad(params.demand_w);
    a::zero_grad(params.demand_b);
    a::backward(build());
    CHECK(oracle::max_grad_rel_err({params.demand_w, params.demand_b}, f, 1e-6) < 1e-4);
}

TEST_CASE("identical representations give a uniform transfer matrix") {
    Rng rng(73);
    const std::size_t n = 5, d_e = 2;
    const TransferParams params = TransferParams::init(n, d_e, rng);
    Matrix rep(n, 4 * d_e);
    const Matrix one_row = oracle::random_matrix(1, 4 * d_e, rng);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < rep.cols(); ++c) rep(i, c) = one_row(0, c);
    }
    const a::Var q = transfer_probs(a::constant(rep), params, 0.2);
    for (std::size_t i = 0; i < q->value.size(); ++i) {
        CHECK(q->value.data()[i] == doctest::Approx(1.0 / n).epsilon(1e-12));
    }
}

TEST_CASE("single node transfers to itself") {
    Rng rng(74);
    const TransferParams params = TransferParams::init(1, 2, rng);
    const a::Var q = transfer_probs(a::constant(oracle::random_matrix(1, 8, rng)), params, 0.2);
    CHECK(q->value(0, 0) == 1.0);
}

TEST_CASE("matches the naive loop implementation") {
    Rng rng(75);
    const std::size_t n = 5, d_e = 2;
    for (int rep = 0; rep < 10; ++rep) {
        const TransferParams params = TransferParams::init(n, d_e, rng);
        const a::Var m = a::constant(oracle::random_matrix(n, 4 * d_e, rng));
        const a::Var fast = transfer_probs(m, params, 0.2);
        const Matrix naive = oracle::naive_transfer_probs(m->value, params.attn_proj->value,
                                                          params.attn_vec->value, 0.2);
        for (std::size_t i = 0; i < naive.size(); ++i) {
            CHECK(std::fabs(fast->value.data()[i] - naive.data()[i]) < 1e-10);
        }
    }
}

TEST_CASE("transfer rows are strictly positive distributions") {
    Rng rng(76);
    const std::size_t n = 6, d_e = 2;
    for (int rep = 0; rep < 20; ++rep) {
        const TransferParams params = TransferParams::init(n, d_e, rng);
        const a::Var m = a::constant(oracle::random_matrix(n, 4 * d_e, rng, -3.0, 3.0));
        const a::Var q = transfer_probs(m, params, 0.2);
        for (std::size_t i = 0; i < n; ++i) {
            double sum = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                CHECK(q->value(i, j) > 0.0);
                sum += q->value(i, j);
            }
            CHECK(std::fabs(sum - 1.0) < 1e-12);
        }
    }
}

TEST_CASE("od reconstruction hand values") {
    const Matrix q{{0.2, 0.8}, {0.5, 0.5}};
    const Matrix od = predict_od({10.0, 4.0}, q);
    CHECK(od(0, 0) == doctest::Approx(2.0));
    CHECK(od(0, 1) == doctest::Approx(8.0));
    CHECK(od(1, 0) == doctest::Approx(2.0));

    const Matrix zeros = predict_od({0.0, 0.0}, q);
    for (std::size_t i = 0; i < zeros.size(); ++i) CHECK(zeros.data()[i] == 0.0);
}

TEST_CASE("od rows conserve demand and scale monotonically") {
    Rng rng(77);
    const std::size_t n = 5, d_e = 2;
    for (int rep = 0; rep < 100; ++rep) {
        const TransferParams params = TransferParams::init(n, d_e, rng);
        const a::Var m = a::constant(oracle::random_matrix(n, 4 * d_e, rng, -2.0, 2.0));
        const auto [norm, counts] = predict_demand(m, params, 25.0);
        const a::Var q = transfer_probs(m, params, 0.2);
        std::vector<double> demand(n);
        for (std::size_t i = 0; i < n; ++i) demand[i] = counts->value(i, 0);
        const Matrix od = predict_od(demand, q->value);
        for (std::size_t i = 0; i < n; ++i) {
            double row = 0.0;
            for (std::size_t j = 0; j < n; ++j) row += od(i, j);
            CHECK(std::fabs(row - demand[i]) < 1e-9);
        }

        // doubling one node's demand doubles its row exactly
        std::vector<double> scaled = demand;
        scaled[2] *= 2.0;
        const Matrix od2 = predict_od(scaled, q->value);
        for (std::size_t j = 0; j < n; ++j) {
            CHECK(od2(2, j) == doctest::Approx(2.0 * od(2, j)).epsilon(1e-15));
        }
    }
}

TEST_CASE("normalized od in the graph follows the same identity") {
    Rng rng(78);
    const std::size_t n = 4, d_e = 2;
    const TransferParams params = TransferParams::init(n, d_e, rng);
    const a::Var m = a::constant(oracle::random_matrix(n, 4 * d_e, rng));
    const auto [norm, counts] = predict_demand(m, params, 5.0);
    const a::Var q = transfer_probs(m, params, 0.2);
    const a::Var g = od_norm(norm, q);
    for (std::size_t i = 0; i < n; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < n; ++j) row += g->value(i, j);
        CHECK(row == doctest::Approx(norm->value(i, 0)).epsilon(1e-12));
    }
}
