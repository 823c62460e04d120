#include <cmath>

#include "doctest.h"
#include "gallat/errors.hpp"
#include "gallat/spatial.hpp"
#include "oracles.hpp"

using namespace gallat;
namespace a = gallat::ad;

namespace {

SnapshotGraph random_snapshot(std::size_t n, Rng& rng, double density = 0.4) {
    SnapshotGraph g(0, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (rng.uniform() < density) g.at(i, j) = static_cast<std::int64_t>(rng.below(5)) + 1;
        }
    }
    return g;
}

GeoMatrix random_geo(std::size_t n, Rng& rng) {
    GeoMatrix geo;
    geo.n = n;
    geo.dist = Matrix::zeros(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double d = rng.uniform(0.2, 3.0);
            geo.dist(i, j) = d;
            geo.dist(j, i) = d;
        }
    }
    return geo;
}

std::vector<std::vector<long>> counts_of(const SnapshotGraph& g) {
    std::vector<std::vector<long>> out(g.n, std::vector<long>(g.n));
    for (std::size_t i = 0; i < g.n; ++i) {
        for (std::size_t j = 0; j < g.n; ++j) out[i][j] = static_cast<long>(g.at(i, j));
    }
    return out;
}

} // namespace

TEST_CASE("attention_net hand values") {
    const Matrix proj{{1.0}};
    const Matrix vec{{1.0}, {1.0}};
    const double pos = attention_net(std::vector<double>{2.0}, std::vector<double>{3.0}, proj, vec, 0.2);
    CHECK(pos == doctest::Approx(5.0));
    const double neg = attention_net(std::vector<double>{-2.0}, std::vector<double>{-3.0}, proj, vec, 0.2);
    CHECK(neg == doctest::Approx(-1.0));

    const Matrix zeros = Matrix::zeros(2, 1);
    Rng rng(50);
    const Matrix wa = oracle::random_matrix(1, 3, rng);
    CHECK(attention_net(std::vector<double>{1, 2, 3}, std::vector<double>{4, 5, 6}, wa, zeros, 0.2) == 0.0);

    CHECK_THROWS_AS(attention_net(std::vector<double>{1.0, 2.0}, std::vector<double>{3.0}, proj, vec, 0.2),
                    DimensionError);
}

TEST_CASE("empty neighborhoods contribute exact zero segments") {
    Rng rng(51);
    const std::size_t n = 4, d = 5, d_e = 3;
    const SpatialParams params = SpatialParams::init(d, d_e, rng);
    const a::Var feats = a::constant(oracle::random_matrix(n, d, rng));
    const SnapshotGraph empty(0, n);
    const GeoMatrix geo = random_geo(n, rng);
    // Radius below every pairwise distance: no geo neighbors either.
    const a::Var m = spatial_embed(feats, empty, geo, params, 1e-9, 1e-8, 0.2);
    const Matrix own = matmul_values(feats->value, transpose_values(params.proj->value));
    REQUIRE(m->value.cols() == 4 * d_e);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < d_e; ++c) {
            CHECK(m->value(i, c) == doctest::Approx(own(i, c)).epsilon(1e-12));
            CHECK(m->value(i, d_e + c) == 0.0);
            CHECK(m->value(i, 2 * d_e + c) == 0.0);
            CHECK(m->value(i, 3 * d_e + c) == 0.0);
        }
    }
}

TEST_CASE("a single forward neighbor takes the whole attention mass") {
    Rng rng(52);
    const std::size_t n = 4, d = 5, d_e = 2;
    const SpatialParams params = SpatialParams::init(d, d_e, rng);
    const a::Var feats = a::constant(oracle::random_matrix(n, d, rng));
    SnapshotGraph g(0, n);
    g.at(0, 2) = 7;
    const GeoMatrix geo = random_geo(n, rng);
    std::vector<AttentionWeights> dump;
    spatial_embed(feats, g, geo, params, 1.0, 1e-8, 0.2, &dump);
    REQUIRE(dump[0].psi.size() == 1);
    CHECK(dump[0].psi.at(2) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("attention weight maps are distributions") {
    Rng rng(53);
    const std::size_t n = 6, d = 7, d_e = 3;
    for (int rep = 0; rep < 10; ++rep) {
        const SpatialParams params = SpatialParams::init(d, d_e, rng);
        const a::Var feats = a::constant(oracle::random_matrix(n, d, rng));
        const SnapshotGraph g = random_snapshot(n, rng);
        const GeoMatrix geo = random_geo(n, rng);
        std::vector<AttentionWeights> dump;
        spatial_embed(feats, g, geo, params, 1.5, 1e-8, 0.2, &dump);
        for (const AttentionWeights& w : dump) {
            for (const auto* map : {&w.psi, &w.phi, &w.theta}) {
                if (map->empty()) continue;
                double sum = 0.0;
                for (const auto& [j, v] : *map) {
                    CHECK(v > 0.0);
                    CHECK(v <= 1.0 + 1e-12);
                    sum += v;
                }
                CHECK(std::fabs(sum - 1.0) < 1e-12);
            }
        }
    }
}

TEST_CASE("matches the naive loop implementation") {
    Rng rng(54);
    const std::size_t n = 5, d = 6, d_e = 3;
    for (int rep = 0; rep < 10; ++rep) {
        const SpatialParams params = SpatialParams::init(d, d_e, rng);
        const a::Var feats = a::constant(oracle::random_matrix(n, d, rng));
        const SnapshotGraph g = random_snapshot(n, rng);
        const GeoMatrix geo = random_geo(n, rng);
        const double radius = 1.5;
        const a::Var fast = spatial_embed(feats, g, geo, params, radius, 1e-8, 0.2);
        const Matrix naive = oracle::naive_spatial_embed(
            feats->value, counts_of(g), geo.dist, params.proj->value, params.attn_proj->value,
            params.attn_vec->value, radius, 1e-8, 0.2);
        REQUIRE(fast->value.same_shape(naive));
        for (std::size_t i = 0; i < naive.size(); ++i) {
            CHECK(std::fabs(fast->value.data()[i] - naive.data()[i]) < 1e-10);
        }
    }
}

TEST_CASE("adding a constant to all scores in a set leaves the softmax unchanged") {
    Rng rng(55);
    Matrix scores = oracle::random_matrix(4, 6, rng, -2.0, 2.0);
    Matrix mask(4, 6);
    for (std::size_t i = 0; i < mask.size(); ++i) mask.data()[i] = rng.uniform() < 0.6 ? 1.0 : 0.0;
    Matrix shifted = scores;
    for (std::size_t i = 0; i < shifted.size(); ++i) shifted.data()[i] += 3.7;
    const a::Var base = a::masked_row_softmax(a::constant(scores), mask);
    const a::Var moved = a::masked_row_softmax(a::constant(shifted), mask);
    for (std::size_t i = 0; i < scores.size(); ++i) {
        CHECK(base->value.data()[i] == doctest::Approx(moved->value.data()[i]).epsilon(1e-12));
    }
}

TEST_CASE("gradients through spatial_embed pass finite differences") {
    Rng rng(56);
    const std::size_t n = 4, d = 5, d_e = 2;
    const SpatialParams params = SpatialParams::init(d, d_e, rng);
    const a::Var feats = a::constant(oracle::random_matrix(n, d, rng));
    const SnapshotGraph g = random_snapshot(n, rng);
    const GeoMatrix geo = random_geo(n, rng);
    const a::Var target = a::constant(oracle::random_matrix(n, 4 * d_e, rng));
    auto build = [&] {
        return a::smooth_l1(spatial_embed(feats, g, geo, params, 1.5, 1e-8, 0.2), target);
    };
    auto f = [&] { return a::scalar_value(build()); };
    const std::vector<a::Var> ps = {params.proj, params.attn_proj, params.attn_vec};
    for (const auto& p : ps) a::zero_grad(p);
    a::backward(build());
    CHECK(oracle::max_grad_rel_err(ps, f, 1e-6) < 1e-4);
}

TEST_CASE("permuting the node order permutes the output rows") {
    Rng rng(57);
    const std::size_t n = 5, d = 4, d_e = 2;
    const SpatialParams params = SpatialParams::init(d, d_e, rng);
    const Matrix feats = oracle::random_matrix(n, d, rng);
    const SnapshotGraph g = random_snapshot(n, rng);
    const GeoMatrix geo = random_geo(n, rng);

    std::vector<std::size_t> perm = {3, 0, 4, 1, 2}; // perm[new] = old
    Matrix pfeats(n, d);
    SnapshotGraph pg(0, n);
    GeoMatrix pgeo;
    pgeo.n = n;
    pgeo.dist = Matrix::zeros(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < d; ++c) pfeats(i, c) = feats(perm[i], c);
        for (std::size_t j = 0; j < n; ++j) {
            pg.at(i, j) = g.at(perm[i], perm[j]);
            pgeo.dist(i, j) = geo.dist(perm[i], perm[j]);
        }
    }
    const a::Var base = spatial_embed(a::constant(feats), g, geo, params, 1.5, 1e-8, 0.2);
    const a::Var moved = spatial_embed(a::constant(pfeats), pg, pgeo, params, 1.5, 1e-8, 0.2);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < 4 * d_e; ++c) {
            CHECK(moved->value(i, c) == doctest::Approx(base->value(perm[i], c)).epsilon(1e-12));
        }
    }
}
