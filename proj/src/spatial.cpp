#include "gallat/spatial.hpp"

#include <cmath>

#include "gallat/errors.hpp"

namespace gallat {

namespace {

Matrix kaiming_uniform(std::size_t rows, std::size_t cols, std::size_t fan_in, Rng& rng) {
    const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-bound, bound);
    return m;
}

// scores(i, j) = LeakyReLU(s_i + pw(i, j) * u_j), softmaxed over each
// node's member set. s_i = a1 . W_a v_i and u_j = a2 . W_a v_j, so this
// is the pairwise attention with the pre-weight folded in (the scalar
// pre-weight commutes with the linear projection).
ad::Var neighborhood_attention(const ad::Var& s, const ad::Var& u, const ad::Var& pw,
                               const ad::Var& mask, double slope) {
    const std::size_t n = s->value.rows();
    const ad::Var s_cols = ad::matmul(s, ad::constant(Matrix::ones(1, n)));
    const ad::Var u_rows = ad::matmul(ad::constant(Matrix::ones(n, 1)), ad::transpose(u));
    const ad::Var scores = ad::leaky_relu(ad::add(s_cols, ad::mul(pw, u_rows)), slope);
    return ad::masked_row_softmax(scores, mask->value);
}

void dump_weights(const Matrix& attn, const Matrix& mask,
                  std::map<std::size_t, double> AttentionWeights::*field,
                  std::vector<AttentionWeights>& out) {
    for (std::size_t i = 0; i < attn.rows(); ++i) {
        for (std::size_t j = 0; j < attn.cols(); ++j) {
            if (mask(i, j) != 0.0) (out[i].*field)[j] = attn(i, j);
        }
    }
}

} // namespace

SpatialParams SpatialParams::init(std::size_t d, std::size_t d_e, Rng& rng) {
    SpatialParams p;
    p.proj = ad::param(kaiming_uniform(d_e, d, d, rng));
    p.attn_proj = ad::param(kaiming_uniform(d_e, d, d, rng));
    p.attn_vec = ad::param(kaiming_uniform(2 * d_e, 1, 2 * d_e, rng));
    return p;
}

double attention_net(std::span<const double> vi, std::span<const double> vj, const Matrix& attn_proj,
                     const Matrix& attn_vec, double slope) {
    if (vi.size() != attn_proj.cols() || vj.size() != attn_proj.cols()) {
        throw DimensionError("attention_net: feature length " + std::to_string(vi.size()) +
                             "/" + std::to_string(vj.size()) + " vs projection " +
                             attn_proj.shape_str());
    }
    const std::size_t d_e = attn_proj.rows();
    if (attn_vec.rows() != 2 * d_e || attn_vec.cols() != 1) {
        throw DimensionError("attention_net: attention vector " + attn_vec.shape_str() +
                             " must be " + std::to_string(2 * d_e) + "x1");
    }
    double score = 0.0;
    for (std::size_t r = 0; r < d_e; ++r) {
        double pi = 0.0, pj = 0.0;
        for (std::size_t c = 0; c < attn_proj.cols(); ++c) {
            pi += attn_proj(r, c) * vi[c];
            pj += attn_proj(r, c) * vj[c];
        }
        score += attn_vec(r, 0) * pi + attn_vec(d_e + r, 0) * pj;
    }
    return score > 0.0 ? score : slope * score;
}

SpatialSlotConstants make_spatial_slot_constants(const SnapshotGraph& g, const GeoMatrix& geo,
                                                 double radius_km, double epsilon) {
    const std::size_t n = g.n;
    Matrix fwd_pw(n, n), fwd_mask(n, n), bwd_pw(n, n), bwd_mask(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        const NeighborSets sets = neighborhoods(g, geo, i, radius_km);
        const PreWeights pw = pre_weights(g, geo, sets, i, epsilon);
        for (const auto& [j, w] : pw.a) {
            fwd_pw(i, j) = w;
            fwd_mask(i, j) = 1.0;
        }
        for (const auto& [j, w] : pw.b) {
            bwd_pw(i, j) = w;
            bwd_mask(i, j) = 1.0;
        }
    }
    return {ad::constant(std::move(fwd_pw)), ad::constant(std::move(fwd_mask)),
            ad::constant(std::move(bwd_pw)), ad::constant(std::move(bwd_mask))};
}

GeoConstants make_geo_constants(const GeoMatrix& geo, double radius_km) {
    const std::size_t n = geo.n;
    // Geo sets only need an all-zero demand graph to reuse the set logic.
    const SnapshotGraph empty(0, n);
    Matrix pw(n, n), mask(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        const NeighborSets sets = neighborhoods(empty, geo, i, radius_km);
        const PreWeights w = pre_weights(empty, geo, sets, i, 1e-8);
        for (const auto& [j, c] : w.c) {
            pw(i, j) = c;
            mask(i, j) = 1.0;
        }
    }
    return {ad::constant(std::move(pw)), ad::constant(std::move(mask))};
}

ad::Var spatial_embed(const ad::Var& features, const SpatialSlotConstants& slot,
                      const GeoConstants& geo, const SpatialParams& params, double slope,
                      std::vector<AttentionWeights>* dump) {
    const std::size_t d_e = params.embed_dim();
    if (features->value.cols() != params.proj->value.cols()) {
        throw DimensionError("spatial_embed: features " + features->value.shape_str() +
                             " vs projection " + params.proj->value.shape_str());
    }
    const ad::Var projected = ad::matmul(features, ad::transpose(params.proj));
    const ad::Var attn_feat = ad::matmul(features, ad::transpose(params.attn_proj));
    const ad::Var s = ad::matmul(attn_feat, ad::slice_rows(params.attn_vec, 0, d_e));
    const ad::Var u = ad::matmul(attn_feat, ad::slice_rows(params.attn_vec, d_e, d_e));

    const ad::Var psi = neighborhood_attention(s, u, slot.fwd_pw, slot.fwd_mask, slope);
    const ad::Var phi = neighborhood_attention(s, u, slot.bwd_pw, slot.bwd_mask, slope);
    const ad::Var theta = neighborhood_attention(s, u, geo.pw, geo.mask, slope);

    if (dump) {
        dump->assign(features->value.rows(), AttentionWeights{});
        dump_weights(psi->value, slot.fwd_mask->value, &AttentionWeights::psi, *dump);
        dump_weights(phi->value, slot.bwd_mask->value, &AttentionWeights::phi, *dump);
        dump_weights(theta->value, geo.mask->value, &AttentionWeights::theta, *dump);
    }

    return ad::concat_cols({projected, ad::matmul(psi, projected), ad::matmul(phi, projected),
                            ad::matmul(theta, projected)});
}

ad::Var spatial_embed(const ad::Var& features, const SnapshotGraph& g, const GeoMatrix& geo,
                      const SpatialParams& params, double radius_km, double epsilon, double slope,
                      std::vector<AttentionWeights>* dump) {
    return spatial_embed(features, make_spatial_slot_constants(g, geo, radius_km, epsilon),
                         make_geo_constants(geo, radius_km), params, slope, dump);
}

} // namespace gallat
