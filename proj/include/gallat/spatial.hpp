#pragma once

#include <map>
#include <span>
#include <vector>

#include "gallat/autodiff.hpp"
#include "gallat/rng.hpp"
#include "gallat/snapshot.hpp"

namespace gallat {

struct SpatialParams {
    ad::Var proj;      // W_s, d_e x d shared projection
    ad::Var attn_proj; // W_a, d_e x d
    ad::Var attn_vec;  // a, 2*d_e x 1

    static SpatialParams init(std::size_t d, std::size_t d_e, Rng& rng);
    std::size_t embed_dim() const { return proj->value.rows(); }
};

/// Normalized attention over one node's three neighborhoods. Transient;
/// filled on request for inspection and tests.
struct AttentionWeights {
    std::map<std::size_t, double> psi;   // forward
    std::map<std::size_t, double> phi;   // backward
    std::map<std::size_t, double> theta; // geo
};

/// Scalar affinity LeakyReLU(a^T (W_a vi ++ W_a vj)); the reference
/// pairwise form of the shared attention network.
double attention_net(std::span<const double> vi, std::span<const double> vj, const Matrix& attn_proj,
                     const Matrix& attn_vec, double slope);

/// Per-slot constant inputs to the spatial layer: pre-weight and set
/// membership matrices for the demand-driven neighborhoods. Entry (i, j)
/// of a pre-weight matrix is the multiplier for neighbor j of node i.
struct SpatialSlotConstants {
    ad::Var fwd_pw, fwd_mask;
    ad::Var bwd_pw, bwd_mask;
};

/// Same for the time-invariant geographic neighborhood.
struct GeoConstants {
    ad::Var pw, mask;
};

SpatialSlotConstants make_spatial_slot_constants(const SnapshotGraph& g, const GeoMatrix& geo,
                                                 double radius_km, double epsilon);
GeoConstants make_geo_constants(const GeoMatrix& geo, double radius_km);

/// n x 4d_e embedding: own projection ++ attention-aggregated forward,
/// backward and geo neighborhoods. Empty neighborhoods contribute zero
/// segments.
ad::Var spatial_embed(const ad::Var& features, const SpatialSlotConstants& slot,
                      const GeoConstants& geo, const SpatialParams& params, double slope,
                      std::vector<AttentionWeights>* dump = nullptr);

/// Convenience form that derives the constant matrices on the fly.
ad::Var spatial_embed(const ad::Var& features, const SnapshotGraph& g, const GeoMatrix& geo,
                      const SpatialParams& params, double radius_km, double epsilon, double slope,
                      std::vector<AttentionWeights>* dump = nullptr);

} // namespace gallat
