#pragma once

#include <cstddef>
#include <utility>

#include "gallat/autodiff.hpp"
#include "gallat/rng.hpp"

namespace gallat {

struct TransferParams {
    ad::Var demand_w;  // 4d_e x 1
    ad::Var demand_b;  // n x 1 per-node bias
    ad::Var attn_proj; // 4d_e x 4d_e
    ad::Var attn_vec;  // 8d_e x 1 (two concatenated 4d_e projections)

    static TransferParams init(std::size_t n, std::size_t d_e, Rng& rng);
};

/// Final per-target outputs on the original count scale, plus the
/// normalized demand the loss is computed on. Row i of `transfer` is a
/// probability distribution over destinations, and row sums of `od`
/// reproduce `demand` exactly up to floating point.
struct Prediction {
    std::vector<double> demand;      // d_hat, length n
    std::vector<double> demand_norm; // sigmoid outputs in (0, 1)
    Matrix transfer;                 // Q, n x n row-stochastic
    Matrix od;                       // G_hat, n x n
};

/// (normalized, count-scale) demand heads: sigmoid(M w + b) and its
/// D_max multiple.
std::pair<ad::Var, ad::Var> predict_demand(const ad::Var& spatiotemporal,
                                           const TransferParams& params, double d_max);

/// Row-stochastic transfer matrix from pairwise attention over the
/// spatiotemporal rows; includes the self column (intra-region trips).
ad::Var transfer_probs(const ad::Var& spatiotemporal, const TransferParams& params, double slope);

/// od(i, j) = demand_i * q(i, j) on plain values.
Matrix predict_od(const std::vector<double>& demand, const Matrix& transfer);

/// In-graph normalized OD matrix: row i of Q scaled by demand_norm_i.
ad::Var od_norm(const ad::Var& demand_norm, const ad::Var& transfer);

} // namespace gallat
