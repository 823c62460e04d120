#include "gallat/transfer.hpp"

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

} // namespace

TransferParams TransferParams::init(std::size_t n, std::size_t d_e, Rng& rng) {
    const std::size_t width = 4 * d_e;
    TransferParams p;
    p.demand_w = ad::param(kaiming_uniform(width, 1, width, rng));
    p.demand_b = ad::param(Matrix::zeros(n, 1));
    p.attn_proj = ad::param(kaiming_uniform(width, width, width, rng));
    p.attn_vec = ad::param(kaiming_uniform(2 * width, 1, 2 * width, rng));
    return p;
}

std::pair<ad::Var, ad::Var> predict_demand(const ad::Var& spatiotemporal,
                                           const TransferParams& params, double d_max) {
    if (!(d_max > 0.0)) throw ContractError("predict_demand: d_max must be positive");
    if (spatiotemporal->value.rows() != params.demand_b->value.rows()) {
        throw DimensionError("predict_demand: " + spatiotemporal->value.shape_str() + " vs bias " +
                             params.demand_b->value.shape_str());
    }
    const ad::Var norm =
        ad::sigmoid(ad::add(ad::matmul(spatiotemporal, params.demand_w), params.demand_b));
    return {norm, ad::scalar_mul(norm, d_max)};
}

ad::Var transfer_probs(const ad::Var& spatiotemporal, const TransferParams& params, double slope) {
    const std::size_t n = spatiotemporal->value.rows();
    const std::size_t width = params.attn_proj->value.rows();
    // Same pairwise attention structure as the spatial layer, own
    // parameters, softmax over every destination.
    const ad::Var projected = ad::matmul(spatiotemporal, ad::transpose(params.attn_proj));
    const ad::Var s = ad::matmul(projected, ad::slice_rows(params.attn_vec, 0, width));
    const ad::Var u = ad::matmul(projected, ad::slice_rows(params.attn_vec, width, width));
    const ad::Var scores =
        ad::add(ad::matmul(s, ad::constant(Matrix::ones(1, n))),
                ad::matmul(ad::constant(Matrix::ones(n, 1)), ad::transpose(u)));
    return ad::row_softmax(ad::leaky_relu(scores, slope));
}

Matrix predict_od(const std::vector<double>& demand, const Matrix& transfer) {
    if (demand.size() != transfer.rows() || transfer.rows() != transfer.cols()) {
        throw DimensionError("predict_od: demand length " + std::to_string(demand.size()) +
                             " vs transfer " + transfer.shape_str());
    }
    Matrix od = transfer;
    for (std::size_t i = 0; i < od.rows(); ++i) {
        double* row = od.row(i);
        for (std::size_t j = 0; j < od.cols(); ++j) row[j] *= demand[i];
    }
    return od;
}

ad::Var od_norm(const ad::Var& demand_norm, const ad::Var& transfer) {
    const std::size_t n = transfer->value.rows();
    const ad::Var tiled = ad::matmul(demand_norm, ad::constant(Matrix::ones(1, n)));
    return ad::mul(tiled, transfer);
}

} // namespace gallat
