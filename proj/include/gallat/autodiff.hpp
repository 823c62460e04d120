#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include "gallat/matrix.hpp"

namespace gallat::ad {

enum class Op {
    Constant,
    Param,
    MatMul,
    ConcatCols,
    RowSoftmax,
    MaskedRowSoftmax,
    LeakyRelu,
    Sigmoid,
    Add,
    Mul,
    ScalarMul,
    Transpose,
    SmoothL1,
    Sum,
    SliceRows,
};

/// One vertex of the computation graph. Built eagerly: `value` is the
/// forward result, `grad` is filled by backward(). The graph is acyclic
/// by construction (inputs always pre-exist their consumer).
struct Node {
    Op op = Op::Constant;
    std::vector<std::shared_ptr<Node>> inputs;
    Matrix value;
    Matrix grad;
    bool requires_grad = false;

    // Per-op payloads.
    double scalar = 0.0;                    // LeakyRelu slope, ScalarMul factor
    std::size_t row0 = 0, nrows = 0;        // SliceRows window
    Matrix mask;                            // MaskedRowSoftmax set membership (0/1)
    std::vector<std::size_t> col_offsets;   // ConcatCols boundaries
};

using Var = std::shared_ptr<Node>;

Var constant(Matrix v);
Var param(Matrix v);

Var matmul(const Var& a, const Var& b);
Var concat_cols(const std::vector<Var>& parts);
Var row_softmax(const Var& x);
/// Softmax restricted to entries where mask(r,c) != 0; rows whose mask is
/// empty come out as exact zeros (the empty-distribution convention).
Var masked_row_softmax(const Var& x, Matrix mask);
Var leaky_relu(const Var& x, double slope);
Var sigmoid(const Var& x);
Var add(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scalar_mul(const Var& a, double c);
Var transpose(const Var& a);
/// Mean over elements of: 0.5 e^2 when |e| < 1, else |e| - 0.5, e = pred - target.
Var smooth_l1(const Var& pred, const Var& target);
Var sum(const Var& a);
Var slice_rows(const Var& a, std::size_t row0, std::size_t nrows);

/// Reverse sweep from a scalar (1x1) root. Gradients accumulate
/// additively across fan-out into each node's `grad`; leaves that the
/// root does not reach are left untouched.
void backward(const Var& root);

/// Resets (allocating if needed) a leaf's gradient to zeros. Call on
/// every parameter before each backward pass.
void zero_grad(const Var& v);

double scalar_value(const Var& v);

} // namespace gallat::ad
