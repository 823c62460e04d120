#include "gallat/autodiff.hpp"

#include <cmath>
#include <unordered_set>

#include "gallat/errors.hpp"

namespace gallat::ad {

namespace {

Var make_node(Op op, std::vector<Var> inputs, Matrix value) {
    auto n = std::make_shared<Node>();
    n->op = op;
    n->inputs = std::move(inputs);
    n->value = std::move(value);
    for (const auto& in : n->inputs) {
        if (in->requires_grad) {
            n->requires_grad = true;
            break;
        }
    }
    return n;
}

void ensure_grad(Node& n) {
    if (n.grad.rows() != n.value.rows() || n.grad.cols() != n.value.cols()) {
        n.grad = Matrix::zeros(n.value.rows(), n.value.cols());
    }
}

// out += x * y^T
void acc_matmul_nt(Matrix& out, const Matrix& x, const Matrix& y) {
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const double* xi = x.row(i);
        double* oi = out.row(i);
        for (std::size_t j = 0; j < y.rows(); ++j) {
            const double* yj = y.row(j);
            double s = 0.0;
            for (std::size_t k = 0; k < x.cols(); ++k) s += xi[k] * yj[k];
            oi[j] += s;
        }
    }
}

// out += x^T * y
void acc_matmul_tn(Matrix& out, const Matrix& x, const Matrix& y) {
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const double* xi = x.row(i);
        const double* yi = y.row(i);
        for (std::size_t k = 0; k < x.cols(); ++k) {
            const double xik = xi[k];
            if (xik == 0.0) continue;
            double* ok = out.row(k);
            for (std::size_t j = 0; j < y.cols(); ++j) ok[j] += xik * yi[j];
        }
    }
}

void softmax_row(const double* x, double* y, std::size_t n) {
    double m = x[0];
    for (std::size_t j = 1; j < n; ++j) m = std::max(m, x[j]);
    double denom = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        y[j] = std::exp(x[j] - m);
        denom += y[j];
    }
    for (std::size_t j = 0; j < n; ++j) y[j] /= denom;
}

void backward_one(Node& n) {
    const Matrix& g = n.grad;
    switch (n.op) {
    case Op::Constant:
    case Op::Param:
        break;
    case Op::MatMul: {
        Node& a = *n.inputs[0];
        Node& b = *n.inputs[1];
        if (a.requires_grad) {
            ensure_grad(a);
            acc_matmul_nt(a.grad, g, b.value);
        }
        if (b.requires_grad) {
            ensure_grad(b);
            acc_matmul_tn(b.grad, a.value, g);
        }
        break;
    }
    case Op::ConcatCols: {
        for (std::size_t p = 0; p < n.inputs.size(); ++p) {
            Node& in = *n.inputs[p];
            if (!in.requires_grad) continue;
            ensure_grad(in);
            const std::size_t off = n.col_offsets[p];
            for (std::size_t r = 0; r < in.value.rows(); ++r) {
                const double* grow = g.row(r) + off;
                double* drow = in.grad.row(r);
                for (std::size_t c = 0; c < in.value.cols(); ++c) drow[c] += grow[c];
            }
        }
        break;
    }
    case Op::RowSoftmax:
    case Op::MaskedRowSoftmax: {
        Node& x = *n.inputs[0];
        if (!x.requires_grad) break;
        ensure_grad(x);
        const Matrix& y = n.value;
        for (std::size_t r = 0; r < y.rows(); ++r) {
            const double* yr = y.row(r);
            const double* gr = g.row(r);
            double dot = 0.0;
            for (std::size_t c = 0; c < y.cols(); ++c) dot += gr[c] * yr[c];
            double* dr = x.grad.row(r);
            for (std::size_t c = 0; c < y.cols(); ++c) dr[c] += yr[c] * (gr[c] - dot);
        }
        break;
    }
    case Op::LeakyRelu: {
        Node& x = *n.inputs[0];
        if (!x.requires_grad) break;
        ensure_grad(x);
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double xi = x.value.data()[i];
            x.grad.data()[i] += g.data()[i] * (xi > 0.0 ? 1.0 : n.scalar);
        }
        break;
    }
    case Op::Sigmoid: {
        Node& x = *n.inputs[0];
        if (!x.requires_grad) break;
        ensure_grad(x);
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double yi = n.value.data()[i];
            x.grad.data()[i] += g.data()[i] * yi * (1.0 - yi);
        }
        break;
    }
    case Op::Add: {
        for (int side = 0; side < 2; ++side) {
            Node& in = *n.inputs[side];
            if (!in.requires_grad) continue;
            ensure_grad(in);
            for (std::size_t i = 0; i < g.size(); ++i) in.grad.data()[i] += g.data()[i];
        }
        break;
    }
    case Op::Mul: {
        Node& a = *n.inputs[0];
        Node& b = *n.inputs[1];
        if (a.requires_grad) {
            ensure_grad(a);
            for (std::size_t i = 0; i < g.size(); ++i)
                a.grad.data()[i] += g.data()[i] * b.value.data()[i];
        }
        if (b.requires_grad) {
            ensure_grad(b);
            for (std::size_t i = 0; i < g.size(); ++i)
                b.grad.data()[i] += g.data()[i] * a.value.data()[i];
        }
        break;
    }
    case Op::ScalarMul: {
        Node& x = *n.inputs[0];
        if (!x.requires_grad) break;
        ensure_grad(x);
        for (std::size_t i = 0; i < g.size(); ++i) x.grad.data()[i] += g.data()[i] * n.scalar;
        break;
    }
    case Op::Transpose: {
        Node& x = *n.inputs[0];
        if (!x.requires_grad) break;
        ensure_grad(x);
        for (std::size_t i = 0; i < g.rows(); ++i) {
            for (std::size_t j = 0; j < g.cols(); ++j) x.grad(j, i) += g(i, j);
        }
        break;
    }
    case Op::SmoothL1: {
        Node& p = *n.inputs[0];
        Node& t = *n.inputs[1];
        const double g0 = g(0, 0) / static_cast<double>(p.value.size());
        if (p.requires_grad) ensure_grad(p);
        if (t.requires_grad) ensure_grad(t);
        for (std::size_t i = 0; i < p.value.size(); ++i) {
            const double e = p.value.data()[i] - t.value.data()[i];
            const double d = std::fabs(e) < 1.0 ? e : (e > 0.0 ? 1.0 : -1.0);
            if (p.requires_grad) p.grad.data()[i] += g0 * d;
            if (t.requires_grad) t.grad.data()[i] -= g0 * d;
        }
        break;
    }
    case Op::Sum: {
        Node& x = *n.inputs[0];
        if (!x.requires_grad) break;
        ensure_grad(x);
        const double g0 = g(0, 0);
        for (std::size_t i = 0; i < x.value.size(); ++i) x.grad.data()[i] += g0;
        break;
    }
    case Op::SliceRows: {
        Node& x = *n.inputs[0];
        if (!x.requires_grad) break;
        ensure_grad(x);
        for (std::size_t r = 0; r < n.nrows; ++r) {
            const double* grow = g.row(r);
            double* drow = x.grad.row(n.row0 + r);
            for (std::size_t c = 0; c < g.cols(); ++c) drow[c] += grow[c];
        }
        break;
    }
    }
}

} // namespace

Var constant(Matrix v) {
    auto n = std::make_shared<Node>();
    n->op = Op::Constant;
    n->value = std::move(v);
    return n;
}

Var param(Matrix v) {
    auto n = std::make_shared<Node>();
    n->op = Op::Param;
    n->value = std::move(v);
    n->requires_grad = true;
    return n;
}

Var matmul(const Var& a, const Var& b) {
    return make_node(Op::MatMul, {a, b}, matmul_values(a->value, b->value));
}

Var concat_cols(const std::vector<Var>& parts) {
    if (parts.empty()) throw ContractError("concat_cols: no inputs");
    const std::size_t rows = parts[0]->value.rows();
    std::size_t total = 0;
    std::vector<std::size_t> offsets;
    for (const auto& p : parts) {
        if (p->value.rows() != rows) {
            throw DimensionError("concat_cols: " + parts[0]->value.shape_str() + " vs " +
                                 p->value.shape_str());
        }
        offsets.push_back(total);
        total += p->value.cols();
    }
    Matrix out(rows, total);
    for (std::size_t p = 0; p < parts.size(); ++p) {
        const Matrix& v = parts[p]->value;
        for (std::size_t r = 0; r < rows; ++r) {
            double* dst = out.row(r) + offsets[p];
            const double* src = v.row(r);
            for (std::size_t c = 0; c < v.cols(); ++c) dst[c] = src[c];
        }
    }
    auto n = make_node(Op::ConcatCols, parts, std::move(out));
    n->col_offsets = std::move(offsets);
    return n;
}

Var row_softmax(const Var& x) {
    const Matrix& v = x->value;
    Matrix out(v.rows(), v.cols());
    for (std::size_t r = 0; r < v.rows(); ++r) {
        softmax_row(v.row(r), out.row(r), v.cols());
    }
    return make_node(Op::RowSoftmax, {x}, std::move(out));
}

Var masked_row_softmax(const Var& x, Matrix mask) {
    const Matrix& v = x->value;
    if (!v.same_shape(mask)) {
        throw DimensionError("masked_row_softmax: " + v.shape_str() + " vs mask " +
                             mask.shape_str());
    }
    Matrix out(v.rows(), v.cols(), 0.0);
    for (std::size_t r = 0; r < v.rows(); ++r) {
        const double* xr = v.row(r);
        const double* mr = mask.row(r);
        double m = 0.0;
        bool any = false;
        for (std::size_t c = 0; c < v.cols(); ++c) {
            if (mr[c] == 0.0) continue;
            m = any ? std::max(m, xr[c]) : xr[c];
            any = true;
        }
        if (!any) continue; // empty set: row stays exactly zero
        double denom = 0.0;
        double* yr = out.row(r);
        for (std::size_t c = 0; c < v.cols(); ++c) {
            if (mr[c] == 0.0) continue;
            yr[c] = std::exp(xr[c] - m);
            denom += yr[c];
        }
        for (std::size_t c = 0; c < v.cols(); ++c) {
            if (mr[c] != 0.0) yr[c] /= denom;
        }
    }
    auto n = make_node(Op::MaskedRowSoftmax, {x}, std::move(out));
    n->mask = std::move(mask);
    return n;
}

Var leaky_relu(const Var& x, double slope) {
    Matrix out = x->value;
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (out.data()[i] < 0.0) out.data()[i] *= slope;
    }
    auto n = make_node(Op::LeakyRelu, {x}, std::move(out));
    n->scalar = slope;
    return n;
}

Var sigmoid(const Var& x) {
    Matrix out = x->value;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out.data()[i] = 1.0 / (1.0 + std::exp(-out.data()[i]));
    }
    return make_node(Op::Sigmoid, {x}, std::move(out));
}

Var add(const Var& a, const Var& b) {
    return make_node(Op::Add, {a, b}, add_values(a->value, b->value));
}

Var mul(const Var& a, const Var& b) {
    return make_node(Op::Mul, {a, b}, hadamard_values(a->value, b->value));
}

Var scalar_mul(const Var& a, double c) {
    Matrix out = a->value;
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] *= c;
    auto n = make_node(Op::ScalarMul, {a}, std::move(out));
    n->scalar = c;
    return n;
}

Var transpose(const Var& a) {
    return make_node(Op::Transpose, {a}, transpose_values(a->value));
}

Var smooth_l1(const Var& pred, const Var& target) {
    const Matrix& p = pred->value;
    const Matrix& t = target->value;
    if (!p.same_shape(t)) {
        throw DimensionError("smooth_l1: " + p.shape_str() + " vs " + t.shape_str());
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double e = p.data()[i] - t.data()[i];
        const double a = std::fabs(e);
        acc += a < 1.0 ? 0.5 * e * e : a - 0.5;
    }
    Matrix out(1, 1, acc / static_cast<double>(p.size()));
    return make_node(Op::SmoothL1, {pred, target}, std::move(out));
}

Var sum(const Var& a) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a->value.size(); ++i) acc += a->value.data()[i];
    return make_node(Op::Sum, {a}, Matrix(1, 1, acc));
}

Var slice_rows(const Var& a, std::size_t row0, std::size_t nrows) {
    const Matrix& v = a->value;
    if (row0 + nrows > v.rows()) {
        throw ContractError("slice_rows: window [" + std::to_string(row0) + ", " +
                            std::to_string(row0 + nrows) + ") exceeds " + v.shape_str());
    }
    Matrix out(nrows, v.cols());
    for (std::size_t r = 0; r < nrows; ++r) {
        const double* src = v.row(row0 + r);
        double* dst = out.row(r);
        for (std::size_t c = 0; c < v.cols(); ++c) dst[c] = src[c];
    }
    auto n = make_node(Op::SliceRows, {a}, std::move(out));
    n->row0 = row0;
    n->nrows = nrows;
    return n;
}

void backward(const Var& root) {
    if (root->value.rows() != 1 || root->value.cols() != 1) {
        throw ContractError("backward: root must be scalar, got " + root->value.shape_str());
    }
    // Iterative post-order DFS so graph depth cannot overflow the stack.
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, std::size_t>> stack;
    stack.emplace_back(root.get(), 0);
    visited.insert(root.get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->inputs.size()) {
            Node* child = node->inputs[next].get();
            ++next;
            if (child->requires_grad && visited.insert(child).second) {
                stack.emplace_back(child, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    root->grad = Matrix(1, 1, 1.0);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        if ((*it)->requires_grad) backward_one(**it);
    }
}

void zero_grad(const Var& v) {
    v->grad = Matrix::zeros(v->value.rows(), v->value.cols());
}

double scalar_value(const Var& v) {
    if (v->value.size() != 1) {
        throw ContractError("scalar_value: node is " + v->value.shape_str());
    }
    return v->value(0, 0);
}

} // namespace gallat::ad
