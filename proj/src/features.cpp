#include "gallat/features.hpp"

#include <cmath>

#include "gallat/errors.hpp"

namespace gallat {

namespace {

Matrix uniform_matrix(std::size_t rows, std::size_t cols, double lo, double hi, Rng& rng) {
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(lo, hi);
    return m;
}

double guarded(double std) { return std < 1e-12 ? 1.0 : std; }

struct Accum {
    double sum = 0.0, sq = 0.0;
    std::size_t count = 0;
    void add(double x) {
        sum += x;
        sq += x * x;
        ++count;
    }
    double mean() const { return count ? sum / static_cast<double>(count) : 0.0; }
    double stddev() const {
        if (!count) return 1.0;
        const double m = mean();
        return guarded(std::sqrt(std::max(0.0, sq / static_cast<double>(count) - m * m)));
    }
};

// Broadcast one table row across all n node rows.
ad::Var tile_row(const ad::Var& table, std::size_t row, std::size_t n) {
    return ad::matmul(ad::constant(Matrix::ones(n, 1)), ad::slice_rows(table, row, 1));
}

} // namespace

EmbeddingTables EmbeddingTables::init(std::size_t n, const FeatureConfig& cfg, Rng& rng) {
    EmbeddingTables t;
    t.node_table = ad::param(uniform_matrix(n, cfg.node_embed_dim, -0.1, 0.1, rng));
    t.slot_table = ad::param(uniform_matrix(cfg.slots_per_day, cfg.slot_embed_dim, -0.1, 0.1, rng));
    t.dow_table = ad::param(uniform_matrix(7, cfg.dow_embed_dim, -0.1, 0.1, rng));
    return t;
}

FeatureStats FeatureStats::compute(const std::vector<SnapshotGraph>& seq, std::size_t train_begin,
                                   std::size_t train_end, const FeatureConfig& cfg) {
    if (train_end > seq.size() || train_begin >= train_end) {
        throw ContractError("FeatureStats: bad training range");
    }
    const std::size_t n = seq[train_begin].n;
    Accum row_acc, col_acc, out_acc, in_acc;
    for (std::size_t i = 0; i < n; ++i) {
        row_acc.add(static_cast<double>(i / cfg.grid_cols));
        col_acc.add(static_cast<double>(i % cfg.grid_cols));
    }
    for (std::size_t t = train_begin; t < train_end; ++t) {
        for (std::size_t i = 0; i < n; ++i) {
            out_acc.add(static_cast<double>(seq[t].out_degree(i)));
            in_acc.add(static_cast<double>(seq[t].in_degree(i)));
        }
    }
    FeatureStats s;
    s.row_mean = row_acc.mean();
    s.row_std = row_acc.stddev();
    s.col_mean = col_acc.mean();
    s.col_std = col_acc.stddev();
    s.out_mean = out_acc.mean();
    s.out_std = out_acc.stddev();
    s.in_mean = in_acc.mean();
    s.in_std = in_acc.stddev();
    return s;
}

ad::Var build_features(const SnapshotGraph& g, std::size_t t, const EmbeddingTables& tables,
                       const FeatureConfig& cfg, const FeatureStats& stats) {
    const std::size_t n = g.n;
    if (tables.node_table->value.rows() != n ||
        tables.node_table->value.cols() != cfg.node_embed_dim ||
        tables.slot_table->value.rows() != cfg.slots_per_day ||
        tables.slot_table->value.cols() != cfg.slot_embed_dim ||
        tables.dow_table->value.cols() != cfg.dow_embed_dim) {
        throw DimensionError("build_features: embedding tables do not match config");
    }
    Matrix scalars(n, 4);
    for (std::size_t i = 0; i < n; ++i) {
        scalars(i, 0) = (static_cast<double>(i / cfg.grid_cols) - stats.row_mean) / stats.row_std;
        scalars(i, 1) = (static_cast<double>(i % cfg.grid_cols) - stats.col_mean) / stats.col_std;
        scalars(i, 2) = (static_cast<double>(g.out_degree(i)) - stats.out_mean) / stats.out_std;
        scalars(i, 3) = (static_cast<double>(g.in_degree(i)) - stats.in_mean) / stats.in_std;
    }
    return ad::concat_cols({ad::constant(std::move(scalars)), tables.node_table,
                            tile_row(tables.slot_table, cfg.tod(t), n),
                            tile_row(tables.dow_table, cfg.dow(t), n)});
}

ad::Var build_target_features(std::size_t target_slot, std::size_t n,
                              const EmbeddingTables& tables, const FeatureConfig& cfg,
                              const FeatureStats& stats) {
    Matrix scalars(n, 2);
    for (std::size_t i = 0; i < n; ++i) {
        scalars(i, 0) = (static_cast<double>(i / cfg.grid_cols) - stats.row_mean) / stats.row_std;
        scalars(i, 1) = (static_cast<double>(i % cfg.grid_cols) - stats.col_mean) / stats.col_std;
    }
    return ad::concat_cols({ad::constant(std::move(scalars)), tables.node_table,
                            tile_row(tables.slot_table, cfg.tod(target_slot), n),
                            tile_row(tables.dow_table, cfg.dow(target_slot), n)});
}

} // namespace gallat
