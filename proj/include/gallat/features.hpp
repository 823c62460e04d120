#pragma once

#include <cstddef>
#include <vector>

#include "gallat/autodiff.hpp"
#include "gallat/rng.hpp"
#include "gallat/snapshot.hpp"

namespace gallat {

/// Widths and calendar for per-node feature rows. A historical-slot row
/// is [grid row, grid col, out degree, in degree] followed by node, slot
/// and day-of-week embeddings (width d); the target-slot row drops the
/// two degree fields, which do not exist yet (width d_v = d - 2).
struct FeatureConfig {
    std::size_t node_embed_dim = 8;
    std::size_t slot_embed_dim = 8;
    std::size_t dow_embed_dim = 8;
    std::size_t slots_per_day = 24; // l
    std::size_t dow0 = 0;           // day-of-week of day 0; 0 = Monday
    std::size_t grid_cols = 1;      // for the row/col scalar fields

    std::size_t d() const { return 4 + node_embed_dim + slot_embed_dim + dow_embed_dim; }
    std::size_t d_v() const { return d() - 2; }
    std::size_t tod(std::size_t slot) const { return slot % slots_per_day; }
    std::size_t dow(std::size_t slot) const { return (slot / slots_per_day + dow0) % 7; }
};

/// Learnable lookup tables; rows participate in the computation graph.
struct EmbeddingTables {
    ad::Var node_table; // n x node_embed_dim
    ad::Var slot_table; // l x slot_embed_dim
    ad::Var dow_table;  // 7 x dow_embed_dim

    static EmbeddingTables init(std::size_t n, const FeatureConfig& cfg, Rng& rng);
};

/// Training-set mean/std for the four scalar fields.
struct FeatureStats {
    double row_mean = 0.0, row_std = 1.0;
    double col_mean = 0.0, col_std = 1.0;
    double out_mean = 0.0, out_std = 1.0;
    double in_mean = 0.0, in_std = 1.0;

    static FeatureStats compute(const std::vector<SnapshotGraph>& seq, std::size_t train_begin,
                                std::size_t train_end, const FeatureConfig& cfg);
};

/// n x d feature matrix for a historical slot.
ad::Var build_features(const SnapshotGraph& g, std::size_t t, const EmbeddingTables& tables,
                       const FeatureConfig& cfg, const FeatureStats& stats);

/// n x d_v feature matrix for the prediction slot (no degree fields).
ad::Var build_target_features(std::size_t target_slot, std::size_t n,
                              const EmbeddingTables& tables, const FeatureConfig& cfg,
                              const FeatureStats& stats);

} // namespace gallat
