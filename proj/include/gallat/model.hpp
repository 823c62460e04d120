#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "gallat/features.hpp"
#include "gallat/spatial.hpp"
#include "gallat/temporal.hpp"
#include "gallat/transfer.hpp"

namespace gallat {

struct ModelConfig {
    std::size_t n = 0; // node count
    FeatureConfig features;
    std::size_t d_e = 16;
    std::size_t history_len = 7; // P
    double geo_radius_km = 1.0;
    double epsilon = 1e-8;
    double leaky_slope = 0.2;
    bool temporal_mean = false;

    std::size_t width() const { return 4 * d_e; }
};

/// All learnable state plus the data-derived normalizers the heads need.
struct Model {
    ModelConfig cfg;
    EmbeddingTables tables;
    SpatialParams spatial;
    TemporalParams temporal;
    TransferParams transfer;
    FeatureStats stats;
    double d_max = 1.0;

    static Model init(const ModelConfig& cfg, Rng& rng);

    /// Fixed-order registry of every learnable matrix; the order defines
    /// optimizer-state and checkpoint layout.
    std::vector<std::pair<std::string, ad::Var>> parameters() const;
};

/// Snapshot sequence plus the constant per-slot matrices the spatial
/// layer consumes. Constants are graph leaves without gradients, so they
/// are shared across optimizer steps.
class ForwardContext {
public:
    ForwardContext(const std::vector<SnapshotGraph>& snapshots, GeoMatrix geo,
                   const ModelConfig& cfg);

    const std::vector<SnapshotGraph>& snapshots() const { return *snapshots_; }
    const GeoMatrix& geo() const { return geo_; }
    const GeoConstants& geo_constants() const { return geo_consts_; }
    const SpatialSlotConstants& slot_constants(std::size_t t);

private:
    const std::vector<SnapshotGraph>* snapshots_;
    GeoMatrix geo_;
    GeoConstants geo_consts_;
    double radius_km_;
    double epsilon_;
    std::vector<std::optional<SpatialSlotConstants>> slot_consts_;
};

/// Memo of spatial embeddings, keyed by slot. Valid for one set of
/// parameter values: clear it after every optimizer step. `detach`
/// stores values only (no gradient path) — use it for inference passes
/// over many targets, where it keeps memory flat.
struct StepCache {
    std::unordered_map<std::size_t, ad::Var> embeddings;
    bool detach = false;
    void clear() { embeddings.clear(); }
};

struct TargetForward {
    std::size_t target_slot = 0;
    ad::Var spatiotemporal; // fused n x 4d_e representation
    ad::Var demand_norm;    // n x 1 in (0, 1)
    ad::Var demand;         // n x 1 count scale
    ad::Var transfer;       // n x n row-stochastic, empty unless with_od
    ad::Var od_normalized;  // n x n, empty unless with_od
};

/// Runs the three layers for one target slot. Throws
/// InsufficientHistoryError when the channels would reach before slot 0.
/// `with_od` skips the transfer matrix (demand-only pretraining).
TargetForward forward_target(const Model& model, ForwardContext& ctx, StepCache& cache,
                             std::size_t target_slot, bool with_od = true);

/// Ground-truth demand vector (row sums) on the count scale.
Matrix truth_demand(const SnapshotGraph& g);
Matrix truth_od(const SnapshotGraph& g);

/// eta_d * SmoothL1(demand_norm, d/D_max) + eta_o * SmoothL1(G_norm, G/D_max).
ad::Var multitask_loss(const TargetForward& fwd, const SnapshotGraph& truth, double eta_d,
                       double eta_o, double d_max);

Prediction extract_prediction(const TargetForward& fwd);

Prediction predict_target(const Model& model, ForwardContext& ctx, std::size_t target_slot);

} // namespace gallat
