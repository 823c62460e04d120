#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gallat/model.hpp"

namespace gallat {

struct TrainConfig {
    std::size_t batch_size = 20;
    std::size_t epochs = 200;
    std::size_t pretrain_epochs = 50;
    std::size_t d_e = 16;
    std::size_t history_len = 7; // P
    double eta_d = 0.8;
    double eta_o = 0.2;
    double learning_rate = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 0;

    // Forwarded model knobs.
    double geo_radius_km = 0.0; // 0 = derive from the grid (1.05x cell diagonal)
    double epsilon = 1e-8;
    double leaky_slope = 0.2;
    bool temporal_mean = false;
    std::size_t node_embed_dim = 8;
    std::size_t slot_embed_dim = 8;
    std::size_t dow_embed_dim = 8;
    std::size_t slots_per_day = 24;
    std::size_t dow0 = 0;
};

/// Per-parameter first/second moment buffers, parallel to the model's
/// parameter registry.
struct AdamState {
    std::vector<Matrix> m;
    std::vector<Matrix> v;
    std::size_t step = 0;

    static AdamState init(const Model& model);
};

/// One bias-corrected Adam update from the gradients currently stored on
/// the parameter nodes.
void adam_step(const std::vector<std::pair<std::string, ad::Var>>& params, AdamState& state,
               const TrainConfig& cfg);

struct EpochRecord {
    std::size_t epoch = 0;  // 1-based within its phase; 0 = phase start probe
    std::string phase;      // "pretrain" | "main"
    double train_loss = 0.0;
    double val_loss = 0.0;
    double seconds = 0.0;
};

struct TrainResult {
    Model model; // best-validation parameters
    AdamState adam;
    std::size_t best_epoch = 0;
    std::string rng_state;
    std::vector<EpochRecord> history;
    double main_initial_val_loss = 0.0;
};

/// Demand-task pretraining followed by joint training, batched over
/// shuffled target slots, deterministic under cfg.seed. Splits the
/// sequence chronologically (evaluation::split) and trains only on
/// train-split targets.
TrainResult train(const std::vector<SnapshotGraph>& data, const GridSpec& grid,
                  const TrainConfig& cfg);

/// Per-parameter element counts keyed by registry name, plus group
/// totals keyed "total.<group>". "total.attention_layers" covers the
/// spatial, temporal and transferring layers (embedding tables are
/// reported separately).
std::map<std::string, std::size_t> count_params(const Model& model);

/// Closed form for the attention-layer total under this project's
/// conventions: 176 d_e^2 + 20 d_e d_v + 2 d d_e + 14 d_e + n.
std::size_t attention_params_closed_form(std::size_t d, std::size_t d_v, std::size_t d_e,
                                         std::size_t n);

// Versioned binary checkpoint: config, grid, normalizers, every
// parameter matrix, Adam state and the rng state. Round-trips bit-exactly.
struct Checkpoint {
    TrainConfig train_cfg;
    GridSpec grid;
    Model model;
    AdamState adam;
    std::size_t best_epoch = 0;
    std::string rng_state;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

void write_history_csv(const std::string& path, const std::vector<EpochRecord>& history,
                       bool with_seconds);

} // namespace gallat
