#include "gallat/model.hpp"

#include "gallat/errors.hpp"

namespace gallat {

Model Model::init(const ModelConfig& cfg, Rng& rng) {
    if (cfg.n == 0) throw ContractError("Model: node count must be positive");
    Model m;
    m.cfg = cfg;
    m.tables = EmbeddingTables::init(cfg.n, cfg.features, rng);
    m.spatial = SpatialParams::init(cfg.features.d(), cfg.d_e, rng);
    m.temporal = TemporalParams::init(cfg.features.d_v(), cfg.d_e, rng);
    m.transfer = TransferParams::init(cfg.n, cfg.d_e, rng);
    return m;
}

std::vector<std::pair<std::string, ad::Var>> Model::parameters() const {
    std::vector<std::pair<std::string, ad::Var>> out;
    out.emplace_back("embed.node", tables.node_table);
    out.emplace_back("embed.slot", tables.slot_table);
    out.emplace_back("embed.dow", tables.dow_table);
    out.emplace_back("spatial.proj", spatial.proj);
    out.emplace_back("spatial.attn_proj", spatial.attn_proj);
    out.emplace_back("spatial.attn_vec", spatial.attn_vec);
    static const char* channel_names[] = {"same_tod", "prior_tod", "next_tod", "recent"};
    for (std::size_t c = 0; c < 4; ++c) {
        const std::string base = std::string("temporal.") + channel_names[c];
        out.emplace_back(base + ".key", temporal.channels[c].key);
        out.emplace_back(base + ".query", temporal.channels[c].query);
        out.emplace_back(base + ".value", temporal.channels[c].value);
    }
    out.emplace_back("temporal.fusion.key", temporal.fusion.key);
    out.emplace_back("temporal.fusion.query", temporal.fusion.query);
    out.emplace_back("temporal.fusion.value", temporal.fusion.value);
    out.emplace_back("transfer.demand_w", transfer.demand_w);
    out.emplace_back("transfer.demand_b", transfer.demand_b);
    out.emplace_back("transfer.attn_proj", transfer.attn_proj);
    out.emplace_back("transfer.attn_vec", transfer.attn_vec);
    return out;
}

ForwardContext::ForwardContext(const std::vector<SnapshotGraph>& snapshots, GeoMatrix geo,
                               const ModelConfig& cfg)
    : snapshots_(&snapshots),
      geo_(std::move(geo)),
      radius_km_(cfg.geo_radius_km),
      epsilon_(cfg.epsilon),
      slot_consts_(snapshots.size()) {
    geo_consts_ = make_geo_constants(geo_, radius_km_);
}

const SpatialSlotConstants& ForwardContext::slot_constants(std::size_t t) {
    if (t >= slot_consts_.size()) {
        throw ContractError("ForwardContext: slot " + std::to_string(t) + " out of range");
    }
    if (!slot_consts_[t]) {
        slot_consts_[t] =
            make_spatial_slot_constants((*snapshots_)[t], geo_, radius_km_, epsilon_);
    }
    return *slot_consts_[t];
}

namespace {

ad::Var embedding_at(const Model& model, ForwardContext& ctx, StepCache& cache, std::size_t t) {
    if (auto it = cache.embeddings.find(t); it != cache.embeddings.end()) return it->second;
    const ad::Var features =
        build_features(ctx.snapshots()[t], t, model.tables, model.cfg.features, model.stats);
    ad::Var m = spatial_embed(features, ctx.slot_constants(t), ctx.geo_constants(), model.spatial,
                              model.cfg.leaky_slope);
    if (cache.detach) m = ad::constant(m->value);
    cache.embeddings.emplace(t, m);
    return m;
}

std::vector<ad::Var> gather(const Model& model, ForwardContext& ctx, StepCache& cache,
                            const std::vector<std::size_t>& slots) {
    std::vector<ad::Var> out;
    out.reserve(slots.size());
    for (std::size_t t : slots) out.push_back(embedding_at(model, ctx, cache, t));
    return out;
}

} // namespace

TargetForward forward_target(const Model& model, ForwardContext& ctx, StepCache& cache,
                             std::size_t target_slot, bool with_od) {
    if (target_slot >= ctx.snapshots().size()) {
        throw ContractError("forward_target: target slot " + std::to_string(target_slot) +
                            " beyond snapshot sequence");
    }
    if (target_slot == 0) throw InsufficientHistoryError("forward_target: target slot 0");
    const ChannelSpec spec{model.cfg.history_len, model.cfg.features.slots_per_day,
                           target_slot - 1};
    const ChannelSequences seq = channel_sequences(spec);

    const ad::Var target_features = build_target_features(target_slot, model.cfg.n, model.tables,
                                                          model.cfg.features, model.stats);
    const bool mean = model.cfg.temporal_mean;
    const std::array<ad::Var, 4> channel_out = {
        channel_attend(target_features, gather(model, ctx, cache, seq.same_tod),
                       model.temporal.channels[0], mean),
        channel_attend(target_features, gather(model, ctx, cache, seq.prior_tod),
                       model.temporal.channels[1], mean),
        channel_attend(target_features, gather(model, ctx, cache, seq.next_tod),
                       model.temporal.channels[2], mean),
        channel_attend(target_features, gather(model, ctx, cache, seq.recent),
                       model.temporal.channels[3], mean),
    };

    TargetForward fwd;
    fwd.target_slot = target_slot;
    fwd.spatiotemporal = fuse_channels(target_features, channel_out, model.temporal.fusion);
    auto [norm, counts] = predict_demand(fwd.spatiotemporal, model.transfer, model.d_max);
    fwd.demand_norm = norm;
    fwd.demand = counts;
    if (with_od) {
        fwd.transfer = transfer_probs(fwd.spatiotemporal, model.transfer, model.cfg.leaky_slope);
        fwd.od_normalized = od_norm(fwd.demand_norm, fwd.transfer);
    }
    return fwd;
}

Matrix truth_demand(const SnapshotGraph& g) {
    Matrix d(g.n, 1);
    for (std::size_t i = 0; i < g.n; ++i) d(i, 0) = static_cast<double>(g.out_degree(i));
    return d;
}

Matrix truth_od(const SnapshotGraph& g) {
    Matrix m(g.n, g.n);
    for (std::size_t i = 0; i < g.n * g.n; ++i) {
        m.data()[i] = static_cast<double>(g.counts[i]);
    }
    return m;
}

ad::Var multitask_loss(const TargetForward& fwd, const SnapshotGraph& truth, double eta_d,
                       double eta_o, double d_max) {
    Matrix d = truth_demand(truth);
    for (std::size_t i = 0; i < d.size(); ++i) d.data()[i] /= d_max;
    ad::Var loss = ad::scalar_mul(ad::smooth_l1(fwd.demand_norm, ad::constant(std::move(d))), eta_d);
    if (eta_o != 0.0) {
        if (!fwd.od_normalized) {
            throw ContractError("multitask_loss: forward pass skipped the transfer matrix");
        }
        Matrix g = truth_od(truth);
        for (std::size_t i = 0; i < g.size(); ++i) g.data()[i] /= d_max;
        loss = ad::add(loss, ad::scalar_mul(
                                 ad::smooth_l1(fwd.od_normalized, ad::constant(std::move(g))),
                                 eta_o));
    }
    return loss;
}

Prediction extract_prediction(const TargetForward& fwd) {
    const std::size_t n = fwd.demand->value.rows();
    Prediction p;
    p.demand.resize(n);
    p.demand_norm.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        p.demand[i] = fwd.demand->value(i, 0);
        p.demand_norm[i] = fwd.demand_norm->value(i, 0);
    }
    p.transfer = fwd.transfer->value;
    p.od = predict_od(p.demand, p.transfer);
    return p;
}

Prediction predict_target(const Model& model, ForwardContext& ctx, std::size_t target_slot) {
    StepCache cache;
    return extract_prediction(forward_target(model, ctx, cache, target_slot, true));
}

} // namespace gallat
