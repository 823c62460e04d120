#include "gallat/training.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>

#include "gallat/errors.hpp"
#include "gallat/evaluation.hpp"

namespace gallat {

namespace {

ModelConfig model_config_from(const TrainConfig& cfg, const GridSpec& grid) {
    ModelConfig mc;
    mc.n = grid.cell_count();
    mc.features.node_embed_dim = cfg.node_embed_dim;
    mc.features.slot_embed_dim = cfg.slot_embed_dim;
    mc.features.dow_embed_dim = cfg.dow_embed_dim;
    mc.features.slots_per_day = cfg.slots_per_day;
    mc.features.dow0 = cfg.dow0;
    mc.features.grid_cols = grid.n_cols;
    mc.d_e = cfg.d_e;
    mc.history_len = cfg.history_len;
    mc.geo_radius_km = cfg.geo_radius_km > 0.0 ? cfg.geo_radius_km : default_geo_radius_km(grid);
    mc.epsilon = cfg.epsilon;
    mc.leaky_slope = cfg.leaky_slope;
    mc.temporal_mean = cfg.temporal_mean;
    return mc;
}

std::vector<Matrix> copy_values(const std::vector<std::pair<std::string, ad::Var>>& params) {
    std::vector<Matrix> out;
    out.reserve(params.size());
    for (const auto& [name, p] : params) out.push_back(p->value);
    return out;
}

void restore_values(const std::vector<std::pair<std::string, ad::Var>>& params,
                    const std::vector<Matrix>& values) {
    for (std::size_t i = 0; i < params.size(); ++i) params[i].second->value = values[i];
}

} // namespace

AdamState AdamState::init(const Model& model) {
    AdamState s;
    for (const auto& [name, p] : model.parameters()) {
        s.m.push_back(Matrix::zeros(p->value.rows(), p->value.cols()));
        s.v.push_back(Matrix::zeros(p->value.rows(), p->value.cols()));
    }
    return s;
}

void adam_step(const std::vector<std::pair<std::string, ad::Var>>& params, AdamState& state,
               const TrainConfig& cfg) {
    if (params.size() != state.m.size()) {
        throw ContractError("adam_step: optimizer state does not match parameter registry");
    }
    ++state.step;
    const double b1 = cfg.adam_beta1, b2 = cfg.adam_beta2;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
    for (std::size_t p = 0; p < params.size(); ++p) {
        ad::Node& node = *params[p].second;
        if (node.grad.size() != node.value.size()) {
            throw ContractError("adam_step: missing gradient for " + params[p].first);
        }
        double* m = state.m[p].data();
        double* v = state.v[p].data();
        double* w = node.value.data();
        const double* g = node.grad.data();
        for (std::size_t i = 0; i < node.value.size(); ++i) {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            w[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.adam_eps);
        }
    }
}

TrainResult train(const std::vector<SnapshotGraph>& data, const GridSpec& grid,
                  const TrainConfig& cfg) {
    if (cfg.batch_size == 0) throw ContractError("train: batch size must be >= 1");
    const SplitSpec sp = split(data.size(), cfg.slots_per_day);
    const std::size_t first_target = cfg.slots_per_day * cfg.history_len + 1;

    std::vector<std::size_t> train_targets, val_targets;
    for (std::size_t t = first_target; t < sp.train_end; ++t) train_targets.push_back(t);
    for (std::size_t t = std::max(first_target, sp.train_end); t < sp.val_end; ++t) {
        val_targets.push_back(t);
    }
    if (train_targets.empty()) {
        throw InsufficientHistoryError(
            "train: no target slot has full channel history inside the training split");
    }

    const ModelConfig mcfg = model_config_from(cfg, grid);
    Rng rng(cfg.seed);
    Model model = Model::init(mcfg, rng);
    model.stats = FeatureStats::compute(data, 0, sp.train_end, mcfg.features);
    double max_out = 0.0;
    for (std::size_t t = 0; t < sp.train_end; ++t) {
        for (std::size_t i = 0; i < data[t].n; ++i) {
            max_out = std::max(max_out, static_cast<double>(data[t].out_degree(i)));
        }
    }
    model.d_max = std::max(1.0, max_out);

    ForwardContext ctx(data, geo_matrix(grid), mcfg);
    const auto params = model.parameters();
    AdamState adam = AdamState::init(model);

    const double nan = std::numeric_limits<double>::quiet_NaN();

    auto validation_loss = [&](double eta_d, double eta_o) {
        if (val_targets.empty()) return nan;
        StepCache cache;
        cache.detach = true;
        double total = 0.0;
        for (std::size_t t : val_targets) {
            const TargetForward fwd = forward_target(model, ctx, cache, t, eta_o != 0.0);
            total += ad::scalar_value(multitask_loss(fwd, data[t], eta_d, eta_o, model.d_max));
        }
        return total / static_cast<double>(val_targets.size());
    };

    auto run_epoch = [&](double eta_d, double eta_o) {
        rng.shuffle(train_targets);
        const bool with_od = eta_o != 0.0;
        double total = 0.0;
        for (std::size_t start = 0; start < train_targets.size(); start += cfg.batch_size) {
            const std::size_t stop = std::min(start + cfg.batch_size, train_targets.size());
            StepCache cache;
            ad::Var batch_loss;
            for (std::size_t k = start; k < stop; ++k) {
                const std::size_t t = train_targets[k];
                const TargetForward fwd = forward_target(model, ctx, cache, t, with_od);
                const ad::Var loss = multitask_loss(fwd, data[t], eta_d, eta_o, model.d_max);
                batch_loss = batch_loss ? ad::add(batch_loss, loss) : loss;
            }
            const auto count = static_cast<double>(stop - start);
            batch_loss = ad::scalar_mul(batch_loss, 1.0 / count);
            for (const auto& [name, p] : params) ad::zero_grad(p);
            ad::backward(batch_loss);
            adam_step(params, adam, cfg);
            total += ad::scalar_value(batch_loss) * count;
        }
        return total / static_cast<double>(train_targets.size());
    };

    TrainResult result;
    double best_val = std::numeric_limits<double>::infinity();
    std::vector<Matrix> best_values = copy_values(params);
    AdamState best_adam = adam;
    std::string best_rng = rng.save_state();
    std::size_t best_epoch = 0;
    bool have_best = false;

    auto timed = [&](auto&& fn) {
        const auto t0 = std::chrono::steady_clock::now();
        fn();
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };

    for (std::size_t epoch = 1; epoch <= cfg.pretrain_epochs; ++epoch) {
        EpochRecord rec{epoch, "pretrain", 0.0, 0.0, 0.0};
        rec.seconds = timed([&] {
            rec.train_loss = run_epoch(1.0, 0.0);
            rec.val_loss = validation_loss(1.0, 0.0);
        });
        result.history.push_back(rec);
    }

    {
        EpochRecord rec{0, "main", nan, 0.0, 0.0};
        rec.seconds = timed([&] { rec.val_loss = validation_loss(cfg.eta_d, cfg.eta_o); });
        result.main_initial_val_loss = rec.val_loss;
        result.history.push_back(rec);
    }

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        EpochRecord rec{epoch, "main", 0.0, 0.0, 0.0};
        rec.seconds = timed([&] {
            rec.train_loss = run_epoch(cfg.eta_d, cfg.eta_o);
            rec.val_loss = validation_loss(cfg.eta_d, cfg.eta_o);
        });
        result.history.push_back(rec);
        if (!val_targets.empty() && rec.val_loss < best_val) {
            best_val = rec.val_loss;
            best_values = copy_values(params);
            best_adam = adam;
            best_rng = rng.save_state();
            best_epoch = epoch;
            have_best = true;
        }
    }

    if (!have_best) {
        best_values = copy_values(params);
        best_adam = adam;
        best_rng = rng.save_state();
        best_epoch = cfg.epochs;
    }
    restore_values(params, best_values);
    result.model = model;
    result.adam = std::move(best_adam);
    result.best_epoch = best_epoch;
    result.rng_state = best_rng;
    return result;
}

std::map<std::string, std::size_t> count_params(const Model& model) {
    std::map<std::string, std::size_t> out;
    std::size_t embeddings = 0, spatial = 0, temporal = 0, transfer = 0;
    for (const auto& [name, p] : model.parameters()) {
        const std::size_t count = p->value.size();
        out[name] = count;
        if (name.starts_with("embed.")) embeddings += count;
        else if (name.starts_with("spatial.")) spatial += count;
        else if (name.starts_with("temporal.")) temporal += count;
        else if (name.starts_with("transfer.")) transfer += count;
    }
    out["total.embeddings"] = embeddings;
    out["total.spatial"] = spatial;
    out["total.temporal"] = temporal;
    out["total.transfer"] = transfer;
    out["total.attention_layers"] = spatial + temporal + transfer;
    out["total.all"] = embeddings + spatial + temporal + transfer;
    return out;
}

std::size_t attention_params_closed_form(std::size_t d, std::size_t d_v, std::size_t d_e,
                                         std::size_t n) {
    return 176 * d_e * d_e + 20 * d_e * d_v + 2 * d * d_e + 14 * d_e + n;
}

// ---------------------------------------------------------------------
// Checkpoint serialization
// ---------------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'G', 'L', 'A', 'T', 'C', 'K', 'P', '1'};

void put_u64(std::ostream& out, std::uint64_t v) {
    char buf[8];
    std::memcpy(buf, &v, 8);
    out.write(buf, 8);
}

void put_f64(std::ostream& out, double v) {
    char buf[8];
    std::memcpy(buf, &v, 8);
    out.write(buf, 8);
}

void put_string(std::ostream& out, const std::string& s) {
    put_u64(out, s.size());
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

void put_matrix(std::ostream& out, const Matrix& m) {
    put_u64(out, m.rows());
    put_u64(out, m.cols());
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(m.size() * sizeof(double)));
}

std::uint64_t get_u64(std::istream& in) {
    char buf[8];
    in.read(buf, 8);
    if (!in) throw FormatError("checkpoint: truncated");
    std::uint64_t v;
    std::memcpy(&v, buf, 8);
    return v;
}

double get_f64(std::istream& in) {
    char buf[8];
    in.read(buf, 8);
    if (!in) throw FormatError("checkpoint: truncated");
    double v;
    std::memcpy(&v, buf, 8);
    return v;
}

std::string get_string(std::istream& in) {
    const std::uint64_t len = get_u64(in);
    std::string s(len, '\0');
    in.read(s.data(), static_cast<std::streamsize>(len));
    if (!in) throw FormatError("checkpoint: truncated string");
    return s;
}

Matrix get_matrix(std::istream& in) {
    const std::uint64_t rows = get_u64(in);
    const std::uint64_t cols = get_u64(in);
    Matrix m(rows, cols);
    in.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(m.size() * sizeof(double)));
    if (!in) throw FormatError("checkpoint: truncated matrix");
    return m;
}

void put_train_config(std::ostream& out, const TrainConfig& c) {
    put_u64(out, c.batch_size);
    put_u64(out, c.epochs);
    put_u64(out, c.pretrain_epochs);
    put_u64(out, c.d_e);
    put_u64(out, c.history_len);
    put_f64(out, c.eta_d);
    put_f64(out, c.eta_o);
    put_f64(out, c.learning_rate);
    put_f64(out, c.adam_beta1);
    put_f64(out, c.adam_beta2);
    put_f64(out, c.adam_eps);
    put_u64(out, c.seed);
    put_f64(out, c.geo_radius_km);
    put_f64(out, c.epsilon);
    put_f64(out, c.leaky_slope);
    put_u64(out, c.temporal_mean ? 1 : 0);
    put_u64(out, c.node_embed_dim);
    put_u64(out, c.slot_embed_dim);
    put_u64(out, c.dow_embed_dim);
    put_u64(out, c.slots_per_day);
    put_u64(out, c.dow0);
}

TrainConfig get_train_config(std::istream& in) {
    TrainConfig c;
    c.batch_size = get_u64(in);
    c.epochs = get_u64(in);
    c.pretrain_epochs = get_u64(in);
    c.d_e = get_u64(in);
    c.history_len = get_u64(in);
    c.eta_d = get_f64(in);
    c.eta_o = get_f64(in);
    c.learning_rate = get_f64(in);
    c.adam_beta1 = get_f64(in);
    c.adam_beta2 = get_f64(in);
    c.adam_eps = get_f64(in);
    c.seed = get_u64(in);
    c.geo_radius_km = get_f64(in);
    c.epsilon = get_f64(in);
    c.leaky_slope = get_f64(in);
    c.temporal_mean = get_u64(in) != 0;
    c.node_embed_dim = get_u64(in);
    c.slot_embed_dim = get_u64(in);
    c.dow_embed_dim = get_u64(in);
    c.slots_per_day = get_u64(in);
    c.dow0 = get_u64(in);
    return c;
}

} // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out.write(kMagic, 8);
    put_train_config(out, ckpt.train_cfg);
    put_f64(out, ckpt.grid.min_lat);
    put_f64(out, ckpt.grid.min_lon);
    put_f64(out, ckpt.grid.max_lat);
    put_f64(out, ckpt.grid.max_lon);
    put_u64(out, ckpt.grid.n_rows);
    put_u64(out, ckpt.grid.n_cols);
    put_f64(out, ckpt.model.d_max);
    const FeatureStats& s = ckpt.model.stats;
    for (double v : {s.row_mean, s.row_std, s.col_mean, s.col_std, s.out_mean, s.out_std,
                     s.in_mean, s.in_std}) {
        put_f64(out, v);
    }
    const auto params = ckpt.model.parameters();
    put_u64(out, params.size());
    for (const auto& [name, p] : params) {
        put_string(out, name);
        put_matrix(out, p->value);
    }
    put_u64(out, ckpt.adam.step);
    for (std::size_t i = 0; i < params.size(); ++i) {
        put_matrix(out, ckpt.adam.m[i]);
        put_matrix(out, ckpt.adam.v[i]);
    }
    put_u64(out, ckpt.best_epoch);
    put_string(out, ckpt.rng_state);
    if (!out) throw IoError("write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0) {
        throw FormatError(path + ": not a checkpoint file");
    }
    Checkpoint ckpt;
    ckpt.train_cfg = get_train_config(in);
    ckpt.grid.min_lat = get_f64(in);
    ckpt.grid.min_lon = get_f64(in);
    ckpt.grid.max_lat = get_f64(in);
    ckpt.grid.max_lon = get_f64(in);
    ckpt.grid.n_rows = get_u64(in);
    ckpt.grid.n_cols = get_u64(in);

    const ModelConfig mcfg = model_config_from(ckpt.train_cfg, ckpt.grid);
    Rng scratch(0);
    ckpt.model = Model::init(mcfg, scratch);
    ckpt.model.d_max = get_f64(in);
    FeatureStats& s = ckpt.model.stats;
    s.row_mean = get_f64(in);
    s.row_std = get_f64(in);
    s.col_mean = get_f64(in);
    s.col_std = get_f64(in);
    s.out_mean = get_f64(in);
    s.out_std = get_f64(in);
    s.in_mean = get_f64(in);
    s.in_std = get_f64(in);

    const auto params = ckpt.model.parameters();
    const std::uint64_t count = get_u64(in);
    if (count != params.size()) {
        throw FormatError(path + ": parameter count mismatch");
    }
    for (const auto& [name, p] : params) {
        const std::string stored = get_string(in);
        if (stored != name) {
            throw FormatError(path + ": expected parameter " + name + ", found " + stored);
        }
        Matrix m = get_matrix(in);
        if (!m.same_shape(p->value)) {
            throw FormatError(path + ": shape mismatch for " + name);
        }
        p->value = std::move(m);
    }
    ckpt.adam.step = get_u64(in);
    for (std::size_t i = 0; i < params.size(); ++i) {
        ckpt.adam.m.push_back(get_matrix(in));
        ckpt.adam.v.push_back(get_matrix(in));
    }
    ckpt.best_epoch = get_u64(in);
    ckpt.rng_state = get_string(in);
    return ckpt;
}

void write_history_csv(const std::string& path, const std::vector<EpochRecord>& history,
                       bool with_seconds) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << (with_seconds ? "epoch,phase,train_loss,val_loss,seconds\n"
                         : "epoch,phase,train_loss,val_loss\n");
    char buf[64];
    auto fmt = [&](double v) -> std::string {
        if (std::isnan(v)) return "";
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return buf;
    };
    for (const EpochRecord& r : history) {
        out << r.epoch << ',' << r.phase << ',' << fmt(r.train_loss) << ',' << fmt(r.val_loss);
        if (with_seconds) {
            std::snprintf(buf, sizeof buf, "%.3f", r.seconds);
            out << ',' << buf;
        }
        out << '\n';
    }
}

} // namespace gallat
