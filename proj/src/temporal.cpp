#include "gallat/temporal.hpp"

#include <cmath>
#include <string>

#include "gallat/errors.hpp"

namespace gallat {

namespace {

Matrix kaiming_uniform(std::size_t rows, std::size_t cols, std::size_t fan_in, Rng& rng) {
    const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-bound, bound);
    return m;
}

ChannelParams init_channel(std::size_t d_v, std::size_t width, Rng& rng) {
    ChannelParams p;
    p.key = ad::param(kaiming_uniform(width, width, width, rng));
    p.query = ad::param(kaiming_uniform(d_v, width, d_v, rng));
    p.value = ad::param(kaiming_uniform(width, width, width, rng));
    return p;
}

// One scaled dot-product read: softmax(Q K_t^T / sqrt(width)) V_t.
ad::Var attention_read(const ad::Var& queries, const ad::Var& hist, const ChannelParams& params,
                       double inv_sqrt_width) {
    const ad::Var keys = ad::matmul(hist, params.key);
    const ad::Var logits = ad::scalar_mul(ad::matmul(queries, ad::transpose(keys)), inv_sqrt_width);
    return ad::matmul(ad::row_softmax(logits), ad::matmul(hist, params.value));
}

} // namespace

ChannelSequences channel_sequences(const ChannelSpec& spec) {
    const std::size_t P = spec.history_len;
    const std::size_t l = spec.slots_per_day;
    const std::size_t T = spec.current;
    if (P < 1) throw ContractError("channel_sequences: history length must be >= 1");
    if (l < 2) throw ContractError("channel_sequences: need at least 2 slots per day");
    // prior_tod reaches back furthest (T - l*P); recent needs T - P + 1.
    if (T < l * P || T + 1 < P) {
        throw InsufficientHistoryError("channel_sequences: slot " + std::to_string(T) +
                                       " needs history through slot " +
                                       std::to_string(static_cast<long>(l) * static_cast<long>(P)));
    }
    ChannelSequences seq;
    for (std::size_t p = 1; p <= P; ++p) {
        seq.same_tod.push_back(T - l * p + 1);
        seq.prior_tod.push_back(T - l * p);
        seq.next_tod.push_back(T - l * p + 2);
    }
    for (std::size_t t = T - P + 1; t <= T; ++t) seq.recent.push_back(t);
    return seq;
}

TemporalParams TemporalParams::init(std::size_t d_v, std::size_t d_e, Rng& rng) {
    const std::size_t width = 4 * d_e;
    TemporalParams p;
    for (auto& ch : p.channels) ch = init_channel(d_v, width, rng);
    p.fusion = init_channel(d_v, width, rng);
    return p;
}

ad::Var channel_attend(const ad::Var& target_features, const std::vector<ad::Var>& history,
                       const ChannelParams& params, bool mean_over_slots) {
    if (history.empty()) throw ContractError("channel_attend: empty history");
    const std::size_t width = params.key->value.rows();
    for (const ad::Var& m : history) {
        if (m->value.cols() != width || m->value.rows() != target_features->value.rows()) {
            throw DimensionError("channel_attend: history " + m->value.shape_str() +
                                 " vs width " + std::to_string(width));
        }
    }
    const double inv_sqrt_width = 1.0 / std::sqrt(static_cast<double>(width));
    const ad::Var queries = ad::matmul(target_features, params.query);
    ad::Var acc = attention_read(queries, history[0], params, inv_sqrt_width);
    for (std::size_t i = 1; i < history.size(); ++i) {
        acc = ad::add(acc, attention_read(queries, history[i], params, inv_sqrt_width));
    }
    if (mean_over_slots) {
        acc = ad::scalar_mul(acc, 1.0 / static_cast<double>(history.size()));
    }
    return acc;
}

ad::Var fuse_channels(const ad::Var& target_features, const std::array<ad::Var, 4>& channel_outputs,
                      const ChannelParams& fusion) {
    std::vector<ad::Var> hist(channel_outputs.begin(), channel_outputs.end());
    return channel_attend(target_features, hist, fusion, false);
}

} // namespace gallat
