#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "gallat/autodiff.hpp"
#include "gallat/rng.hpp"

namespace gallat {

/// History layout for the four temporal channels anchored at current
/// slot T (the prediction target is T + 1).
struct ChannelSpec {
    std::size_t history_len = 7; // P, slots per channel
    std::size_t slots_per_day = 24;
    std::size_t current = 0; // T
};

/// Slot indices read by each channel, in generation order:
///   same_tod:  T - l*p + 1, the target's time of day on past days
///   prior_tod: T - l*p     (one slot earlier each day)
///   next_tod:  T - l*p + 2 (one slot later each day)
///   recent:    T - P + 1 ... T
struct ChannelSequences {
    std::vector<std::size_t> same_tod;
    std::vector<std::size_t> prior_tod;
    std::vector<std::size_t> next_tod;
    std::vector<std::size_t> recent;
};

/// Throws InsufficientHistoryError when any index would fall before
/// slot 0 (callers skip such targets rather than pad).
ChannelSequences channel_sequences(const ChannelSpec& spec);

struct ChannelParams {
    ad::Var key;   // 4d_e x 4d_e
    ad::Var query; // d_v x 4d_e
    ad::Var value; // 4d_e x 4d_e
};

struct TemporalParams {
    std::array<ChannelParams, 4> channels;
    ChannelParams fusion;

    static TemporalParams init(std::size_t d_v, std::size_t d_e, Rng& rng);
};

/// Scaled dot-product read of each historical embedding matrix against
/// the target-slot features, summed over the P slots. `mean_over_slots`
/// divides by P instead (off by default: the sum is the written form,
/// whose scale grows with P).
ad::Var channel_attend(const ad::Var& target_features, const std::vector<ad::Var>& history,
                       const ChannelParams& params, bool mean_over_slots = false);

/// Same attention form across the four channel outputs; returns the
/// fused n x 4d_e spatiotemporal representation.
ad::Var fuse_channels(const ad::Var& target_features, const std::array<ad::Var, 4>& channel_outputs,
                      const ChannelParams& fusion);

} // namespace gallat
