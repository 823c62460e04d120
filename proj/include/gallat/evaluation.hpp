#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gallat/model.hpp"

namespace gallat {

/// Chronological split: [0, train_end) train, [train_end, val_end)
/// validation, [val_end, total) test. Test is the last 14 days;
/// validation the last 10% (floor) of what remains.
struct SplitSpec {
    std::size_t train_end = 0;
    std::size_t val_end = 0;
    std::size_t total = 0;
};

SplitSpec split(std::size_t num_slots, std::size_t slots_per_day);

inline constexpr std::array<int, 3> kThresholds{0, 3, 5};

struct MetricValue {
    double mape = 0.0;
    double mae = 0.0;
    std::size_t count = 0;
};

/// MAPE/MAE over instances with truth strictly above the threshold;
/// MAPE uses the (truth + 1) denominator. nullopt when nothing
/// qualifies — deliberately distinct from a zero error.
std::optional<MetricValue> metrics(std::span<const double> pred, std::span<const double> truth,
                                   int threshold);

/// Instance-streaming accumulation over all three thresholds.
class MetricAccumulator {
public:
    void add(double pred, double truth);
    void add_all(std::span<const double> pred, std::span<const double> truth);
    std::optional<MetricValue> at(int threshold) const;

private:
    struct Bucket {
        double mape_sum = 0.0;
        double mae_sum = 0.0;
        std::size_t count = 0;
    };
    std::array<Bucket, kThresholds.size()> buckets_;
};

struct MetricReport {
    std::string task; // "demand" | "od"
    std::map<int, std::optional<MetricValue>> per_threshold;
};

MetricReport make_report(const std::string& task, const MetricAccumulator& acc);

/// History-average baseline: element-wise mean over history slots (all
/// before history_end) sharing the target's time of day and day of week.
/// Throws InsufficientHistoryError when no slot matches.
Matrix ha_baseline_od(const std::vector<SnapshotGraph>& seq, std::size_t history_end,
                      std::size_t target_slot, std::size_t slots_per_day, std::size_t dow0);
std::vector<double> ha_baseline_demand(const std::vector<SnapshotGraph>& seq,
                                       std::size_t history_end, std::size_t target_slot,
                                       std::size_t slots_per_day, std::size_t dow0);

struct EvalSummary {
    MetricReport demand;
    MetricReport od;
    std::size_t targets_evaluated = 0;
    std::size_t targets_skipped = 0; // insufficient history
};

/// Test-split evaluation of a trained model. Spatial embeddings are
/// shared across targets (parameters are frozen here).
EvalSummary evaluate_model(const Model& model, ForwardContext& ctx, const SplitSpec& split);

/// Same protocol for the history-average baseline; its history is the
/// train split.
EvalSummary evaluate_ha(const std::vector<SnapshotGraph>& seq, const SplitSpec& split,
                        std::size_t slots_per_day, std::size_t dow0);

void write_metrics_txt(const std::string& path, const std::vector<MetricReport>& reports);
void write_metrics_csv(const std::string& path, const std::vector<MetricReport>& reports);

} // namespace gallat
