#include "gallat/evaluation.hpp"

#include <cmath>
#include <fstream>

#include "gallat/errors.hpp"

namespace gallat {

SplitSpec split(std::size_t num_slots, std::size_t slots_per_day) {
    const std::size_t test_count = 14 * slots_per_day;
    if (num_slots <= test_count) {
        throw ContractError("split: need more than 14 days of slots, got " +
                            std::to_string(num_slots));
    }
    const std::size_t usable = num_slots - test_count;
    const std::size_t val_count = usable / 10;
    SplitSpec s;
    s.train_end = usable - val_count;
    s.val_end = usable;
    s.total = num_slots;
    return s;
}

std::optional<MetricValue> metrics(std::span<const double> pred, std::span<const double> truth,
                                   int threshold) {
    if (pred.size() != truth.size()) {
        throw ContractError("metrics: " + std::to_string(pred.size()) + " predictions vs " +
                            std::to_string(truth.size()) + " truths");
    }
    MetricValue v;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (!(truth[i] > threshold)) continue;
        const double err = std::fabs(pred[i] - truth[i]);
        v.mape += err / (truth[i] + 1.0);
        v.mae += err;
        ++v.count;
    }
    if (v.count == 0) return std::nullopt;
    v.mape /= static_cast<double>(v.count);
    v.mae /= static_cast<double>(v.count);
    return v;
}

void MetricAccumulator::add(double pred, double truth) {
    const double err = std::fabs(pred - truth);
    for (std::size_t k = 0; k < kThresholds.size(); ++k) {
        if (truth > kThresholds[k]) {
            buckets_[k].mape_sum += err / (truth + 1.0);
            buckets_[k].mae_sum += err;
            ++buckets_[k].count;
        }
    }
}

void MetricAccumulator::add_all(std::span<const double> pred, std::span<const double> truth) {
    if (pred.size() != truth.size()) {
        throw ContractError("MetricAccumulator: length mismatch");
    }
    for (std::size_t i = 0; i < pred.size(); ++i) add(pred[i], truth[i]);
}

std::optional<MetricValue> MetricAccumulator::at(int threshold) const {
    for (std::size_t k = 0; k < kThresholds.size(); ++k) {
        if (kThresholds[k] == threshold) {
            const Bucket& b = buckets_[k];
            if (b.count == 0) return std::nullopt;
            return MetricValue{b.mape_sum / static_cast<double>(b.count),
                               b.mae_sum / static_cast<double>(b.count), b.count};
        }
    }
    throw ContractError("MetricAccumulator: untracked threshold " + std::to_string(threshold));
}

MetricReport make_report(const std::string& task, const MetricAccumulator& acc) {
    MetricReport r;
    r.task = task;
    for (int k : kThresholds) r.per_threshold[k] = acc.at(k);
    return r;
}

namespace {

std::vector<std::size_t> matching_slots(std::size_t history_end, std::size_t target_slot,
                                        std::size_t l, std::size_t dow0) {
    const std::size_t tod = target_slot % l;
    const std::size_t dow = (target_slot / l + dow0) % 7;
    std::vector<std::size_t> out;
    for (std::size_t t = tod; t < history_end; t += l) {
        if ((t / l + dow0) % 7 == dow) out.push_back(t);
    }
    return out;
}

} // namespace

Matrix ha_baseline_od(const std::vector<SnapshotGraph>& seq, std::size_t history_end,
                      std::size_t target_slot, std::size_t slots_per_day, std::size_t dow0) {
    const auto matches = matching_slots(history_end, target_slot, slots_per_day, dow0);
    if (matches.empty()) {
        throw InsufficientHistoryError("ha_baseline: no matching history for slot " +
                                       std::to_string(target_slot));
    }
    const std::size_t n = seq[matches[0]].n;
    Matrix mean(n, n, 0.0);
    for (std::size_t t : matches) {
        for (std::size_t i = 0; i < n * n; ++i) {
            mean.data()[i] += static_cast<double>(seq[t].counts[i]);
        }
    }
    const double inv = 1.0 / static_cast<double>(matches.size());
    for (std::size_t i = 0; i < mean.size(); ++i) mean.data()[i] *= inv;
    return mean;
}

std::vector<double> ha_baseline_demand(const std::vector<SnapshotGraph>& seq,
                                       std::size_t history_end, std::size_t target_slot,
                                       std::size_t slots_per_day, std::size_t dow0) {
    const auto matches = matching_slots(history_end, target_slot, slots_per_day, dow0);
    if (matches.empty()) {
        throw InsufficientHistoryError("ha_baseline: no matching history for slot " +
                                       std::to_string(target_slot));
    }
    const std::size_t n = seq[matches[0]].n;
    std::vector<double> mean(n, 0.0);
    for (std::size_t t : matches) {
        for (std::size_t i = 0; i < n; ++i) {
            mean[i] += static_cast<double>(seq[t].out_degree(i));
        }
    }
    for (double& x : mean) x /= static_cast<double>(matches.size());
    return mean;
}

EvalSummary evaluate_model(const Model& model, ForwardContext& ctx, const SplitSpec& split) {
    MetricAccumulator demand_acc, od_acc;
    EvalSummary summary;
    StepCache cache;
    cache.detach = true; // parameters are frozen during evaluation
    for (std::size_t target = split.val_end; target < split.total; ++target) {
        Prediction pred;
        try {
            pred = extract_prediction(forward_target(model, ctx, cache, target, true));
        } catch (const InsufficientHistoryError&) {
            ++summary.targets_skipped;
            continue;
        }
        const SnapshotGraph& truth = ctx.snapshots()[target];
        const Matrix d = truth_demand(truth);
        demand_acc.add_all(pred.demand, std::span(d.data(), d.size()));
        const Matrix g = truth_od(truth);
        od_acc.add_all(std::span(pred.od.data(), pred.od.size()), std::span(g.data(), g.size()));
        ++summary.targets_evaluated;
    }
    summary.demand = make_report("demand", demand_acc);
    summary.od = make_report("od", od_acc);
    return summary;
}

EvalSummary evaluate_ha(const std::vector<SnapshotGraph>& seq, const SplitSpec& split,
                        std::size_t slots_per_day, std::size_t dow0) {
    MetricAccumulator demand_acc, od_acc;
    EvalSummary summary;
    for (std::size_t target = split.val_end; target < split.total; ++target) {
        std::vector<double> demand_pred;
        Matrix od_pred;
        try {
            demand_pred = ha_baseline_demand(seq, split.train_end, target, slots_per_day, dow0);
            od_pred = ha_baseline_od(seq, split.train_end, target, slots_per_day, dow0);
        } catch (const InsufficientHistoryError&) {
            ++summary.targets_skipped;
            continue;
        }
        const SnapshotGraph& truth = seq[target];
        const Matrix d = truth_demand(truth);
        demand_acc.add_all(demand_pred, std::span(d.data(), d.size()));
        const Matrix g = truth_od(truth);
        od_acc.add_all(std::span(od_pred.data(), od_pred.size()),
                       std::span(g.data(), g.size()));
        ++summary.targets_evaluated;
    }
    summary.demand = make_report("demand", demand_acc);
    summary.od = make_report("od", od_acc);
    return summary;
}

namespace {

void write_report_lines(std::ostream& out, const MetricReport& r, bool csv) {
    for (const auto& [k, value] : r.per_threshold) {
        const std::string kk = std::to_string(k);
        auto emit = [&](const std::string& metric, const std::string& text) {
            if (csv) {
                out << r.task << ',' << metric << ',' << kk << ',' << text << '\n';
            } else {
                out << r.task << '.' << metric << '.' << kk << " = " << text << '\n';
            }
        };
        if (value) {
            emit("mape", std::to_string(value->mape));
            emit("mae", std::to_string(value->mae));
            emit("count", std::to_string(value->count));
        } else {
            emit("mape", "none");
            emit("mae", "none");
            emit("count", "0");
        }
    }
}

} // namespace

void write_metrics_txt(const std::string& path, const std::vector<MetricReport>& reports) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    for (const MetricReport& r : reports) write_report_lines(out, r, false);
}

void write_metrics_csv(const std::string& path, const std::vector<MetricReport>& reports) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "task,metric,threshold,value\n";
    for (const MetricReport& r : reports) write_report_lines(out, r, true);
}

} // namespace gallat
