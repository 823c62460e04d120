// Batch command-line front end: synth | ingest | train | predict |
// evaluate | params. Every command writes its outputs (plus a JSON run
// manifest) into one --out directory and exits 0 on success. Errors are
// one machine-parseable line on stderr with a per-class exit code:
//   2 usage, 3 io, 4 format, 5 insufficient history, 1 anything else.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "gallat/data.hpp"
#include "gallat/errors.hpp"
#include "gallat/evaluation.hpp"
#include "gallat/training.hpp"

using namespace gallat;
namespace fs = std::filesystem;

#ifndef GALLAT_VERSION
#define GALLAT_VERSION "0.0.0"
#endif

namespace {

struct ManifestInfo {
    std::string command;
    std::string config_path;
    std::uint64_t seed = 0;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
};

void write_manifest(const fs::path& out_dir, const ManifestInfo& info, double seconds) {
    nlohmann::json j;
    j["command"] = info.command;
    j["config"] = info.config_path;
    j["seed"] = info.seed;
    j["inputs"] = info.inputs;
    j["outputs"] = info.outputs;
    j["version"] = GALLAT_VERSION;
    j["duration_seconds"] = seconds;
    const fs::path tmp = out_dir / "manifest.json.tmp";
    const fs::path final_path = out_dir / "manifest.json";
    {
        std::ofstream out(tmp);
        if (!out) throw IoError("cannot open for writing: " + tmp.string());
        out << j.dump(2) << '\n';
    }
    fs::rename(tmp, final_path);
}

struct GridFlags {
    double min_lat = 39.80, min_lon = 116.30, max_lat = 40.00, max_lon = 116.50;
    std::size_t rows = 5, cols = 5;

    void attach(CLI::App* cmd) {
        cmd->add_option("--min-lat", min_lat, "Bounding box south edge (deg)");
        cmd->add_option("--min-lon", min_lon, "Bounding box west edge (deg)");
        cmd->add_option("--max-lat", max_lat, "Bounding box north edge (deg)");
        cmd->add_option("--max-lon", max_lon, "Bounding box east edge (deg)");
        cmd->add_option("--grid-rows", rows, "Grid rows");
        cmd->add_option("--grid-cols", cols, "Grid columns");
    }
    GridSpec spec() const { return GridSpec{min_lat, min_lon, max_lat, max_lon, rows, cols}; }
};

std::string out_file(const fs::path& dir, const char* name) { return (dir / name).string(); }

void export_predictions(const fs::path& dir, std::size_t slot, const Prediction& pred,
                        double od_floor) {
    {
        std::ofstream out(dir / "demand_pred.csv");
        if (!out) throw IoError("cannot open for writing: " + (dir / "demand_pred.csv").string());
        out << "slot,node,value\n";
        char buf[32];
        for (std::size_t i = 0; i < pred.demand.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.10g", pred.demand[i]);
            out << slot << ',' << i << ',' << buf << '\n';
        }
    }
    {
        std::ofstream out(dir / "od_pred.csv");
        if (!out) throw IoError("cannot open for writing: " + (dir / "od_pred.csv").string());
        out << "slot,origin,dest,value\n";
        char buf[32];
        for (std::size_t i = 0; i < pred.od.rows(); ++i) {
            for (std::size_t j = 0; j < pred.od.cols(); ++j) {
                const double v = pred.od(i, j);
                if (v <= od_floor || v == 0.0) continue;
                std::snprintf(buf, sizeof buf, "%.10g", v);
                out << slot << ',' << i << ',' << j << ',' << buf << '\n';
            }
        }
    }
}

int dispatch(CLI::App& app, int argc, char** argv) {
    try {
        app.parse(argc, argv);
        return 0;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error code=usage msg=\"" << e.what() << "\"\n";
        return 2;
    } catch (const InsufficientHistoryError& e) {
        std::cerr << "error code=insufficient_history msg=\"" << e.what() << "\"\n";
        return 5;
    } catch (const FormatError& e) {
        std::cerr << "error code=format msg=\"" << e.what() << "\"\n";
        return 4;
    } catch (const IoError& e) {
        std::cerr << "error code=io msg=\"" << e.what() << "\"\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error code=internal msg=\"" << e.what() << "\"\n";
        return 1;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spatiotemporal OD demand forecasting over snapshot graphs"};
    app.set_version_flag("--version", std::string(GALLAT_VERSION));
    app.require_subcommand(1);
    app.set_config("--config", "", "Flat key=value config file; flags override it");

    std::string out_dir_s = "out";
    app.add_option("--out", out_dir_s, "Output directory")->capture_default_str();
    std::size_t threads = 1;
    app.add_option("--threads", threads, "Worker cap for parallel sections")
        ->capture_default_str();

    // ---- synth ----
    auto* synth_cmd = app.add_subcommand("synth", "Generate a seeded synthetic trip fixture");
    GridFlags synth_grid;
    synth_grid.attach(synth_cmd);
    SynthConfig synth_cfg;
    synth_cmd->add_option("--days", synth_cfg.days, "Days to simulate")->capture_default_str();
    synth_cmd->add_option("--slots-per-day", synth_cfg.slots_per_day, "Slots per day")
        ->capture_default_str();
    synth_cmd->add_option("--dow0", synth_cfg.dow0, "Day-of-week of day 0 (0 = Monday)");
    synth_cmd->add_option("--weekend-scale", synth_cfg.weekend_scale, "Weekend rate multiplier")
        ->capture_default_str();
    synth_cmd->add_option("--rate-scale", synth_cfg.rate_scale, "Global rate multiplier")
        ->capture_default_str();
    std::uint64_t synth_seed = 0;
    synth_cmd->add_option("--seed", synth_seed, "Generator seed")->capture_default_str();

    // ---- ingest ----
    auto* ingest_cmd = app.add_subcommand("ingest", "Bucket a trip CSV into snapshot graphs");
    GridFlags ingest_grid;
    ingest_grid.attach(ingest_cmd);
    std::string trips_path, span_start;
    std::size_t ingest_days = 1;
    std::size_t slot_minutes = 60;
    double utc_offset_hours = 0.0;
    ingest_cmd->add_option("--trips", trips_path, "Trip CSV path")->required();
    ingest_cmd->add_option("--start", span_start, "Span start, `YYYY-MM-DD HH:MM:SS`")->required();
    ingest_cmd->add_option("--days", ingest_days, "Span length in days")->required();
    ingest_cmd->add_option("--slot-minutes", slot_minutes, "Slot length in minutes")
        ->capture_default_str();
    ingest_cmd->add_option("--utc-offset-hours", utc_offset_hours,
                           "Fixed offset the timestamps are written in");

    // ---- train ----
    auto* train_cmd = app.add_subcommand("train", "Train a model on a snapshot CSV");
    GridFlags train_grid;
    train_grid.attach(train_cmd);
    std::string train_snapshots;
    std::size_t train_days = 42;
    TrainConfig train_cfg;
    train_cmd->add_option("--snapshots", train_snapshots, "Snapshot CSV path")->required();
    train_cmd->add_option("--days", train_days, "Days covered by the snapshot CSV")->required();
    train_cmd->add_option("--slots-per-day", train_cfg.slots_per_day, "Slots per day")
        ->capture_default_str();
    train_cmd->add_option("--dow0", train_cfg.dow0, "Day-of-week of day 0 (0 = Monday)");
    train_cmd->add_option("--batch-size", train_cfg.batch_size)->capture_default_str();
    train_cmd->add_option("--epochs", train_cfg.epochs)->capture_default_str();
    train_cmd->add_option("--pretrain-epochs", train_cfg.pretrain_epochs)->capture_default_str();
    train_cmd->add_option("--d-e", train_cfg.d_e, "Embedding width d_e")->capture_default_str();
    train_cmd->add_option("--history-len", train_cfg.history_len, "Channel history length P")
        ->capture_default_str();
    train_cmd->add_option("--eta-d", train_cfg.eta_d, "Demand-task loss weight")
        ->capture_default_str();
    train_cmd->add_option("--eta-o", train_cfg.eta_o, "OD-task loss weight")
        ->capture_default_str();
    train_cmd->add_option("--lr", train_cfg.learning_rate)->capture_default_str();
    train_cmd->add_option("--adam-beta1", train_cfg.adam_beta1)->capture_default_str();
    train_cmd->add_option("--adam-beta2", train_cfg.adam_beta2)->capture_default_str();
    train_cmd->add_option("--adam-eps", train_cfg.adam_eps)->capture_default_str();
    train_cmd->add_option("--seed", train_cfg.seed)->capture_default_str();
    train_cmd->add_option("--geo-radius-km", train_cfg.geo_radius_km,
                          "Geo neighborhood radius; 0 derives 1.05x cell diagonal");
    train_cmd->add_option("--epsilon", train_cfg.epsilon, "Pre-weight denominator guard")
        ->capture_default_str();
    train_cmd->add_option("--leaky-slope", train_cfg.leaky_slope)->capture_default_str();
    train_cmd->add_flag("--temporal-mean", train_cfg.temporal_mean,
                        "Average channel reads over P instead of summing");
    train_cmd->add_option("--node-embed-dim", train_cfg.node_embed_dim)->capture_default_str();
    train_cmd->add_option("--slot-embed-dim", train_cfg.slot_embed_dim)->capture_default_str();
    train_cmd->add_option("--dow-embed-dim", train_cfg.dow_embed_dim)->capture_default_str();

    // ---- predict ----
    auto* predict_cmd = app.add_subcommand("predict", "Export one slot's prediction");
    std::string predict_ckpt, predict_snapshots;
    std::size_t predict_days = 42;
    std::size_t predict_slot = 0;
    double od_floor = 0.0;
    predict_cmd->add_option("--checkpoint", predict_ckpt)->required();
    predict_cmd->add_option("--snapshots", predict_snapshots)->required();
    predict_cmd->add_option("--days", predict_days, "Days covered by the snapshot CSV")
        ->required();
    predict_cmd->add_option("--slot", predict_slot, "Target slot index")->required();
    predict_cmd->add_option("--od-floor", od_floor, "Skip OD entries at or below this value")
        ->capture_default_str();

    // ---- evaluate ----
    auto* eval_cmd = app.add_subcommand("evaluate", "Test-split metrics for a checkpoint");
    std::string eval_ckpt, eval_snapshots, baseline;
    std::size_t eval_days = 42;
    eval_cmd->add_option("--checkpoint", eval_ckpt)->required();
    eval_cmd->add_option("--snapshots", eval_snapshots)->required();
    eval_cmd->add_option("--days", eval_days, "Days covered by the snapshot CSV")->required();
    eval_cmd->add_option("--baseline", baseline, "Also report a baseline (`ha`)");

    // ---- params ----
    auto* params_cmd = app.add_subcommand("params", "Parameter-count breakdown of a checkpoint");
    std::string params_ckpt;
    params_cmd->add_option("--checkpoint", params_ckpt)->required();

    (void)threads; // reserved: all shipped paths run in one context

    auto run_command = [&](const std::string& name, auto&& body) {
        const auto t0 = std::chrono::steady_clock::now();
        const fs::path out_dir(out_dir_s);
        fs::create_directories(out_dir);
        ManifestInfo info;
        info.command = name;
        const CLI::Option* copt = app.get_config_ptr();
        if (copt != nullptr && copt->count() > 0) info.config_path = copt->results().front();
        body(out_dir, info);
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        write_manifest(out_dir, info, seconds);
    };

    synth_cmd->callback([&] {
        run_command("synth", [&](const fs::path& dir, ManifestInfo& info) {
            synth_cfg.grid = synth_grid.spec();
            synth_cfg.seed = synth_seed;
            info.seed = synth_seed;
            const SynthResult result = synth_generate(synth_cfg);
            write_snapshot_csv(out_file(dir, "snapshots.csv"), result.snapshots);
            write_rates_csv(out_file(dir, "rates.csv"), result.config);
            info.outputs = {out_file(dir, "snapshots.csv"), out_file(dir, "rates.csv")};
            std::cout << "generated " << result.snapshots.size() << " slots over "
                      << synth_cfg.grid.cell_count() << " cells\n";
        });
    });

    ingest_cmd->callback([&] {
        run_command("ingest", [&](const fs::path& dir, ManifestInfo& info) {
            const auto offset = static_cast<std::int64_t>(utc_offset_hours * 3600.0);
            std::int64_t begin = 0;
            if (!parse_timestamp(span_start, offset, begin)) {
                throw FormatError("ingest: cannot parse --start `" + span_start + "`");
            }
            const std::int64_t end = begin + static_cast<std::int64_t>(ingest_days) * 86400;
            IngestReport report;
            const auto seq = ingest_csv(trips_path, ingest_grid.spec(), slot_minutes * 60, begin,
                                        end, offset, &report);
            write_snapshot_csv(out_file(dir, "snapshots.csv"), seq);
            info.inputs = {trips_path};
            info.outputs = {out_file(dir, "snapshots.csv")};
            std::cout << "parsed=" << report.parsed << " malformed=" << report.malformed
                      << " dropped_bbox=" << report.dropped_bbox
                      << " dropped_time=" << report.dropped_time
                      << " dow0=" << day_of_week_mon0(begin + offset) << '\n';
        });
    });

    train_cmd->callback([&] {
        run_command("train", [&](const fs::path& dir, ManifestInfo& info) {
            const GridSpec grid = train_grid.spec();
            const std::size_t num_slots = train_days * train_cfg.slots_per_day;
            const auto seq = read_snapshot_csv(train_snapshots, grid.cell_count(), num_slots);
            const TrainResult result = train(seq, grid, train_cfg);

            Checkpoint ckpt;
            ckpt.train_cfg = train_cfg;
            ckpt.grid = grid;
            ckpt.model = result.model;
            ckpt.adam = result.adam;
            ckpt.best_epoch = result.best_epoch;
            ckpt.rng_state = result.rng_state;
            save_checkpoint(out_file(dir, "checkpoint.bin"), ckpt);
            write_history_csv(out_file(dir, "train_log.csv"), result.history, true);
            write_history_csv(out_file(dir, "loss_history.csv"), result.history, false);
            info.seed = train_cfg.seed;
            info.inputs = {train_snapshots};
            info.outputs = {out_file(dir, "checkpoint.bin"), out_file(dir, "train_log.csv"),
                            out_file(dir, "loss_history.csv")};
            std::cout << "best_epoch=" << result.best_epoch
                      << " main_initial_val_loss=" << result.main_initial_val_loss << '\n';
        });
    });

    predict_cmd->callback([&] {
        run_command("predict", [&](const fs::path& dir, ManifestInfo& info) {
            const Checkpoint ckpt = load_checkpoint(predict_ckpt);
            const std::size_t num_slots = predict_days * ckpt.train_cfg.slots_per_day;
            const auto seq =
                read_snapshot_csv(predict_snapshots, ckpt.grid.cell_count(), num_slots);
            ForwardContext ctx(seq, geo_matrix(ckpt.grid), ckpt.model.cfg);
            const Prediction pred = predict_target(ckpt.model, ctx, predict_slot);
            export_predictions(dir, predict_slot, pred, od_floor);
            info.seed = ckpt.train_cfg.seed;
            info.inputs = {predict_ckpt, predict_snapshots};
            info.outputs = {out_file(dir, "demand_pred.csv"), out_file(dir, "od_pred.csv")};
            std::cout << "predicted slot " << predict_slot << '\n';
        });
    });

    eval_cmd->callback([&] {
        run_command("evaluate", [&](const fs::path& dir, ManifestInfo& info) {
            if (!baseline.empty() && baseline != "ha") {
                throw ContractError("evaluate: unknown baseline `" + baseline + "`");
            }
            const Checkpoint ckpt = load_checkpoint(eval_ckpt);
            const std::size_t num_slots = eval_days * ckpt.train_cfg.slots_per_day;
            const auto seq = read_snapshot_csv(eval_snapshots, ckpt.grid.cell_count(), num_slots);
            const SplitSpec sp = split(seq.size(), ckpt.train_cfg.slots_per_day);
            ForwardContext ctx(seq, geo_matrix(ckpt.grid), ckpt.model.cfg);
            const EvalSummary model_summary = evaluate_model(ckpt.model, ctx, sp);
            write_metrics_txt(out_file(dir, "metrics.txt"),
                              {model_summary.demand, model_summary.od});
            write_metrics_csv(out_file(dir, "metrics.csv"),
                              {model_summary.demand, model_summary.od});
            info.seed = ckpt.train_cfg.seed;
            info.inputs = {eval_ckpt, eval_snapshots};
            info.outputs = {out_file(dir, "metrics.txt"), out_file(dir, "metrics.csv")};
            auto show = [](const char* who, const EvalSummary& s) {
                const auto& od0 = s.od.per_threshold.at(0);
                const auto& d0 = s.demand.per_threshold.at(0);
                std::cout << who << ": od.mape.0=" << (od0 ? std::to_string(od0->mape) : "none")
                          << " demand.mape.0=" << (d0 ? std::to_string(d0->mape) : "none")
                          << " targets=" << s.targets_evaluated << '\n';
            };
            show("model", model_summary);
            if (baseline == "ha") {
                const EvalSummary ha = evaluate_ha(seq, sp, ckpt.train_cfg.slots_per_day,
                                                   ckpt.train_cfg.dow0);
                write_metrics_txt(out_file(dir, "baseline_ha_metrics.txt"), {ha.demand, ha.od});
                write_metrics_csv(out_file(dir, "baseline_ha_metrics.csv"), {ha.demand, ha.od});
                info.outputs.push_back(out_file(dir, "baseline_ha_metrics.txt"));
                info.outputs.push_back(out_file(dir, "baseline_ha_metrics.csv"));
                show("ha", ha);
            }
        });
    });

    params_cmd->callback([&] {
        run_command("params", [&](const fs::path& dir, ManifestInfo& info) {
            const Checkpoint ckpt = load_checkpoint(params_ckpt);
            const auto counts = count_params(ckpt.model);
            std::ofstream out(dir / "params.txt");
            if (!out) throw IoError("cannot open for writing: " + (dir / "params.txt").string());
            for (const auto& [name, count] : counts) {
                std::cout << name << " = " << count << '\n';
                out << name << " = " << count << '\n';
            }
            const ModelConfig& mc = ckpt.model.cfg;
            const std::size_t closed = attention_params_closed_form(
                mc.features.d(), mc.features.d_v(), mc.d_e, mc.n);
            std::cout << "closed_form.attention_layers = " << closed << '\n';
            out << "closed_form.attention_layers = " << closed << '\n';
            info.seed = ckpt.train_cfg.seed;
            info.inputs = {params_ckpt};
            info.outputs = {out_file(dir, "params.txt")};
        });
    });

    return dispatch(app, argc, argv);
}
