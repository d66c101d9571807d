#include "lesets/train.hpp"

#include "lesets/csv.hpp"
#include "lesets/optimizer.hpp"
#include "lesets/parallel.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace lesets {

namespace {

// Validation loss must drop below the running best by this relative margin
// to count as improvement for the patience counters.
constexpr double kMinRelImprovement = 1e-6;

// Decorrelates the mini-batch shuffle stream from parameter init, which
// consumes the same user-visible seed.
constexpr uint64_t kShuffleStream = 0x9e3779b97f4a7c15ULL;

double scaled_target(const GraphSet& s, const TargetScaler& scaler) {
    if (!s.target) throw std::runtime_error("graph set has no target");
    return scaler.scale(*s.target);
}

std::vector<std::vector<double>> snapshot_params(const std::vector<Tensor>& params) {
    std::vector<std::vector<double>> out;
    out.reserve(params.size());
    for (const Tensor& p : params) out.push_back(p.values());
    return out;
}

void restore_params(const std::vector<Tensor>& params, const std::vector<std::vector<double>>& snap) {
    for (size_t i = 0; i < params.size(); ++i) {
        Tensor p = params[i]; // shared handle; copying restores through const
        p.values() = snap[i];
    }
}

double validation_loss(const Model& model, const std::vector<GraphSet>& val, const std::vector<double>& yval) {
    double acc = 0.0;
    for (size_t i = 0; i < val.size(); ++i) {
        Tape tape(false);
        double pred = model.forward(tape, val[i]).item();
        double d = pred - yval[i];
        acc += d * d;
    }
    return acc / static_cast<double>(val.size());
}

} // namespace

void SplitSpec::validate() const {
    if (train_ratio <= 0 || val_ratio <= 0 || test_ratio <= 0)
        throw std::runtime_error("split ratios must be positive");
    if (std::fabs(train_ratio + val_ratio + test_ratio - 1.0) > 1e-12)
        throw std::runtime_error("split ratios must sum to 1");
}

Split split_dataset(int n, const SplitSpec& spec) {
    spec.validate();
    if (n < 5) throw std::runtime_error("dataset too small to split: " + std::to_string(n) + " rows");
    std::vector<int> idx(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) idx[static_cast<size_t>(i)] = i;
    Rng rng(spec.seed);
    rng.shuffle(idx);
    const int n_val = static_cast<int>(std::floor(static_cast<double>(n) * spec.val_ratio));
    const int n_test = static_cast<int>(std::floor(static_cast<double>(n) * spec.test_ratio));
    const int n_train = n - n_val - n_test; // flooring remainder goes to train
    Split s;
    s.train.assign(idx.begin(), idx.begin() + n_train);
    s.val.assign(idx.begin() + n_train, idx.begin() + n_train + n_val);
    s.test.assign(idx.begin() + n_train + n_val, idx.end());
    return s;
}

Split split_dataset(int n, uint64_t seed) {
    SplitSpec spec;
    spec.seed = seed;
    return split_dataset(n, spec);
}

TargetScaler TargetScaler::fit(const std::vector<double>& y) {
    if (y.empty()) throw std::runtime_error("cannot fit target scaler on empty data");
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(y.size());
    double var = 0.0;
    for (double v : y) var += (v - mean) * (v - mean);
    var /= static_cast<double>(y.size());
    TargetScaler s;
    s.mean = mean;
    s.stdev = var > 0 ? std::sqrt(var) : 1.0;
    return s;
}

void TrainConfig::validate() const {
    if (initial_lr <= 0) throw std::runtime_error("initial_lr must be positive");
    if (lr_halving_patience < 1) throw std::runtime_error("lr_halving_patience must be positive");
    if (early_stop_patience < 0) throw std::runtime_error("early_stop_patience must be non-negative");
    if (max_epochs < 1) throw std::runtime_error("max_epochs must be positive");
    if (batch_size < 1) throw std::runtime_error("batch_size must be positive");
    if (weight_decay < 0) throw std::runtime_error("weight_decay must be non-negative");
}

TrainResult train_model(Model& model, const std::vector<GraphSet>& train, const std::vector<GraphSet>& val,
                        const TargetScaler& scaler, const TrainConfig& config) {
    config.validate();
    if (train.empty()) throw std::runtime_error("empty training set");
    if (val.empty()) throw std::runtime_error("empty validation set");

    std::vector<double> ytr(train.size()), yval(val.size());
    for (size_t i = 0; i < train.size(); ++i) ytr[i] = scaled_target(train[i], scaler);
    for (size_t i = 0; i < val.size(); ++i) yval[i] = scaled_target(val[i], scaler);

    std::vector<Tensor> params = model.parameters();
    AdamWConfig opt_config;
    opt_config.lr = config.initial_lr;
    opt_config.weight_decay = config.weight_decay;
    AdamW opt(params, opt_config);

    Rng shuffle_rng(config.seed ^ kShuffleStream);
    std::vector<int> order(train.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

    TrainResult result;
    double lr = config.initial_lr;
    bool has_best = false;
    double best_val = 0.0;
    std::vector<std::vector<double>> best_snapshot;
    int lr_counter = 0;
    int stop_counter = 0;

    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double loss_acc = 0.0;
        for (size_t start = 0; start < order.size(); start += static_cast<size_t>(config.batch_size)) {
            const size_t end = std::min(order.size(), start + static_cast<size_t>(config.batch_size));
            const int b = static_cast<int>(end - start);
            Tape tape(true);
            double batch_loss = 0.0;
            try {
                std::vector<Tensor> preds;
                std::vector<double> targets;
                preds.reserve(static_cast<size_t>(b));
                targets.reserve(static_cast<size_t>(b));
                for (size_t k = start; k < end; ++k) {
                    const int row = order[k];
                    preds.push_back(model.forward(tape, train[static_cast<size_t>(row)]));
                    targets.push_back(ytr[static_cast<size_t>(row)]);
                }
                Tensor pred_col = tape.concat_rows(preds);
                Tensor target_col = Tensor::column(targets);
                Tensor loss = tape.mse_loss(pred_col, target_col);
                batch_loss = loss.item();
                if (!std::isfinite(batch_loss)) throw std::runtime_error("non-finite training loss");
                opt.zero_grad();
                tape.backward(loss);
                opt.step();
            } catch (const std::exception& e) {
                throw std::runtime_error("epoch " + std::to_string(epoch) + ", batch starting at sample " +
                                         std::to_string(start) + ": " + e.what());
            }
            loss_acc += batch_loss * static_cast<double>(b);
        }
        const double train_loss = loss_acc / static_cast<double>(order.size());
        const double val_loss = validation_loss(model, val, yval);
        if (!std::isfinite(val_loss))
            throw std::runtime_error("epoch " + std::to_string(epoch) + ": non-finite validation loss");
        result.curve.epochs.push_back({epoch, train_loss, val_loss, lr});
        result.epochs_run = epoch;

        const bool improved = !has_best || (best_val - val_loss) >= kMinRelImprovement * std::fabs(best_val);
        if (!has_best || val_loss < best_val) {
            has_best = true;
            best_val = val_loss;
            best_snapshot = snapshot_params(params);
            result.best_epoch = epoch;
            result.best_val_loss = val_loss;
        }
        if (improved) {
            lr_counter = 0;
            stop_counter = 0;
        } else {
            ++lr_counter;
            ++stop_counter;
        }
        if (lr_counter >= config.lr_halving_patience) {
            lr *= 0.5;
            opt.set_lr(lr);
            lr_counter = 0;
        }
        if (stop_counter >= config.early_stop_patience) break;
    }

    restore_params(params, best_snapshot);
    return result;
}

Metrics compute_metrics(const std::vector<double>& y, const std::vector<double>& yhat) {
    if (y.empty()) throw std::runtime_error("cannot compute metrics on empty data");
    if (y.size() != yhat.size()) throw std::runtime_error("metric input size mismatch");
    const double n = static_cast<double>(y.size());
    double mae = 0.0, mean = 0.0;
    for (size_t i = 0; i < y.size(); ++i) {
        mae += std::fabs(y[i] - yhat[i]);
        mean += y[i];
    }
    mae /= n;
    mean /= n;
    double ss_res = 0.0, ss_tot = 0.0;
    for (size_t i = 0; i < y.size(); ++i) {
        ss_res += (y[i] - yhat[i]) * (y[i] - yhat[i]);
        ss_tot += (y[i] - mean) * (y[i] - mean);
    }
    Metrics m;
    m.mae = mae;
    if (ss_tot > 0) m.r2 = 1.0 - ss_res / ss_tot;
    return m;
}

std::vector<double> predict_all(const Model& model, const std::vector<GraphSet>& sets, const TargetScaler& scaler,
                                int threads) {
    std::vector<double> out(sets.size());
    run_parallel(static_cast<int>(sets.size()), threads, [&](int i) {
        Tape tape(false);
        out[static_cast<size_t>(i)] = scaler.unscale(model.forward(tape, sets[static_cast<size_t>(i)]).item());
    });
    return out;
}

Metrics evaluate(const Model& model, const std::vector<GraphSet>& test, const TargetScaler& scaler, int threads) {
    if (test.empty()) throw std::runtime_error("empty test set");
    std::vector<double> y(test.size());
    for (size_t i = 0; i < test.size(); ++i) {
        if (!test[i].target) throw std::runtime_error("test set row " + std::to_string(i) + " has no target");
        y[i] = *test[i].target;
    }
    std::vector<double> yhat = predict_all(model, test, scaler, threads);
    return compute_metrics(y, yhat);
}

namespace {

std::vector<GraphSet> gather(const std::vector<GraphSet>& data, const std::vector<int>& idx) {
    std::vector<GraphSet> out;
    out.reserve(idx.size());
    for (int i : idx) out.push_back(data[static_cast<size_t>(i)]);
    return out;
}

struct MeanStd {
    std::optional<double> mean, stdev;
};

MeanStd mean_and_sample_std(const std::vector<double>& xs) {
    MeanStd out;
    if (xs.empty()) return out;
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    out.mean = mean;
    if (xs.size() < 2) {
        out.stdev = 0.0;
        return out;
    }
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var /= static_cast<double>(xs.size() - 1);
    out.stdev = std::sqrt(var);
    return out;
}

} // namespace

BenchmarkSummary run_benchmark(const std::vector<GraphSet>& data, const ModelFactory& factory,
                               const BenchmarkConfig& config) {
    if (config.n_replicates < 1) throw std::runtime_error("n_replicates must be positive");
    config.train.validate();

    BenchmarkSummary summary;
    summary.replicates.resize(static_cast<size_t>(config.n_replicates));
    run_parallel(config.n_replicates, config.threads, [&](int i) {
        ReplicateResult& r = summary.replicates[static_cast<size_t>(i)];
        r.seed = static_cast<uint64_t>(i);
        const auto t0 = std::chrono::steady_clock::now();
        try {
            Split split = split_dataset(static_cast<int>(data.size()), r.seed);
            std::vector<GraphSet> train = gather(data, split.train);
            std::vector<GraphSet> val = gather(data, split.val);
            std::vector<GraphSet> test = gather(data, split.test);
            std::vector<double> ytr;
            ytr.reserve(train.size());
            for (const GraphSet& s : train) {
                if (!s.target) throw std::runtime_error("training row has no target");
                ytr.push_back(*s.target);
            }
            TargetScaler scaler = TargetScaler::fit(ytr);
            std::unique_ptr<Model> model = factory(r.seed);
            TrainConfig tc = config.train;
            tc.seed = r.seed;
            TrainResult res = train_model(*model, train, val, scaler, tc);
            r.curve = std::move(res.curve);
            r.epochs = res.epochs_run;
            r.metrics = evaluate(*model, test, scaler);
        } catch (const std::exception& e) {
            r.error = std::string("replicate ") + std::to_string(i) + ": " + e.what();
        }
        if (config.record_timing) {
            const auto t1 = std::chrono::steady_clock::now();
            r.wall_time_s = std::chrono::duration<double>(t1 - t0).count();
        }
    });

    summarize_replicates(summary);
    return summary;
}

void summarize_replicates(BenchmarkSummary& summary) {
    summary.n_failed = 0;
    std::vector<double> maes, r2s;
    for (const ReplicateResult& r : summary.replicates) {
        if (!r.metrics) {
            ++summary.n_failed;
            continue;
        }
        maes.push_back(r.metrics->mae);
        if (r.metrics->r2) r2s.push_back(*r.metrics->r2);
    }
    MeanStd mae_stats = mean_and_sample_std(maes);
    MeanStd r2_stats = mean_and_sample_std(r2s);
    summary.mean_mae = mae_stats.mean;
    summary.std_mae = mae_stats.stdev;
    summary.mean_r2 = r2_stats.mean;
    summary.std_r2 = r2_stats.stdev;
}

void write_benchmark_outputs(const BenchmarkSummary& summary, const std::string& out_dir, bool write_curves) {
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path dir(out_dir);

    csv::Writer reps((dir / "replicates.csv").string(), {"seed", "mae", "r2", "epochs", "wall_time_s"});
    for (const ReplicateResult& r : summary.replicates) {
        csv::Row row(5);
        row[0] = std::to_string(r.seed);
        if (r.metrics) {
            row[1] = csv::format_double(r.metrics->mae);
            if (r.metrics->r2) row[2] = csv::format_double(*r.metrics->r2);
        }
        row[3] = std::to_string(r.epochs);
        if (r.wall_time_s) row[4] = csv::format_double(*r.wall_time_s);
        reps.append(row);
    }
    reps.close();

    if (write_curves) {
        for (const ReplicateResult& r : summary.replicates) {
            const std::string name = "learning_curve_" + std::to_string(r.seed) + ".csv";
            csv::Writer curve((dir / name).string(), {"epoch", "train_loss", "val_loss", "lr"});
            for (const EpochRecord& e : r.curve.epochs)
                curve.append({std::to_string(e.epoch), csv::format_double(e.train_loss),
                              csv::format_double(e.val_loss), csv::format_double(e.lr)});
            curve.close();
        }
    }

    nlohmann::json j;
    j["n_replicates"] = summary.replicates.size();
    j["n_failed"] = summary.n_failed;
    auto opt_or_null = [](const std::optional<double>& v) {
        return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
    };
    j["mae"] = {{"mean", opt_or_null(summary.mean_mae)}, {"std", opt_or_null(summary.std_mae)}};
    j["r2"] = {{"mean", opt_or_null(summary.mean_r2)}, {"std", opt_or_null(summary.std_r2)}};
    nlohmann::json rows = nlohmann::json::array();
    for (const ReplicateResult& r : summary.replicates) {
        nlohmann::json row;
        row["seed"] = r.seed;
        row["epochs"] = r.epochs;
        row["mae"] = r.metrics ? nlohmann::json(r.metrics->mae) : nlohmann::json(nullptr);
        row["r2"] = (r.metrics && r.metrics->r2) ? nlohmann::json(*r.metrics->r2) : nlohmann::json(nullptr);
        if (!r.error.empty()) row["error"] = r.error;
        rows.push_back(row);
    }
    j["replicates"] = rows;
    std::ofstream out(dir / "summary.json");
    if (!out) throw std::runtime_error("cannot write " + (dir / "summary.json").string());
    out << j.dump(2) << '\n';
}

} // namespace lesets
