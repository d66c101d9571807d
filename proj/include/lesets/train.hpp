#pragma once

#include "lesets/graphs.hpp"
#include "lesets/model.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace lesets {

/// 3:1:1 split recipe. Ratios are kept explicit so the arithmetic is
/// testable, but the defaults are the only supported protocol.
struct SplitSpec {
    double train_ratio = 0.6;
    double val_ratio = 0.2;
    double test_ratio = 0.2;
    uint64_t seed = 0;

    void validate() const;
};

struct Split {
    std::vector<int> train, val, test;
};

/// Seeded shuffle of [0, n) then a contiguous partition. val and test get
/// floor(n * ratio) rows each; flooring remainder goes to train.
Split split_dataset(int n, const SplitSpec& spec);
Split split_dataset(int n, uint64_t seed);

/// Target z-scoring fitted on the training split only. Predictions are made
/// in scaled space and un-scaled before metrics.
struct TargetScaler {
    double mean = 0.0;
    double stdev = 1.0;

    static TargetScaler fit(const std::vector<double>& y);
    double scale(double y) const { return (y - mean) / stdev; }
    double unscale(double z) const { return z * stdev + mean; }
};

struct TrainConfig {
    double initial_lr = 1e-3;
    int lr_halving_patience = 10;
    int early_stop_patience = 20;
    int max_epochs = 500;
    int batch_size = 64;
    double weight_decay = 1e-4;
    uint64_t seed = 0; // mini-batch shuffle stream

    void validate() const;
};

struct EpochRecord {
    int epoch; // 1-based
    double train_loss;
    double val_loss;
    double lr;
};

struct LearningCurve {
    std::vector<EpochRecord> epochs;
};

struct TrainResult {
    LearningCurve curve;
    double best_val_loss = 0.0;
    int best_epoch = 0;
    int epochs_run = 0;
};

/// Mini-batch MSE training with AdamW, plateau LR halving, and early
/// stopping. On return the model holds the parameters of the epoch with the
/// minimum recorded validation loss.
TrainResult train_model(Model& model, const std::vector<GraphSet>& train, const std::vector<GraphSet>& val,
                        const TargetScaler& scaler, const TrainConfig& config);

struct Metrics {
    double mae = 0.0;
    std::optional<double> r2; // empty when the target variance is zero
};

/// MAE = mean |y - yhat|; R2 = 1 - SS_res / SS_tot.
Metrics compute_metrics(const std::vector<double>& y, const std::vector<double>& yhat);

/// Un-scaled predictions for every set, in order. Thread-safe over rows.
std::vector<double> predict_all(const Model& model, const std::vector<GraphSet>& sets, const TargetScaler& scaler,
                                int threads = 1);

Metrics evaluate(const Model& model, const std::vector<GraphSet>& test, const TargetScaler& scaler, int threads = 1);

// ---------------------------------------------------------------------------
// Multi-replicate benchmarking

using ModelFactory = std::function<std::unique_ptr<Model>(uint64_t seed)>;

struct ReplicateResult {
    uint64_t seed = 0;
    std::optional<Metrics> metrics; // empty when the replicate failed
    std::string error;              // failure diagnostic, empty on success
    int epochs = 0;
    std::optional<double> wall_time_s; // only measured when timing is on
    LearningCurve curve;
};

struct BenchmarkConfig {
    int n_replicates = 30;
    TrainConfig train;
    int threads = 1;
    /// Wall time is left out of the outputs unless requested, so repeated
    /// runs with one thread produce byte-identical files.
    bool record_timing = false;
};

struct BenchmarkSummary {
    std::vector<ReplicateResult> replicates;
    int n_failed = 0;
    std::optional<double> mean_mae, std_mae;
    std::optional<double> mean_r2, std_r2;
};

/// Seeds 0..n-1, each with its own split, scaler, freshly seeded model, and
/// training run. Failed replicates are recorded with their diagnostic, never
/// dropped. Output is identical for any thread count.
BenchmarkSummary run_benchmark(const std::vector<GraphSet>& data, const ModelFactory& factory,
                               const BenchmarkConfig& config);

/// Fills n_failed and the mean/std fields from the replicate rows. Sample
/// standard deviation; 0 for a single value.
void summarize_replicates(BenchmarkSummary& summary);

/// Writes replicates.csv, learning_curve_<seed>.csv, and summary.json.
/// Curve emission is skipped for fits that have no epochs.
void write_benchmark_outputs(const BenchmarkSummary& summary, const std::string& out_dir, bool write_curves = true);

} // namespace lesets
