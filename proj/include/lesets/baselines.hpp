#pragma once

#include "lesets/composition.hpp"
#include "lesets/dataset.hpp"
#include "lesets/elements.hpp"
#include "lesets/matrix.hpp"
#include "lesets/train.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace lesets {

/// Tabular summary of a composition: fraction-weighted mean and
/// fraction-weighted standard deviation of each of the 6 continuous
/// elemental descriptors. Layout: [mean_0..mean_5, std_0..std_5].
std::vector<double> summarize_composition(const Composition& comp, const ElementTable& table);

struct TabularDataset {
    Matrix x; // one summary row per composition
    std::vector<double> y;
};

/// Rows of `data` holding `target`, summarized in file order.
TabularDataset summarize_dataset(const Dataset& data, const std::string& target, const ElementTable& table);

/// Fitted linear regressor. Weights act on feature columns standardized with
/// the stored training statistics; the intercept is unpenalized.
struct LinearModel {
    std::vector<double> mean, stdev;
    std::vector<double> w;
    double intercept = 0.0;
};

/// w = (Z^T Z + lambda I)^{-1} Z^T y_c on standardized features Z and
/// centered targets; intercept = mean(y).
LinearModel ridge_fit(const Matrix& x, const std::vector<double>& y, double lambda);

/// Coordinate descent on (1/2n)·RSS + lambda·|w|_1 over standardized
/// features; converged when the largest coordinate update is below 1e-8.
LinearModel lasso_fit(const Matrix& x, const std::vector<double>& y, double lambda);

double linear_predict(const LinearModel& model, const std::vector<double>& x);

struct KnnModel {
    std::vector<double> mean, stdev;
    Matrix z; // standardized training features
    std::vector<double> y;
};

KnnModel knn_fit(const Matrix& x, const std::vector<double>& y);

/// Mean target of the k nearest training rows by Euclidean distance on
/// standardized features; distance ties broken by lower row index.
double knn_predict(const KnnModel& model, const std::vector<double>& x, int k);

// ---------------------------------------------------------------------------
// Hyperparameter selection: 5-fold cross-validation over a grid, scored by
// mean validation MSE; ties go to the earlier grid entry.

std::vector<double> default_ridge_lambda_grid();
std::vector<double> default_lasso_lambda_grid();
std::vector<int> default_k_grid();

enum class LinearPenalty { Ridge, Lasso };

double choose_lambda(LinearPenalty penalty, const Matrix& x, const std::vector<double>& y,
                     const std::vector<double>& grid, uint64_t seed);
int choose_k(const Matrix& x, const std::vector<double>& y, const std::vector<int>& grid, uint64_t seed);

// ---------------------------------------------------------------------------
// Benchmark harness: hyperparameters tuned on a 40% partition, then 30
// random 2:1 train:test splits of the remaining rows.

struct BaselineBenchmarkConfig {
    int n_replicates = 30;
    uint64_t tuning_seed = 0; // fixes the 40/60 partition and CV folds
    int threads = 1;
    bool record_timing = false;
};

struct BaselineRunResult {
    std::string method; // ridge | lasso | knn
    double hyperparameter = 0.0;
    BenchmarkSummary summary;
};

std::vector<BaselineRunResult> run_baseline_benchmark(const TabularDataset& data,
                                                      const BaselineBenchmarkConfig& config);

/// Writes <out_dir>/<method>/replicates.csv and summary.json in the same
/// schema as the neural benchmark outputs.
void write_baseline_outputs(const std::vector<BaselineRunResult>& results, const std::string& out_dir);

} // namespace lesets
