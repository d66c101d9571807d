#include "lesets/baselines.hpp"

#include "lesets/parallel.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace lesets {

namespace {

constexpr int kNumDescriptors = 6;
constexpr double kLassoTol = 1e-8;
constexpr int kLassoMaxSweeps = 100000;

struct Standardization {
    std::vector<double> mean, stdev;
};

Standardization fit_standardization(const Matrix& x) {
    Standardization s;
    s.mean.assign(static_cast<size_t>(x.cols), 0.0);
    s.stdev.assign(static_cast<size_t>(x.cols), 1.0);
    if (x.rows == 0) return s;
    for (int j = 0; j < x.cols; ++j) {
        double m = 0.0;
        for (int i = 0; i < x.rows; ++i) m += x.at(i, j);
        m /= x.rows;
        double var = 0.0;
        for (int i = 0; i < x.rows; ++i) var += (x.at(i, j) - m) * (x.at(i, j) - m);
        var /= x.rows;
        s.mean[static_cast<size_t>(j)] = m;
        s.stdev[static_cast<size_t>(j)] = var > 0 ? std::sqrt(var) : 1.0;
    }
    return s;
}

Matrix standardize(const Matrix& x, const Standardization& s) {
    Matrix z(x.rows, x.cols);
    for (int i = 0; i < x.rows; ++i)
        for (int j = 0; j < x.cols; ++j)
            z.at(i, j) = (x.at(i, j) - s.mean[static_cast<size_t>(j)]) / s.stdev[static_cast<size_t>(j)];
    return z;
}

/// Gaussian elimination with partial pivoting on an n x n system.
std::vector<double> solve_linear(Matrix a, std::vector<double> b) {
    const int n = a.rows;
    for (int col = 0; col < n; ++col) {
        int pivot = col;
        for (int r = col + 1; r < n; ++r)
            if (std::fabs(a.at(r, col)) > std::fabs(a.at(pivot, col))) pivot = r;
        if (std::fabs(a.at(pivot, col)) < 1e-12)
            throw std::runtime_error("singular normal equations; increase lambda");
        if (pivot != col) {
            for (int j = 0; j < n; ++j) std::swap(a.at(col, j), a.at(pivot, j));
            std::swap(b[static_cast<size_t>(col)], b[static_cast<size_t>(pivot)]);
        }
        for (int r = col + 1; r < n; ++r) {
            const double f = a.at(r, col) / a.at(col, col);
            if (f == 0.0) continue;
            for (int j = col; j < n; ++j) a.at(r, j) -= f * a.at(col, j);
            b[static_cast<size_t>(r)] -= f * b[static_cast<size_t>(col)];
        }
    }
    std::vector<double> x(static_cast<size_t>(n), 0.0);
    for (int r = n - 1; r >= 0; --r) {
        double acc = b[static_cast<size_t>(r)];
        for (int j = r + 1; j < n; ++j) acc -= a.at(r, j) * x[static_cast<size_t>(j)];
        x[static_cast<size_t>(r)] = acc / a.at(r, r);
    }
    return x;
}

void check_xy(const Matrix& x, const std::vector<double>& y) {
    if (x.rows == 0) throw std::runtime_error("empty training data");
    if (static_cast<size_t>(x.rows) != y.size()) throw std::runtime_error("feature/target row count mismatch");
}

double soft_threshold(double a, double t) {
    if (a > t) return a - t;
    if (a < -t) return a + t;
    return 0.0;
}

} // namespace

std::vector<double> summarize_composition(const Composition& comp, const ElementTable& table) {
    std::vector<double> out(2 * kNumDescriptors, 0.0);
    for (const auto& entry : comp.entries()) {
        const auto d = table.descriptor(entry.symbol).continuous();
        for (int j = 0; j < kNumDescriptors; ++j) out[static_cast<size_t>(j)] += entry.fraction * d[static_cast<size_t>(j)];
    }
    for (const auto& entry : comp.entries()) {
        const auto d = table.descriptor(entry.symbol).continuous();
        for (int j = 0; j < kNumDescriptors; ++j) {
            const double dev = d[static_cast<size_t>(j)] - out[static_cast<size_t>(j)];
            out[static_cast<size_t>(kNumDescriptors + j)] += entry.fraction * dev * dev;
        }
    }
    for (int j = 0; j < kNumDescriptors; ++j)
        out[static_cast<size_t>(kNumDescriptors + j)] = std::sqrt(out[static_cast<size_t>(kNumDescriptors + j)]);
    return out;
}

TabularDataset summarize_dataset(const Dataset& data, const std::string& target, const ElementTable& table) {
    std::vector<int> rows = data.rows_with(target);
    TabularDataset out;
    out.x = Matrix(static_cast<int>(rows.size()), 2 * kNumDescriptors);
    out.y.resize(rows.size());
    for (size_t i = 0; i < rows.size(); ++i) {
        const DataRecord& rec = data.records[static_cast<size_t>(rows[i])];
        std::vector<double> f = summarize_composition(rec.composition, table);
        for (int j = 0; j < out.x.cols; ++j) out.x.at(static_cast<int>(i), j) = f[static_cast<size_t>(j)];
        if (target == "youngs_modulus")
            out.y[i] = *rec.youngs_modulus;
        else if (target == "bulk_modulus")
            out.y[i] = *rec.bulk_modulus;
        else
            out.y[i] = *rec.rws;
    }
    return out;
}

LinearModel ridge_fit(const Matrix& x, const std::vector<double>& y, double lambda) {
    check_xy(x, y);
    if (lambda < 0) throw std::runtime_error("lambda must be non-negative");
    Standardization s = fit_standardization(x);
    Matrix z = standardize(x, s);
    const int p = x.cols;
    double ybar = 0.0;
    for (double v : y) ybar += v;
    ybar /= static_cast<double>(y.size());

    Matrix gram(p, p);
    std::vector<double> rhs(static_cast<size_t>(p), 0.0);
    for (int a = 0; a < p; ++a) {
        for (int b = a; b < p; ++b) {
            double acc = 0.0;
            for (int i = 0; i < z.rows; ++i) acc += z.at(i, a) * z.at(i, b);
            gram.at(a, b) = acc;
            gram.at(b, a) = acc;
        }
        gram.at(a, a) += lambda;
        double acc = 0.0;
        for (int i = 0; i < z.rows; ++i) acc += z.at(i, a) * (y[static_cast<size_t>(i)] - ybar);
        rhs[static_cast<size_t>(a)] = acc;
    }
    LinearModel m;
    m.mean = s.mean;
    m.stdev = s.stdev;
    m.w = solve_linear(gram, rhs);
    m.intercept = ybar;
    return m;
}

LinearModel lasso_fit(const Matrix& x, const std::vector<double>& y, double lambda) {
    check_xy(x, y);
    if (lambda < 0) throw std::runtime_error("lambda must be non-negative");
    Standardization s = fit_standardization(x);
    Matrix z = standardize(x, s);
    const int n = x.rows;
    const int p = x.cols;
    double ybar = 0.0;
    for (double v : y) ybar += v;
    ybar /= static_cast<double>(n);

    std::vector<double> col_sq(static_cast<size_t>(p), 0.0);
    for (int j = 0; j < p; ++j) {
        double acc = 0.0;
        for (int i = 0; i < n; ++i) acc += z.at(i, j) * z.at(i, j);
        col_sq[static_cast<size_t>(j)] = acc / static_cast<double>(n);
    }

    std::vector<double> w(static_cast<size_t>(p), 0.0);
    std::vector<double> resid(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) resid[static_cast<size_t>(i)] = y[static_cast<size_t>(i)] - ybar;

    for (int sweep = 0; sweep < kLassoMaxSweeps; ++sweep) {
        double max_update = 0.0;
        for (int j = 0; j < p; ++j) {
            if (col_sq[static_cast<size_t>(j)] == 0.0) continue;
            double rho = 0.0;
            for (int i = 0; i < n; ++i) rho += z.at(i, j) * resid[static_cast<size_t>(i)];
            rho = rho / static_cast<double>(n) + col_sq[static_cast<size_t>(j)] * w[static_cast<size_t>(j)];
            const double wj = soft_threshold(rho, lambda) / col_sq[static_cast<size_t>(j)];
            const double delta = wj - w[static_cast<size_t>(j)];
            if (delta != 0.0) {
                for (int i = 0; i < n; ++i) resid[static_cast<size_t>(i)] -= delta * z.at(i, j);
                w[static_cast<size_t>(j)] = wj;
            }
            max_update = std::max(max_update, std::fabs(delta));
        }
        if (max_update < kLassoTol) {
            LinearModel m;
            m.mean = s.mean;
            m.stdev = s.stdev;
            m.w = std::move(w);
            m.intercept = ybar;
            return m;
        }
    }
    throw std::runtime_error("lasso coordinate descent did not converge");
}

double linear_predict(const LinearModel& model, const std::vector<double>& x) {
    if (x.size() != model.w.size()) throw std::runtime_error("feature width mismatch in linear predict");
    double acc = model.intercept;
    for (size_t j = 0; j < x.size(); ++j)
        acc += model.w[j] * (x[j] - model.mean[j]) / model.stdev[j];
    return acc;
}

KnnModel knn_fit(const Matrix& x, const std::vector<double>& y) {
    check_xy(x, y);
    Standardization s = fit_standardization(x);
    KnnModel m;
    m.mean = s.mean;
    m.stdev = s.stdev;
    m.z = standardize(x, s);
    m.y = y;
    return m;
}

double knn_predict(const KnnModel& model, const std::vector<double>& x, int k) {
    if (k < 1) throw std::runtime_error("k must be at least 1");
    if (k > model.z.rows) throw std::runtime_error("k exceeds training set size");
    if (static_cast<int>(x.size()) != model.z.cols) throw std::runtime_error("feature width mismatch in knn predict");
    std::vector<std::pair<double, int>> dist(static_cast<size_t>(model.z.rows));
    for (int i = 0; i < model.z.rows; ++i) {
        double d2 = 0.0;
        for (int j = 0; j < model.z.cols; ++j) {
            const double d = (x[static_cast<size_t>(j)] - model.mean[static_cast<size_t>(j)]) /
                                 model.stdev[static_cast<size_t>(j)] -
                             model.z.at(i, j);
            d2 += d * d;
        }
        dist[static_cast<size_t>(i)] = {d2, i};
    }
    std::sort(dist.begin(), dist.end()); // pair ordering breaks ties by lower index
    double acc = 0.0;
    for (int i = 0; i < k; ++i) acc += model.y[static_cast<size_t>(dist[static_cast<size_t>(i)].second)];
    return acc / static_cast<double>(k);
}

std::vector<double> default_ridge_lambda_grid() {
    return {1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0, 1000.0};
}

std::vector<double> default_lasso_lambda_grid() {
    return {1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0};
}

std::vector<int> default_k_grid() { return {1, 2, 3, 5, 8, 10, 15, 20, 30, 50}; }

namespace {

std::vector<std::vector<int>> five_folds(int n, uint64_t seed) {
    if (n < 5) throw std::runtime_error("too few rows for 5-fold cross-validation");
    std::vector<int> idx(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) idx[static_cast<size_t>(i)] = i;
    Rng rng(seed);
    rng.shuffle(idx);
    std::vector<std::vector<int>> folds(5);
    for (int f = 0; f < 5; ++f) {
        const int lo = f * n / 5;
        const int hi = (f + 1) * n / 5;
        folds[static_cast<size_t>(f)].assign(idx.begin() + lo, idx.begin() + hi);
    }
    return folds;
}

void gather_rows(const Matrix& x, const std::vector<double>& y, const std::vector<int>& rows, Matrix& xs,
                 std::vector<double>& ys) {
    xs = Matrix(static_cast<int>(rows.size()), x.cols);
    ys.resize(rows.size());
    for (size_t i = 0; i < rows.size(); ++i) {
        for (int j = 0; j < x.cols; ++j) xs.at(static_cast<int>(i), j) = x.at(rows[i], j);
        ys[i] = y[static_cast<size_t>(rows[i])];
    }
}

std::vector<double> matrix_row(const Matrix& x, int i) {
    std::vector<double> out(static_cast<size_t>(x.cols));
    for (int j = 0; j < x.cols; ++j) out[static_cast<size_t>(j)] = x.at(i, j);
    return out;
}

/// Mean squared CV error of `fit_predict` over the 5 folds. A fit failure in
/// any fold (singular system, no convergence) makes the candidate
/// unselectable by returning infinity.
template <typename FitPredict>
double cv_score(const Matrix& x, const std::vector<double>& y, const std::vector<std::vector<int>>& folds,
                FitPredict&& fit_predict) {
    double sse = 0.0;
    int total = 0;
    for (size_t f = 0; f < folds.size(); ++f) {
        std::vector<int> train_rows;
        for (size_t g = 0; g < folds.size(); ++g)
            if (g != f) train_rows.insert(train_rows.end(), folds[g].begin(), folds[g].end());
        Matrix xtr;
        std::vector<double> ytr;
        gather_rows(x, y, train_rows, xtr, ytr);
        std::vector<double> preds;
        try {
            preds = fit_predict(xtr, ytr, x, folds[f]);
        } catch (const std::exception&) {
            return std::numeric_limits<double>::infinity();
        }
        for (size_t i = 0; i < folds[f].size(); ++i) {
            const double d = preds[i] - y[static_cast<size_t>(folds[f][i])];
            sse += d * d;
        }
        total += static_cast<int>(folds[f].size());
    }
    return sse / static_cast<double>(total);
}

} // namespace

double choose_lambda(LinearPenalty penalty, const Matrix& x, const std::vector<double>& y,
                     const std::vector<double>& grid, uint64_t seed) {
    if (grid.empty()) throw std::runtime_error("empty lambda grid");
    auto folds = five_folds(x.rows, seed);
    double best_lambda = grid[0];
    double best_score = 0.0;
    bool have_best = false;
    for (double lambda : grid) {
        const double score = cv_score(x, y, folds,
                                      [&](const Matrix& xtr, const std::vector<double>& ytr, const Matrix& xall,
                                          const std::vector<int>& rows) {
                                          LinearModel m = penalty == LinearPenalty::Ridge ? ridge_fit(xtr, ytr, lambda)
                                                                                         : lasso_fit(xtr, ytr, lambda);
                                          std::vector<double> preds(rows.size());
                                          for (size_t i = 0; i < rows.size(); ++i)
                                              preds[i] = linear_predict(m, matrix_row(xall, rows[i]));
                                          return preds;
                                      });
        if (std::isfinite(score) && (!have_best || score < best_score)) {
            have_best = true;
            best_score = score;
            best_lambda = lambda;
        }
    }
    if (!have_best) throw std::runtime_error("no lambda in the grid produced a usable fit");
    return best_lambda;
}

int choose_k(const Matrix& x, const std::vector<double>& y, const std::vector<int>& grid, uint64_t seed) {
    if (grid.empty()) throw std::runtime_error("empty k grid");
    auto folds = five_folds(x.rows, seed);
    int min_train = x.rows;
    for (const auto& f : folds) min_train = std::min(min_train, x.rows - static_cast<int>(f.size()));
    std::vector<int> usable;
    for (int k : grid)
        if (k >= 1 && k <= min_train) usable.push_back(k);
    if (usable.empty()) throw std::runtime_error("no usable k in grid for this fold size");
    int best_k = usable[0];
    double best_score = 0.0;
    bool have_best = false;
    for (int k : usable) {
        const double score = cv_score(x, y, folds,
                                      [&](const Matrix& xtr, const std::vector<double>& ytr, const Matrix& xall,
                                          const std::vector<int>& rows) {
                                          KnnModel m = knn_fit(xtr, ytr);
                                          std::vector<double> preds(rows.size());
                                          for (size_t i = 0; i < rows.size(); ++i)
                                              preds[i] = knn_predict(m, matrix_row(xall, rows[i]), k);
                                          return preds;
                                      });
        if (std::isfinite(score) && (!have_best || score < best_score)) {
            have_best = true;
            best_score = score;
            best_k = k;
        }
    }
    if (!have_best) throw std::runtime_error("no k in the grid produced a usable fit");
    return best_k;
}

namespace {

using FitEval = std::function<Metrics(const Matrix& xtr, const std::vector<double>& ytr, const Matrix& xte,
                                      const std::vector<double>& yte)>;

BenchmarkSummary assess(const Matrix& pool_x, const std::vector<double>& pool_y, const BaselineBenchmarkConfig& config,
                        const FitEval& fit_eval) {
    const int m = pool_x.rows;
    BenchmarkSummary summary;
    summary.replicates.resize(static_cast<size_t>(config.n_replicates));
    run_parallel(config.n_replicates, config.threads, [&](int i) {
        ReplicateResult& r = summary.replicates[static_cast<size_t>(i)];
        r.seed = static_cast<uint64_t>(i);
        const auto t0 = std::chrono::steady_clock::now();
        try {
            std::vector<int> idx(static_cast<size_t>(m));
            for (int j = 0; j < m; ++j) idx[static_cast<size_t>(j)] = j;
            Rng rng(r.seed);
            rng.shuffle(idx);
            const int n_test = m / 3; // 2:1 train:test
            std::vector<int> train_rows(idx.begin(), idx.end() - n_test);
            std::vector<int> test_rows(idx.end() - n_test, idx.end());
            Matrix xtr, xte;
            std::vector<double> ytr, yte;
            gather_rows(pool_x, pool_y, train_rows, xtr, ytr);
            gather_rows(pool_x, pool_y, test_rows, xte, yte);
            r.metrics = fit_eval(xtr, ytr, xte, yte);
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

Metrics eval_linear(const LinearModel& m, const Matrix& xte, const std::vector<double>& yte) {
    std::vector<double> preds(yte.size());
    for (int i = 0; i < xte.rows; ++i) preds[static_cast<size_t>(i)] = linear_predict(m, matrix_row(xte, i));
    return compute_metrics(yte, preds);
}

} // namespace

std::vector<BaselineRunResult> run_baseline_benchmark(const TabularDataset& data,
                                                      const BaselineBenchmarkConfig& config) {
    if (config.n_replicates < 1) throw std::runtime_error("n_replicates must be positive");
    const int n = data.x.rows;
    const int n_tune = static_cast<int>(std::floor(0.4 * static_cast<double>(n)));
    if (n_tune < 5 || n - n_tune < 3)
        throw std::runtime_error("dataset too small for the baseline benchmark: " + std::to_string(n) + " rows");

    std::vector<int> idx(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) idx[static_cast<size_t>(i)] = i;
    Rng rng(config.tuning_seed);
    rng.shuffle(idx);
    std::vector<int> tune_rows(idx.begin(), idx.begin() + n_tune);
    std::vector<int> pool_rows(idx.begin() + n_tune, idx.end());

    Matrix tune_x, pool_x;
    std::vector<double> tune_y, pool_y;
    gather_rows(data.x, data.y, tune_rows, tune_x, tune_y);
    gather_rows(data.x, data.y, pool_rows, pool_x, pool_y);

    const double ridge_lambda =
        choose_lambda(LinearPenalty::Ridge, tune_x, tune_y, default_ridge_lambda_grid(), config.tuning_seed);
    const double lasso_lambda =
        choose_lambda(LinearPenalty::Lasso, tune_x, tune_y, default_lasso_lambda_grid(), config.tuning_seed);
    const int k = choose_k(tune_x, tune_y, default_k_grid(), config.tuning_seed);

    std::vector<BaselineRunResult> results;
    {
        BaselineRunResult r;
        r.method = "ridge";
        r.hyperparameter = ridge_lambda;
        r.summary = assess(pool_x, pool_y, config,
                           [&](const Matrix& xtr, const std::vector<double>& ytr, const Matrix& xte,
                               const std::vector<double>& yte) {
                               return eval_linear(ridge_fit(xtr, ytr, ridge_lambda), xte, yte);
                           });
        results.push_back(std::move(r));
    }
    {
        BaselineRunResult r;
        r.method = "lasso";
        r.hyperparameter = lasso_lambda;
        r.summary = assess(pool_x, pool_y, config,
                           [&](const Matrix& xtr, const std::vector<double>& ytr, const Matrix& xte,
                               const std::vector<double>& yte) {
                               return eval_linear(lasso_fit(xtr, ytr, lasso_lambda), xte, yte);
                           });
        results.push_back(std::move(r));
    }
    {
        BaselineRunResult r;
        r.method = "knn";
        r.hyperparameter = static_cast<double>(k);
        r.summary = assess(pool_x, pool_y, config,
                           [&](const Matrix& xtr, const std::vector<double>& ytr, const Matrix& xte,
                               const std::vector<double>& yte) {
                               KnnModel m = knn_fit(xtr, ytr);
                               std::vector<double> preds(yte.size());
                               for (int i = 0; i < xte.rows; ++i)
                                   preds[static_cast<size_t>(i)] = knn_predict(m, matrix_row(xte, i), k);
                               return compute_metrics(yte, preds);
                           });
        results.push_back(std::move(r));
    }
    return results;
}

void write_baseline_outputs(const std::vector<BaselineRunResult>& results, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    nlohmann::json tuned;
    for (const BaselineRunResult& r : results) {
        write_benchmark_outputs(r.summary, (std::filesystem::path(out_dir) / r.method).string(), false);
        tuned[r.method] = r.hyperparameter;
    }
    std::ofstream out(std::filesystem::path(out_dir) / "tuned_hyperparameters.json");
    if (!out) throw std::runtime_error("cannot write tuned_hyperparameters.json in " + out_dir);
    out << tuned.dump(2) << '\n';
}

} // namespace lesets
