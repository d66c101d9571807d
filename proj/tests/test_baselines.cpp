#include "lesets/baselines.hpp"

#include "lesets/dataset.hpp"
#include "support/common.hpp"
#include "support/synthetic.hpp"

#include <doctest.h>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include <unistd.h>

using namespace lesets;
using lesets::testing::test_table;

namespace {

Matrix random_features(Rng& rng, int rows, int cols) {
    Matrix x(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) x.at(i, j) = rng.uniform(-2.0, 2.0);
    return x;
}

std::vector<double> row_of(const Matrix& x, int i) {
    std::vector<double> out(static_cast<size_t>(x.cols));
    for (int j = 0; j < x.cols; ++j) out[static_cast<size_t>(j)] = x.at(i, j);
    return out;
}

/// y exactly linear in the raw features, no noise.
std::vector<double> linear_targets(const Matrix& x, const std::vector<double>& coef, double intercept) {
    std::vector<double> y(static_cast<size_t>(x.rows));
    for (int i = 0; i < x.rows; ++i) {
        double acc = intercept;
        for (int j = 0; j < x.cols; ++j) acc += coef[static_cast<size_t>(j)] * x.at(i, j);
        y[static_cast<size_t>(i)] = acc;
    }
    return y;
}

/// Standardized design and centered targets, recomputed independently of the
/// fitting code so optimality conditions can be checked against them.
struct Centered {
    Matrix z;
    std::vector<double> yc;
};

Centered center(const Matrix& x, const std::vector<double>& y) {
    Centered c;
    c.z = Matrix(x.rows, x.cols);
    for (int j = 0; j < x.cols; ++j) {
        double m = 0, var = 0;
        for (int i = 0; i < x.rows; ++i) m += x.at(i, j);
        m /= x.rows;
        for (int i = 0; i < x.rows; ++i) var += (x.at(i, j) - m) * (x.at(i, j) - m);
        var /= x.rows;
        const double s = var > 0 ? std::sqrt(var) : 1.0;
        for (int i = 0; i < x.rows; ++i) c.z.at(i, j) = (x.at(i, j) - m) / s;
    }
    double ybar = 0;
    for (double v : y) ybar += v;
    ybar /= static_cast<double>(y.size());
    for (double v : y) c.yc.push_back(v - ybar);
    return c;
}

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& tag) {
        path = std::filesystem::temp_directory_path() / ("lesets_test_" + tag + "_" + std::to_string(::getpid()));
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

TabularDataset synthetic_tabular(int n) {
    lesets::testing::SyntheticSpec spec;
    spec.n = n;
    auto comps = lesets::testing::make_synthetic_compositions(spec);
    TabularDataset data;
    data.x = Matrix(n, 12);
    for (int i = 0; i < n; ++i) {
        auto f = summarize_composition(comps[static_cast<size_t>(i)], test_table());
        for (int j = 0; j < 12; ++j) data.x.at(i, j) = f[static_cast<size_t>(j)];
        data.y.push_back(lesets::testing::synthetic_clean_target(comps[static_cast<size_t>(i)], test_table()));
    }
    return data;
}

} // namespace

TEST_SUITE("baselines") {

TEST_CASE("composition summary is the fraction-weighted mean and spread") {
    const auto& table = test_table();

    auto pure = summarize_composition(parse_composition("Fe"), table);
    REQUIRE(pure.size() == 12);
    const auto fe = table.descriptor("Fe").continuous();
    for (int j = 0; j < 6; ++j) {
        CHECK(pure[static_cast<size_t>(j)] == fe[static_cast<size_t>(j)]);
        CHECK(pure[static_cast<size_t>(6 + j)] == 0.0);
    }

    auto binary = summarize_composition(parse_composition("FeNi"), table);
    const auto ni = table.descriptor("Ni").continuous();
    for (int j = 0; j < 6; ++j) {
        const double mean = 0.5 * fe[static_cast<size_t>(j)] + 0.5 * ni[static_cast<size_t>(j)];
        CHECK(binary[static_cast<size_t>(j)] == doctest::Approx(mean).epsilon(1e-14));
        // equal halves: spread is half the gap between the two values
        const double gap = std::fabs(fe[static_cast<size_t>(j)] - ni[static_cast<size_t>(j)]) / 2;
        CHECK(binary[static_cast<size_t>(6 + j)] == doctest::Approx(gap).epsilon(1e-12));
    }

    auto skewed = summarize_composition(parse_composition("Fe2CoCrNi"), table);
    const auto co = table.descriptor("Co").continuous();
    const auto cr = table.descriptor("Cr").continuous();
    for (int j = 0; j < 6; ++j) {
        const double mean = 0.4 * fe[static_cast<size_t>(j)] + 0.2 * co[static_cast<size_t>(j)] +
                            0.2 * cr[static_cast<size_t>(j)] + 0.2 * ni[static_cast<size_t>(j)];
        CHECK(skewed[static_cast<size_t>(j)] == doctest::Approx(mean).epsilon(1e-12));
        double var = 0.4 * (fe[static_cast<size_t>(j)] - mean) * (fe[static_cast<size_t>(j)] - mean) +
                     0.2 * (co[static_cast<size_t>(j)] - mean) * (co[static_cast<size_t>(j)] - mean) +
                     0.2 * (cr[static_cast<size_t>(j)] - mean) * (cr[static_cast<size_t>(j)] - mean) +
                     0.2 * (ni[static_cast<size_t>(j)] - mean) * (ni[static_cast<size_t>(j)] - mean);
        CHECK(skewed[static_cast<size_t>(6 + j)] == doctest::Approx(std::sqrt(var)).epsilon(1e-12));
    }
}

TEST_CASE("dataset summary keeps only rows with the requested target") {
    const std::string csv = "composition,youngs_modulus,bulk_modulus,rws\n"
                            "FeNi,200,,\n"
                            "CoCr,,150,\n"
                            "Fe2CoCrNi,180,,\n";
    Dataset data = parse_dataset(csv, "inline");
    TabularDataset tab = summarize_dataset(data, "youngs_modulus", test_table());
    REQUIRE(tab.x.rows == 2);
    CHECK(tab.y == std::vector<double>{200.0, 180.0});
    auto direct = summarize_composition(parse_composition("FeNi"), test_table());
    for (int j = 0; j < 12; ++j) CHECK(tab.x.at(0, j) == direct[static_cast<size_t>(j)]);
}

TEST_CASE("ridge solves its normal equations") {
    Rng rng(5);
    Matrix x = random_features(rng, 20, 5);
    std::vector<double> y;
    for (int i = 0; i < 20; ++i) y.push_back(rng.uniform(-3.0, 3.0));

    for (double lambda : {1e-3, 1.0, 50.0}) {
        LinearModel m = ridge_fit(x, y, lambda);
        Centered c = center(x, y);
        // stationarity: Z^T Z w + lambda w - Z^T y_c = 0
        for (int a = 0; a < 5; ++a) {
            double lhs = lambda * m.w[static_cast<size_t>(a)];
            for (int b = 0; b < 5; ++b) {
                double dot = 0;
                for (int i = 0; i < 20; ++i) dot += c.z.at(i, a) * c.z.at(i, b);
                lhs += dot * m.w[static_cast<size_t>(b)];
            }
            double rhs = 0;
            for (int i = 0; i < 20; ++i) rhs += c.z.at(i, a) * c.yc[static_cast<size_t>(i)];
            CHECK(std::fabs(lhs - rhs) < 1e-8);
        }
    }
}

TEST_CASE("ridge recovers an exact linear relationship") {
    Rng rng(11);
    Matrix x = random_features(rng, 30, 4);
    std::vector<double> coef = {2.0, -1.0, 0.5, 3.0};
    std::vector<double> y = linear_targets(x, coef, 7.0);

    LinearModel m = ridge_fit(x, y, 0.0);
    for (int i = 0; i < x.rows; ++i)
        CHECK(linear_predict(m, row_of(x, i)) == doctest::Approx(y[static_cast<size_t>(i)]).epsilon(1e-9));
    // generalizes to unseen points from the same relationship
    Matrix fresh = random_features(rng, 5, 4);
    std::vector<double> fy = linear_targets(fresh, coef, 7.0);
    for (int i = 0; i < 5; ++i)
        CHECK(linear_predict(m, row_of(fresh, i)) == doctest::Approx(fy[static_cast<size_t>(i)]).epsilon(1e-8));
}

TEST_CASE("extreme ridge penalty shrinks to the mean predictor") {
    Rng rng(13);
    Matrix x = random_features(rng, 25, 3);
    std::vector<double> y;
    for (int i = 0; i < 25; ++i) y.push_back(rng.uniform(0.0, 10.0));
    double ybar = 0;
    for (double v : y) ybar += v;
    ybar /= 25;

    LinearModel m = ridge_fit(x, y, 1e12);
    for (double w : m.w) CHECK(std::fabs(w) < 1e-9);
    CHECK(linear_predict(m, row_of(x, 0)) == doctest::Approx(ybar).epsilon(1e-9));

    CHECK_THROWS_AS(ridge_fit(x, y, -1.0), std::runtime_error);
    CHECK_THROWS_AS(ridge_fit(Matrix(0, 3), {}, 1.0), std::runtime_error);
    CHECK_THROWS_AS(ridge_fit(x, {1.0, 2.0}, 1.0), std::runtime_error);
}

TEST_CASE("lasso satisfies its stationarity conditions") {
    Rng rng(17);
    Matrix x = random_features(rng, 40, 6);
    std::vector<double> y = linear_targets(x, {3.0, 0.0, 0.0, -2.0, 0.0, 1.0}, 1.0);
    for (double& v : y) v += rng.normal() * 0.05;

    const double lambda = 0.1;
    LinearModel m = lasso_fit(x, y, lambda);
    Centered c = center(x, y);
    const int n = x.rows;
    std::vector<double> resid = c.yc;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < 6; ++j) resid[static_cast<size_t>(i)] -= c.z.at(i, j) * m.w[static_cast<size_t>(j)];
    for (int j = 0; j < 6; ++j) {
        double g = 0;
        for (int i = 0; i < n; ++i) g += c.z.at(i, j) * resid[static_cast<size_t>(i)];
        g /= n;
        const double wj = m.w[static_cast<size_t>(j)];
        if (wj != 0.0)
            CHECK(g == doctest::Approx(lambda * (wj > 0 ? 1.0 : -1.0)).epsilon(1e-5));
        else
            CHECK(std::fabs(g) <= lambda + 1e-7);
    }
}

TEST_CASE("unpenalized lasso agrees with unpenalized ridge") {
    Rng rng(19);
    Matrix x = random_features(rng, 30, 4);
    std::vector<double> y;
    for (int i = 0; i < 30; ++i) y.push_back(rng.uniform(-5.0, 5.0));

    LinearModel lasso = lasso_fit(x, y, 0.0);
    LinearModel ridge = ridge_fit(x, y, 0.0);
    for (int i = 0; i < x.rows; ++i)
        CHECK(linear_predict(lasso, row_of(x, i)) == doctest::Approx(linear_predict(ridge, row_of(x, i))).epsilon(1e-6));
}

TEST_CASE("heavy l1 penalty zeroes every weight") {
    Rng rng(23);
    Matrix x = random_features(rng, 20, 5);
    std::vector<double> y;
    for (int i = 0; i < 20; ++i) y.push_back(rng.uniform(-5.0, 5.0));
    double ybar = 0;
    for (double v : y) ybar += v;
    ybar /= 20;

    LinearModel m = lasso_fit(x, y, 1e4);
    for (double w : m.w) CHECK(w == 0.0);
    CHECK(m.intercept == doctest::Approx(ybar).epsilon(1e-15));
    CHECK(linear_predict(m, row_of(x, 3)) == doctest::Approx(ybar).epsilon(1e-15));
}

TEST_CASE("linear predict applies the stored standardization") {
    LinearModel m;
    m.mean = {1.0, 2.0};
    m.stdev = {2.0, 4.0};
    m.w = {3.0, -1.0};
    m.intercept = 10.0;
    // 10 + 3*(5-1)/2 - 1*(6-2)/4 = 15
    CHECK(linear_predict(m, {5.0, 6.0}) == 15.0);
    CHECK_THROWS_AS(linear_predict(m, {1.0}), std::runtime_error);
}

TEST_CASE("nearest-neighbour prediction averages the k closest rows") {
    Matrix x(4, 2);
    double rows[4][2] = {{1.0, 1.0}, {1.0, 1.0}, {5.0, 5.0}, {9.0, 9.0}};
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 2; ++j) x.at(i, j) = rows[i][j];
    std::vector<double> y = {10.0, 20.0, 40.0, 80.0};
    KnnModel m = knn_fit(x, y);

    // rows 0 and 1 are identical; the tie goes to the lower index
    CHECK(knn_predict(m, {0.0, 0.0}, 1) == 10.0);
    CHECK(knn_predict(m, {0.0, 0.0}, 2) == 15.0);
    CHECK(knn_predict(m, {8.8, 8.8}, 1) == 80.0);
    CHECK(knn_predict(m, {0.0, 0.0}, 4) == doctest::Approx((10.0 + 20.0 + 40.0 + 80.0) / 4).epsilon(1e-15));

    CHECK_THROWS_AS(knn_predict(m, {0.0, 0.0}, 0), std::runtime_error);
    CHECK_THROWS_AS(knn_predict(m, {0.0, 0.0}, 5), std::runtime_error);
    CHECK_THROWS_AS(knn_predict(m, {0.0}, 1), std::runtime_error);
    CHECK_THROWS_AS(knn_fit(Matrix(0, 2), {}), std::runtime_error);
}

TEST_CASE("cross-validation picks the hyperparameter with the lower error") {
    Rng rng(29);
    Matrix x = random_features(rng, 40, 4);
    std::vector<double> y = linear_targets(x, {2.0, -1.0, 3.0, 0.5}, 4.0);

    // noiseless linear data: a tiny penalty beats a huge one decisively
    CHECK(choose_lambda(LinearPenalty::Ridge, x, y, {1e-8, 1e6}, 0) == 1e-8);
    CHECK(choose_lambda(LinearPenalty::Ridge, x, y, {1e6, 1e-8}, 0) == 1e-8);

    // two tight clusters with distinct targets: averaging across clusters loses
    Matrix cx(50, 2);
    std::vector<double> cy(50);
    for (int i = 0; i < 50; ++i) {
        const bool hi = i >= 25;
        cx.at(i, 0) = (hi ? 10.0 : 0.0) + rng.uniform(-0.1, 0.1);
        cx.at(i, 1) = (hi ? 10.0 : 0.0) + rng.uniform(-0.1, 0.1);
        cy[static_cast<size_t>(i)] = hi ? 100.0 : 0.0;
    }
    CHECK(choose_k(cx, cy, {1, 30}, 0) == 1);
}

TEST_CASE("cross-validation ties resolve to the earlier grid entry") {
    Rng rng(31);
    Matrix x = random_features(rng, 20, 3);
    std::vector<double> flat(20, 5.0); // every candidate scores identically

    CHECK(choose_lambda(LinearPenalty::Ridge, x, flat, {0.5, 0.1, 1.0}, 3) == 0.5);
    CHECK(choose_k(x, flat, {3, 1, 2}, 3) == 3);
}

TEST_CASE("hyperparameter selection failure modes") {
    Rng rng(37);
    Matrix x = random_features(rng, 20, 3);
    std::vector<double> y;
    for (int i = 0; i < 20; ++i) y.push_back(rng.uniform(-1.0, 1.0));

    CHECK_THROWS_AS(choose_lambda(LinearPenalty::Ridge, x, y, {}, 0), std::runtime_error);
    // every candidate fails to fit
    CHECK_THROWS_AS(choose_lambda(LinearPenalty::Ridge, x, y, {-1.0, -2.0}, 0), std::runtime_error);
    // no k fits the fold size
    CHECK_THROWS_AS(choose_k(x, y, {100}, 0), std::runtime_error);
    // too few rows to fold
    Matrix tiny = random_features(rng, 4, 3);
    CHECK_THROWS_AS(choose_k(tiny, {1.0, 2.0, 3.0, 4.0}, {1}, 0), std::runtime_error);
}

TEST_CASE("baseline benchmark tunes then assesses all three methods") {
    TabularDataset data = synthetic_tabular(120);
    BaselineBenchmarkConfig cfg;
    cfg.n_replicates = 5;

    auto results = run_baseline_benchmark(data, cfg);
    REQUIRE(results.size() == 3);
    CHECK(results[0].method == "ridge");
    CHECK(results[1].method == "lasso");
    CHECK(results[2].method == "knn");

    auto ridge_grid = default_ridge_lambda_grid();
    CHECK(std::count(ridge_grid.begin(), ridge_grid.end(), results[0].hyperparameter) == 1);
    auto lasso_grid = default_lasso_lambda_grid();
    CHECK(std::count(lasso_grid.begin(), lasso_grid.end(), results[1].hyperparameter) == 1);
    auto k_grid = default_k_grid();
    CHECK(std::count(k_grid.begin(), k_grid.end(), static_cast<int>(results[2].hyperparameter)) == 1);

    for (const auto& r : results) {
        CHECK(r.summary.replicates.size() == 5);
        CHECK(r.summary.n_failed == 0);
        REQUIRE(r.summary.mean_mae.has_value());
        CHECK(*r.summary.mean_mae > 0.0);
    }

    // rerun is bit-identical
    auto again = run_baseline_benchmark(data, cfg);
    for (size_t m = 0; m < 3; ++m) {
        CHECK(again[m].hyperparameter == results[m].hyperparameter);
        CHECK(*again[m].summary.mean_mae == *results[m].summary.mean_mae);
        CHECK(*again[m].summary.mean_r2 == *results[m].summary.mean_r2);
    }

    TabularDataset small = synthetic_tabular(10);
    CHECK_THROWS_AS(run_baseline_benchmark(small, cfg), std::runtime_error);
}

TEST_CASE("baseline outputs land in per-method directories") {
    TempDir dir("baseline_out");
    TabularDataset data = synthetic_tabular(80);
    BaselineBenchmarkConfig cfg;
    cfg.n_replicates = 3;
    auto results = run_baseline_benchmark(data, cfg);
    write_baseline_outputs(results, dir.path.string());

    for (const std::string method : {"ridge", "lasso", "knn"}) {
        const std::string reps = read_file(dir.path / method / "replicates.csv");
        CHECK(reps.rfind("seed,mae,r2,epochs,wall_time_s\n", 0) == 0);
        CHECK(std::count(reps.begin(), reps.end(), '\n') == 4);
        nlohmann::json j = nlohmann::json::parse(read_file(dir.path / method / "summary.json"));
        CHECK(j["n_replicates"] == 3);
    }
    nlohmann::json tuned = nlohmann::json::parse(read_file(dir.path / "tuned_hyperparameters.json"));
    CHECK(tuned.size() == 3);
    CHECK(tuned["ridge"].get<double>() == results[0].hyperparameter);
    CHECK(tuned["knn"].get<double>() == results[2].hyperparameter);
}

} // TEST_SUITE
