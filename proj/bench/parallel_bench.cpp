// Times the serial reference path (threads=1) against the OpenMP path for
// the three threaded stages: featurization, batch prediction, and replicate
// benchmarking. Also confirms the outputs agree bit for bit, which is the
// contract the parallel paths promise.
//
// Usage: parallel_bench [threads]   (default: all hardware threads)

#include "lesets/dataset.hpp"
#include "lesets/elements.hpp"
#include "lesets/model.hpp"
#include "lesets/parallel.hpp"
#include "lesets/tensor.hpp"
#include "lesets/train.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

using namespace lesets;

namespace {

double now_s() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

Dataset make_dataset(const ElementTable& table, int n) {
    std::vector<std::string> pool;
    for (const auto& e : table.elements()) pool.push_back(e.symbol);
    Rng rng(42);
    Dataset data;
    for (int i = 0; i < n; ++i) {
        rng.shuffle(pool);
        const int k = 2 + rng.below(4);
        std::vector<std::pair<std::string, double>> parts;
        for (int j = 0; j < k; ++j) parts.emplace_back(pool[static_cast<size_t>(j)], rng.uniform(0.5, 2.0));
        DataRecord rec;
        rec.composition = Composition::from_amounts(parts);
        rec.youngs_modulus = rng.uniform(50.0, 300.0);
        data.records.push_back(std::move(rec));
    }
    return data;
}

struct Timing {
    double serial_s = 0;
    double parallel_s = 0;
    bool identical = false;
};

void report(const char* name, const Timing& t) {
    std::printf("%-22s %10.3fs %10.3fs %8.2fx   %s\n", name, t.serial_s, t.parallel_s,
                t.serial_s / std::max(t.parallel_s, 1e-9), t.identical ? "identical" : "MISMATCH");
}

bool same(double a, double b) { return a == b; }

} // namespace

int main(int argc, char** argv) {
    const int threads = argc > 1 ? std::atoi(argv[1]) : hardware_threads();
    const char* table_path = std::getenv("LESETS_ELEMENT_TABLE");
    if (!table_path) table_path = LESETS_DEFAULT_TABLE;
    ElementTable table = ElementTable::load(table_path);

    std::printf("threads: %d (hardware: %d)\n", threads, hardware_threads());
    std::printf("%-22s %11s %11s %9s\n", "stage", "serial", "parallel", "speedup");

    Dataset data = make_dataset(table, 4000);

    Timing feat;
    std::vector<GraphSet> serial_sets, parallel_sets;
    {
        double t0 = now_s();
        serial_sets = build_graph_sets(data, "youngs_modulus", table, 1);
        feat.serial_s = now_s() - t0;
        t0 = now_s();
        parallel_sets = build_graph_sets(data, "youngs_modulus", table, threads);
        feat.parallel_s = now_s() - t0;
        feat.identical = serial_sets.size() == parallel_sets.size();
        for (size_t i = 0; feat.identical && i < serial_sets.size(); ++i) {
            const Matrix& a = serial_sets[i].members[0].graph.node_features;
            const Matrix& b = parallel_sets[i].members[0].graph.node_features;
            feat.identical = a.v == b.v && same(serial_sets[i].members[0].weight, parallel_sets[i].members[0].weight);
        }
    }
    report("featurization", feat);

    Timing pred;
    {
        ModelConfig mc;
        mc.seed = 1;
        LESetsModel model(mc, FeatureSchema::total_dim);
        std::vector<double> targets;
        for (const GraphSet& s : serial_sets) targets.push_back(*s.target);
        TargetScaler scaler = TargetScaler::fit(targets);

        double t0 = now_s();
        std::vector<double> y1 = predict_all(model, serial_sets, scaler, 1);
        pred.serial_s = now_s() - t0;
        t0 = now_s();
        std::vector<double> yt = predict_all(model, serial_sets, scaler, threads);
        pred.parallel_s = now_s() - t0;
        pred.identical = y1 == yt;
    }
    report("prediction", pred);

    Timing reps;
    {
        std::vector<GraphSet> small(serial_sets.begin(), serial_sets.begin() + 400);
        ModelConfig mc;
        mc.hidden_dim = 16;
        auto factory = [&](uint64_t seed) {
            ModelConfig c = mc;
            c.seed = seed;
            return make_model("lesets", c, FeatureSchema::total_dim);
        };
        BenchmarkConfig bc;
        bc.n_replicates = 4;
        bc.train.max_epochs = 10;

        bc.threads = 1;
        double t0 = now_s();
        BenchmarkSummary s1 = run_benchmark(small, factory, bc);
        reps.serial_s = now_s() - t0;

        bc.threads = threads;
        t0 = now_s();
        BenchmarkSummary st = run_benchmark(small, factory, bc);
        reps.parallel_s = now_s() - t0;

        reps.identical = s1.replicates.size() == st.replicates.size();
        for (size_t i = 0; reps.identical && i < s1.replicates.size(); ++i) {
            const ReplicateResult& a = s1.replicates[i];
            const ReplicateResult& b = st.replicates[i];
            reps.identical = a.metrics && b.metrics && same(a.metrics->mae, b.metrics->mae) &&
                             a.metrics->r2 == b.metrics->r2 && a.epochs == b.epochs;
        }
    }
    report("replicate training", reps);

    const bool ok = feat.identical && pred.identical && reps.identical;
    std::printf("%s\n", ok ? "all parallel outputs match the serial reference" : "PARALLEL OUTPUT MISMATCH");
    return ok ? 0 : 1;
}
