#pragma once

#include "lesets/graphs.hpp"
#include "lesets/matrix.hpp"
#include "lesets/model.hpp"
#include "lesets/train.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace lesets {

/// One sweep point: metrics of n_rep independently trained models at a given
/// training-data fraction. Standard error = sample std / sqrt(n_rep); with a
/// single replicate it is 0 by convention and flagged.
struct SensitivityPoint {
    double fraction = 1.0;
    std::vector<Metrics> replicates;
    double mean_mae = 0.0;
    double se_mae = 0.0;
    std::optional<double> mean_r2;
    double se_r2 = 0.0;
    bool se_degenerate = false; // n_rep == 1
};

struct SweepConfig {
    std::vector<double> fractions; // each in (0, 1]
    int n_rep = 10;
    TrainConfig train;
    int threads = 1;
};

/// Data-size sensitivity sweep. Per replicate seed: a fixed 20% test
/// holdout, then for each fraction a subsample of the remainder split 3:1
/// train:val, trained and scored on the holdout. Points come back sorted by
/// fraction.
std::vector<SensitivityPoint> sensitivity_sweep(const std::vector<GraphSet>& data, const ModelFactory& factory,
                                                const SweepConfig& config);

/// Writes sensitivity.csv (fraction, replicate, mae, r2) and
/// sensitivity_summary.json with per-point means and standard errors.
void write_sensitivity_outputs(const std::vector<SensitivityPoint>& points, const std::string& out_dir);

// ---------------------------------------------------------------------------
// Attention-based interpretation

/// Importance scores of one alloy plus which member elements satisfy the two
/// selection criteria: (1) Imp at least three times the smallest Imp in the
/// alloy; (2) additionally the largest Imp.
struct HeaImportance {
    std::string label;
    std::vector<std::pair<std::string, std::optional<double>>> scores; // element -> Imp
    std::vector<std::string> criterion1;
    std::vector<std::string> criterion2; // subset of criterion1
};

struct ImportanceReport {
    std::vector<HeaImportance> per_hea;
    std::vector<std::string> elements; // sorted union of member elements, zero-count rows kept
    std::vector<int> criterion1_counts;
    std::vector<int> criterion2_counts;
};

/// Scores every set with the model's attention importances and tallies the
/// criteria per element. Labels identify alloys in the emitted dump; pass an
/// empty vector to label by row index.
ImportanceReport importance_report(const LESetsModel& model, const std::vector<GraphSet>& sets,
                                   const std::vector<std::string>& labels = {});

/// Element-wise sum of criterion counts over several reports (per_hea dumps
/// are not merged). Used for the pooled multi-model mode.
ImportanceReport pool_reports(const std::vector<ImportanceReport>& reports);

/// delta[e1][e2] = mean(Imp_e1 | e2 present) - mean(Imp_e1 | e2 absent).
/// Entries with an empty subset on either side, and the diagonal, are
/// undefined and marked as such, never zero-filled.
struct InteractionMatrix {
    std::vector<std::string> elements;
    Matrix delta;
    std::vector<uint8_t> defined; // row-major, aligned with delta

    bool is_defined(int r, int c) const { return defined[static_cast<size_t>(r) * elements.size() + c] != 0; }
};

InteractionMatrix interaction_matrix(const std::vector<HeaImportance>& per_hea);

/// Writes imp_per_hea.csv and imp_frequencies.csv for every labeled mode,
/// and interaction_matrix.csv for the first report.
void write_importance_outputs(const std::vector<std::pair<std::string, ImportanceReport>>& modes,
                              const std::string& out_dir);

} // namespace lesets
