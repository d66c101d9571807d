#include "lesets/analysis.hpp"

#include "lesets/csv.hpp"
#include "lesets/parallel.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>

namespace lesets {

namespace {

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
};

/// Sample standard deviation over sqrt(n); 0 when n < 2.
MeanSe mean_and_se(const std::vector<double>& xs) {
    MeanSe out;
    if (xs.empty()) return out;
    for (double x : xs) out.mean += x;
    out.mean /= static_cast<double>(xs.size());
    if (xs.size() < 2) return out;
    double var = 0.0;
    for (double x : xs) var += (x - out.mean) * (x - out.mean);
    var /= static_cast<double>(xs.size() - 1);
    out.se = std::sqrt(var) / std::sqrt(static_cast<double>(xs.size()));
    return out;
}

std::vector<int> subsample_rows(const std::vector<int>& pool, double fraction) {
    const int m_sub = static_cast<int>(std::floor(fraction * static_cast<double>(pool.size())));
    return std::vector<int>(pool.begin(), pool.begin() + m_sub);
}

std::vector<GraphSet> gather(const std::vector<GraphSet>& data, const std::vector<int>& idx) {
    std::vector<GraphSet> out;
    out.reserve(idx.size());
    for (int i : idx) out.push_back(data[static_cast<size_t>(i)]);
    return out;
}

} // namespace

std::vector<SensitivityPoint> sensitivity_sweep(const std::vector<GraphSet>& data, const ModelFactory& factory,
                                                const SweepConfig& config) {
    if (config.fractions.empty()) throw std::runtime_error("no fractions given");
    if (config.n_rep < 1) throw std::runtime_error("n_rep must be positive");
    std::vector<double> fractions = config.fractions;
    std::sort(fractions.begin(), fractions.end());
    fractions.erase(std::unique(fractions.begin(), fractions.end()), fractions.end());
    for (double f : fractions)
        if (!(f > 0.0) || f > 1.0) throw std::runtime_error("fractions must lie in (0, 1]");

    const int n = static_cast<int>(data.size());
    const int n_test = n / 5;
    if (n_test < 1) throw std::runtime_error("dataset too small for a 20% test holdout");

    const int n_points = static_cast<int>(fractions.size());
    const int n_jobs = n_points * config.n_rep;
    std::vector<Metrics> results(static_cast<size_t>(n_jobs));

    run_parallel(n_jobs, config.threads, [&](int job) {
        const int f_idx = job / config.n_rep;
        const int rep = job % config.n_rep;
        const double fraction = fractions[static_cast<size_t>(f_idx)];

        // The test holdout and the pool order depend only on the replicate
        // seed, so every fraction at this replicate shares the same holdout
        // and draws nested subsamples.
        std::vector<int> idx(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) idx[static_cast<size_t>(i)] = i;
        Rng rng(static_cast<uint64_t>(rep));
        rng.shuffle(idx);
        std::vector<int> test_rows(idx.begin(), idx.begin() + n_test);
        std::vector<int> pool(idx.begin() + n_test, idx.end());
        rng.shuffle(pool);

        std::vector<int> sub = subsample_rows(pool, fraction);
        const int m_sub = static_cast<int>(sub.size());
        const int n_val = m_sub / 4; // 3:1 train:val
        if (n_val < 1 || m_sub - n_val < 2)
            throw std::runtime_error("fraction " + csv::format_double(fraction) + " too small for a valid split");
        std::vector<int> val_rows(sub.end() - n_val, sub.end());
        std::vector<int> train_rows(sub.begin(), sub.end() - n_val);

        std::vector<GraphSet> train = gather(data, train_rows);
        std::vector<GraphSet> val = gather(data, val_rows);
        std::vector<GraphSet> test = gather(data, test_rows);

        std::vector<double> ytr;
        ytr.reserve(train.size());
        for (const GraphSet& s : train) {
            if (!s.target) throw std::runtime_error("training row has no target");
            ytr.push_back(*s.target);
        }
        TargetScaler scaler = TargetScaler::fit(ytr);
        std::unique_ptr<Model> model = factory(static_cast<uint64_t>(rep));
        TrainConfig tc = config.train;
        tc.seed = static_cast<uint64_t>(rep);
        train_model(*model, train, val, scaler, tc);
        results[static_cast<size_t>(job)] = evaluate(*model, test, scaler);
    });

    std::vector<SensitivityPoint> points(static_cast<size_t>(n_points));
    for (int f_idx = 0; f_idx < n_points; ++f_idx) {
        SensitivityPoint& p = points[static_cast<size_t>(f_idx)];
        p.fraction = fractions[static_cast<size_t>(f_idx)];
        p.se_degenerate = config.n_rep == 1;
        std::vector<double> maes, r2s;
        for (int rep = 0; rep < config.n_rep; ++rep) {
            const Metrics& m = results[static_cast<size_t>(f_idx * config.n_rep + rep)];
            p.replicates.push_back(m);
            maes.push_back(m.mae);
            if (m.r2) r2s.push_back(*m.r2);
        }
        MeanSe mae_stats = mean_and_se(maes);
        p.mean_mae = mae_stats.mean;
        p.se_mae = mae_stats.se;
        if (!r2s.empty()) {
            MeanSe r2_stats = mean_and_se(r2s);
            p.mean_r2 = r2_stats.mean;
            p.se_r2 = r2_stats.se;
        }
    }
    return points;
}

void write_sensitivity_outputs(const std::vector<SensitivityPoint>& points, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path dir(out_dir);

    csv::Writer rows((dir / "sensitivity.csv").string(), {"fraction", "replicate", "mae", "r2"});
    for (const SensitivityPoint& p : points) {
        for (size_t rep = 0; rep < p.replicates.size(); ++rep) {
            const Metrics& m = p.replicates[rep];
            rows.append({csv::format_double(p.fraction), std::to_string(rep), csv::format_double(m.mae),
                         m.r2 ? csv::format_double(*m.r2) : ""});
        }
    }
    rows.close();

    nlohmann::json j = nlohmann::json::array();
    for (const SensitivityPoint& p : points) {
        nlohmann::json e;
        e["fraction"] = p.fraction;
        e["n_rep"] = p.replicates.size();
        e["mean_mae"] = p.mean_mae;
        e["se_mae"] = p.se_mae;
        e["mean_r2"] = p.mean_r2 ? nlohmann::json(*p.mean_r2) : nlohmann::json(nullptr);
        e["se_r2"] = p.se_r2;
        e["se_degenerate"] = p.se_degenerate;
        j.push_back(e);
    }
    std::ofstream out(dir / "sensitivity_summary.json");
    if (!out) throw std::runtime_error("cannot write sensitivity_summary.json in " + out_dir);
    out << j.dump(2) << '\n';
}

ImportanceReport importance_report(const LESetsModel& model, const std::vector<GraphSet>& sets,
                                   const std::vector<std::string>& labels) {
    if (!labels.empty() && labels.size() != sets.size())
        throw std::runtime_error("label count does not match set count");
    ImportanceReport report;
    std::map<std::string, std::pair<int, int>> counts; // element -> (criterion1, criterion2)
    for (size_t i = 0; i < sets.size(); ++i) {
        HeaImportance hea;
        hea.label = labels.empty() ? "row" + std::to_string(i) : labels[i];
        hea.scores = model.importance_scores(sets[i]);
        for (const auto& [symbol, imp] : hea.scores) counts.emplace(symbol, std::make_pair(0, 0));

        double min_imp = 0.0, max_imp = 0.0;
        bool any = false;
        for (const auto& [symbol, imp] : hea.scores) {
            if (!imp) continue;
            if (!any) {
                min_imp = max_imp = *imp;
                any = true;
            } else {
                min_imp = std::min(min_imp, *imp);
                max_imp = std::max(max_imp, *imp);
            }
        }
        if (any) {
            for (const auto& [symbol, imp] : hea.scores) {
                if (!imp || *imp < 3.0 * min_imp) continue;
                hea.criterion1.push_back(symbol);
                counts[symbol].first += 1;
                if (*imp == max_imp) {
                    hea.criterion2.push_back(symbol);
                    counts[symbol].second += 1;
                }
            }
        }
        report.per_hea.push_back(std::move(hea));
    }
    for (const auto& [symbol, c] : counts) {
        report.elements.push_back(symbol);
        report.criterion1_counts.push_back(c.first);
        report.criterion2_counts.push_back(c.second);
    }
    return report;
}

ImportanceReport pool_reports(const std::vector<ImportanceReport>& reports) {
    std::map<std::string, std::pair<int, int>> counts;
    for (const ImportanceReport& r : reports)
        for (size_t i = 0; i < r.elements.size(); ++i) {
            auto& c = counts[r.elements[i]];
            c.first += r.criterion1_counts[i];
            c.second += r.criterion2_counts[i];
        }
    ImportanceReport out;
    for (const auto& [symbol, c] : counts) {
        out.elements.push_back(symbol);
        out.criterion1_counts.push_back(c.first);
        out.criterion2_counts.push_back(c.second);
    }
    return out;
}

InteractionMatrix interaction_matrix(const std::vector<HeaImportance>& per_hea) {
    std::map<std::string, int> index;
    for (const HeaImportance& hea : per_hea)
        for (const auto& [symbol, imp] : hea.scores) index.emplace(symbol, 0);
    InteractionMatrix out;
    for (auto& [symbol, idx] : index) {
        idx = static_cast<int>(out.elements.size());
        out.elements.push_back(symbol);
    }
    const int k = static_cast<int>(out.elements.size());
    out.delta = Matrix(k, k);
    out.defined.assign(static_cast<size_t>(k) * static_cast<size_t>(k), 0);

    for (int e1 = 0; e1 < k; ++e1) {
        for (int e2 = 0; e2 < k; ++e2) {
            if (e1 == e2) continue;
            const std::string& s1 = out.elements[static_cast<size_t>(e1)];
            const std::string& s2 = out.elements[static_cast<size_t>(e2)];
            double sum_with = 0.0, sum_without = 0.0;
            int n_with = 0, n_without = 0;
            for (const HeaImportance& hea : per_hea) {
                std::optional<double> imp1;
                bool has2 = false;
                for (const auto& [symbol, imp] : hea.scores) {
                    if (symbol == s1 && imp) imp1 = imp;
                    if (symbol == s2) has2 = true;
                }
                if (!imp1) continue;
                if (has2) {
                    sum_with += *imp1;
                    ++n_with;
                } else {
                    sum_without += *imp1;
                    ++n_without;
                }
            }
            if (n_with > 0 && n_without > 0) {
                out.delta.at(e1, e2) = sum_with / n_with - sum_without / n_without;
                out.defined[static_cast<size_t>(e1) * static_cast<size_t>(k) + static_cast<size_t>(e2)] = 1;
            }
        }
    }
    return out;
}

void write_importance_outputs(const std::vector<std::pair<std::string, ImportanceReport>>& modes,
                              const std::string& out_dir) {
    if (modes.empty()) throw std::runtime_error("no importance reports to write");
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path dir(out_dir);

    csv::Writer per_hea((dir / "imp_per_hea.csv").string(), {"mode", "hea", "element", "imp"});
    for (const auto& [mode, report] : modes)
        for (const HeaImportance& hea : report.per_hea)
            for (const auto& [symbol, imp] : hea.scores)
                per_hea.append({mode, hea.label, symbol, imp ? csv::format_double(*imp) : ""});
    per_hea.close();

    csv::Writer freq((dir / "imp_frequencies.csv").string(),
                     {"mode", "element", "criterion1_count", "criterion2_count"});
    for (const auto& [mode, report] : modes)
        for (size_t i = 0; i < report.elements.size(); ++i)
            freq.append({mode, report.elements[i], std::to_string(report.criterion1_counts[i]),
                         std::to_string(report.criterion2_counts[i])});
    freq.close();

    const InteractionMatrix m = interaction_matrix(modes.front().second.per_hea);
    csv::Row header = {"element"};
    for (const std::string& e : m.elements) header.push_back(e);
    csv::Writer inter((dir / "interaction_matrix.csv").string(), header);
    for (size_t r = 0; r < m.elements.size(); ++r) {
        csv::Row row = {m.elements[r]};
        for (size_t c = 0; c < m.elements.size(); ++c)
            row.push_back(m.is_defined(static_cast<int>(r), static_cast<int>(c))
                              ? csv::format_double(m.delta.at(static_cast<int>(r), static_cast<int>(c)))
                              : "");
        inter.append(row);
    }
    inter.close();
}

} // namespace lesets
