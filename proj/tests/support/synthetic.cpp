#include "synthetic.hpp"

#include "lesets/csv.hpp"
#include "lesets/tensor.hpp"

#include <cmath>
#include <stdexcept>

namespace lesets::testing {

const std::vector<std::string>& synthetic_pool() {
    static const std::vector<std::string> pool = {"Al", "Si", "Ti", "V", "Cr", "Mn", "Fe", "Co", "Ni", "Cu"};
    return pool;
}

std::vector<Composition> make_synthetic_compositions(const SyntheticSpec& spec) {
    const std::vector<std::string>& pool = synthetic_pool();
    Rng rng(spec.seed);
    std::vector<Composition> out;
    out.reserve(static_cast<size_t>(spec.n));
    for (int i = 0; i < spec.n; ++i) {
        const int k = 3 + rng.below(3);
        std::vector<std::string> picks = pool;
        rng.shuffle(picks);
        picks.resize(static_cast<size_t>(k));
        std::vector<std::pair<std::string, double>> amounts;
        for (const std::string& sym : picks) amounts.emplace_back(sym, rng.uniform(0.5, 2.0));
        out.push_back(Composition::from_amounts(std::move(amounts)));
    }
    return out;
}

double synthetic_clean_target(const Composition& comp, const ElementTable& table) {
    double u[4] = {0, 0, 0, 0};
    for (const auto& entry : comp.entries()) {
        const auto z = table.zscored_continuous(entry.symbol);
        for (int j = 0; j < 4; ++j) u[j] += entry.fraction * z[static_cast<size_t>(j)];
    }
    return 2.0 * u[0] + 1.5 * std::sin(1.3 * u[1]) + 0.8 * u[2] * u[3] + 0.5 * u[3] * u[3];
}

std::vector<GraphSet> make_synthetic_sets(const ElementTable& table, const SyntheticSpec& spec) {
    std::vector<Composition> comps = make_synthetic_compositions(spec);
    std::vector<double> clean(comps.size());
    double mean = 0.0;
    for (size_t i = 0; i < comps.size(); ++i) {
        clean[i] = synthetic_clean_target(comps[i], table);
        mean += clean[i];
    }
    mean /= static_cast<double>(comps.size());
    double var = 0.0;
    for (double c : clean) var += (c - mean) * (c - mean);
    var /= static_cast<double>(comps.size());
    const double noise_sigma = spec.noise_frac * std::sqrt(var);

    Rng noise_rng(spec.seed ^ 0xabcdef1234567890ULL);
    std::vector<GraphSet> sets;
    sets.reserve(comps.size());
    for (size_t i = 0; i < comps.size(); ++i) {
        GraphSet gs = build_graph_set(comps[i], table);
        gs.target = clean[i] + noise_sigma * noise_rng.normal();
        sets.push_back(std::move(gs));
    }
    return sets;
}

void write_synthetic_csv(const std::string& path, const ElementTable& table, const SyntheticSpec& spec) {
    std::vector<Composition> comps = make_synthetic_compositions(spec);
    std::vector<GraphSet> sets = make_synthetic_sets(table, spec);
    if (comps.size() != sets.size()) throw std::runtime_error("synthetic corpus size mismatch");
    csv::Writer out(path, {"composition", "youngs_modulus", "bulk_modulus", "rws"});
    for (size_t i = 0; i < comps.size(); ++i)
        out.append({comps[i].formula(), csv::format_double(*sets[i].target), "", ""});
    out.close();
}

} // namespace lesets::testing
