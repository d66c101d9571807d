#include "lesets/graphs.hpp"

#include <stdexcept>

namespace lesets {

Matrix LEGraph::weighted_adjacency() const {
    const int k = node_count();
    Matrix a(k, k, 0.0);
    for (size_t e = 0; e < edges.size(); ++e) {
        auto [m, n] = edges[e];
        a.at(m, n) = edge_weights[e];
        a.at(n, m) = edge_weights[e];
    }
    return a;
}

LEGraph build_le_graph(const std::string& center, const Composition& comp, const ElementTable& table) {
    if (!comp.contains(center)) throw std::runtime_error("center " + center + " not in composition");

    LEGraph g;
    g.center_index = 0;
    g.symbols.push_back(center);
    for (const auto& e : comp.entries()) {
        if (e.symbol == center) continue;
        g.symbols.push_back(e.symbol);
        g.edges.emplace_back(0, static_cast<int>(g.symbols.size()) - 1);
        g.edge_weights.push_back(e.fraction);
    }

    const int k = g.node_count();
    g.node_features = Matrix(k, FeatureSchema::total_dim);
    for (int i = 0; i < k; ++i) {
        auto f = featurize_element(g.symbols[i], table);
        for (int c = 0; c < FeatureSchema::total_dim; ++c) g.node_features.at(i, c) = f[c];
    }
    return g;
}

GraphSet build_graph_set(const Composition& comp, const ElementTable& table) {
    GraphSet gs;
    gs.members.reserve(comp.size());
    for (const auto& e : comp.entries())
        gs.members.push_back({build_le_graph(e.symbol, comp, table), e.fraction});
    return gs;
}

nlohmann::json graph_set_to_json(const GraphSet& gs) {
    nlohmann::json members = nlohmann::json::array();
    for (const auto& m : gs.members) {
        nlohmann::json jm;
        jm["center"] = m.graph.center_symbol();
        jm["nodes"] = m.graph.symbols;
        jm["edge_weights"] = m.graph.edge_weights;
        jm["weight"] = m.weight;
        members.push_back(std::move(jm));
    }
    nlohmann::json j;
    j["members"] = std::move(members);
    if (gs.target)
        j["target"] = *gs.target;
    else
        j["target"] = nullptr;
    if (!gs.target_unit.empty()) j["target_unit"] = gs.target_unit;
    return j;
}

GraphSet graph_set_from_json(const nlohmann::json& j, const ElementTable& table) {
    GraphSet gs;
    for (const auto& jm : j.at("members")) {
        const std::string center = jm.at("center").get<std::string>();
        const std::vector<std::string> nodes = jm.at("nodes").get<std::vector<std::string>>();
        const std::vector<double> edge_weights = jm.at("edge_weights").get<std::vector<double>>();
        if (nodes.empty() || nodes[0] != center)
            throw std::runtime_error("graph set JSON: center must be the first node");
        if (edge_weights.size() + 1 != nodes.size())
            throw std::runtime_error("graph set JSON: edge_weights must have one entry per neighbor");

        LEGraph g;
        g.center_index = 0;
        g.symbols = nodes;
        for (size_t n = 1; n < nodes.size(); ++n) {
            g.edges.emplace_back(0, static_cast<int>(n));
            g.edge_weights.push_back(edge_weights[n - 1]);
        }
        const int k = g.node_count();
        g.node_features = Matrix(k, FeatureSchema::total_dim);
        for (int i = 0; i < k; ++i) {
            auto f = featurize_element(g.symbols[i], table);
            for (int c = 0; c < FeatureSchema::total_dim; ++c) g.node_features.at(i, c) = f[c];
        }
        gs.members.push_back({std::move(g), jm.at("weight").get<double>()});
    }
    if (j.contains("target") && !j.at("target").is_null()) gs.target = j.at("target").get<double>();
    if (j.contains("target_unit")) gs.target_unit = j.at("target_unit").get<std::string>();
    return gs;
}

} // namespace lesets
