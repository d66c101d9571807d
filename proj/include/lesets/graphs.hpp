#pragma once

#include "lesets/composition.hpp"
#include "lesets/elements.hpp"
#include "lesets/matrix.hpp"

#include <json.hpp>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace lesets {

/// Star graph of one local environment: a center element connected to every
/// other element type in the composition, edges weighted by neighbor fraction.
struct LEGraph {
    int center_index = 0;                       // always 0: center first, neighbors in composition order
    std::vector<std::string> symbols;           // per-node element symbols
    Matrix node_features;                       // k x FeatureSchema::total_dim
    std::vector<std::pair<int, int>> edges;     // undirected (center, neighbor)
    std::vector<double> edge_weights;           // neighbor molar fractions, aligned with edges

    int node_count() const { return static_cast<int>(symbols.size()); }
    const std::string& center_symbol() const { return symbols[center_index]; }

    /// Symmetric weighted adjacency; the message-passing operand.
    Matrix weighted_adjacency() const;
};

/// Weighted set of LE graphs representing one alloy; the model input X = {(x_i, w_i)}.
struct GraphSet {
    struct Member {
        LEGraph graph;
        double weight; // molar fraction of the center element
    };
    std::vector<Member> members;
    std::optional<double> target;
    std::string target_unit; // "GPa" for moduli, "angstrom" for r_ws, empty if untagged
};

LEGraph build_le_graph(const std::string& center, const Composition& comp, const ElementTable& table);
GraphSet build_graph_set(const Composition& comp, const ElementTable& table);

nlohmann::json graph_set_to_json(const GraphSet& gs);
GraphSet graph_set_from_json(const nlohmann::json& j, const ElementTable& table);

} // namespace lesets
