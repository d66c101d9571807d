#pragma once

#include "lesets/composition.hpp"
#include "lesets/elements.hpp"
#include "lesets/graphs.hpp"

#include <string>

namespace lesets::testing {

/// Shared table for the whole test binary; the file is immutable during a run.
inline const ElementTable& test_table() {
    static ElementTable table = ElementTable::load(LESETS_TEST_TABLE);
    return table;
}

inline GraphSet set_from_formula(const std::string& formula) {
    return build_graph_set(parse_composition(formula), test_table());
}

} // namespace lesets::testing
