#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lesets/composition.hpp"
#include "lesets/elements.hpp"
#include "lesets/graphs.hpp"

namespace lesets {

/// One row of a property table: a composition plus whichever targets the
/// source had values for. Empty CSV cells are missing, not zero.
struct DataRecord {
  Composition composition;
  std::optional<double> youngs_modulus; // GPa
  std::optional<double> bulk_modulus;   // GPa
  std::optional<double> rws;            // angstrom
};

struct Dataset {
  std::vector<DataRecord> records;

  /// Rows that have a value for `target` (one of youngs_modulus,
  /// bulk_modulus, rws), in file order.
  std::vector<int> rows_with(const std::string& target) const;
};

/// Unit tag attached to predictions for a given target column.
std::string target_unit(const std::string& target);

Dataset load_dataset(const std::string& path);
Dataset parse_dataset(const std::string& text, const std::string& origin);

/// Graph sets for every row holding `target`, ready for training. Row order
/// follows the file. `threads` splits the featurization work; output is
/// identical for any thread count.
std::vector<GraphSet> build_graph_sets(const Dataset& data,
                                       const std::string& target,
                                       const ElementTable& table,
                                       int threads = 1);

} // namespace lesets
