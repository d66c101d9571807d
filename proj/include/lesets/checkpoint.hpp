#pragma once

#include "lesets/elements.hpp"
#include "lesets/model.hpp"
#include "lesets/train.hpp"

#include <memory>
#include <string>

namespace lesets {

/// Everything needed to reproduce a trained model's predictions: the model
/// with its weights, the target column it was trained on, and the target
/// scaler fitted on its training split.
struct LoadedCheckpoint {
    std::unique_ptr<Model> model;
    std::string target;
    std::string target_unit;
    TargetScaler scaler;
};

/// Serializes the model to versioned JSON: kind, config, named weight
/// tensors, target column and scaler, and the element table hash. Values
/// round-trip bit-exactly.
void save_checkpoint(const std::string& path, const Model& model, const std::string& target,
                     const TargetScaler& scaler, const ElementTable& table);

/// Rebuilds the model and verifies the element table against the stored
/// hash; a mismatched table is an error, not a warning, since features
/// would silently change.
LoadedCheckpoint load_checkpoint(const std::string& path, const ElementTable& table);

} // namespace lesets
