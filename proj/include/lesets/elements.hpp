#pragma once

#include <array>
#include <string>
#include <vector>

namespace lesets {

/// Physical descriptors of one element, as read from the table CSV.
struct ElementDescriptor {
    std::string symbol;
    int period = 0;                      // 3..7
    int group = 0;                       // 1..18
    double atomic_mass = 0;              // Dalton
    double covalent_radius = 0;          // angstrom
    double electronegativity = 0;        // Pauling
    double first_ionization_energy = 0;  // eV
    double electron_affinity = 0;        // eV
    double atomic_volume = 0;            // cm^3/mol

    std::array<double, 6> continuous() const {
        return {atomic_mass,             covalent_radius,   electronegativity,
                first_ionization_energy, electron_affinity, atomic_volume};
    }
};

/// Node-feature layout: one-hot period (5) | one-hot group (18) | z-scored continuous (6).
struct FeatureSchema {
    static constexpr int period_onehot_width = 5; // periods 3..7
    static constexpr int group_onehot_width = 18;
    static constexpr int continuous_count = 6;
    static constexpr int total_dim = period_onehot_width + group_onehot_width + continuous_count;

    std::array<double, continuous_count> continuous_means{};
    std::array<double, continuous_count> continuous_stds{};
};

class ElementTable {
public:
    static ElementTable load(const std::string& path);
    static ElementTable from_csv_text(const std::string& text, const std::string& origin = "<string>");

    const ElementDescriptor& descriptor(const std::string& symbol) const;
    bool contains(const std::string& symbol) const;

    const std::vector<ElementDescriptor>& elements() const { return elements_; }
    const FeatureSchema& schema() const { return schema_; }

    /// Z-scored continuous block only (no one-hot), in schema order.
    std::array<double, FeatureSchema::continuous_count> zscored_continuous(const std::string& symbol) const;

    /// FNV-1a over the canonical table contents; checkpoints pin this.
    std::string schema_hash() const;

private:
    std::vector<ElementDescriptor> elements_;
    FeatureSchema schema_;
};

/// [one-hot(period) | one-hot(group) | z-scored continuous], length FeatureSchema::total_dim.
std::vector<double> featurize_element(const std::string& symbol, const ElementTable& table);

} // namespace lesets
