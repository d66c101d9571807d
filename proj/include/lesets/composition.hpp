#pragma once

#include <string>
#include <utility>
#include <vector>

namespace lesets {

/// Normalized molar composition of one alloy. Entry order is appearance order.
class Composition {
public:
    struct Entry {
        std::string symbol;
        double fraction; // strictly positive, entries sum to 1
    };

    /// Amounts are arbitrary positive stoichiometric counts; normalized by their sum.
    static Composition from_amounts(std::vector<std::pair<std::string, double>> amounts);

    /// Fractions must already sum to 1 within 1e-3; renormalized exactly, larger deviations error.
    static Composition from_fractions(std::vector<std::pair<std::string, double>> fractions);

    const std::vector<Entry>& entries() const { return entries_; }
    size_t size() const { return entries_.size(); }
    bool contains(const std::string& symbol) const;
    double fraction_of(const std::string& symbol) const;

    std::string formula() const;

private:
    static Composition build(std::vector<std::pair<std::string, double>> parts, bool fraction_semantics);

    std::vector<Entry> entries_;
};

/// Grammar: one or more ElementSymbol [positive number]; omitted number means 1.
/// "Fe2CoCrNi" -> Fe 0.4, Co/Cr/Ni 0.2 each.
Composition parse_composition(const std::string& text);

} // namespace lesets
