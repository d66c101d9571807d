#include "lesets/elements.hpp"

#include "lesets/csv.hpp"

#include <cmath>
#include <cstdint>
#include <set>
#include <sstream>
#include <stdexcept>

namespace lesets {

static const char* kTableHeader[] = {"symbol",
                                     "period",
                                     "group",
                                     "atomic_mass",
                                     "covalent_radius",
                                     "electronegativity",
                                     "first_ionization_energy",
                                     "electron_affinity",
                                     "atomic_volume"};

ElementTable ElementTable::from_csv_text(const std::string& text, const std::string& origin) {
    csv::Table t = csv::read_string(text);
    if (t.header.empty() && t.rows.empty()) throw std::runtime_error("empty table: " + origin);
    if (t.header.size() != 9) throw std::runtime_error("element table header must have 9 columns: " + origin);
    for (int i = 0; i < 9; ++i) {
        if (t.header[i] != kTableHeader[i])
            throw std::runtime_error("unexpected element table column '" + t.header[i] + "', expected '" +
                                     kTableHeader[i] + "'");
    }
    if (t.rows.empty()) throw std::runtime_error("empty table: " + origin);

    ElementTable out;
    std::set<std::string> seen;
    for (const auto& row : t.rows) {
        if (row.size() != 9) throw std::runtime_error("element table row has wrong width in " + origin);
        ElementDescriptor d;
        d.symbol = row[0];
        d.period = static_cast<int>(csv::parse_double(row[1], "period of " + d.symbol));
        d.group = static_cast<int>(csv::parse_double(row[2], "group of " + d.symbol));
        d.atomic_mass = csv::parse_double(row[3], "atomic_mass of " + d.symbol);
        d.covalent_radius = csv::parse_double(row[4], "covalent_radius of " + d.symbol);
        d.electronegativity = csv::parse_double(row[5], "electronegativity of " + d.symbol);
        d.first_ionization_energy = csv::parse_double(row[6], "first_ionization_energy of " + d.symbol);
        d.electron_affinity = csv::parse_double(row[7], "electron_affinity of " + d.symbol);
        d.atomic_volume = csv::parse_double(row[8], "atomic_volume of " + d.symbol);

        if (d.symbol.empty()) throw std::runtime_error("empty symbol in element table");
        if (!seen.insert(d.symbol).second) throw std::runtime_error("duplicate symbol " + d.symbol);
        if (d.period < 3 || d.period > 7)
            throw std::runtime_error("period out of range [3,7] for " + d.symbol);
        if (d.group < 1 || d.group > 18) throw std::runtime_error("group out of range [1,18] for " + d.symbol);
        for (double x : d.continuous())
            if (!std::isfinite(x)) throw std::runtime_error("non-finite value for " + d.symbol);
        if (d.atomic_mass <= 0 || d.covalent_radius <= 0 || d.atomic_volume <= 0)
            throw std::runtime_error("non-positive mass/radius/volume for " + d.symbol);

        out.elements_.push_back(std::move(d));
    }

    // Z-score statistics over all table rows, fixed per table (population std).
    const size_t n = out.elements_.size();
    for (int c = 0; c < FeatureSchema::continuous_count; ++c) {
        double mean = 0;
        for (const auto& e : out.elements_) mean += e.continuous()[c];
        mean /= static_cast<double>(n);
        double var = 0;
        for (const auto& e : out.elements_) {
            double dx = e.continuous()[c] - mean;
            var += dx * dx;
        }
        var /= static_cast<double>(n);
        double std = std::sqrt(var);
        if (!(std > 0))
            throw std::runtime_error(std::string("zero variance in column ") + kTableHeader[3 + c]);
        out.schema_.continuous_means[c] = mean;
        out.schema_.continuous_stds[c] = std;
    }
    return out;
}

ElementTable ElementTable::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("missing element table file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_csv_text(ss.str(), path);
}

bool ElementTable::contains(const std::string& symbol) const {
    for (const auto& e : elements_)
        if (e.symbol == symbol) return true;
    return false;
}

const ElementDescriptor& ElementTable::descriptor(const std::string& symbol) const {
    for (const auto& e : elements_)
        if (e.symbol == symbol) return e;
    throw std::runtime_error("unknown symbol " + symbol);
}

std::array<double, FeatureSchema::continuous_count> ElementTable::zscored_continuous(
    const std::string& symbol) const {
    const auto& d = descriptor(symbol);
    std::array<double, FeatureSchema::continuous_count> out{};
    auto raw = d.continuous();
    for (int c = 0; c < FeatureSchema::continuous_count; ++c)
        out[c] = (raw[c] - schema_.continuous_means[c]) / schema_.continuous_stds[c];
    return out;
}

std::string ElementTable::schema_hash() const {
    std::ostringstream canon;
    canon << FeatureSchema::period_onehot_width << '|' << FeatureSchema::group_onehot_width << '|'
          << FeatureSchema::continuous_count << '\n';
    for (const auto& e : elements_) {
        canon << e.symbol << ',' << e.period << ',' << e.group;
        for (double x : e.continuous()) canon << ',' << csv::format_double(x);
        canon << '\n';
    }
    const std::string s = canon.str();
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

std::vector<double> featurize_element(const std::string& symbol, const ElementTable& table) {
    const auto& d = table.descriptor(symbol);
    std::vector<double> f(FeatureSchema::total_dim, 0.0);
    f[d.period - 3] = 1.0;
    f[FeatureSchema::period_onehot_width + d.group - 1] = 1.0;
    auto z = table.zscored_continuous(symbol);
    const int off = FeatureSchema::period_onehot_width + FeatureSchema::group_onehot_width;
    for (int c = 0; c < FeatureSchema::continuous_count; ++c) f[off + c] = z[c];
    return f;
}

} // namespace lesets
