#include "lesets/composition.hpp"

#include "lesets/csv.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

namespace lesets {

Composition Composition::build(std::vector<std::pair<std::string, double>> parts, bool fraction_semantics) {
    if (parts.empty()) throw std::runtime_error("composition has no entries");
    std::set<std::string> seen;
    double sum = 0;
    for (const auto& [sym, amt] : parts) {
        if (sym.empty()) throw std::runtime_error("empty element symbol");
        if (!(amt > 0)) throw std::runtime_error("non-positive amount for " + sym);
        if (!std::isfinite(amt)) throw std::runtime_error("non-finite amount for " + sym);
        if (!seen.insert(sym).second) throw std::runtime_error("repeated symbol " + sym);
        sum += amt;
    }
    if (fraction_semantics && std::abs(sum - 1.0) > 1e-3)
        throw std::runtime_error("fractions sum to " + csv::format_double(sum) + ", expected 1 within 1e-3");

    Composition c;
    c.entries_.reserve(parts.size());
    for (auto& [sym, amt] : parts) c.entries_.push_back({std::move(sym), amt / sum});
    return c;
}

Composition Composition::from_amounts(std::vector<std::pair<std::string, double>> amounts) {
    return build(std::move(amounts), false);
}

Composition Composition::from_fractions(std::vector<std::pair<std::string, double>> fractions) {
    return build(std::move(fractions), true);
}

bool Composition::contains(const std::string& symbol) const {
    for (const auto& e : entries_)
        if (e.symbol == symbol) return true;
    return false;
}

double Composition::fraction_of(const std::string& symbol) const {
    for (const auto& e : entries_)
        if (e.symbol == symbol) return e.fraction;
    throw std::runtime_error("symbol " + symbol + " not in composition");
}

std::string Composition::formula() const {
    std::ostringstream out;
    for (const auto& e : entries_) out << e.symbol << csv::format_double(e.fraction);
    return out.str();
}

Composition parse_composition(const std::string& text) {
    const std::string s = csv::trim(text);
    if (s.empty()) throw std::runtime_error("empty composition string");

    std::vector<std::pair<std::string, double>> parts;
    size_t i = 0;
    while (i < s.size()) {
        if (!std::isupper(static_cast<unsigned char>(s[i])))
            throw std::runtime_error("unparseable token at '" + s.substr(i) + "' in \"" + s + "\"");
        std::string sym(1, s[i++]);
        if (i < s.size() && std::islower(static_cast<unsigned char>(s[i]))) sym += s[i++];

        size_t j = i;
        while (j < s.size() && (std::isdigit(static_cast<unsigned char>(s[j])) || s[j] == '.')) ++j;
        double amount = 1.0;
        if (j > i) {
            std::string num = s.substr(i, j - i);
            if (num.front() == '.') num.insert(num.begin(), '0');
            auto res = std::from_chars(num.data(), num.data() + num.size(), amount);
            if (res.ec != std::errc{} || res.ptr != num.data() + num.size())
                throw std::runtime_error("unparseable token at '" + s.substr(i) + "' in \"" + s + "\"");
            i = j;
        }
        parts.emplace_back(std::move(sym), amount);
    }
    return Composition::from_amounts(std::move(parts));
}

} // namespace lesets
