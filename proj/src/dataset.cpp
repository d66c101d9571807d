#include "lesets/dataset.hpp"

#include <stdexcept>

#include "lesets/csv.hpp"
#include "lesets/parallel.hpp"

namespace lesets {

namespace {

std::optional<double> parse_cell(const std::string& cell, const std::string& context) {
    if (csv::trim(cell).empty()) return std::nullopt;
    return csv::parse_double(cell, context);
}

Dataset from_table(const csv::Table& table, const std::string& origin) {
    const std::vector<std::string> expected = {"composition", "youngs_modulus", "bulk_modulus", "rws"};
    if (table.header != expected) {
        std::string got;
        for (size_t i = 0; i < table.header.size(); ++i) {
            if (i) got += ",";
            got += table.header[i];
        }
        throw std::runtime_error(origin + ": expected header composition,youngs_modulus,bulk_modulus,rws but found " +
                                 got);
    }
    Dataset data;
    data.records.reserve(table.rows.size());
    for (size_t r = 0; r < table.rows.size(); ++r) {
        const csv::Row& row = table.rows[r];
        if (row.size() != 4)
            throw std::runtime_error(origin + ": row " + std::to_string(r + 2) + " has " + std::to_string(row.size()) +
                                     " cells, expected 4");
        const std::string context = origin + " row " + std::to_string(r + 2);
        DataRecord rec;
        rec.composition = parse_composition(row[0]);
        rec.youngs_modulus = parse_cell(row[1], context);
        rec.bulk_modulus = parse_cell(row[2], context);
        rec.rws = parse_cell(row[3], context);
        data.records.push_back(std::move(rec));
    }
    return data;
}

} // namespace

std::vector<int> Dataset::rows_with(const std::string& target) const {
    std::vector<int> out;
    for (int i = 0; i < static_cast<int>(records.size()); ++i) {
        const DataRecord& r = records[static_cast<size_t>(i)];
        if (target == "youngs_modulus" && r.youngs_modulus)
            out.push_back(i);
        else if (target == "bulk_modulus" && r.bulk_modulus)
            out.push_back(i);
        else if (target == "rws" && r.rws)
            out.push_back(i);
    }
    return out;
}

std::string target_unit(const std::string& target) {
    if (target == "youngs_modulus" || target == "bulk_modulus") return "GPa";
    if (target == "rws") return "angstrom";
    throw std::runtime_error("unknown target column " + target);
}

Dataset parse_dataset(const std::string& text, const std::string& origin) {
    return from_table(csv::read_string(text), origin);
}

Dataset load_dataset(const std::string& path) { return from_table(csv::read_file(path), path); }

std::vector<GraphSet> build_graph_sets(const Dataset& data, const std::string& target, const ElementTable& table,
                                       int threads) {
    const std::string unit = target_unit(target);
    std::vector<int> rows = data.rows_with(target);
    std::vector<GraphSet> out(rows.size());
    run_parallel(static_cast<int>(rows.size()), threads, [&](int i) {
        const DataRecord& rec = data.records[static_cast<size_t>(rows[static_cast<size_t>(i)])];
        GraphSet gs = build_graph_set(rec.composition, table);
        if (target == "youngs_modulus")
            gs.target = *rec.youngs_modulus;
        else if (target == "bulk_modulus")
            gs.target = *rec.bulk_modulus;
        else
            gs.target = *rec.rws;
        gs.target_unit = unit;
        out[static_cast<size_t>(i)] = std::move(gs);
    });
    return out;
}

} // namespace lesets
