#pragma once

#include <fstream>
#include <optional>
#include <string>
#include <vector>

namespace lesets::csv {

/// One parsed CSV record; cells are raw strings, already unquoted and trimmed.
using Row = std::vector<std::string>;

struct Table {
    Row header;
    std::vector<Row> rows;

    int column(const std::string& name) const; // -1 if absent
};

Table read_file(const std::string& path);
Table read_string(const std::string& text);

std::string trim(const std::string& s);

/// Shortest decimal representation that round-trips to the same double.
std::string format_double(double x);

double parse_double(const std::string& cell, const std::string& context);

/// CSV writer that pins a header and rejects rows of the wrong width,
/// so every emitted file parses under its own schema.
class Writer {
public:
    Writer(const std::string& path, const Row& header);
    void append(const Row& row);
    void close();
    ~Writer();

private:
    std::ofstream out_;
    size_t width_;
    std::string path_;
};

} // namespace lesets::csv
