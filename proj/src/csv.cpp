#include "lesets/csv.hpp"

#include <charconv>
#include <sstream>
#include <stdexcept>

namespace lesets::csv {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

static Row split_line(const std::string& line) {
    Row out;
    std::string cell;
    bool quoted = false;
    for (size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cell += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cell += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(trim(cell));
            cell.clear();
        } else {
            cell += c;
        }
    }
    out.push_back(trim(cell));
    return out;
}

Table read_string(const std::string& text) {
    Table t;
    std::istringstream in(text);
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        Row row = split_line(line);
        if (first) {
            t.header = row;
            first = false;
        } else {
            t.rows.push_back(std::move(row));
        }
    }
    return t;
}

Table read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return read_string(ss.str());
}

int Table::column(const std::string& name) const {
    for (size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return static_cast<int>(i);
    return -1;
}

std::string format_double(double x) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& cell, const std::string& context) {
    const std::string s = trim(cell);
    double out = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw std::runtime_error("bad numeric value '" + cell + "' in " + context);
    return out;
}

Writer::Writer(const std::string& path, const Row& header) : out_(path), width_(header.size()), path_(path) {
    if (!out_) throw std::runtime_error("cannot write file: " + path);
    for (size_t i = 0; i < header.size(); ++i) {
        if (i) out_ << ',';
        out_ << header[i];
    }
    out_ << '\n';
}

void Writer::append(const Row& row) {
    if (row.size() != width_)
        throw std::runtime_error("row width " + std::to_string(row.size()) + " does not match header width " +
                                 std::to_string(width_) + " in " + path_);
    for (size_t i = 0; i < row.size(); ++i) {
        if (i) out_ << ',';
        out_ << row[i];
    }
    out_ << '\n';
}

void Writer::close() {
    if (out_.is_open()) out_.close();
}

Writer::~Writer() { close(); }

} // namespace lesets::csv
