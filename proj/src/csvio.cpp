#include "singsys/csvio.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace singsys {

std::string format_number(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void add_row(CsvTable& table, std::vector<std::string> cells) {
    table.rows.push_back(std::move(cells));
}

void write_csv(const std::string& path, const CsvTable& table) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot create " + path);
    for (const auto& c : table.comments) out << "# " << c << "\n";
    for (size_t i = 0; i < table.columns.size(); ++i) {
        if (i) out << ',';
        out << table.columns[i];
    }
    out << "\n";
    for (const auto& row : table.rows) {
        if (row.size() != table.columns.size())
            throw std::runtime_error(path + ": row width " + std::to_string(row.size()) +
                                     " does not match header width " +
                                     std::to_string(table.columns.size()));
        for (size_t i = 0; i < row.size(); ++i) {
            if (i) out << ',';
            out << row[i];
        }
        out << "\n";
    }
    if (!out) throw std::runtime_error("write failed for " + path);
}

namespace {

std::vector<std::string> split_row(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

}  // namespace

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    CsvTable table;
    std::string line;
    bool have_header = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty() && line[0] == '#') {
            std::string body = line.substr(1);
            if (!body.empty() && body[0] == ' ') body.erase(0, 1);
            table.comments.push_back(body);
            continue;
        }
        if (line.empty()) continue;
        if (!have_header) {
            table.columns = split_row(line);
            have_header = true;
            continue;
        }
        std::vector<std::string> cells = split_row(line);
        if (cells.size() != table.columns.size())
            throw std::runtime_error(path + ": ragged row with " +
                                     std::to_string(cells.size()) + " cells");
        table.rows.push_back(std::move(cells));
    }
    if (!have_header) throw std::runtime_error(path + ": no header row");
    return table;
}

int column_index(const CsvTable& table, const std::string& name) {
    for (size_t i = 0; i < table.columns.size(); ++i)
        if (table.columns[i] == name) return static_cast<int>(i);
    return -1;
}

double cell_number(const CsvTable& table, size_t row, int col) {
    if (col < 0 || row >= table.rows.size() ||
        static_cast<size_t>(col) >= table.rows[row].size())
        throw std::runtime_error("cell out of range");
    const std::string& cell = table.rows[row][static_cast<size_t>(col)];
    char* end = nullptr;
    double v = std::strtod(cell.c_str(), &end);
    if (end == cell.c_str() || *end != '\0')
        throw std::runtime_error("cell '" + cell + "' is not a number");
    return v;
}

std::string comment_value(const CsvTable& table, const std::string& key) {
    const std::string prefix = key + " = ";
    for (const auto& c : table.comments)
        if (c.rfind(prefix, 0) == 0) return c.substr(prefix.size());
    return {};
}

}  // namespace singsys
