#pragma once

#include <string>
#include <vector>

namespace singsys {

// Stamped into the first comment line of every artifact so downstream
// tooling can detect layout changes.
inline constexpr const char* kArtifactVersion = "1";

// One output table: comment lines (written with a leading "# "), a header
// row, and string cells.  Numeric cells are formatted by the caller through
// format_number so every artifact round-trips bit for bit.
struct CsvTable {
    std::vector<std::string> comments;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
};

// Shortest-exact decimal form of a double ("%.17g"); reading it back with
// strtod recovers the identical bits.
std::string format_number(double x);

// Appends a data row of already-formatted cells.
void add_row(CsvTable& table, std::vector<std::string> cells);

// Writes comments, header, rows; '\n' line endings; throws std::runtime_error
// when the file cannot be created or the row widths disagree with the header.
void write_csv(const std::string& path, const CsvTable& table);

// Reads a file written by write_csv (comments preserved without the "# "
// prefix).  Throws std::runtime_error on missing file or ragged rows.
CsvTable read_csv(const std::string& path);

// Index of a named column, -1 when absent.
int column_index(const CsvTable& table, const std::string& name);

// Cell parsed as a double; throws std::runtime_error when not numeric.
double cell_number(const CsvTable& table, size_t row, int col);

// Value of the comment line "key = value", empty string when absent.
std::string comment_value(const CsvTable& table, const std::string& key);

}  // namespace singsys
