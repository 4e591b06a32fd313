#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "mbf/core.hpp"

namespace mbf {

/// Malformed CSV content. Line and column are 1-based; column 0 means the whole line.
class ParseError : public std::runtime_error {
public:
    ParseError(std::string source, std::size_t line, std::size_t column, const std::string& message);
    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

/// A file could not be opened, read or written.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct CsvTable {
    Matrix values;
    std::vector<std::string> header;  // empty when the input has no header row
};

/// Comma-separated numeric table, one row per line.
///
/// Blank lines and lines starting with '#' are skipped. The first remaining line
/// is a header when any of its fields is not a number. Every data row must have
/// the same field count and only finite numbers.
CsvTable parse_csv(std::istream& in, const std::string& source = "<stream>");
CsvTable read_csv(const std::filesystem::path& path);

/// Reads a series file: one row per time step, one column per component.
TimeSeries read_series(const std::filesystem::path& path);

/// Text for a double with 17 significant digits, enough to round-trip exactly.
std::string format_number(double value);

void write_csv(std::ostream& out, const Matrix& values, const std::vector<std::string>& header = {});

/// Writes text to a file, replacing it. Throws IoError on failure.
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace mbf
