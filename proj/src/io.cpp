#include "mbf/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <string_view>

namespace mbf {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        fields.push_back(trim(line.substr(start, comma == std::string_view::npos ? comma : comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return fields;
}

bool parse_double(std::string_view field, double& out) {
    if (field.empty()) return false;
    if (field.front() == '+') field.remove_prefix(1);
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), out);
    return ec == std::errc() && ptr == field.data() + field.size();
}

}  // namespace

ParseError::ParseError(std::string source, std::size_t line, std::size_t column, const std::string& message)
    : std::runtime_error(source + ":" + std::to_string(line) + (column > 0 ? ":" + std::to_string(column) : "") +
                         ": " + message),
      line_(line),
      column_(column) {}

CsvTable parse_csv(std::istream& in, const std::string& source) {
    CsvTable table;
    std::vector<double> data;
    std::size_t width = 0;
    std::size_t rows = 0;
    bool seen_first = false;
    std::string raw;
    for (std::size_t line_no = 1; std::getline(in, raw); ++line_no) {
        const std::string_view line = trim(raw);
        if (line.empty() || line.front() == '#') continue;
        const auto fields = split_fields(line);

        if (!seen_first) {
            seen_first = true;
            width = fields.size();
            double probe = 0.0;
            bool numeric = true;
            for (auto f : fields) numeric = numeric && parse_double(f, probe);
            if (!numeric) {
                for (auto f : fields) table.header.emplace_back(f);
                continue;
            }
        }
        if (fields.size() != width) {
            throw ParseError(source, line_no, 0,
                             "expected " + std::to_string(width) + " fields, found " + std::to_string(fields.size()));
        }
        for (std::size_t c = 0; c < fields.size(); ++c) {
            double v = 0.0;
            if (!parse_double(fields[c], v)) {
                throw ParseError(source, line_no, c + 1, "not a number: '" + std::string(fields[c]) + "'");
            }
            if (!std::isfinite(v)) {
                throw ParseError(source, line_no, c + 1, "non-finite value");
            }
            data.push_back(v);
        }
        ++rows;
    }
    if (in.bad()) {
        throw IoError(source + ": read failed");
    }
    if (rows == 0) {
        throw ParseError(source, 1, 0, "no data rows");
    }
    table.values = Eigen::Map<Matrix>(data.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(width));
    return table;
}

CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open '" + path.string() + "'");
    }
    return parse_csv(in, path.string());
}

TimeSeries read_series(const std::filesystem::path& path) {
    return TimeSeries(read_csv(path).values);
}

std::string format_number(double value) {
    char buf[32];
    const int n = std::snprintf(buf, sizeof buf, "%.17g", value);
    return std::string(buf, static_cast<std::size_t>(n));
}

void write_csv(std::ostream& out, const Matrix& values, const std::vector<std::string>& header) {
    if (!header.empty()) {
        if (header.size() != static_cast<std::size_t>(values.cols())) {
            throw InvalidArgument("write_csv: header width does not match the table");
        }
        for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
        out << '\n';
    }
    for (Eigen::Index r = 0; r < values.rows(); ++r) {
        for (Eigen::Index c = 0; c < values.cols(); ++c) out << (c ? "," : "") << format_number(values(r, c));
        out << '\n';
    }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open '" + path.string() + "' for writing");
    }
    out << text;
    out.flush();
    if (!out) {
        throw IoError("write to '" + path.string() + "' failed");
    }
}

}  // namespace mbf
