#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace popcal::csv {

/// One parsed data row, remembering its 1-based line number in the source.
struct Row {
    std::size_t line = 0;
    std::vector<std::string> fields;
};

/// A header-indexed table. Fields are plain comma-separated values; double
/// quotes are honoured for fields that contain commas.
class Table {
public:
    static Table read(const std::filesystem::path& path);
    static Table parse(std::istream& in, std::string source_name);

    const std::vector<std::string>& header() const { return header_; }
    const std::vector<Row>& rows() const { return rows_; }
    const std::string& source() const { return source_; }

    /// Column index by name; throws DataError naming the file when missing.
    std::size_t column(std::string_view name) const;
    std::optional<std::size_t> find_column(std::string_view name) const;

    // Typed accessors. All throw DataError of the form
    // "<file>:<line>: column '<name>': <problem>".
    const std::string& str(const Row& row, std::size_t col) const;
    double real(const Row& row, std::size_t col) const;
    long long integer(const Row& row, std::size_t col) const;
    std::optional<long long> optional_integer(const Row& row, std::size_t col) const;

    [[noreturn]] void fail(const Row& row, std::size_t col, std::string_view problem) const;

private:
    std::string source_;
    std::vector<std::string> header_;
    std::vector<Row> rows_;
};

std::vector<std::string> split_line(std::string_view line);

/// Formats a double with enough digits to round-trip.
std::string format_real(double value);

} // namespace popcal::csv
