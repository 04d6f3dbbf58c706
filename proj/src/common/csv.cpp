#include "popcal/common/csv.hpp"

#include "popcal/common/error.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace popcal::csv {

namespace {

std::string trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

} // namespace

std::vector<std::string> split_line(std::string_view line)
{
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                field.push_back('"');
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                field.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(trim(field));
            field.clear();
        } else {
            field.push_back(c);
        }
    }
    out.push_back(trim(field));
    return out;
}

Table Table::read(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open '" + path.string() + "'");
    }
    return parse(in, path.string());
}

Table Table::parse(std::istream& in, std::string source_name)
{
    Table t;
    t.source_ = std::move(source_name);
    std::string line;
    std::size_t lineno = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) {
            continue;
        }
        auto fields = split_line(line);
        if (!have_header) {
            t.header_ = std::move(fields);
            have_header = true;
            continue;
        }
        if (fields.size() != t.header_.size()) {
            std::ostringstream msg;
            msg << t.source_ << ':' << lineno << ": expected " << t.header_.size() << " fields, found "
                << fields.size();
            throw DataError(msg.str());
        }
        t.rows_.push_back(Row{lineno, std::move(fields)});
    }
    if (!have_header) {
        throw DataError(t.source_ + ": empty file, expected a header line");
    }
    return t;
}

std::optional<std::size_t> Table::find_column(std::string_view name) const
{
    for (std::size_t i = 0; i < header_.size(); ++i) {
        if (header_[i] == name) {
            return i;
        }
    }
    return std::nullopt;
}

std::size_t Table::column(std::string_view name) const
{
    if (auto c = find_column(name)) {
        return *c;
    }
    throw DataError(source_ + ":1: missing required column '" + std::string(name) + "'");
}

void Table::fail(const Row& row, std::size_t col, std::string_view problem) const
{
    std::ostringstream msg;
    msg << source_ << ':' << row.line << ": column '" << header_.at(col) << "': " << problem;
    throw DataError(msg.str());
}

const std::string& Table::str(const Row& row, std::size_t col) const { return row.fields.at(col); }

double Table::real(const Row& row, std::size_t col) const
{
    const std::string& s = row.fields.at(col);
    if (s.empty()) {
        fail(row, col, "empty value");
    }
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        fail(row, col, "not a number: '" + s + "'");
    }
    return v;
}

long long Table::integer(const Row& row, std::size_t col) const
{
    auto v = optional_integer(row, col);
    if (!v) {
        fail(row, col, "empty value");
    }
    return *v;
}

std::optional<long long> Table::optional_integer(const Row& row, std::size_t col) const
{
    const std::string& s = row.fields.at(col);
    if (s.empty()) {
        return std::nullopt;
    }
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        fail(row, col, "not an integer: '" + s + "'");
    }
    return v;
}

std::string format_real(double value)
{
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    (void)ec;
    return std::string(buf, ptr);
}

} // namespace popcal::csv
