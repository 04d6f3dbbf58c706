#include "popcal/geo/raster.hpp"

#include "popcal/common/csv.hpp"
#include "popcal/common/error.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

namespace popcal::geo {

RasterGrid::RasterGrid(int ncols, int nrows, double x_ll, double y_ll, double cell_size, std::optional<double> nodata)
    : ncols_(ncols), nrows_(nrows), x_ll_(x_ll), y_ll_(y_ll), cell_size_(cell_size), nodata_(nodata)
{
    if (ncols <= 0 || nrows <= 0) {
        throw std::invalid_argument("raster dimensions must be positive");
    }
    if (!(cell_size > 0.0)) {
        throw std::invalid_argument("raster cell size must be positive");
    }
    values_.assign(static_cast<std::size_t>(ncols) * static_cast<std::size_t>(nrows), 0.0);
}

Rect RasterGrid::cell_rect(int row, int col) const
{
    const double top = y_ll_ + cell_size_ * nrows_;
    return {x_ll_ + cell_size_ * col, top - cell_size_ * (row + 1), x_ll_ + cell_size_ * (col + 1),
            top - cell_size_ * row};
}

Rect RasterGrid::extent() const
{
    return {x_ll_, y_ll_, x_ll_ + cell_size_ * ncols_, y_ll_ + cell_size_ * nrows_};
}

CellWindow RasterGrid::window(const Rect& r) const
{
    const double top = y_ll_ + cell_size_ * nrows_;
    auto clamp_col = [&](double v) { return std::clamp(static_cast<int>(std::floor(v)), 0, ncols_); };
    auto clamp_row = [&](double v) { return std::clamp(static_cast<int>(std::floor(v)), 0, nrows_); };
    CellWindow w;
    w.col_begin = clamp_col((r.min_x - x_ll_) / cell_size_);
    w.col_end = clamp_col((r.max_x - x_ll_) / cell_size_ + 1.0);
    w.row_begin = clamp_row((top - r.max_y) / cell_size_);
    w.row_end = clamp_row((top - r.min_y) / cell_size_ + 1.0);
    return w;
}

bool RasterGrid::aligned_with(const RasterGrid& other) const
{
    const double tol = 1e-9 * cell_size_;
    return ncols_ == other.ncols_ && nrows_ == other.nrows_ && std::fabs(x_ll_ - other.x_ll_) < tol &&
           std::fabs(y_ll_ - other.y_ll_) < tol && std::fabs(cell_size_ - other.cell_size_) < tol;
}

namespace {

std::string lower(std::string s)
{
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

} // namespace

RasterGrid RasterGrid::read_ascii(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open '" + path.string() + "'");
    }
    const std::string src = path.string();
    int ncols = 0;
    int nrows = 0;
    double xll = 0.0;
    double yll = 0.0;
    double cell = 0.0;
    std::optional<double> nodata;
    const char* keys[] = {"ncols", "nrows", "xllcorner", "yllcorner", "cellsize", "nodata_value"};
    std::string line;
    for (int i = 0; i < 6; ++i) {
        if (!std::getline(in, line)) {
            throw DataError(src + ":" + std::to_string(i + 1) + ": truncated raster header");
        }
        std::istringstream ls(line);
        std::string key;
        double value = 0.0;
        if (!(ls >> key >> value)) {
            throw DataError(src + ":" + std::to_string(i + 1) + ": malformed header line");
        }
        key = lower(key);
        // Corner-referenced headers only (no xllcenter/yllcenter).
        if (key != keys[i] && !(i == 5 && key == "nodata")) {
            throw DataError(src + ":" + std::to_string(i + 1) + ": expected '" + keys[i] + "', found '" + key + "'");
        }
        switch (i) {
        case 0: ncols = static_cast<int>(value); break;
        case 1: nrows = static_cast<int>(value); break;
        case 2: xll = value; break;
        case 3: yll = value; break;
        case 4: cell = value; break;
        case 5: nodata = value; break;
        }
    }
    if (ncols <= 0 || nrows <= 0 || !(cell > 0.0)) {
        throw DataError(src + ": invalid raster dimensions or cell size");
    }
    RasterGrid g(ncols, nrows, xll, yll, cell, nodata);
    for (int r = 0; r < nrows; ++r) {
        if (!std::getline(in, line)) {
            throw DataError(src + ":" + std::to_string(7 + r) + ": missing raster row");
        }
        std::istringstream ls(line);
        for (int c = 0; c < ncols; ++c) {
            if (!(ls >> g.at(r, c))) {
                throw DataError(src + ":" + std::to_string(7 + r) + ": expected " + std::to_string(ncols) +
                                " values");
            }
        }
    }
    return g;
}

void RasterGrid::write_ascii(const std::filesystem::path& path) const
{
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot write '" + path.string() + "'");
    }
    out << "ncols " << ncols_ << '\n'
        << "nrows " << nrows_ << '\n'
        << "xllcorner " << csv::format_real(x_ll_) << '\n'
        << "yllcorner " << csv::format_real(y_ll_) << '\n'
        << "cellsize " << csv::format_real(cell_size_) << '\n'
        << "NODATA_value " << csv::format_real(nodata_.value_or(-9999.0)) << '\n';
    for (int r = 0; r < nrows_; ++r) {
        for (int c = 0; c < ncols_; ++c) {
            if (c > 0) {
                out << ' ';
            }
            out << csv::format_real(at(r, c));
        }
        out << '\n';
    }
}

} // namespace popcal::geo
