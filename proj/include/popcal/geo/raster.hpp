#pragma once

#include "popcal/geo/geometry.hpp"

#include <filesystem>
#include <optional>
#include <vector>

namespace popcal::geo {

/// Row/column window into a raster, half-open on both axes.
struct CellWindow {
    int row_begin = 0;
    int row_end = 0;
    int col_begin = 0;
    int col_end = 0;
};

/// North-up grid in the ESRI ASCII layout: row 0 is the northernmost row and
/// (x_ll, y_ll) is the lower-left corner of the grid.
class RasterGrid {
public:
    RasterGrid() = default;
    RasterGrid(int ncols, int nrows, double x_ll, double y_ll, double cell_size,
               std::optional<double> nodata = std::nullopt);

    int ncols() const { return ncols_; }
    int nrows() const { return nrows_; }
    double x_ll() const { return x_ll_; }
    double y_ll() const { return y_ll_; }
    double cell_size() const { return cell_size_; }
    const std::optional<double>& nodata() const { return nodata_; }

    double at(int row, int col) const { return values_[index(row, col)]; }
    double& at(int row, int col) { return values_[index(row, col)]; }
    bool is_nodata(double v) const { return nodata_ && v == *nodata_; }

    Rect cell_rect(int row, int col) const;
    Rect extent() const;
    /// Cells whose rectangles may intersect `r`.
    CellWindow window(const Rect& r) const;

    bool aligned_with(const RasterGrid& other) const;

    /// Reads the plain-text grid format with its six-line header
    /// (ncols, nrows, xllcorner, yllcorner, cellsize, NODATA_value).
    static RasterGrid read_ascii(const std::filesystem::path& path);
    void write_ascii(const std::filesystem::path& path) const;

private:
    std::size_t index(int row, int col) const
    {
        return static_cast<std::size_t>(row) * static_cast<std::size_t>(ncols_) + static_cast<std::size_t>(col);
    }

    int ncols_ = 0;
    int nrows_ = 0;
    double x_ll_ = 0.0;
    double y_ll_ = 0.0;
    double cell_size_ = 0.0;
    std::optional<double> nodata_;
    std::vector<double> values_;
};

} // namespace popcal::geo
