#pragma once

#include <span>
#include <vector>

namespace popcal::geo {

/// Planar lon/lat coordinates in degrees. Areas are computed in squared
/// degrees; only ratios of areas are ever used downstream.
struct Point {
    double x = 0.0;
    double y = 0.0;
};

struct Rect {
    double min_x = 0.0;
    double min_y = 0.0;
    double max_x = 0.0;
    double max_y = 0.0;

    double width() const { return max_x - min_x; }
    double height() const { return max_y - min_y; }
    double area() const { return width() * height(); }
    bool degenerate() const { return !(width() > 0.0) || !(height() > 0.0); }
    bool intersects(const Rect& o) const
    {
        return min_x < o.max_x && o.min_x < max_x && min_y < o.max_y && o.min_y < max_y;
    }
    bool contains(const Point& p) const
    {
        return p.x >= min_x && p.x <= max_x && p.y >= min_y && p.y <= max_y;
    }
};

using Ring = std::vector<Point>;

struct Polygon {
    Ring outer;
    std::vector<Ring> holes;
};

/// A simple polygon is a MultiPolygon with one part.
struct MultiPolygon {
    std::vector<Polygon> parts;

    double area() const;
    Rect bounds() const;
    /// Area-weighted centroid.
    Point centroid() const;
};

MultiPolygon make_rect_polygon(const Rect& r);

/// Unsigned shoelace area of a closed ring (closing vertex optional).
double ring_area(std::span<const Point> ring);

/// Sutherland-Hodgman clip of an arbitrary (possibly concave) ring against an
/// axis-aligned rectangle. The result may contain degenerate zero-width
/// slivers for concave input, which do not affect its shoelace area.
Ring clip_ring(std::span<const Point> ring, const Rect& window);

/// area(rect ∩ poly), holes subtracted.
double intersection_area(const Rect& rect, const MultiPolygon& poly);

/// area(a ∩ b) / area(a). Throws std::invalid_argument("empty geometry") for
/// a degenerate rectangle.
double overlap_fraction(const Rect& a, const MultiPolygon& b);

Rect translated(const Rect& r, double dx, double dy);
MultiPolygon translated(const MultiPolygon& p, double dx, double dy);
Rect scaled(const Rect& r, double factor);
MultiPolygon scaled(const MultiPolygon& p, double factor);

} // namespace popcal::geo
