#include "popcal/geo/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace popcal::geo {

namespace {

double signed_ring_area(std::span<const Point> ring)
{
    const std::size_t n = ring.size();
    if (n < 3) {
        return 0.0;
    }
    double twice = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Point& a = ring[i];
        const Point& b = ring[(i + 1) % n];
        twice += a.x * b.y - b.x * a.y;
    }
    return 0.5 * twice;
}

// Centroid moments of a ring: returns (signed area, sum cx*A, sum cy*A).
void ring_moments(std::span<const Point> ring, double& area, double& mx, double& my)
{
    area = 0.0;
    mx = 0.0;
    my = 0.0;
    const std::size_t n = ring.size();
    if (n < 3) {
        return;
    }
    for (std::size_t i = 0; i < n; ++i) {
        const Point& a = ring[i];
        const Point& b = ring[(i + 1) % n];
        const double cross = a.x * b.y - b.x * a.y;
        area += cross;
        mx += (a.x + b.x) * cross;
        my += (a.y + b.y) * cross;
    }
    area *= 0.5;
    mx /= 6.0;
    my /= 6.0;
}

enum class Edge { Left, Right, Bottom, Top };

bool inside(const Point& p, Edge e, const Rect& w)
{
    switch (e) {
    case Edge::Left: return p.x >= w.min_x;
    case Edge::Right: return p.x <= w.max_x;
    case Edge::Bottom: return p.y >= w.min_y;
    case Edge::Top: return p.y <= w.max_y;
    }
    return false;
}

Point crossing(const Point& a, const Point& b, Edge e, const Rect& w)
{
    double t = 0.0;
    switch (e) {
    case Edge::Left:
        t = (w.min_x - a.x) / (b.x - a.x);
        return {w.min_x, a.y + t * (b.y - a.y)};
    case Edge::Right:
        t = (w.max_x - a.x) / (b.x - a.x);
        return {w.max_x, a.y + t * (b.y - a.y)};
    case Edge::Bottom:
        t = (w.min_y - a.y) / (b.y - a.y);
        return {a.x + t * (b.x - a.x), w.min_y};
    case Edge::Top:
        t = (w.max_y - a.y) / (b.y - a.y);
        return {a.x + t * (b.x - a.x), w.max_y};
    }
    return a;
}

Ring clip_edge(const Ring& in, Edge e, const Rect& w)
{
    Ring out;
    const std::size_t n = in.size();
    if (n == 0) {
        return out;
    }
    out.reserve(n + 4);
    Point prev = in[n - 1];
    bool prev_in = inside(prev, e, w);
    for (const Point& cur : in) {
        const bool cur_in = inside(cur, e, w);
        if (cur_in) {
            if (!prev_in) {
                out.push_back(crossing(prev, cur, e, w));
            }
            out.push_back(cur);
        } else if (prev_in) {
            out.push_back(crossing(prev, cur, e, w));
        }
        prev = cur;
        prev_in = cur_in;
    }
    return out;
}

Rect ring_bounds(std::span<const Point> ring)
{
    Rect r{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
           -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (const Point& p : ring) {
        r.min_x = std::min(r.min_x, p.x);
        r.min_y = std::min(r.min_y, p.y);
        r.max_x = std::max(r.max_x, p.x);
        r.max_y = std::max(r.max_y, p.y);
    }
    return r;
}

double ring_intersection_area(const Ring& ring, const Rect& rect)
{
    const Rect rb = ring_bounds(ring);
    if (!rb.intersects(rect)) {
        return 0.0;
    }
    if (rb.min_x >= rect.min_x && rb.max_x <= rect.max_x && rb.min_y >= rect.min_y && rb.max_y <= rect.max_y) {
        return ring_area(ring);
    }
    return ring_area(clip_ring(ring, rect));
}

} // namespace

double ring_area(std::span<const Point> ring) { return std::fabs(signed_ring_area(ring)); }

Ring clip_ring(std::span<const Point> ring, const Rect& window)
{
    Ring r(ring.begin(), ring.end());
    // Drop an explicit closing vertex; the algorithm treats rings as closed.
    if (r.size() > 1 && r.front().x == r.back().x && r.front().y == r.back().y) {
        r.pop_back();
    }
    for (Edge e : {Edge::Left, Edge::Right, Edge::Bottom, Edge::Top}) {
        r = clip_edge(r, e, window);
        if (r.empty()) {
            break;
        }
    }
    return r;
}

double MultiPolygon::area() const
{
    double a = 0.0;
    for (const Polygon& p : parts) {
        a += ring_area(p.outer);
        for (const Ring& h : p.holes) {
            a -= ring_area(h);
        }
    }
    return a;
}

Rect MultiPolygon::bounds() const
{
    Rect r{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
           -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (const Polygon& p : parts) {
        const Rect b = ring_bounds(p.outer);
        r.min_x = std::min(r.min_x, b.min_x);
        r.min_y = std::min(r.min_y, b.min_y);
        r.max_x = std::max(r.max_x, b.max_x);
        r.max_y = std::max(r.max_y, b.max_y);
    }
    return r;
}

Point MultiPolygon::centroid() const
{
    double area = 0.0;
    double mx = 0.0;
    double my = 0.0;
    auto accumulate = [&](const Ring& ring, double sign) {
        double a = 0.0;
        double x = 0.0;
        double y = 0.0;
        ring_moments(ring, a, x, y);
        // Normalise orientation so outer rings add and holes subtract.
        const double orient = a < 0.0 ? -1.0 : 1.0;
        area += sign * orient * a;
        mx += sign * orient * x;
        my += sign * orient * y;
    };
    for (const Polygon& p : parts) {
        accumulate(p.outer, 1.0);
        for (const Ring& h : p.holes) {
            accumulate(h, -1.0);
        }
    }
    if (area == 0.0) {
        throw std::invalid_argument("empty geometry");
    }
    return {mx / area, my / area};
}

MultiPolygon make_rect_polygon(const Rect& r)
{
    Polygon p;
    p.outer = {{r.min_x, r.min_y}, {r.max_x, r.min_y}, {r.max_x, r.max_y}, {r.min_x, r.max_y}};
    return MultiPolygon{{std::move(p)}};
}

double intersection_area(const Rect& rect, const MultiPolygon& poly)
{
    double a = 0.0;
    for (const Polygon& p : poly.parts) {
        const double outer = ring_intersection_area(p.outer, rect);
        if (outer <= 0.0) {
            continue;
        }
        a += outer;
        for (const Ring& h : p.holes) {
            a -= ring_intersection_area(h, rect);
        }
    }
    return std::max(a, 0.0);
}

double overlap_fraction(const Rect& a, const MultiPolygon& b)
{
    if (a.degenerate()) {
        throw std::invalid_argument("empty geometry");
    }
    const double f = intersection_area(a, b) / a.area();
    return std::clamp(f, 0.0, 1.0);
}

Rect translated(const Rect& r, double dx, double dy)
{
    return {r.min_x + dx, r.min_y + dy, r.max_x + dx, r.max_y + dy};
}

MultiPolygon translated(const MultiPolygon& p, double dx, double dy)
{
    MultiPolygon out = p;
    auto shift = [&](Ring& ring) {
        for (Point& q : ring) {
            q.x += dx;
            q.y += dy;
        }
    };
    for (Polygon& part : out.parts) {
        shift(part.outer);
        for (Ring& h : part.holes) {
            shift(h);
        }
    }
    return out;
}

Rect scaled(const Rect& r, double factor)
{
    return {r.min_x * factor, r.min_y * factor, r.max_x * factor, r.max_y * factor};
}

MultiPolygon scaled(const MultiPolygon& p, double factor)
{
    MultiPolygon out = p;
    auto scale = [&](Ring& ring) {
        for (Point& q : ring) {
            q.x *= factor;
            q.y *= factor;
        }
    };
    for (Polygon& part : out.parts) {
        scale(part.outer);
        for (Ring& h : part.holes) {
            scale(h);
        }
    }
    return out;
}

} // namespace popcal::geo
