#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "sld/error.hpp"

namespace sld {

/// Canvas coordinates. The y axis points down, as on screen.
struct Point {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point&, const Point&) = default;
};

inline Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
inline Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
inline Point operator*(double s, Point p) { return {s * p.x, s * p.y}; }

inline double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }
inline double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

struct Segment {
    Point from;
    Point to;

    friend bool operator==(const Segment&, const Segment&) = default;

    bool horizontal() const { return from.y == to.y; }
    bool vertical() const { return from.x == to.x; }
    bool axis_parallel() const { return horizontal() || vertical(); }
};

using Route = std::vector<Segment>;

inline constexpr double kCanvasExtent = 10000.0;

inline bool in_canvas(Point p) {
    return p.x >= 0.0 && p.y >= 0.0 && p.x <= kCanvasExtent && p.y <= kCanvasExtent;
}

/// Quarter-turn rotation, stored as the number of clockwise 90 degree steps.
enum class Rotation : int { R0 = 0, R90 = 1, R180 = 2, R270 = 3 };

inline int degrees(Rotation r) { return static_cast<int>(r) * 90; }

inline Rotation rotation_from_degrees(int deg) {
    if (deg % 90 != 0) fail(ErrorCode::InvalidSpec, "rotation must be a multiple of 90 degrees");
    return static_cast<Rotation>(((deg / 90) % 4 + 4) % 4);
}

inline Rotation rotated_clockwise(Rotation r) { return static_cast<Rotation>((static_cast<int>(r) + 1) % 4); }

/// Rotates a local offset clockwise on screen (y down): (x, y) -> (-y, x).
inline Point rotate_offset(Point local, Rotation r) {
    Point p = local;
    for (int i = 0; i < static_cast<int>(r); ++i) p = Point{-p.y, p.x};
    return p;
}

inline double distance_to_segment(Point p, const Segment& s) {
    const Point d = s.to - s.from;
    const double len2 = dot(d, d);
    if (len2 == 0.0) return distance(p, s.from);
    const double t = std::clamp(dot(p - s.from, d) / len2, 0.0, 1.0);
    return distance(p, s.from + t * d);
}

inline double distance_to_route(Point p, std::span<const Segment> route) {
    double best = INFINITY;
    for (const auto& s : route) best = std::min(best, distance_to_segment(p, s));
    return best;
}

/// Orthogonal route between two ports: one segment when the ports share an
/// axis, otherwise horizontal from `a` then vertical into `b`.
inline Route route_line(Point a, Point b) {
    if (a == b) fail(ErrorCode::InvalidRoute, "coincident endpoints");
    if (a.x == b.x || a.y == b.y) return {Segment{a, b}};
    const Point elbow{b.x, a.y};
    return {Segment{a, elbow}, Segment{elbow, b}};
}

/// Re-route used once a line exists and one of its ends moved: three pieces
/// split at the midpoint of the dominant axis.
inline Route reroute_line(Point a, Point b) {
    if (a == b) fail(ErrorCode::InvalidRoute, "coincident endpoints");
    if (a.x == b.x || a.y == b.y) return {Segment{a, b}};
    if (std::abs(b.x - a.x) >= std::abs(b.y - a.y)) {
        const double mx = 0.5 * (a.x + b.x);
        const Point p1{mx, a.y};
        const Point p2{mx, b.y};
        return {Segment{a, p1}, Segment{p1, p2}, Segment{p2, b}};
    }
    const double my = 0.5 * (a.y + b.y);
    const Point p1{a.x, my};
    const Point p2{b.x, my};
    return {Segment{a, p1}, Segment{p1, p2}, Segment{p2, b}};
}

/// Structural route check: 1-3 axis-parallel, non-degenerate, chained pieces
/// running from `a` to `b`.
inline bool route_connects(std::span<const Segment> route, Point a, Point b) {
    if (route.empty() || route.size() > 3) return false;
    if (!(route.front().from == a) || !(route.back().to == b)) return false;
    for (std::size_t i = 0; i < route.size(); ++i) {
        if (!route[i].axis_parallel() || route[i].from == route[i].to) return false;
        if (i > 0 && !(route[i - 1].to == route[i].from)) return false;
    }
    return true;
}

}  // namespace sld
