#pragma once

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace rfem {

using Vec2 = Eigen::Vector2d;
using Mat22 = Eigen::Matrix2d;

/// Axis-aligned rectangle, used as the computational domain for generated meshes.
struct Rect {
    double x0 = 0.0, y0 = 0.0, x1 = 1.0, y1 = 1.0;

    double width() const { return x1 - x0; }
    double height() const { return y1 - y0; }
    double area() const { return width() * height(); }
    double diameter() const { return std::hypot(width(), height()); }
    Vec2 lo() const { return {x0, y0}; }
    Vec2 hi() const { return {x1, y1}; }
    bool contains(const Vec2& p, double tol = 0.0) const
    {
        return p.x() >= x0 - tol && p.x() <= x1 + tol && p.y() >= y0 - tol && p.y() <= y1 + tol;
    }
    static Rect unit() { return {0.0, 0.0, 1.0, 1.0}; }
};

inline double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

/// Signed area of a polygon given as an ordered vertex loop (positive for CCW).
double polygon_signed_area(std::span<const Vec2> poly);

/// Area centroid of a simple polygon.
Vec2 polygon_centroid(std::span<const Vec2> poly);

/// Largest pairwise vertex distance.
double polygon_diameter(std::span<const Vec2> poly);

/// True if the loop is convex (collinear vertices allowed) and oriented CCW.
/// Reflexivity is tested against `tol_area`, an absolute tolerance on the
/// cross-product of consecutive edge vectors.
bool polygon_is_convex_ccw(std::span<const Vec2> poly, double tol_area);

/// Signed distance test: point inside convex CCW polygon up to `tol`.
bool point_in_convex_polygon(std::span<const Vec2> poly, const Vec2& p, double tol);

/// Clip a convex CCW polygon by the half-plane { x : n.(x - p0) <= 0 }.
/// Returns the clipped polygon (possibly empty).
std::vector<Vec2> clip_halfplane(std::span<const Vec2> poly, const Vec2& p0, const Vec2& n);

} // namespace rfem
