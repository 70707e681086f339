#include "rfem/geometry.hpp"

#include <cmath>

namespace rfem {

double polygon_signed_area(std::span<const Vec2> poly)
{
    const std::size_t n = poly.size();
    double a = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2& p = poly[i];
        const Vec2& q = poly[(i + 1) % n];
        a += cross2(p, q);
    }
    return 0.5 * a;
}

Vec2 polygon_centroid(std::span<const Vec2> poly)
{
    const std::size_t n = poly.size();
    double a = 0.0;
    Vec2 c = Vec2::Zero();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2& p = poly[i];
        const Vec2& q = poly[(i + 1) % n];
        const double w = cross2(p, q);
        a += w;
        c += w * (p + q);
    }
    if (std::abs(a) < 1e-300) return poly.empty() ? Vec2::Zero() : Vec2(poly[0]);
    return c / (3.0 * a);
}

double polygon_diameter(std::span<const Vec2> poly)
{
    double d2 = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i)
        for (std::size_t j = i + 1; j < poly.size(); ++j)
            d2 = std::max(d2, (poly[i] - poly[j]).squaredNorm());
    return std::sqrt(d2);
}

bool polygon_is_convex_ccw(std::span<const Vec2> poly, double tol_area)
{
    const std::size_t n = poly.size();
    if (n < 3) return false;
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 e0 = poly[(i + 1) % n] - poly[i];
        const Vec2 e1 = poly[(i + 2) % n] - poly[(i + 1) % n];
        if (cross2(e0, e1) < -tol_area) return false;
    }
    return polygon_signed_area(poly) > 0.0;
}

bool point_in_convex_polygon(std::span<const Vec2> poly, const Vec2& p, double tol)
{
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 a = poly[i];
        const Vec2 b = poly[(i + 1) % n];
        const Vec2 e = b - a;
        const double len = e.norm();
        if (len == 0.0) continue;
        // signed distance of p to the edge line, positive inside (CCW loop)
        if (cross2(e, p - a) / len < -tol) return false;
    }
    return true;
}

std::vector<Vec2> clip_halfplane(std::span<const Vec2> poly, const Vec2& p0, const Vec2& n)
{
    std::vector<Vec2> out;
    const std::size_t m = poly.size();
    if (m == 0) return out;
    out.reserve(m + 1);
    for (std::size_t i = 0; i < m; ++i) {
        const Vec2 a = poly[i];
        const Vec2 b = poly[(i + 1) % m];
        const double da = n.dot(a - p0);
        const double db = n.dot(b - p0);
        if (da <= 0.0) {
            out.push_back(a);
            if (db > 0.0) out.push_back(a + (da / (da - db)) * (b - a));
        } else if (db <= 0.0) {
            out.push_back(a + (da / (da - db)) * (b - a));
        }
    }
    return out;
}

} // namespace rfem
