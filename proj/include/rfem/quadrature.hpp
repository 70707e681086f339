#pragma once

#include "rfem/geometry.hpp"

#include <vector>

namespace rfem {

enum class QuadKind { Triangle, Segment };

/// Quadrature rule on the reference triangle {(0,0),(1,0),(0,1)} or the
/// reference segment [-1,1]. Weights are positive and sum to the reference
/// measure; the rule is exact for polynomials of total degree <= order.
struct QuadratureRule {
    QuadKind kind;
    int order;
    std::vector<Vec2> points;    // segment rules use only the x component
    std::vector<double> weights;

    int size() const { return static_cast<int>(points.size()); }
};

/// Rule factory for 1 <= order <= 20. Cached per (kind, order).
const QuadratureRule& quadrature(QuadKind kind, int order);

/// Gauss-Legendre nodes/weights on [-1,1], exact through degree 2n-1.
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

} // namespace rfem
