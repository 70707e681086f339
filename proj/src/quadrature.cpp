#include "rfem/quadrature.hpp"

#include "rfem/errors.hpp"

#include <cmath>
#include <map>
#include <mutex>

namespace rfem {

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights)
{
    nodes.assign(static_cast<std::size_t>(n), 0.0);
    weights.assign(static_cast<std::size_t>(n), 0.0);
    const double pi = std::acos(-1.0);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        // Newton iteration on P_n from the Chebyshev initial guess
        double x = std::cos(pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        // one clean-up pass for the weight with the converged node
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
            const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[static_cast<std::size_t>(i)] = -x;
        nodes[static_cast<std::size_t>(n - 1 - i)] = x;
        weights[static_cast<std::size_t>(i)] = w;
        weights[static_cast<std::size_t>(n - 1 - i)] = w;
    }
    if (n % 2 == 1) nodes[static_cast<std::size_t>(n / 2)] = 0.0;
}

namespace {

QuadratureRule make_segment(int order)
{
    QuadratureRule rule{QuadKind::Segment, order, {}, {}};
    const int n = (order + 2) / 2; // 2n-1 >= order
    std::vector<double> x, w;
    gauss_legendre(n, x, w);
    for (int i = 0; i < n; ++i) {
        rule.points.emplace_back(x[static_cast<std::size_t>(i)], 0.0);
        rule.weights.push_back(w[static_cast<std::size_t>(i)]);
    }
    return rule;
}

// Collapsed tensor-product rule on the unit triangle: with Gauss-Legendre
// points xi, eta on [0,1], map (xi, eta) -> (xi, eta (1 - xi)) with Jacobian
// (1 - xi). The extra factor raises the xi-degree by one, hence n is chosen
// with 2n-1 >= order+1. All weights stay positive.
QuadratureRule make_triangle(int order)
{
    QuadratureRule rule{QuadKind::Triangle, order, {}, {}};
    if (order <= 1) {
        rule.points.emplace_back(1.0 / 3.0, 1.0 / 3.0);
        rule.weights.push_back(0.5);
        return rule;
    }
    const int n = (order + 3) / 2; // 2n-1 >= order+1
    std::vector<double> x, w;
    gauss_legendre(n, x, w);
    for (int i = 0; i < n; ++i) {
        const double xi = 0.5 * (x[static_cast<std::size_t>(i)] + 1.0);
        const double wi = 0.5 * w[static_cast<std::size_t>(i)];
        for (int j = 0; j < n; ++j) {
            const double eta = 0.5 * (x[static_cast<std::size_t>(j)] + 1.0);
            const double wj = 0.5 * w[static_cast<std::size_t>(j)];
            rule.points.emplace_back(xi, eta * (1.0 - xi));
            rule.weights.push_back(wi * wj * (1.0 - xi));
        }
    }
    return rule;
}

} // namespace

const QuadratureRule& quadrature(QuadKind kind, int order)
{
    if (order < 1 || order > 20)
        throw Error("quadrature: unsupported order " + std::to_string(order) +
                    " (supported range is 1..20)");

    static std::map<std::pair<int, int>, QuadratureRule> cache;
    static std::mutex mutex;
    std::lock_guard<std::mutex> lock(mutex);
    const auto key = std::make_pair(static_cast<int>(kind), order);
    auto it = cache.find(key);
    if (it == cache.end()) {
        QuadratureRule rule = kind == QuadKind::Triangle ? make_triangle(order) : make_segment(order);
        it = cache.emplace(key, std::move(rule)).first;
    }
    return it->second;
}

} // namespace rfem
