#include "rfem/errors.hpp"
#include "rfem/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <unordered_map>

namespace rfem {

namespace {

// Uniform bucket grid over the domain for neighbor queries.
class PointGrid {
public:
    PointGrid(const std::vector<Vec2>& pts, const Rect& domain)
        : domain_(domain)
    {
        const int n = static_cast<int>(pts.size());
        nx_ = std::max(1, static_cast<int>(std::floor(std::sqrt(n * domain.width() / std::max(domain.height(), 1e-300)))));
        ny_ = std::max(1, n / std::max(nx_, 1));
        nx_ = std::min(nx_, 4096);
        ny_ = std::min(ny_, 4096);
        buckets_.resize(static_cast<std::size_t>(nx_) * ny_);
        for (int i = 0; i < n; ++i) buckets_[bucket_of(pts[i])].push_back(i);
    }

    double step() const
    {
        return std::max(domain_.width() / nx_, domain_.height() / ny_);
    }

    // Indices in the square ring at L-inf bucket distance `ring` around p.
    void ring_members(const Vec2& p, int ring, std::vector<int>& out) const
    {
        const auto [bi, bj] = bucket_ij(p);
        for (int j = bj - ring; j <= bj + ring; ++j) {
            if (j < 0 || j >= ny_) continue;
            for (int i = bi - ring; i <= bi + ring; ++i) {
                if (i < 0 || i >= nx_) continue;
                if (std::max(std::abs(i - bi), std::abs(j - bj)) != ring) continue;
                const auto& b = buckets_[static_cast<std::size_t>(j) * nx_ + i];
                out.insert(out.end(), b.begin(), b.end());
            }
        }
    }

    int max_ring() const { return std::max(nx_, ny_); }

private:
    std::pair<int, int> bucket_ij(const Vec2& p) const
    {
        int i = static_cast<int>((p.x() - domain_.x0) / domain_.width() * nx_);
        int j = static_cast<int>((p.y() - domain_.y0) / domain_.height() * ny_);
        i = std::clamp(i, 0, nx_ - 1);
        j = std::clamp(j, 0, ny_ - 1);
        return {i, j};
    }
    std::size_t bucket_of(const Vec2& p) const
    {
        const auto [i, j] = bucket_ij(p);
        return static_cast<std::size_t>(j) * nx_ + i;
    }

    Rect domain_;
    int nx_ = 1, ny_ = 1;
    std::vector<std::vector<int>> buckets_;
};

std::vector<Vec2> rect_corners(const Rect& r)
{
    return {{r.x0, r.y0}, {r.x1, r.y0}, {r.x1, r.y1}, {r.x0, r.y1}};
}

double max_dist2(const std::vector<Vec2>& poly, const Vec2& g)
{
    double m = 0.0;
    for (const Vec2& v : poly) m = std::max(m, (v - g).squaredNorm());
    return m;
}

// Voronoi cell of generator i: the domain rectangle clipped against the
// bisector of every generator close enough to matter. Candidates are taken
// ring by ring from the grid; once the nearest unprocessed candidate is
// farther than twice the current cell radius it cannot cut the cell.
std::vector<Vec2> clipped_cell(int i, const std::vector<Vec2>& gens, const PointGrid& grid,
                               const Rect& domain)
{
    const Vec2 g = gens[i];
    std::vector<Vec2> poly = rect_corners(domain);
    double r2 = max_dist2(poly, g);

    std::vector<int> members;
    std::vector<std::pair<double, int>> batch;
    for (int ring = 0; ring <= grid.max_ring(); ++ring) {
        const double ring_dist = (ring - 1) * grid.step();
        if (ring > 1 && ring_dist * ring_dist > 4.0 * r2) break;

        members.clear();
        grid.ring_members(g, ring, members);
        batch.clear();
        for (int j : members)
            if (j != i) batch.emplace_back((gens[j] - g).squaredNorm(), j);
        std::sort(batch.begin(), batch.end());

        for (const auto& [d2, j] : batch) {
            if (d2 > 4.0 * r2) break;
            const Vec2 mid = 0.5 * (g + gens[j]);
            const Vec2 n = gens[j] - g;
            poly = clip_halfplane(poly, mid, n);
            if (poly.size() < 3)
                throw Error("voronoi: degenerate generator configuration near cell " +
                            std::to_string(i));
            r2 = max_dist2(poly, g);
        }
    }
    return poly;
}

} // namespace

PolyMesh voronoi_mesh_from_points(std::vector<Vec2> generators, int lloyd_iterations,
                                  const Rect& domain)
{
    const int n = static_cast<int>(generators.size());
    if (n < 1) throw Error("voronoi: need at least one generator");
    if (domain.width() <= 0.0 || domain.height() <= 0.0)
        throw Error("voronoi: degenerate domain rectangle");
    for (const Vec2& g : generators)
        if (!domain.contains(g)) throw Error("voronoi: generator outside the domain");

    std::vector<std::vector<Vec2>> polys(n);
    for (int iter = 0; iter <= lloyd_iterations; ++iter) {
        const PointGrid grid(generators, domain);
        for (int i = 0; i < n; ++i) polys[i] = clipped_cell(i, generators, grid, domain);
        if (iter == lloyd_iterations) break;
        for (int i = 0; i < n; ++i) generators[i] = polygon_centroid(polys[i]);
    }

    // reject generators that ended up (numerically) coincident
    const double min_sep = 1e-12 * domain.diameter();
    {
        const PointGrid grid(generators, domain);
        std::vector<int> members;
        for (int i = 0; i < n; ++i) {
            members.clear();
            for (int ring = 0; ring <= 1; ++ring) grid.ring_members(generators[i], ring, members);
            for (int j : members)
                if (j != i && (generators[i] - generators[j]).norm() < min_sep)
                    throw Error("voronoi: generators " + std::to_string(std::min(i, j)) + " and " +
                                std::to_string(std::max(i, j)) + " are closer than tolerance");
        }
    }

    // snap vertices onto the domain boundary, then unify shared vertices
    const double snap = 1e-9 * domain.diameter();
    for (auto& poly : polys) {
        for (Vec2& v : poly) {
            if (std::abs(v.x() - domain.x0) < snap) v.x() = domain.x0;
            if (std::abs(v.x() - domain.x1) < snap) v.x() = domain.x1;
            if (std::abs(v.y() - domain.y0) < snap) v.y() = domain.y0;
            if (std::abs(v.y() - domain.y1) < snap) v.y() = domain.y1;
        }
    }

    std::vector<Vec2> vertices;
    std::unordered_map<std::uint64_t, std::vector<int>> snap_buckets;
    const auto key_of = [&](double x, double y) {
        const auto qx = static_cast<std::int64_t>(std::llround(x / snap));
        const auto qy = static_cast<std::int64_t>(std::llround(y / snap));
        return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(qx)) << 32) |
               static_cast<std::uint32_t>(static_cast<std::int32_t>(qy));
    };
    const auto vertex_id = [&](const Vec2& v) {
        for (int di = -1; di <= 1; ++di) {
            for (int dj = -1; dj <= 1; ++dj) {
                const auto it = snap_buckets.find(key_of(v.x() + di * snap, v.y() + dj * snap));
                if (it == snap_buckets.end()) continue;
                for (int id : it->second)
                    if ((vertices[id] - v).norm() < snap) return id;
            }
        }
        const int id = static_cast<int>(vertices.size());
        vertices.push_back(v);
        snap_buckets[key_of(v.x(), v.y())].push_back(id);
        return id;
    };

    std::vector<std::vector<int>> cells(n);
    for (int i = 0; i < n; ++i) {
        std::vector<int>& loop = cells[i];
        for (const Vec2& v : polys[i]) {
            const int id = vertex_id(v);
            if (loop.empty() || (loop.back() != id && loop.front() != id)) loop.push_back(id);
        }
        while (loop.size() > 1 && loop.back() == loop.front()) loop.pop_back();
        if (loop.size() < 3)
            throw Error("voronoi: cell " + std::to_string(i) + " degenerated after vertex merging");
    }

    return make_polymesh(std::move(vertices), std::move(cells));
}

PolyMesh generate_voronoi_mesh(int n_cells, std::uint64_t seed, int lloyd_iterations,
                               const Rect& domain)
{
    if (n_cells < 1) throw Error("generate_voronoi_mesh: n_cells must be >= 1");
    if (lloyd_iterations < 0) throw Error("generate_voronoi_mesh: lloyd_iterations must be >= 0");

    std::mt19937_64 rng(seed);
    const auto unit = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
    std::vector<Vec2> gens;
    gens.reserve(static_cast<std::size_t>(n_cells));
    for (int i = 0; i < n_cells; ++i)
        gens.emplace_back(domain.x0 + domain.width() * unit(), domain.y0 + domain.height() * unit());

    return voronoi_mesh_from_points(std::move(gens), lloyd_iterations, domain);
}

} // namespace rfem
