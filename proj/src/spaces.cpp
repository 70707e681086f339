#include "rfem/spaces.hpp"

#include "rfem/errors.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace rfem {

namespace {

inline std::uint64_t pack_sorted(int a, int b)
{
    const auto lo = static_cast<std::uint32_t>(std::min(a, b));
    const auto hi = static_cast<std::uint32_t>(std::max(a, b));
    return (static_cast<std::uint64_t>(lo) << 32) | hi;
}

std::vector<std::pair<int, int>> monomial_powers(int degree)
{
    std::vector<std::pair<int, int>> p;
    for (int d = 0; d <= degree; ++d)
        for (int j = 0; j <= d; ++j) p.emplace_back(d - j, j);
    return p;
}

} // namespace

int SubMesh::edge_id(int v0, int v1) const
{
    const std::array<int, 2> key{std::min(v0, v1), std::max(v0, v1)};
    // edges are few per query site; linear probe via binary search over the sorted list
    const auto it = std::lower_bound(edge_verts.begin(), edge_verts.end(), key);
    if (it == edge_verts.end() || *it != key) return -1;
    return static_cast<int>(it - edge_verts.begin());
}

SubMesh build_submesh(const PolyMesh& mesh)
{
    SubMesh sub;
    const int nt = mesh.n_subtriangles();
    sub.tri_geom.resize(static_cast<std::size_t>(nt));
    sub.cell_tris.resize(static_cast<std::size_t>(mesh.n_cells()));

    for (int t = 0; t < nt; ++t) {
        const auto& tri = mesh.subtriangles[t];
        TriGeom g;
        g.p0 = mesh.vertices[tri.v[0]];
        g.jac.col(0) = mesh.vertices[tri.v[1]] - g.p0;
        g.jac.col(1) = mesh.vertices[tri.v[2]] - g.p0;
        g.det = g.jac.determinant();
        if (g.det <= 0.0) throw Error("build_submesh: degenerate or flipped sub-triangle");
        g.inv_jac << g.jac(1, 1) / g.det, -g.jac(0, 1) / g.det, -g.jac(1, 0) / g.det,
            g.jac(0, 0) / g.det;
        sub.tri_geom[static_cast<std::size_t>(t)] = g;
        sub.cell_tris[static_cast<std::size_t>(tri.cell)].push_back(t);
    }

    // unique edges, sorted for binary-search lookup
    std::vector<std::array<int, 2>> all;
    all.reserve(static_cast<std::size_t>(nt) * 3);
    for (const auto& tri : mesh.subtriangles)
        for (int e = 0; e < 3; ++e)
            all.push_back({std::min(tri.v[e], tri.v[(e + 1) % 3]),
                           std::max(tri.v[e], tri.v[(e + 1) % 3])});
    std::sort(all.begin(), all.end());
    all.erase(std::unique(all.begin(), all.end()), all.end());
    sub.edge_verts = std::move(all);
    sub.edge_tris.assign(sub.edge_verts.size(), {-1, -1});
    sub.tri_edges.resize(static_cast<std::size_t>(nt));

    for (int t = 0; t < nt; ++t) {
        const auto& tri = mesh.subtriangles[t];
        for (int e = 0; e < 3; ++e) {
            const int id = sub.edge_id(tri.v[e], tri.v[(e + 1) % 3]);
            sub.tri_edges[static_cast<std::size_t>(t)][static_cast<std::size_t>(e)] = id;
            auto& adj = sub.edge_tris[static_cast<std::size_t>(id)];
            if (adj[0] < 0)
                adj[0] = t;
            else if (adj[1] < 0)
                adj[1] = t;
            else
                throw Error("build_submesh: edge shared by more than two sub-triangles");
        }
    }
    return sub;
}

DgSpace::DgSpace(const PolyMesh& mesh, int degree) : mesh_(&mesh), degree_(degree)
{
    if (degree < 1) throw Error("build_dg_space: degree r >= 1 is required");
    if (degree > 6) throw Error("build_dg_space: degree r <= 6 is required");
    local_dim_ = (degree + 1) * (degree + 2) / 2;
    powers_ = monomial_powers(degree);
    centers_.resize(static_cast<std::size_t>(mesh.n_cells()));
    scales_.resize(static_cast<std::size_t>(mesh.n_cells()));
    for (int c = 0; c < mesh.n_cells(); ++c) {
        Vec2 lo(1e300, 1e300), hi(-1e300, -1e300);
        for (int v : mesh.cells[static_cast<std::size_t>(c)]) {
            lo = lo.cwiseMin(mesh.vertices[static_cast<std::size_t>(v)]);
            hi = hi.cwiseMax(mesh.vertices[static_cast<std::size_t>(v)]);
        }
        centers_[static_cast<std::size_t>(c)] = 0.5 * (lo + hi);
        scales_[static_cast<std::size_t>(c)] = 0.5 * (hi - lo).norm();
    }
}

void DgSpace::eval(int cell, const Vec2& x, std::span<double> values, std::span<Vec2> grads) const
{
    const double h = scales_[static_cast<std::size_t>(cell)];
    const Vec2 xi = (x - centers_[static_cast<std::size_t>(cell)]) / h;

    double px[32], py[32];
    px[0] = py[0] = 1.0;
    for (int k = 1; k <= degree_; ++k) {
        px[k] = px[k - 1] * xi.x();
        py[k] = py[k - 1] * xi.y();
    }
    for (int m = 0; m < local_dim_; ++m) {
        const auto [i, j] = powers_[static_cast<std::size_t>(m)];
        values[static_cast<std::size_t>(m)] = px[i] * py[j];
        if (!grads.empty()) {
            const double gx = i > 0 ? i * px[i - 1] * py[j] / h : 0.0;
            const double gy = j > 0 ? j * px[i] * py[j - 1] / h : 0.0;
            grads[static_cast<std::size_t>(m)] = Vec2(gx, gy);
        }
    }
}

void DgSpace::eval_checked(int cell, const Vec2& x, std::span<double> values,
                           std::span<Vec2> grads) const
{
    const auto poly = mesh_->cell_polygon(cell);
    const double tol = 1e-10 * mesh_->cell_diameters[static_cast<std::size_t>(cell)];
    if (!point_in_convex_polygon(poly, x, tol))
        throw Error("eval_basis: point outside cell " + std::to_string(cell));
    eval(cell, x, values, grads);
}

double DgSpace::value(int cell, const Vec2& x, const VecX& coeffs) const
{
    double vals[32];
    eval(cell, x, {vals, static_cast<std::size_t>(local_dim_)});
    double s = 0.0;
    const int off = cell_offset(cell);
    for (int m = 0; m < local_dim_; ++m) s += coeffs[off + m] * vals[m];
    return s;
}

Vec2 DgSpace::gradient(int cell, const Vec2& x, const VecX& coeffs) const
{
    double vals[32];
    Vec2 grads[32];
    eval(cell, x, {vals, static_cast<std::size_t>(local_dim_)},
         {grads, static_cast<std::size_t>(local_dim_)});
    Vec2 g = Vec2::Zero();
    const int off = cell_offset(cell);
    for (int m = 0; m < local_dim_; ++m) g += coeffs[off + m] * grads[m];
    return g;
}

namespace {

// Reference lattice: 3 vertices, then r-1 nodes per local edge (ordered from
// the edge's first local vertex), then interior lattice points.
std::vector<Vec2> lagrange_ref_nodes(int r)
{
    const Vec2 corners[3] = {{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}};
    std::vector<Vec2> nodes(corners, corners + 3);
    for (int e = 0; e < 3; ++e) {
        const Vec2 a = corners[e];
        const Vec2 b = corners[(e + 1) % 3];
        for (int s = 1; s < r; ++s) nodes.push_back(a + (static_cast<double>(s) / r) * (b - a));
    }
    for (int i = 1; i <= r - 2; ++i)
        for (int j = 1; i + j <= r - 1; ++j)
            nodes.emplace_back(static_cast<double>(i) / r, static_cast<double>(j) / r);
    return nodes;
}

} // namespace

ConformingSpace::ConformingSpace(const PolyMesh& mesh, int degree, bool partitioned)
    : mesh_(&mesh), sub_(build_submesh(mesh)), degree_(degree), partitioned_(partitioned)
{
    if (degree < 1) throw Error("build_conforming_space: degree r >= 1 is required");
    if (degree > 6) throw Error("build_conforming_space: degree r <= 6 is required");
    if (partitioned && mesh.groups.empty())
        throw Error("build_conforming_space: partitioned space requires cell groups");

    local_dim_ = (degree + 1) * (degree + 2) / 2;
    ref_nodes_ = lagrange_ref_nodes(degree);
    powers_ = monomial_powers(degree);

    // nodal basis coefficients from the monomial Vandermonde system
    const auto& powers = powers_;
    MatX V(local_dim_, local_dim_);
    for (int l = 0; l < local_dim_; ++l)
        for (int k = 0; k < local_dim_; ++k)
            V(l, k) = std::pow(ref_nodes_[static_cast<std::size_t>(l)].x(), powers[static_cast<std::size_t>(k)].first) *
                      std::pow(ref_nodes_[static_cast<std::size_t>(l)].y(), powers[static_cast<std::size_t>(k)].second);
    coeff_ = V.fullPivLu().inverse();

    // geometric node slots: vertices, then (r-1) per edge, then interiors
    const int r = degree;
    const int nv = mesh.n_vertices();
    const int ne = sub_.n_edges();
    const int nt = mesh.n_subtriangles();
    const int per_edge = r - 1;
    const int per_tri = (r - 1) * (r - 2) / 2;
    n_geo_ = nv + ne * per_edge + nt * per_tri;

    const auto geo_vertex = [&](int v) { return v; };
    const auto geo_edge = [&](int e, int s) { return nv + e * per_edge + s; };
    const auto geo_interior = [&](int t, int k) { return nv + ne * per_edge + t * per_tri + k; };

    // geometric id of each local node of each sub-triangle
    std::vector<int> tri_geo(static_cast<std::size_t>(nt) * local_dim_);
    for (int t = 0; t < nt; ++t) {
        const auto& tri = mesh.subtriangles[static_cast<std::size_t>(t)];
        int* g = tri_geo.data() + static_cast<std::size_t>(t) * local_dim_;
        for (int l = 0; l < 3; ++l) g[l] = geo_vertex(tri.v[static_cast<std::size_t>(l)]);
        int loc = 3;
        for (int e = 0; e < 3; ++e) {
            const int a = tri.v[static_cast<std::size_t>(e)];
            const int b = tri.v[static_cast<std::size_t>((e + 1) % 3)];
            const int edge = sub_.tri_edges[static_cast<std::size_t>(t)][static_cast<std::size_t>(e)];
            for (int s = 1; s < r; ++s) {
                const int along = a < b ? s - 1 : r - 1 - s;
                g[loc++] = geo_edge(edge, along);
            }
        }
        for (int k = 0; k < per_tri; ++k) g[loc++] = geo_interior(t, k);
    }

    // omega of each geometric node: parent cells of incident sub-triangles
    std::vector<std::vector<int>> geo_cells(static_cast<std::size_t>(n_geo_));
    for (int t = 0; t < nt; ++t) {
        const int cell = mesh.subtriangles[static_cast<std::size_t>(t)].cell;
        for (int l = 0; l < local_dim_; ++l) {
            auto& cs = geo_cells[static_cast<std::size_t>(tri_geo[static_cast<std::size_t>(t) * local_dim_ + l])];
            if (std::find(cs.begin(), cs.end(), cell) == cs.end()) cs.push_back(cell);
        }
    }
    for (auto& cs : geo_cells) std::sort(cs.begin(), cs.end());

    // dof copies per subdomain present at the node
    const auto group_of = [&](int cell) {
        return partitioned_ ? mesh.groups[static_cast<std::size_t>(cell)] : 0;
    };
    std::vector<int> geo_first_dof(static_cast<std::size_t>(n_geo_) + 1, 0);
    std::vector<std::vector<int>> geo_groups(static_cast<std::size_t>(n_geo_));
    for (int g = 0; g < n_geo_; ++g) {
        auto& gr = geo_groups[static_cast<std::size_t>(g)];
        for (int cell : geo_cells[static_cast<std::size_t>(g)]) {
            const int grp = group_of(cell);
            if (std::find(gr.begin(), gr.end(), grp) == gr.end()) gr.push_back(grp);
        }
        std::sort(gr.begin(), gr.end());
    }
    for (int g = 0; g < n_geo_; ++g)
        geo_first_dof[static_cast<std::size_t>(g) + 1] =
            geo_first_dof[static_cast<std::size_t>(g)] +
            std::max<int>(1, static_cast<int>(geo_groups[static_cast<std::size_t>(g)].size()));

    const int n_dofs = geo_first_dof[static_cast<std::size_t>(n_geo_)];
    node_coords_.resize(static_cast<std::size_t>(n_dofs));
    node_groups_.resize(static_cast<std::size_t>(n_dofs));
    node_geo_.resize(static_cast<std::size_t>(n_dofs));
    node_cells_offsets_.assign(static_cast<std::size_t>(n_dofs) + 1, 0);

    const auto geo_coord = [&](int g) -> Vec2 {
        if (g < nv) return mesh.vertices[static_cast<std::size_t>(g)];
        if (g < nv + ne * per_edge) {
            const int e = (g - nv) / per_edge;
            const int s = (g - nv) % per_edge;
            const Vec2 a = mesh.vertices[static_cast<std::size_t>(sub_.edge_verts[static_cast<std::size_t>(e)][0])];
            const Vec2 b = mesh.vertices[static_cast<std::size_t>(sub_.edge_verts[static_cast<std::size_t>(e)][1])];
            return a + (static_cast<double>(s + 1) / r) * (b - a);
        }
        const int t = (g - nv - ne * per_edge) / std::max(1, per_tri);
        const int k = (g - nv - ne * per_edge) % std::max(1, per_tri);
        // k-th interior lattice point in the enumeration order of lagrange_ref_nodes
        int count = 0;
        for (int i = 1; i <= r - 2; ++i)
            for (int j = 1; i + j <= r - 1; ++j)
                if (count++ == k)
                    return sub_.tri_geom[static_cast<std::size_t>(t)].map(
                        Vec2(static_cast<double>(i) / r, static_cast<double>(j) / r));
        throw Error("conforming space: interior node index out of range");
    };

    for (int g = 0; g < n_geo_; ++g) {
        const auto& gr = geo_groups[static_cast<std::size_t>(g)];
        for (int k = 0; k < std::max<int>(1, static_cast<int>(gr.size())); ++k) {
            const int dof = geo_first_dof[static_cast<std::size_t>(g)] + k;
            node_coords_[static_cast<std::size_t>(dof)] = geo_coord(g);
            node_groups_[static_cast<std::size_t>(dof)] = gr.empty() ? 0 : gr[static_cast<std::size_t>(k)];
            node_geo_[static_cast<std::size_t>(dof)] = g;
        }
    }

    // omega restricted to the copy's subdomain
    std::vector<int> flat;
    for (int dof = 0; dof < n_dofs; ++dof) {
        const int g = node_geo_[static_cast<std::size_t>(dof)];
        const int grp = node_groups_[static_cast<std::size_t>(dof)];
        node_cells_offsets_[static_cast<std::size_t>(dof)] = flat.size();
        for (int cell : geo_cells[static_cast<std::size_t>(g)])
            if (group_of(cell) == grp) flat.push_back(cell);
    }
    node_cells_offsets_[static_cast<std::size_t>(n_dofs)] = flat.size();
    node_cells_ = std::move(flat);
    for (int dof = 0; dof < n_dofs; ++dof)
        if (node_cells_offsets_[static_cast<std::size_t>(dof) + 1] ==
            node_cells_offsets_[static_cast<std::size_t>(dof)])
            throw Error("conforming space: node with empty omega");

    // final local->global map picks the copy matching the triangle's group
    tri_dofs_.resize(static_cast<std::size_t>(nt) * local_dim_);
    for (int t = 0; t < nt; ++t) {
        const int grp = group_of(mesh.subtriangles[static_cast<std::size_t>(t)].cell);
        for (int l = 0; l < local_dim_; ++l) {
            const int g = tri_geo[static_cast<std::size_t>(t) * local_dim_ + l];
            const auto& gr = geo_groups[static_cast<std::size_t>(g)];
            int k = 0;
            if (!gr.empty()) {
                const auto it = std::find(gr.begin(), gr.end(), grp);
                if (it == gr.end())
                    throw Error("conforming space: triangle group missing at node");
                k = static_cast<int>(it - gr.begin());
            }
            tri_dofs_[static_cast<std::size_t>(t) * local_dim_ + l] =
                geo_first_dof[static_cast<std::size_t>(g)] + k;
        }
    }
}

void ConformingSpace::eval_ref(const Vec2& ref, std::span<double> values,
                               std::span<Vec2> ref_grads) const
{
    const auto& powers = powers_;
    double mono[32];
    Vec2 dmono[32];
    double px[8], py[8];
    px[0] = py[0] = 1.0;
    for (int k = 1; k <= degree_; ++k) {
        px[k] = px[k - 1] * ref.x();
        py[k] = py[k - 1] * ref.y();
    }
    for (int m = 0; m < local_dim_; ++m) {
        const auto [i, j] = powers[static_cast<std::size_t>(m)];
        mono[m] = px[i] * py[j];
        dmono[m] = Vec2(i > 0 ? i * px[i - 1] * py[j] : 0.0, j > 0 ? j * px[i] * py[j - 1] : 0.0);
    }
    for (int l = 0; l < local_dim_; ++l) {
        double v = 0.0;
        Vec2 g = Vec2::Zero();
        for (int m = 0; m < local_dim_; ++m) {
            v += coeff_(m, l) * mono[m];
            if (!ref_grads.empty()) g += coeff_(m, l) * dmono[m];
        }
        values[static_cast<std::size_t>(l)] = v;
        if (!ref_grads.empty()) ref_grads[static_cast<std::size_t>(l)] = g;
    }
}

void ConformingSpace::eval_checked(int tri, const Vec2& x, std::span<double> values,
                                   std::span<Vec2> grads) const
{
    const TriGeom& g = sub_.tri_geom[static_cast<std::size_t>(tri)];
    const Vec2 ref = g.pull_back(x);
    const int cell = mesh_->subtriangles[static_cast<std::size_t>(tri)].cell;
    const double tol = 1e-10 * mesh_->cell_diameters[static_cast<std::size_t>(cell)] /
                       std::max(1.0, g.jac.norm());
    if (ref.x() < -tol || ref.y() < -tol || ref.x() + ref.y() > 1.0 + tol)
        throw Error("eval_basis: point outside sub-triangle " + std::to_string(tri));

    Vec2 rg[32];
    eval_ref(ref, values, grads.empty() ? std::span<Vec2>{} : std::span<Vec2>{rg, static_cast<std::size_t>(local_dim_)});
    for (std::size_t l = 0; l < grads.size(); ++l) grads[l] = g.push_grad(rg[l]);
}

double ConformingSpace::value_on_tri(int tri, const Vec2& ref, const VecX& coeffs) const
{
    double vals[32];
    eval_ref(ref, {vals, static_cast<std::size_t>(local_dim_)});
    const auto dofs = tri_dofs(tri);
    double s = 0.0;
    for (int l = 0; l < local_dim_; ++l) s += coeffs[dofs[static_cast<std::size_t>(l)]] * vals[l];
    return s;
}

Vec2 ConformingSpace::gradient_on_tri(int tri, const Vec2& ref, const VecX& coeffs) const
{
    double vals[32];
    Vec2 rg[32];
    eval_ref(ref, {vals, static_cast<std::size_t>(local_dim_)},
             {rg, static_cast<std::size_t>(local_dim_)});
    const auto dofs = tri_dofs(tri);
    Vec2 g = Vec2::Zero();
    for (int l = 0; l < local_dim_; ++l) g += coeffs[dofs[static_cast<std::size_t>(l)]] * rg[l];
    return sub_.tri_geom[static_cast<std::size_t>(tri)].push_grad(g);
}

VecX l2_project(const ScalarField& f, const DgSpace& space, const SubMesh& sub, int quad_order)
{
    const int r = space.degree();
    const int q = quad_order > 0 ? quad_order : 2 * r + 4;
    if (q < 2 * r) throw Error("l2_project: quadrature order below 2r");
    const QuadratureRule& rule = quadrature(QuadKind::Triangle, q);

    const int m = space.local_dim();
    VecX coeffs(space.dim());
    MatX M(m, m);
    VecX rhs(m);
    double vals[32];

    for (int c = 0; c < space.mesh().n_cells(); ++c) {
        M.setZero();
        rhs.setZero();
        for (int t : sub.cell_tris[static_cast<std::size_t>(c)]) {
            const TriGeom& g = sub.tri_geom[static_cast<std::size_t>(t)];
            for (int qp = 0; qp < rule.size(); ++qp) {
                const Vec2 x = g.map(rule.points[static_cast<std::size_t>(qp)]);
                const double w = rule.weights[static_cast<std::size_t>(qp)] * g.det;
                space.eval(c, x, {vals, static_cast<std::size_t>(m)});
                const double fx = f(x);
                for (int i = 0; i < m; ++i) {
                    rhs[i] += w * fx * vals[i];
                    for (int j = 0; j < m; ++j) M(i, j) += w * vals[i] * vals[j];
                }
            }
        }
        const Eigen::LDLT<MatX> ldlt(M);
        if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
            throw NumericalError("l2_project: singular local mass matrix on cell " +
                                 std::to_string(c));
        coeffs.segment(space.cell_offset(c), m) = ldlt.solve(rhs);
    }
    return coeffs;
}

} // namespace rfem
