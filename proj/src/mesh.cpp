#include "rfem/mesh.hpp"

#include "rfem/errors.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace rfem {

namespace {

inline std::uint64_t pack_edge(int a, int b)
{
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
           static_cast<std::uint32_t>(b);
}

inline std::uint64_t pack_sorted(int a, int b)
{
    return a < b ? pack_edge(a, b) : pack_edge(b, a);
}

double tri_area2(const Vec2& a, const Vec2& b, const Vec2& c)
{
    return cross2(b - a, c - a);
}

// Clip strictly convex ears until n-2 triangles remain. Valid for convex
// loops that may contain collinear vertices (where the plain fan from
// vertex 0 would emit degenerate triangles).
void earclip_convex(const std::vector<Vec2>& verts, const std::vector<int>& loop, int cell,
                    double tol, std::vector<SubTri>& out)
{
    std::vector<int> idx(loop.begin(), loop.end());
    while (idx.size() > 3) {
        bool clipped = false;
        for (std::size_t i = 0; i < idx.size(); ++i) {
            const int ip = idx[(i + idx.size() - 1) % idx.size()];
            const int ic = idx[i];
            const int in = idx[(i + 1) % idx.size()];
            if (tri_area2(verts[ip], verts[ic], verts[in]) > tol) {
                out.push_back({{ip, ic, in}, cell});
                idx.erase(idx.begin() + static_cast<std::ptrdiff_t>(i));
                clipped = true;
                break;
            }
        }
        if (!clipped) throw Error("subtriangulate: degenerate cell " + std::to_string(cell));
    }
    if (tri_area2(verts[idx[0]], verts[idx[1]], verts[idx[2]]) <= tol)
        throw Error("subtriangulate: degenerate cell " + std::to_string(cell));
    out.push_back({{idx[0], idx[1], idx[2]}, cell});
}

} // namespace

std::vector<Vec2> PolyMesh::cell_polygon(int cell) const
{
    std::vector<Vec2> poly;
    poly.reserve(cells[cell].size());
    for (int v : cells[cell]) poly.push_back(vertices[v]);
    return poly;
}

double PolyMesh::cell_area(int cell) const
{
    const auto poly = cell_polygon(cell);
    return polygon_signed_area(poly);
}

double PolyMesh::subtri_area(int tri) const
{
    const auto& t = subtriangles[tri];
    return 0.5 * tri_area2(vertices[t.v[0]], vertices[t.v[1]], vertices[t.v[2]]);
}

double PolyMesh::total_area() const
{
    double a = 0.0;
    for (int c = 0; c < n_cells(); ++c) a += cell_area(c);
    return a;
}

FineMesh structured_quad_mesh(int nx, int ny, const Rect& domain)
{
    if (nx < 1 || ny < 1) throw Error("structured_quad_mesh: grid dimensions must be >= 1");
    FineMesh m;
    m.vertices.reserve(static_cast<std::size_t>(nx + 1) * (ny + 1));
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i <= nx; ++i)
            m.vertices.emplace_back(domain.x0 + domain.width() * i / nx,
                                    domain.y0 + domain.height() * j / ny);
    const auto vid = [nx](int i, int j) { return j * (nx + 1) + i; };
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i)
            m.cells.push_back({vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)});
    return m;
}

std::vector<SubTri> subtriangulate(const std::vector<Vec2>& vertices,
                                   const std::vector<std::vector<int>>& cells)
{
    std::vector<SubTri> tris;
    for (int c = 0; c < static_cast<int>(cells.size()); ++c) {
        const auto& loop = cells[c];
        const int n = static_cast<int>(loop.size());
        if (n < 3) throw Error("subtriangulate: cell " + std::to_string(c) + " has fewer than 3 vertices");

        std::vector<Vec2> poly;
        poly.reserve(loop.size());
        for (int v : loop) poly.push_back(vertices[v]);
        const double diam = polygon_diameter(poly);
        const double tol = 1e-12 * diam * diam;

        for (int i = 0; i < n; ++i) {
            const Vec2 e0 = poly[(i + 1) % n] - poly[i];
            const Vec2 e1 = poly[(i + 2) % n] - poly[(i + 1) % n];
            if (cross2(e0, e1) < -tol)
                throw Error("subtriangulate: reflex vertex in cell " + std::to_string(c));
        }

        bool fan_ok = true;
        for (int i = 1; i + 1 < n && fan_ok; ++i)
            if (tri_area2(poly[0], poly[i], poly[i + 1]) <= tol) fan_ok = false;

        if (fan_ok) {
            for (int i = 1; i + 1 < n; ++i) tris.push_back({{loop[0], loop[i], loop[i + 1]}, c});
        } else {
            earclip_convex(vertices, loop, c, tol, tris);
        }
    }
    return tris;
}

std::vector<PolyFace> build_face_topology(const PolyMesh& mesh)
{
    // half-edges of the polytopic cell loops
    std::unordered_map<std::uint64_t, int> half; // (a,b) -> cell
    half.reserve(mesh.subtriangles.size() * 2);
    for (int c = 0; c < mesh.n_cells(); ++c) {
        const auto& loop = mesh.cells[c];
        const int n = static_cast<int>(loop.size());
        for (int i = 0; i < n; ++i) {
            const auto [it, fresh] = half.emplace(pack_edge(loop[i], loop[(i + 1) % n]), c);
            if (!fresh)
                throw Error("build_face_topology: duplicated edge " + std::to_string(loop[i]) +
                            "-" + std::to_string(loop[(i + 1) % n]));
        }
    }

    // sub-edge -> adjacent sub-triangles, for trace evaluation later on
    std::unordered_map<std::uint64_t, std::array<int, 2>> edge_tris;
    edge_tris.reserve(mesh.subtriangles.size() * 2);
    for (int t = 0; t < mesh.n_subtriangles(); ++t) {
        const auto& tri = mesh.subtriangles[t];
        for (int e = 0; e < 3; ++e) {
            const auto key = pack_sorted(tri.v[e], tri.v[(e + 1) % 3]);
            auto [it, fresh] = edge_tris.emplace(key, std::array<int, 2>{t, -1});
            if (!fresh) {
                if (it->second[1] != -1)
                    throw Error("build_face_topology: sub-edge shared by more than two sub-triangles");
                it->second[1] = t;
            }
        }
    }

    const auto tri_of_cell = [&](std::uint64_t key, int cell) {
        const auto it = edge_tris.find(key);
        if (it == edge_tris.end())
            throw Error("build_face_topology: cell edge missing from sub-triangulation");
        for (int t : it->second)
            if (t >= 0 && mesh.subtriangles[t].cell == cell) return t;
        return -1;
    };

    struct RawEdge {
        int v0, v1;
        int neighbor; // kBoundary for boundary edges
    };

    std::vector<PolyFace> faces;
    const double diam_tol = 1e-12;

    // Walk each cell loop once; a cell emits the faces it owns (boundary
    // faces, and interior faces against a higher-numbered neighbor). Runs of
    // consecutive collinear sub-edges against the same neighbor become one
    // face, so agglomerated meshes keep their constituent fine sub-edges.
    for (int c = 0; c < mesh.n_cells(); ++c) {
        const auto& loop = mesh.cells[c];
        const int n = static_cast<int>(loop.size());

        std::vector<RawEdge> owned;
        owned.reserve(static_cast<std::size_t>(n));
        // rotate the start so a face run never wraps around the loop start
        const auto neighbor_of = [&](int i) {
            const auto it = half.find(pack_edge(loop[(i + 1) % n], loop[i]));
            return it == half.end() ? kBoundary : it->second;
        };
        const auto edge_dir = [&](int i) {
            return Vec2(mesh.vertices[loop[(i + 1) % n]] - mesh.vertices[loop[i]]);
        };
        int start = 0;
        for (int i = 0; i < n; ++i) {
            const int prev = (i + n - 1) % n;
            const Vec2 dp = edge_dir(prev);
            const Vec2 di = edge_dir(i);
            if (neighbor_of(i) != neighbor_of(prev) ||
                std::abs(cross2(dp, di)) > diam_tol * dp.norm() * di.norm()) {
                start = i;
                break;
            }
        }
        for (int i = 0; i < n; ++i) {
            const int k = (start + i) % n;
            owned.push_back({loop[k], loop[(k + 1) % n], neighbor_of(k)});
        }

        std::size_t i = 0;
        while (i < owned.size()) {
            const int nb = owned[i].neighbor;
            if (nb != kBoundary && nb < c) { // owned by the neighbor
                ++i;
                continue;
            }
            PolyFace face;
            face.owner_cell = c;
            face.neighbor_cell = nb;
            Vec2 dir = mesh.vertices[owned[i].v1] - mesh.vertices[owned[i].v0];
            std::size_t j = i;
            while (j < owned.size()) {
                const RawEdge& e = owned[j];
                if (e.neighbor != nb) break;
                if (j > i) {
                    if (e.v0 != owned[j - 1].v1) break;
                    const Vec2 d = mesh.vertices[e.v1] - mesh.vertices[e.v0];
                    if (std::abs(cross2(dir, d)) > diam_tol * dir.norm() * d.norm()) break;
                }
                FaceSubEdge se;
                se.v0 = e.v0;
                se.v1 = e.v1;
                se.tri_owner = tri_of_cell(pack_sorted(e.v0, e.v1), c);
                se.tri_neighbor = nb == kBoundary ? -1 : tri_of_cell(pack_sorted(e.v0, e.v1), nb);
                if (se.tri_owner < 0)
                    throw Error("build_face_topology: no owner-side sub-triangle for a cell edge");
                if (nb != kBoundary && se.tri_neighbor < 0)
                    throw Error("build_face_topology: no neighbor-side sub-triangle for an interior edge");
                face.sub_edges.push_back(se);
                face.measure += (mesh.vertices[e.v1] - mesh.vertices[e.v0]).norm();
                ++j;
            }
            const Vec2 d0 = mesh.vertices[face.sub_edges[0].v1] - mesh.vertices[face.sub_edges[0].v0];
            face.unit_normal = Vec2(d0.y(), -d0.x()).normalized();
            faces.push_back(std::move(face));
            i = j;
        }
    }

    // T-junction scan: no boundary sub-edge endpoint may sit strictly inside
    // another boundary sub-edge.
    std::vector<std::pair<Vec2, Vec2>> bdry;
    for (const auto& f : faces)
        if (f.is_boundary())
            for (const auto& se : f.sub_edges)
                bdry.emplace_back(mesh.vertices[se.v0], mesh.vertices[se.v1]);
    for (const auto& [a, b] : bdry) {
        const Vec2 d = b - a;
        const double len2 = d.squaredNorm();
        for (const auto& [p, q] : bdry) {
            for (const Vec2& x : {p, q}) {
                const double t = d.dot(x - a) / len2;
                if (t < 1e-9 || t > 1.0 - 1e-9) continue;
                const Vec2 foot = a + t * d;
                if ((x - foot).norm() < 1e-9 * std::sqrt(len2))
                    throw Error("build_face_topology: unmatched interior edge (T-junction between polytopes)");
            }
        }
    }

    return faces;
}

std::pair<double, std::vector<double>> mesh_size(const PolyMesh& mesh)
{
    std::vector<double> diam(mesh.n_cells());
    double h_max = 0.0;
    for (int c = 0; c < mesh.n_cells(); ++c) {
        const auto poly = mesh.cell_polygon(c);
        diam[c] = polygon_diameter(poly);
        h_max = std::max(h_max, diam[c]);
    }
    return {h_max, std::move(diam)};
}

namespace {

void finish_mesh(PolyMesh& mesh)
{
    if (mesh.subtriangles.empty()) mesh.subtriangles = subtriangulate(mesh.vertices, mesh.cells);
    auto [h_max, diam] = mesh_size(mesh);
    mesh.h_max = h_max;
    mesh.cell_diameters = std::move(diam);
    mesh.faces = build_face_topology(mesh);

    double c_delta = 1.0;
    for (const auto& t : mesh.subtriangles) {
        double ht = 0.0;
        for (int e = 0; e < 3; ++e)
            ht = std::max(ht, (mesh.vertices[t.v[e]] - mesh.vertices[t.v[(e + 1) % 3]]).norm());
        const double hT = mesh.cell_diameters[t.cell];
        c_delta = std::max({c_delta, hT / ht, ht / hT});
    }
    mesh.triangle_size_ratio = c_delta;
}

} // namespace

PolyMesh make_polymesh(std::vector<Vec2> vertices, std::vector<std::vector<int>> cells,
                       std::vector<int> groups)
{
    if (cells.empty()) throw Error("mesh has no cells");
    if (!groups.empty() && groups.size() != cells.size())
        throw Error("make_polymesh: GROUPS size does not match cell count");

    PolyMesh mesh;
    mesh.vertices = std::move(vertices);
    mesh.cells = std::move(cells);
    mesh.groups = std::move(groups);

    const int nv = mesh.n_vertices();
    for (auto& loop : mesh.cells) {
        if (loop.size() < 3) throw Error("make_polymesh: cell with fewer than 3 vertices");
        for (int v : loop)
            if (v < 0 || v >= nv) throw Error("vertex index out of range");
        std::vector<Vec2> poly;
        for (int v : loop) poly.push_back(mesh.vertices[v]);
        if (polygon_signed_area(poly) < 0.0) std::reverse(loop.begin(), loop.end());
    }
    for (int c = 0; c < mesh.n_cells(); ++c) {
        const auto poly = mesh.cell_polygon(c);
        const double d = polygon_diameter(poly);
        if (!polygon_is_convex_ccw(poly, 1e-12 * d * d))
            throw Error("make_polymesh: cell " + std::to_string(c) + " is not convex");
    }

    finish_mesh(mesh);
    return mesh;
}

PolyMesh agglomerate_mesh(const FineMesh& fine, const std::vector<int>& partition)
{
    if (fine.cells.empty()) throw Error("agglomerate_mesh: fine mesh has no cells");
    if (partition.size() != fine.cells.size())
        throw Error("agglomerate_mesh: partition size does not match fine cell count");

    // orient fine cells CCW and split quads into two triangles
    std::vector<std::vector<int>> oriented = fine.cells;
    for (auto& loop : oriented) {
        if (loop.size() != 3 && loop.size() != 4)
            throw Error("agglomerate_mesh: fine cells must be triangles or quadrilaterals");
        std::vector<Vec2> poly;
        for (int v : loop) poly.push_back(fine.vertices[v]);
        if (polygon_signed_area(poly) < 0.0) std::reverse(loop.begin(), loop.end());
    }

    std::vector<int> group_ids = partition;
    std::sort(group_ids.begin(), group_ids.end());
    group_ids.erase(std::unique(group_ids.begin(), group_ids.end()), group_ids.end());
    std::unordered_map<int, int> cell_of_group;
    for (int g = 0; g < static_cast<int>(group_ids.size()); ++g) cell_of_group[group_ids[g]] = g;

    PolyMesh mesh;
    mesh.vertices = fine.vertices;
    mesh.cells.resize(group_ids.size());

    for (std::size_t f = 0; f < oriented.size(); ++f) {
        const auto& loop = oriented[f];
        const int c = cell_of_group.at(partition[f]);
        if (loop.size() == 3) {
            mesh.subtriangles.push_back({{loop[0], loop[1], loop[2]}, c});
        } else {
            mesh.subtriangles.push_back({{loop[0], loop[1], loop[2]}, c});
            mesh.subtriangles.push_back({{loop[0], loop[2], loop[3]}, c});
        }
    }

    // boundary loop of each group: fine edges whose mate is outside the group
    for (int g = 0; g < static_cast<int>(group_ids.size()); ++g) {
        std::unordered_map<std::uint64_t, int> half;
        for (std::size_t f = 0; f < oriented.size(); ++f) {
            if (cell_of_group.at(partition[f]) != g) continue;
            const auto& loop = oriented[f];
            const int n = static_cast<int>(loop.size());
            for (int i = 0; i < n; ++i) half[pack_edge(loop[i], loop[(i + 1) % n])] = 1;
        }
        if (half.empty())
            throw Error("agglomerate_mesh: group " + std::to_string(group_ids[g]) + " is empty");

        std::unordered_map<int, int> next; // boundary half-edge successor map
        int start_vertex = -1;
        std::size_t boundary_count = 0;
        for (const auto& [key, unused] : half) {
            const int a = static_cast<int>(key >> 32);
            const int b = static_cast<int>(key & 0xffffffffu);
            if (half.count(pack_edge(b, a))) continue; // interior to the group
            if (next.count(a))
                throw Error("agglomerate_mesh: group " + std::to_string(group_ids[g]) +
                            " is not simply connected");
            next[a] = b;
            ++boundary_count;
            if (start_vertex < 0 || a < start_vertex) start_vertex = a;
        }
        if (boundary_count < 3)
            throw Error("agglomerate_mesh: group " + std::to_string(group_ids[g]) + " is degenerate");

        std::vector<int> loop;
        int v = start_vertex;
        do {
            loop.push_back(v);
            const auto it = next.find(v);
            if (it == next.end())
                throw Error("agglomerate_mesh: group " + std::to_string(group_ids[g]) +
                            " has an open boundary");
            v = it->second;
        } while (v != start_vertex && loop.size() <= boundary_count);
        if (loop.size() != boundary_count)
            throw Error("agglomerate_mesh: group " + std::to_string(group_ids[g]) +
                        " is disconnected or not simply connected");

        const double d = [&] {
            std::vector<Vec2> poly;
            for (int w : loop) poly.push_back(mesh.vertices[w]);
            return polygon_diameter(poly);
        }();
        std::vector<Vec2> poly;
        for (int w : loop) poly.push_back(mesh.vertices[w]);
        if (!polygon_is_convex_ccw(poly, 1e-12 * d * d))
            throw Error("agglomerate_mesh: group " + std::to_string(group_ids[g]) +
                        " does not form a convex polygon");
        mesh.cells[g] = std::move(loop);
    }

    finish_mesh(mesh);
    return mesh;
}

PolyMesh aligned_square_mesh(int n, const Rect& domain, bool partition_by_sign_y)
{
    const FineMesh fine = structured_quad_mesh(n, n, domain);
    std::vector<int> identity(fine.cells.size());
    for (std::size_t i = 0; i < identity.size(); ++i) identity[i] = static_cast<int>(i);
    PolyMesh mesh = agglomerate_mesh(fine, identity);

    if (partition_by_sign_y) {
        const double tol = 1e-12 * domain.diameter();
        mesh.groups.resize(mesh.cells.size());
        for (int c = 0; c < mesh.n_cells(); ++c) {
            bool above = false, below = false;
            for (int v : mesh.cells[c]) {
                if (mesh.vertices[v].y() > tol) above = true;
                if (mesh.vertices[v].y() < -tol) below = true;
            }
            if (above && below)
                throw Error("aligned_square_mesh: cell " + std::to_string(c) +
                            " straddles y=0; use an even subdivision");
            mesh.groups[c] = above ? 1 : 0;
        }
    }
    return mesh;
}

void validate_mesh(const PolyMesh& mesh, double domain_area)
{
    if (mesh.cells.empty()) throw Error("mesh has no cells");
    if (!mesh.groups.empty() && mesh.groups.size() != mesh.cells.size())
        throw Error("validate_mesh: group list size mismatch");

    double total = 0.0;
    std::vector<double> cell_sub_area(mesh.n_cells(), 0.0);
    for (int c = 0; c < mesh.n_cells(); ++c) {
        const auto poly = mesh.cell_polygon(c);
        if (poly.size() < 3) throw Error("validate_mesh: cell with fewer than 3 vertices");
        const double d = polygon_diameter(poly);
        if (!polygon_is_convex_ccw(poly, 1e-12 * d * d))
            throw Error("validate_mesh: cell " + std::to_string(c) + " is not convex CCW");
        total += polygon_signed_area(poly);
    }

    for (int t = 0; t < mesh.n_subtriangles(); ++t) {
        const double a = mesh.subtri_area(t);
        if (a <= 0.0) throw Error("validate_mesh: non-positive sub-triangle area");
        cell_sub_area[mesh.subtriangles[t].cell] += a;
    }
    for (int c = 0; c < mesh.n_cells(); ++c) {
        const double a = mesh.cell_area(c);
        if (std::abs(cell_sub_area[c] - a) > 1e-12 * std::abs(a))
            throw Error("validate_mesh: sub-triangles do not partition cell " + std::to_string(c));
    }

    // conformity: each sub-edge is either shared by exactly two sub-triangles
    // or covered by exactly one face sub-edge
    std::unordered_map<std::uint64_t, int> edge_count;
    for (const auto& t : mesh.subtriangles)
        for (int e = 0; e < 3; ++e) edge_count[pack_sorted(t.v[e], t.v[(e + 1) % 3])] += 1;

    std::unordered_map<std::uint64_t, int> face_edge_count;
    for (const auto& f : mesh.faces)
        for (const auto& se : f.sub_edges) face_edge_count[pack_sorted(se.v0, se.v1)] += 1;

    for (const auto& [key, cnt] : edge_count) {
        if (cnt > 2) throw Error("validate_mesh: sub-edge shared by more than two sub-triangles");
        const auto it = face_edge_count.find(key);
        const int on_face = it == face_edge_count.end() ? 0 : it->second;
        if (on_face > 1) throw Error("validate_mesh: sub-edge covered by more than one face");
        if (cnt == 1 && on_face != 1)
            throw Error("validate_mesh: hanging sub-edge not covered by a face");
    }

    for (const auto& f : mesh.faces) {
        if (std::abs(f.unit_normal.norm() - 1.0) > 1e-12)
            throw Error("validate_mesh: face normal is not unit length");
        double len = 0.0;
        for (const auto& se : f.sub_edges) {
            const Vec2 d = mesh.vertices[se.v1] - mesh.vertices[se.v0];
            len += d.norm();
            // sub-edge orientation must match the stored owner-outward normal
            const Vec2 n = Vec2(d.y(), -d.x()).normalized();
            if ((n - f.unit_normal).norm() > 1e-9)
                throw Error("validate_mesh: face sub-edge normal is inconsistent");
            if (se.tri_owner < 0 || mesh.subtriangles[se.tri_owner].cell != f.owner_cell)
                throw Error("validate_mesh: face sub-edge owner triangle mismatch");
            if (!f.is_boundary() &&
                (se.tri_neighbor < 0 || mesh.subtriangles[se.tri_neighbor].cell != f.neighbor_cell))
                throw Error("validate_mesh: face sub-edge neighbor triangle mismatch");
        }
        if (std::abs(len - f.measure) > 1e-12 * std::max(1.0, len))
            throw Error("validate_mesh: face measure does not match sub-edge lengths");
    }

    if (domain_area >= 0.0 && std::abs(total - domain_area) > 1e-12 * domain_area)
        throw Error("validate_mesh: cells do not partition the domain");
}

} // namespace rfem
