#pragma once

#include "rfem/geometry.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace rfem {

/// Neighbor id of boundary faces.
inline constexpr int kBoundary = -1;

/// One triangle of the simplicial sub-mesh, with its parent polytopic cell.
struct SubTri {
    std::array<int, 3> v; // sub-mesh vertex ids, CCW
    int cell;             // parent cell index
};

/// One straight segment of a face, oriented along the owner cell's CCW loop.
struct FaceSubEdge {
    int v0 = -1;
    int v1 = -1;
    int tri_owner = -1;    // adjacent sub-triangle on the owner side
    int tri_neighbor = -1; // adjacent sub-triangle on the neighbor side, -1 on the boundary
};

/// A face of the polytopic skeleton: a maximal straight run of sub-edges
/// shared by one cell pair (or by one cell and the domain boundary).
/// Agglomerated meshes store each constituent fine edge as one sub-edge.
struct PolyFace {
    std::vector<FaceSubEdge> sub_edges;
    int owner_cell = -1;
    int neighbor_cell = kBoundary;
    Vec2 unit_normal = Vec2::Zero(); // outward from owner
    double measure = 0.0;            // sum of sub-edge lengths

    bool is_boundary() const { return neighbor_cell == kBoundary; }
};

/// Polygonal mesh with its simplicial sub-triangulation and face topology.
/// Instances are immutable once built and safe to share across threads.
struct PolyMesh {
    std::vector<Vec2> vertices;
    std::vector<std::vector<int>> cells; // CCW vertex index loops
    std::vector<SubTri> subtriangles;
    std::vector<PolyFace> faces;
    std::vector<double> cell_diameters; // h_T
    std::vector<int> groups;            // optional per-cell subdomain ids (empty when unused)

    double h_max = 0.0;
    double triangle_size_ratio = 1.0; // recorded c_Delta: max over cells of h_T/h_tau and h_tau/h_T

    int n_cells() const { return static_cast<int>(cells.size()); }
    int n_vertices() const { return static_cast<int>(vertices.size()); }
    int n_faces() const { return static_cast<int>(faces.size()); }
    int n_subtriangles() const { return static_cast<int>(subtriangles.size()); }

    std::vector<Vec2> cell_polygon(int cell) const;
    double cell_area(int cell) const;
    double subtri_area(int tri) const;
    double total_area() const;
};

/// Simplicial or quadrilateral mesh used as agglomeration input.
struct FineMesh {
    std::vector<Vec2> vertices;
    std::vector<std::vector<int>> cells; // CCW loops of size 3 or 4
};

/// Structured nx-by-ny quadrilateral grid over `domain`.
FineMesh structured_quad_mesh(int nx, int ny, const Rect& domain);

/// Fan triangulation of convex cells from vertex 0; no interior points are
/// introduced, so an n-gon yields n-2 triangles. Cells whose leading vertex
/// is collinear with its successors fall back to clipping strictly convex
/// ears, which keeps the count at n-2 and the sub-mesh conforming.
/// Throws on reflex vertices (cross-product test, tolerance 1e-12 * diam^2).
std::vector<SubTri> subtriangulate(const std::vector<Vec2>& vertices,
                                   const std::vector<std::vector<int>>& cells);

/// Builds the face list of `mesh` from its cells and sub-triangulation.
/// Throws on unmatched interior edges (T-junctions between polytopes).
std::vector<PolyFace> build_face_topology(const PolyMesh& mesh);

/// h_T per cell (max pairwise vertex distance) and the global maximum.
std::pair<double, std::vector<double>> mesh_size(const PolyMesh& mesh);

/// Assembles a PolyMesh from raw vertices/cells: sub-triangulates, builds
/// faces, computes sizes and validates the standard invariants.
PolyMesh make_polymesh(std::vector<Vec2> vertices, std::vector<std::vector<int>> cells,
                       std::vector<int> groups = {});

/// Lloyd-relaxed Voronoi diagram of `n_cells` seeded generators clipped to
/// `domain`. Deterministic for fixed (n_cells, seed, lloyd_iterations).
PolyMesh generate_voronoi_mesh(int n_cells, std::uint64_t seed, int lloyd_iterations,
                               const Rect& domain);

/// Same construction from explicit generator positions.
PolyMesh voronoi_mesh_from_points(std::vector<Vec2> generators, int lloyd_iterations,
                                  const Rect& domain);

/// Agglomerates fine elements into polytopic cells following `partition`
/// (fine cell -> group id). The fine elements become the sub-triangulation
/// (quadrilaterals are split in two); interior fine edges inside a group are
/// erased from the face list. Group unions must be simply connected convex
/// polygons.
PolyMesh agglomerate_mesh(const FineMesh& fine, const std::vector<int>& partition);

/// n-by-n squares on `domain` agglomerated one group per square; with
/// `partition_by_sign_y` the cell groups are set to 0/1 by sign of the
/// centroid's y coordinate (n must be even so cells do not straddle y=0).
PolyMesh aligned_square_mesh(int n, const Rect& domain, bool partition_by_sign_y);

/// Plain-text mesh I/O (format: header "RFEM-MESH 1", then VERTICES/CELLS
/// and an optional GROUPS section; '#' starts a comment).
PolyMesh read_mesh(const std::string& path);
void write_mesh(const PolyMesh& mesh, const std::string& path);

/// Checks the mesh invariants: convex CCW cells, exact sub-triangle
/// partition of every cell, conforming sub-mesh, outward normals, face
/// measures. `domain_area >= 0` additionally checks the partition-of-domain
/// identity. Throws Error with a description on the first violation.
void validate_mesh(const PolyMesh& mesh, double domain_area = -1.0);

} // namespace rfem
