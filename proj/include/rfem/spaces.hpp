#pragma once

#include "rfem/mesh.hpp"
#include "rfem/quadrature.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <functional>
#include <span>
#include <vector>

namespace rfem {

using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;
using SparseMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

using ScalarField = std::function<double(const Vec2&)>;

/// Affine geometry of one sub-triangle: x = p0 + J * ref.
struct TriGeom {
    Vec2 p0;
    Mat22 jac;
    Mat22 inv_jac;
    double det; // = 2 * area, positive

    Vec2 map(const Vec2& ref) const { return p0 + jac * ref; }
    Vec2 pull_back(const Vec2& x) const { return inv_jac * (x - p0); }
    Vec2 push_grad(const Vec2& ref_grad) const { return inv_jac.transpose() * ref_grad; }
    double area() const { return 0.5 * det; }
};

/// Connectivity and affine maps of the simplicial sub-mesh.
struct SubMesh {
    std::vector<TriGeom> tri_geom;
    std::vector<std::array<int, 2>> edge_verts; // sorted vertex pair per unique edge
    std::vector<std::array<int, 2>> edge_tris;  // adjacent triangles, -1 when absent
    std::vector<std::array<int, 3>> tri_edges;  // edge ids; edge e joins local vertices e and e+1
    std::vector<std::vector<int>> cell_tris;    // sub-triangles of each polytopic cell

    int n_edges() const { return static_cast<int>(edge_verts.size()); }
    int edge_id(int v0, int v1) const; // -1 if no such edge
};

SubMesh build_submesh(const PolyMesh& mesh);

/// Element-wise discontinuous P_r space on the polytopic mesh. The local
/// basis on each cell consists of the monomials ((x-x_T)/h_T)^i ((y-y_T)/h_T)^j,
/// i+j <= r, scaled by the cell's bounding-box center and half-diagonal.
class DgSpace {
public:
    DgSpace(const PolyMesh& mesh, int degree);

    const PolyMesh& mesh() const { return *mesh_; }
    int degree() const { return degree_; }
    int local_dim() const { return local_dim_; }
    int dim() const { return mesh_->n_cells() * local_dim_; }
    int cell_offset(int cell) const { return cell * local_dim_; }

    Vec2 center(int cell) const { return centers_[static_cast<std::size_t>(cell)]; }
    double scale(int cell) const { return scales_[static_cast<std::size_t>(cell)]; }

    /// Local basis values (and optionally gradients) at a physical point.
    void eval(int cell, const Vec2& x, std::span<double> values,
              std::span<Vec2> grads = {}) const;

    /// Checked variant of the above: rejects points outside the cell beyond
    /// a 1e-10 * h_T tolerance.
    void eval_checked(int cell, const Vec2& x, std::span<double> values,
                      std::span<Vec2> grads = {}) const;

    double value(int cell, const Vec2& x, const VecX& coeffs) const;
    Vec2 gradient(int cell, const Vec2& x, const VecX& coeffs) const;

    /// Exponent pairs (i, j) of the local monomials in storage order.
    const std::vector<std::pair<int, int>>& powers() const { return powers_; }

private:
    const PolyMesh* mesh_;
    int degree_;
    int local_dim_;
    std::vector<Vec2> centers_;
    std::vector<double> scales_;
    std::vector<std::pair<int, int>> powers_;
};

/// Continuous Lagrange P_r space on the sub-triangulation, with equispaced
/// nodes identified across shared sub-edges and vertices. When built
/// partitioned (from the mesh's cell groups), nodes on the interface between
/// subdomains carry one dof copy per side, so functions may jump there.
class ConformingSpace {
public:
    ConformingSpace(const PolyMesh& mesh, int degree, bool partitioned = false);

    const PolyMesh& mesh() const { return *mesh_; }
    const SubMesh& submesh() const { return sub_; }
    int degree() const { return degree_; }
    int local_dim() const { return local_dim_; }
    int dim() const { return static_cast<int>(node_coords_.size()); }
    int n_geometric_nodes() const { return n_geo_; }
    bool partitioned() const { return partitioned_; }

    std::span<const int> tri_dofs(int tri) const
    {
        return {tri_dofs_.data() + static_cast<std::size_t>(tri) * local_dim_,
                static_cast<std::size_t>(local_dim_)};
    }

    Vec2 node_coord(int dof) const { return node_coords_[static_cast<std::size_t>(dof)]; }
    int node_group(int dof) const { return node_groups_[static_cast<std::size_t>(dof)]; }
    int node_geometric_id(int dof) const { return node_geo_[static_cast<std::size_t>(dof)]; }

    /// omega_nu: the polytopic cells sharing this dof's node (restricted to
    /// the dof's subdomain copy when partitioned).
    std::span<const int> node_cells(int dof) const
    {
        return {node_cells_.data() + node_cells_offsets_[static_cast<std::size_t>(dof)],
                node_cells_offsets_[static_cast<std::size_t>(dof) + 1] -
                    node_cells_offsets_[static_cast<std::size_t>(dof)]};
    }

    /// Reference lattice nodes matching the local dof order.
    const std::vector<Vec2>& ref_nodes() const { return ref_nodes_; }

    /// Reference basis values and gradients at a reference point.
    void eval_ref(const Vec2& ref, std::span<double> values, std::span<Vec2> ref_grads = {}) const;

    /// Checked physical-point evaluation on a sub-triangle (tolerance
    /// 1e-10 * h of the parent cell).
    void eval_checked(int tri, const Vec2& x, std::span<double> values,
                      std::span<Vec2> grads = {}) const;

    double value_on_tri(int tri, const Vec2& ref, const VecX& coeffs) const;
    Vec2 gradient_on_tri(int tri, const Vec2& ref, const VecX& coeffs) const;

    /// Group id used for dof copies of a cell (0 when not partitioned).
    int cell_group(int cell) const
    {
        return partitioned_ ? mesh_->groups[static_cast<std::size_t>(cell)] : 0;
    }

private:
    const PolyMesh* mesh_;
    SubMesh sub_;
    int degree_;
    int local_dim_;
    int n_geo_ = 0;
    bool partitioned_;
    std::vector<int> tri_dofs_;
    std::vector<Vec2> node_coords_;
    std::vector<int> node_groups_;
    std::vector<int> node_geo_;
    std::vector<int> node_cells_;
    std::vector<std::size_t> node_cells_offsets_;
    std::vector<Vec2> ref_nodes_;
    std::vector<std::pair<int, int>> powers_;
    MatX coeff_; // nodal basis coefficients over monomials (column per basis fn)
};

/// Element-local L2 projection of `f` onto the DG space, integrating over
/// the sub-triangles with a rule of the given order (default 2r+4).
VecX l2_project(const ScalarField& f, const DgSpace& space, const SubMesh& sub,
                int quad_order = -1);

} // namespace rfem
