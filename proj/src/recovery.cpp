#include "rfem/recovery.hpp"

#include "rfem/errors.hpp"

#include <cmath>

namespace rfem {

RecoveryOperator::RecoveryOperator(const DgSpace& dg, const ConformingSpace& conf)
    : dg_(&dg), conf_(&conf)
{
    if (&dg.mesh() != &conf.mesh())
        throw Error("build_recovery: spaces live on different meshes");
    if (dg.degree() != conf.degree())
        throw Error("build_recovery: spaces have different degrees");

    const int m = dg.local_dim();
    std::vector<Triplet> trips;
    trips.reserve(static_cast<std::size_t>(conf.dim()) * 2 * static_cast<std::size_t>(m));
    offsets_.assign(static_cast<std::size_t>(conf.dim()) + 1, 0);

    double vals[32];
    for (int dof = 0; dof < conf.dim(); ++dof) {
        const auto cells = conf.node_cells(dof);
        const double w = 1.0 / static_cast<double>(cells.size());
        const Vec2 x = conf.node_coord(dof);
        for (int cell : cells) {
            dg.eval(cell, x, {vals, static_cast<std::size_t>(m)});
            for (int k = 0; k < m; ++k)
                trips.emplace_back(dof, dg.cell_offset(cell) + k, w * vals[k]);
            terms_.push_back({cell, w});
        }
        offsets_[static_cast<std::size_t>(dof) + 1] = terms_.size();
    }

    R_.resize(conf.dim(), dg.dim());
    R_.setFromTriplets(trips.begin(), trips.end());
    R_.makeCompressed();
}

VecX RecoveryOperator::apply(const VecX& dg_coeffs) const
{
    if (dg_coeffs.size() != dg_->dim())
        throw Error("apply_recovery: coefficient vector has wrong size");
    return R_ * dg_coeffs;
}

std::optional<double> kp_ratio(const RecoveryOperator& R, const VecX& dg_coeffs, int alpha,
                               int quad_order)
{
    if (alpha != 0 && alpha != 1) throw Error("kp_ratio: alpha must be 0 or 1");
    const DgSpace& dg = R.dg();
    const ConformingSpace& conf = R.conforming();
    const PolyMesh& mesh = dg.mesh();
    const SubMesh& sub = conf.submesh();
    const int r = dg.degree();
    const int q = quad_order > 0 ? quad_order : 2 * r + 4;

    const VecX rec = R.apply(dg_coeffs);

    // volume side: alpha-seminorm of v - E(v), cell by cell
    double lhs = 0.0;
    const QuadratureRule& vol = quadrature(QuadKind::Triangle, q);
    const int nloc = conf.local_dim();
    double cvals[32];
    Vec2 cgrads[32];
    for (int t = 0; t < mesh.n_subtriangles(); ++t) {
        const TriGeom& g = sub.tri_geom[static_cast<std::size_t>(t)];
        const int cell = mesh.subtriangles[static_cast<std::size_t>(t)].cell;
        const auto dofs = conf.tri_dofs(t);
        for (int qp = 0; qp < vol.size(); ++qp) {
            const Vec2 ref = vol.points[static_cast<std::size_t>(qp)];
            const Vec2 x = g.map(ref);
            const double w = vol.weights[static_cast<std::size_t>(qp)] * g.det;
            if (alpha == 0) {
                conf.eval_ref(ref, {cvals, static_cast<std::size_t>(nloc)});
                double e = dg.value(cell, x, dg_coeffs);
                for (int l = 0; l < nloc; ++l) e -= rec[dofs[static_cast<std::size_t>(l)]] * cvals[l];
                lhs += w * e * e;
            } else {
                conf.eval_ref(ref, {cvals, static_cast<std::size_t>(nloc)},
                              {cgrads, static_cast<std::size_t>(nloc)});
                Vec2 grad_rec = Vec2::Zero();
                for (int l = 0; l < nloc; ++l)
                    grad_rec += rec[dofs[static_cast<std::size_t>(l)]] * cgrads[l];
                const Vec2 e = dg.gradient(cell, x, dg_coeffs) - g.push_grad(grad_rec);
                lhs += w * e.squaredNorm();
            }
        }
    }

    // jump side over the interior polytopic skeleton
    double rhs = 0.0;
    const QuadratureRule& seg = quadrature(QuadKind::Segment, q);
    for (const auto& face : mesh.faces) {
        if (face.is_boundary()) continue;
        if (conf.partitioned() &&
            mesh.groups[static_cast<std::size_t>(face.owner_cell)] !=
                mesh.groups[static_cast<std::size_t>(face.neighbor_cell)])
            continue;
        const double h_face = 0.5 * (mesh.cell_diameters[static_cast<std::size_t>(face.owner_cell)] +
                                     mesh.cell_diameters[static_cast<std::size_t>(face.neighbor_cell)]);
        const double weight = std::pow(h_face, 1.0 - 2.0 * alpha);
        for (const auto& se : face.sub_edges) {
            const Vec2 a = mesh.vertices[static_cast<std::size_t>(se.v0)];
            const Vec2 b = mesh.vertices[static_cast<std::size_t>(se.v1)];
            const double half_len = 0.5 * (b - a).norm();
            for (int qp = 0; qp < seg.size(); ++qp) {
                const double t = seg.points[static_cast<std::size_t>(qp)].x();
                const Vec2 x = 0.5 * (a + b) + 0.5 * t * (b - a);
                const double w = seg.weights[static_cast<std::size_t>(qp)] * half_len;
                const double jump = dg.value(face.owner_cell, x, dg_coeffs) -
                                    dg.value(face.neighbor_cell, x, dg_coeffs);
                rhs += w * weight * jump * jump;
            }
        }
    }

    const double scale = dg_coeffs.squaredNorm() + 1e-300;
    if (rhs <= 1e-26 * scale) return std::nullopt;
    return lhs / rhs;
}

} // namespace rfem
