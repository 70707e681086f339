#pragma once

#include "rfem/spaces.hpp"

#include <optional>

namespace rfem {

/// Nodal-averaging recovery from the DG space into the conforming space:
/// the recovered value at a Lagrange node is the plain average of the point
/// evaluations of the polynomials of all polytopic cells sharing the node
/// (restricted to the node copy's subdomain for partitioned spaces).
/// Boundary nodes are averaged like interior ones; Dirichlet data only
/// enters weakly through the variational form.
class RecoveryOperator {
public:
    RecoveryOperator(const DgSpace& dg, const ConformingSpace& conf);

    const DgSpace& dg() const { return *dg_; }
    const ConformingSpace& conforming() const { return *conf_; }

    /// Sparse matrix mapping DG coefficients to conforming nodal values.
    const SparseMat& matrix() const { return R_; }

    VecX apply(const VecX& dg_coeffs) const;

    /// Averaging weights of one conforming dof: pairs (cell, weight) with
    /// weight = 1/|omega|; the weights of every dof sum to one.
    struct NodeTerm {
        int cell;
        double weight;
    };
    std::span<const NodeTerm> node_terms(int dof) const
    {
        return {terms_.data() + offsets_[static_cast<std::size_t>(dof)],
                offsets_[static_cast<std::size_t>(dof) + 1] - offsets_[static_cast<std::size_t>(dof)]};
    }

private:
    const DgSpace* dg_;
    const ConformingSpace* conf_;
    SparseMat R_;
    std::vector<NodeTerm> terms_;
    std::vector<std::size_t> offsets_;
};

/// Monitor for the recovery stability constant: the alpha-seminorm (alpha in
/// {0,1}) of v - E(v) summed over cells, divided by the h^(1-2*alpha)-weighted
/// squared jump norm of v over the interior skeleton. Returns nullopt when
/// the jump norm vanishes (continuous input, ratio undefined). Partitioned
/// spaces skip interface faces on both sides of the quotient.
std::optional<double> kp_ratio(const RecoveryOperator& R, const VecX& dg_coeffs, int alpha,
                               int quad_order = -1);

} // namespace rfem
