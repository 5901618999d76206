#pragma once

#include <Eigen/Dense>

#include <set>
#include <string>
#include <vector>

#include "flange_balance/dof_map.hpp"

namespace flange {

/// Symmetric stiffness matrix over a DofMap plus the set of constrained
/// (clamped) DOFs.
struct StiffnessSystem {
    Eigen::MatrixXd K;
    DofMap dof_map;
    std::set<int> constrained_dofs;

    /// Returns the list of violated StiffnessSystem invariants. Symmetry is
    /// checked to 1e-12 relative, positive semidefiniteness to -1e-9*|K| and,
    /// when constraints are present, positive definiteness of the constrained
    /// block.
    std::vector<std::string> check_invariants(double asym_tol = 1e-12, double eig_tol = 1e-9) const {
        std::vector<std::string> v;
        if (K.rows() != K.cols()) {
            v.push_back("K: not square");
            return v;
        }
        if (static_cast<std::size_t>(K.rows()) != dof_map.size())
            v.push_back("K: dimension does not match dof map length");
        const double scale = K.norm();
        if (scale > 0.0 && (K - K.transpose()).norm() > asym_tol * scale)
            v.push_back("K: asymmetric beyond tolerance");
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (K + K.transpose()),
                                                          Eigen::EigenvaluesOnly);
        const double emax = es.eigenvalues().cwiseAbs().maxCoeff();
        if (es.eigenvalues().minCoeff() < -eig_tol * emax)
            v.push_back("K: not positive semidefinite");
        if (!constrained_dofs.empty()) {
            Eigen::MatrixXd Kc = constrained_submatrix();
            if (Kc.rows() > 0) {
                Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> esc(Kc, Eigen::EigenvaluesOnly);
                const double cmax = esc.eigenvalues().cwiseAbs().maxCoeff();
                if (esc.eigenvalues().minCoeff() <= eig_tol * cmax * 1e-3)
                    v.push_back("K: not positive definite after applying constraints");
            }
        }
        return v;
    }

    /// Free DOF indices (those not constrained), in dof-map order.
    std::vector<int> free_dofs() const {
        std::vector<int> f;
        for (int i = 0; i < K.rows(); ++i)
            if (!constrained_dofs.count(i)) f.push_back(i);
        return f;
    }

    /// K restricted to the free DOFs (row/column elimination of constraints).
    Eigen::MatrixXd constrained_submatrix() const {
        const auto f = free_dofs();
        Eigen::MatrixXd Kc(f.size(), f.size());
        for (std::size_t a = 0; a < f.size(); ++a)
            for (std::size_t b = 0; b < f.size(); ++b)
                Kc(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = K(f[a], f[b]);
        return Kc;
    }
};

}  // namespace flange
