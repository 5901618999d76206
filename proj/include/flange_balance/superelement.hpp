#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <set>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "flange_balance/stiffness_system.hpp"

namespace flange {

/// Guyan static condensation of a constrained StiffnessSystem onto a master
/// DOF subset. Exact for statics: the reduced solve plus interior recovery
/// reproduces the full solve. The interior factorization is cached so the
/// optimizer's many solves pay condensation once.
class Superelement {
public:
    /// Constraints are applied first by row/column elimination, then the free
    /// DOFs are split into masters and interior slaves and the Schur
    /// complement is formed. `masters` are indices into the full dof map and
    /// must not be constrained.
    static Superelement condense(const StiffnessSystem& system, const std::vector<int>& masters) {
        if (masters.empty()) throw std::invalid_argument("condense: empty master set");
        std::set<int> mset(masters.begin(), masters.end());
        if (mset.size() != masters.size()) throw std::invalid_argument("condense: duplicate masters");
        for (int m : masters) {
            if (m < 0 || m >= system.K.rows()) throw std::invalid_argument("condense: master index out of range");
            if (system.constrained_dofs.count(m))
                throw std::invalid_argument("condense: master DOF is constrained");
        }

        Superelement se;
        se.full_size_ = static_cast<int>(system.K.rows());
        se.masters_ = masters;
        for (int i = 0; i < se.full_size_; ++i)
            if (!system.constrained_dofs.count(i) && !mset.count(i)) se.slaves_.push_back(i);

        const auto sub = [&](const std::vector<int>& rows, const std::vector<int>& cols) {
            Eigen::MatrixXd M(rows.size(), cols.size());
            for (std::size_t a = 0; a < rows.size(); ++a)
                for (std::size_t b = 0; b < cols.size(); ++b)
                    M(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
                        system.K(rows[a], cols[b]);
            return M;
        };

        const Eigen::MatrixXd Kmm = sub(se.masters_, se.masters_);
        if (se.slaves_.empty()) {
            se.K_reduced_ = 0.5 * (Kmm + Kmm.transpose());
            se.recovery_.resize(0, static_cast<Eigen::Index>(se.masters_.size()));
            se.interior_load_map_.resize(static_cast<Eigen::Index>(se.masters_.size()), 0);
        } else {
            const Eigen::MatrixXd Ksm = sub(se.slaves_, se.masters_);
            const Eigen::MatrixXd Kss = sub(se.slaves_, se.slaves_);
            se.ldlt_ss_.compute(Kss);
            const double dmax = se.ldlt_ss_.vectorD().cwiseAbs().maxCoeff();
            if (se.ldlt_ss_.info() != Eigen::Success ||
                se.ldlt_ss_.vectorD().minCoeff() <= 1e-12 * dmax) {
                // Interior mechanism: report the near-null direction.
                Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Kss);
                std::ostringstream os;
                os << "condense: singular interior block (smallest eigenvalue "
                   << es.eigenvalues()(0) << "); near-null vector:";
                for (int i = 0; i < std::min<int>(8, static_cast<int>(se.slaves_.size())); ++i)
                    os << " " << es.eigenvectors()(i, 0);
                throw std::runtime_error(os.str());
            }
            se.recovery_ = -se.ldlt_ss_.solve(Ksm);
            se.interior_load_map_ = se.recovery_.transpose();
            Eigen::MatrixXd Kred = Kmm + Ksm.transpose() * se.recovery_;
            se.K_reduced_ = 0.5 * (Kred + Kred.transpose());
        }
        se.ldlt_red_.compute(se.K_reduced_);
        return se;
    }

    const Eigen::MatrixXd& K_reduced() const { return K_reduced_; }
    const Eigen::MatrixXd& recovery_operator() const { return recovery_; }
    const Eigen::MatrixXd& interior_load_map() const { return interior_load_map_; }
    const std::vector<int>& masters() const { return masters_; }
    const std::vector<int>& slaves() const { return slaves_; }
    int full_size() const { return full_size_; }

    /// Interior solve for an imposed interior load with masters held fixed:
    /// K_ss^{-1} f_s.
    Eigen::VectorXd interior_flexibility(const Eigen::VectorXd& f_s) const {
        if (slaves_.empty()) return Eigen::VectorXd();
        return ldlt_ss_.solve(f_s);
    }

    struct Solution {
        Eigen::VectorXd u_masters;
        Eigen::VectorXd u_interior;
    };

    /// Solves K_reduced u_m = f_m + interior_load_map * f_s, then recovers the
    /// interior displacements. Thread-safe: the factorizations are read-only.
    Solution solve_reduced(const Eigen::VectorXd& f_m, const Eigen::VectorXd& f_s) const {
        if (f_m.size() != static_cast<Eigen::Index>(masters_.size()))
            throw std::invalid_argument("solve_reduced: master load dimension mismatch");
        if (f_s.size() != static_cast<Eigen::Index>(slaves_.size()))
            throw std::invalid_argument("solve_reduced: interior load dimension mismatch");
        const double dmax = ldlt_red_.vectorD().cwiseAbs().maxCoeff();
        if (ldlt_red_.info() != Eigen::Success || ldlt_red_.vectorD().minCoeff() <= 1e-13 * dmax)
            throw std::runtime_error("solve_reduced: singular reduced stiffness (insufficient constraints among masters)");
        Solution sol;
        Eigen::VectorXd rhs = f_m;
        if (!slaves_.empty()) rhs += interior_load_map_ * f_s;
        sol.u_masters = ldlt_red_.solve(rhs);
        if (!slaves_.empty())
            sol.u_interior = recovery_ * sol.u_masters + ldlt_ss_.solve(f_s);
        return sol;
    }

    /// Scatters a reduced solution into a full-length displacement vector
    /// (constrained DOFs zero).
    Eigen::VectorXd expand(const Solution& sol) const {
        Eigen::VectorXd u = Eigen::VectorXd::Zero(full_size_);
        for (std::size_t i = 0; i < masters_.size(); ++i) u(masters_[i]) = sol.u_masters(static_cast<Eigen::Index>(i));
        for (std::size_t i = 0; i < slaves_.size(); ++i) u(slaves_[i]) = sol.u_interior(static_cast<Eigen::Index>(i));
        return u;
    }

private:
    int full_size_ = 0;
    std::vector<int> masters_;
    std::vector<int> slaves_;
    Eigen::MatrixXd K_reduced_;
    Eigen::MatrixXd recovery_;
    Eigen::MatrixXd interior_load_map_;
    Eigen::LDLT<Eigen::MatrixXd> ldlt_ss_;
    Eigen::LDLT<Eigen::MatrixXd> ldlt_red_;
};

}  // namespace flange
