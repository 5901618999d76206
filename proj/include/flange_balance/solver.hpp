#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "flange_balance/ring_model.hpp"
#include "flange_balance/superelement.hpp"

namespace flange {

struct SolverOptions {
    int max_newton = 50;
    double tolerance = 1e-10;  // scaled equilibrium residual
};

struct ExternalLoads {
    double axial_load_N = 0.0;
    double bending_moment_Nm = 0.0;
    double moment_plane_angle_rad = 0.0;
};

/// Condensed joint: ring model + superelement over the pipeline master set,
/// with the bookkeeping the nonlinear solver needs. Immutable after
/// construction; independent solves may share one instance.
struct CondensedJoint {
    RingModel ring;
    Superelement se;

    // Positions within the master displacement vector.
    int m_remote_w = 0, m_remote_rx = 1, m_remote_ry = 2;
    std::vector<int> m_gasket;    // per station
    std::vector<int> m_phi_bolt;  // per bolt

    Eigen::MatrixXd B;     // bolt direction columns in master coordinates
    Eigen::MatrixXd K_nb;  // K_reduced with the bolt springs removed

    // Tangent floor for lifted-off stations: keeps the Newton matrix
    // factorizable while the active set settles without altering converged
    // states (the residual always uses the exact compression-only law).
    double contact_stabilization = 0.0;

    int n_masters() const { return static_cast<int>(se.masters().size()); }
};

inline CondensedJoint build_condensed_joint(const JointModel& model) {
    CondensedJoint cj;
    cj.ring = assemble_ring_model(model);
    const auto masters = cj.ring.pipeline_masters();
    cj.se = Superelement::condense(cj.ring.system, masters);

    const int ns = cj.ring.n_stations();
    const int nb = model.geometry.n_bolts;
    cj.m_gasket.resize(static_cast<std::size_t>(ns));
    for (int j = 0; j < ns; ++j) cj.m_gasket[static_cast<std::size_t>(j)] = 3 + j;
    cj.m_phi_bolt.resize(static_cast<std::size_t>(nb));
    for (int i = 0; i < nb; ++i) cj.m_phi_bolt[static_cast<std::size_t>(i)] = 3 + ns + i;

    const double Lg = model.geometry.bolt_circle_radius_m - model.geometry.gasket_reaction_radius_m;
    cj.B = Eigen::MatrixXd::Zero(cj.n_masters(), nb);
    for (int i = 0; i < nb; ++i) {
        const int s = cj.ring.bolt_station[static_cast<std::size_t>(i)];
        cj.B(cj.m_gasket[static_cast<std::size_t>(s)], i) = 1.0;
        cj.B(cj.m_phi_bolt[static_cast<std::size_t>(i)], i) = Lg;
    }
    cj.K_nb = cj.se.K_reduced() -
              model.bolt.stiffness_N_per_m * cj.B * cj.B.transpose();

    double slope_max = 0.0;
    const auto& pts = model.gasket.points();
    for (std::size_t k = 1; k < pts.size(); ++k)
        slope_max = std::max(slope_max, (pts[k].stress_Pa - pts[k - 1].stress_Pa) /
                                            (pts[k].closure_m - pts[k - 1].closure_m));
    double area_max = 0.0;
    for (double a : cj.ring.tributary_area_m2) area_max = std::max(area_max, a);
    cj.contact_stabilization = 1e-8 * slope_max * area_max;
    return cj;
}

/// Converged two-load-step analysis state.
struct AnalysisState {
    Eigen::VectorXd x;                    // master displacements
    std::vector<double> lock_lengths_m;   // frozen pretension adjustments
    std::vector<double> bolt_forces_N;
    std::vector<double> closures_m;       // per station, at the reaction radius
    std::vector<double> phi_rad;          // per station (interior DOFs recovered)
    GasketStressField field;
    int newton_iterations = 0;
    std::vector<double> residual_history;
};

namespace detail {

inline double wrap_pi(double a) {
    const double two_pi = 2.0 * std::numbers::pi;
    while (a > std::numbers::pi) a -= two_pi;
    while (a <= -std::numbers::pi) a += two_pi;
    return a;
}

/// Gasket internal force at the master DOFs and the tangent diagonal.
inline void gasket_forces(const CondensedJoint& cj, const Eigen::VectorXd& x,
                          Eigen::VectorXd& f, Eigen::VectorXd& tangent_diag) {
    const auto& curve = cj.ring.model.gasket;
    f.setZero(cj.n_masters());
    tangent_diag.setZero(cj.n_masters());
    for (int j = 0; j < cj.ring.n_stations(); ++j) {
        const int p = cj.m_gasket[static_cast<std::size_t>(j)];
        const double A = cj.ring.tributary_area_m2[static_cast<std::size_t>(j)];
        const double c = -x(p);
        f(p) -= A * curve.stress(c);
        tangent_diag(p) = A * curve.tangent(c);
    }
}

/// Gasket tangent diagonal with the lift-off stabilization floor applied.
inline Eigen::VectorXd stabilized_tangent_diag(const CondensedJoint& cj,
                                               const Eigen::VectorXd& tangent_diag) {
    Eigen::VectorXd td = tangent_diag;
    for (int p : cj.m_gasket)
        if (td(p) < cj.contact_stabilization) td(p) = cj.contact_stabilization;
    return td;
}

struct NewtonResult {
    Eigen::VectorXd x;
    int iterations = 0;
    std::vector<double> residual_history;
};

/// Newton with per-iteration contact status (active-set style). Full steps
/// are tried first; if the residual norm would grow, the step is backtracked
/// by halving. Lifted-off stations get the tangent floor from
/// CondensedJoint::contact_stabilization so the matrix stays factorizable
/// while the contact pattern settles.
template <typename Residual, typename Tangent>
NewtonResult newton_solve(const CondensedJoint& cj, Eigen::VectorXd x0, double scale,
                          const SolverOptions& opt, Residual residual, Tangent tangent,
                          bool pretension_step, double total_preload) {
    NewtonResult out;
    Eigen::VectorXd x = std::move(x0);
    Eigen::VectorXd r = residual(x);
    double rn = r.norm() / scale;
    for (int it = 0; it < opt.max_newton; ++it) {
        out.residual_history.push_back(rn);
        if (rn <= opt.tolerance) {
            out.x = std::move(x);
            out.iterations = it;
            return out;
        }

        const Eigen::MatrixXd J = tangent(x);
        Eigen::LDLT<Eigen::MatrixXd> ldlt(J);
        const double dmax = ldlt.vectorD().cwiseAbs().maxCoeff();
        if (ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() <= 1e-15 * dmax) {
            bool any_contact = false;
            for (int j = 0; j < cj.ring.n_stations(); ++j)
                if (-x(cj.m_gasket[static_cast<std::size_t>(j)]) > 0.0) any_contact = true;
            if (pretension_step && !any_contact && total_preload > 0.0)
                throw std::runtime_error(
                    "apply_pretension: total gasket lift-off at positive preload (model inconsistency)");
            throw std::runtime_error("solver: singular tangent stiffness");
        }
        const Eigen::VectorXd dx = ldlt.solve(r);

        double alpha = 1.0;
        Eigen::VectorXd x_new = x - dx;
        Eigen::VectorXd r_new = residual(x_new);
        double rn_new = r_new.norm() / scale;
        for (int bt = 0; bt < 12 && rn_new > rn && rn_new > opt.tolerance; ++bt) {
            alpha *= 0.5;
            x_new = x - alpha * dx;
            r_new = residual(x_new);
            rn_new = r_new.norm() / scale;
        }
        x = std::move(x_new);
        r = std::move(r_new);
        rn = rn_new;
    }
    std::ostringstream os;
    os << "solver: Newton did not converge in " << opt.max_newton << " iterations; residuals:";
    for (double v : out.residual_history) os << " " << v;
    throw std::runtime_error(os.str());
}

inline double residual_scale(const CondensedJoint& cj, double total_preload,
                             const ExternalLoads& loads) {
    double s = std::max(std::abs(total_preload), std::abs(loads.axial_load_N));
    s = std::max(s, std::abs(loads.bending_moment_Nm) /
                        std::max(cj.ring.model.geometry.bolt_circle_radius_m, 1e-9));
    return std::max(s, 1.0);
}

inline Eigen::VectorXd external_force(const CondensedJoint& cj, const ExternalLoads& loads) {
    Eigen::VectorXd f = Eigen::VectorXd::Zero(cj.n_masters());
    f(cj.m_remote_w) = loads.axial_load_N;
    f(cj.m_remote_rx) = loads.bending_moment_Nm * std::sin(loads.moment_plane_angle_rad);
    f(cj.m_remote_ry) = -loads.bending_moment_Nm * std::cos(loads.moment_plane_angle_rad);
    return f;
}

}  // namespace detail

/// Per-station closures, external-radius stress field and per-bolt sector
/// aggregates for a master displacement vector.
inline void evaluate_field(const CondensedJoint& cj, AnalysisState& st) {
    const auto& ring = cj.ring;
    const auto& model = ring.model;
    const int ns = ring.n_stations();
    const int nb = model.geometry.n_bolts;

    // Recover interior meridional rotations (interior loads are always zero
    // for the pipeline master set).
    Eigen::VectorXd full = Eigen::VectorXd::Zero(cj.se.full_size());
    const auto& masters = cj.se.masters();
    for (std::size_t i = 0; i < masters.size(); ++i) full(masters[i]) = st.x(static_cast<Eigen::Index>(i));
    if (!cj.se.slaves().empty()) {
        const Eigen::VectorXd u_s = cj.se.recovery_operator() * st.x;
        const auto& slaves = cj.se.slaves();
        for (std::size_t i = 0; i < slaves.size(); ++i) full(slaves[i]) = u_s(static_cast<Eigen::Index>(i));
    }

    st.closures_m.resize(static_cast<std::size_t>(ns));
    st.phi_rad.resize(static_cast<std::size_t>(ns));
    for (int j = 0; j < ns; ++j) {
        st.closures_m[static_cast<std::size_t>(j)] = -full(ring.dof_gasket[static_cast<std::size_t>(j)]);
        st.phi_rad[static_cast<std::size_t>(j)] = full(ring.dof_phi[static_cast<std::size_t>(j)]);
    }

    auto& f = st.field;
    f.sector_angles_rad = ring.station_angles_rad;
    f.stress_per_sector_Pa.assign(static_cast<std::size_t>(ns), 0.0);
    f.contact_flags.assign(static_cast<std::size_t>(ns), false);
    f.any_extrapolated = false;
    const double lever_out = model.geometry.gasket_outer_radius_m - model.geometry.gasket_reaction_radius_m;
    std::vector<double> c_out(static_cast<std::size_t>(ns));
    for (int j = 0; j < ns; ++j) {
        const double c = st.closures_m[static_cast<std::size_t>(j)] -
                         lever_out * st.phi_rad[static_cast<std::size_t>(j)];
        c_out[static_cast<std::size_t>(j)] = c;
        const auto info = model.gasket.stress_info(c);
        f.stress_per_sector_Pa[static_cast<std::size_t>(j)] = info.stress_Pa;
        f.contact_flags[static_cast<std::size_t>(j)] = c > 0.0;
        if (info.extrapolated) f.any_extrapolated = true;
    }

    // Area-weighted sector means centered on each bolt; stations exactly at a
    // sector boundary are shared with half weight.
    f.stress_at_external_radius_Pa.assign(static_cast<std::size_t>(nb), 0.0);
    const double two_pi = 2.0 * std::numbers::pi;
    for (int i = 0; i < nb; ++i) {
        const double th = model.geometry.bolt_angles_rad[static_cast<std::size_t>(i)];
        const double th_prev = model.geometry.bolt_angles_rad[static_cast<std::size_t>((i + nb - 1) % nb)];
        const double th_next = model.geometry.bolt_angles_rad[static_cast<std::size_t>((i + 1) % nb)];
        double hp = detail::wrap_pi(th - th_prev);
        double hn = detail::wrap_pi(th_next - th);
        if (hp <= 0.0) hp += two_pi;
        if (hn <= 0.0) hn += two_pi;
        hp *= 0.5;
        hn *= 0.5;
        if (nb == 1) hp = hn = std::numbers::pi;  // whole circumference
        double wsum = 0.0, ssum = 0.0;
        for (int j = 0; j < ns; ++j) {
            const double d = detail::wrap_pi(ring.station_angles_rad[static_cast<std::size_t>(j)] - th);
            double w = 0.0;
            const double tol = 1e-9;
            if (d > -hp + tol && d < hn - tol) w = 1.0;
            else if (std::abs(d + hp) <= tol || std::abs(d - hn) <= tol) w = 0.5;
            if (w > 0.0) {
                w *= ring.tributary_area_m2[static_cast<std::size_t>(j)];
                wsum += w;
                ssum += w * f.stress_per_sector_Pa[static_cast<std::size_t>(j)];
            }
        }
        f.stress_at_external_radius_Pa[static_cast<std::size_t>(i)] = ssum / wsum;
    }
}

/// Load step 1: finds the lock lengths realizing the commanded per-bolt
/// preloads with the gasket springs engaged, then freezes them.
inline AnalysisState apply_pretension(const CondensedJoint& cj, const std::vector<double>& preloads_N,
                                      const SolverOptions& opt = {}) {
    const int nb = cj.ring.model.geometry.n_bolts;
    if (static_cast<int>(preloads_N.size()) != nb)
        throw std::invalid_argument("apply_pretension: preload count mismatch");
    double total = 0.0;
    for (double p : preloads_N) {
        if (p < 0.0) throw std::invalid_argument("apply_pretension: preloads must be >= 0");
        total += p;
    }
    Eigen::VectorXd P(nb);
    for (int i = 0; i < nb; ++i) P(i) = preloads_N[static_cast<std::size_t>(i)];

    const double scale = detail::residual_scale(cj, total, {});
    auto residual = [&](const Eigen::VectorXd& x) {
        Eigen::VectorXd g, td;
        detail::gasket_forces(cj, x, g, td);
        return Eigen::VectorXd(cj.K_nb * x + g + cj.B * P);
    };
    auto tangent = [&](const Eigen::VectorXd& x) {
        Eigen::VectorXd g, td;
        detail::gasket_forces(cj, x, g, td);
        Eigen::MatrixXd J = cj.K_nb;
        J.diagonal() += detail::stabilized_tangent_diag(cj, td);
        return J;
    };
    auto nr = detail::newton_solve(cj, Eigen::VectorXd::Zero(cj.n_masters()), scale, opt,
                                   residual, tangent, true, total);

    AnalysisState st;
    st.x = std::move(nr.x);
    st.newton_iterations = nr.iterations;
    st.residual_history = std::move(nr.residual_history);
    const double kb = cj.ring.model.bolt.stiffness_N_per_m;
    st.lock_lengths_m.resize(static_cast<std::size_t>(nb));
    st.bolt_forces_N.resize(static_cast<std::size_t>(nb));
    const Eigen::VectorXd uB = cj.B.transpose() * st.x;
    for (int i = 0; i < nb; ++i) {
        st.lock_lengths_m[static_cast<std::size_t>(i)] = P(i) / kb - uB(i);
        st.bolt_forces_N[static_cast<std::size_t>(i)] = P(i);
    }
    evaluate_field(cj, st);
    return st;
}

/// Load step 2: external axial force and bending moment at the remote node
/// with the lock lengths frozen; stations may lose contact.
inline AnalysisState apply_external(const CondensedJoint& cj, const AnalysisState& pretension,
                                    const ExternalLoads& loads, const SolverOptions& opt = {}) {
    const int nb = cj.ring.model.geometry.n_bolts;
    const double kb = cj.ring.model.bolt.stiffness_N_per_m;
    Eigen::VectorXd lam(nb);
    double total = 0.0;
    for (int i = 0; i < nb; ++i) {
        lam(i) = pretension.lock_lengths_m[static_cast<std::size_t>(i)];
        total += pretension.bolt_forces_N[static_cast<std::size_t>(i)];
    }
    const Eigen::VectorXd f_ext = detail::external_force(cj, loads);
    const Eigen::VectorXd f_pre = cj.B * (kb * lam);
    const double scale = detail::residual_scale(cj, total, loads);

    auto residual = [&](const Eigen::VectorXd& x) {
        Eigen::VectorXd g, td;
        detail::gasket_forces(cj, x, g, td);
        return Eigen::VectorXd(cj.se.K_reduced() * x + g + f_pre - f_ext);
    };
    auto tangent = [&](const Eigen::VectorXd& x) {
        Eigen::VectorXd g, td;
        detail::gasket_forces(cj, x, g, td);
        Eigen::MatrixXd J = cj.se.K_reduced();
        J.diagonal() += detail::stabilized_tangent_diag(cj, td);
        return J;
    };
    auto nr = detail::newton_solve(cj, pretension.x, scale, opt, residual, tangent, false, total);

    AnalysisState st;
    st.x = std::move(nr.x);
    st.newton_iterations = nr.iterations;
    st.residual_history = std::move(nr.residual_history);
    st.lock_lengths_m = pretension.lock_lengths_m;
    st.bolt_forces_N.resize(static_cast<std::size_t>(nb));
    const Eigen::VectorXd uB = cj.B.transpose() * st.x;
    for (int i = 0; i < nb; ++i)
        st.bolt_forces_N[static_cast<std::size_t>(i)] = kb * (lam(i) + uB(i));
    evaluate_field(cj, st);
    return st;
}

/// Scaled equilibrium residual of a state under the given external loads.
inline double equilibrium_residual(const CondensedJoint& cj, const AnalysisState& st,
                                   const ExternalLoads& loads = {}) {
    const int nb = cj.ring.model.geometry.n_bolts;
    const double kb = cj.ring.model.bolt.stiffness_N_per_m;
    Eigen::VectorXd lam(nb);
    for (int i = 0; i < nb; ++i) lam(i) = st.lock_lengths_m[static_cast<std::size_t>(i)];
    Eigen::VectorXd g, td;
    detail::gasket_forces(cj, st.x, g, td);
    const Eigen::VectorXd r =
        cj.se.K_reduced() * st.x + g + cj.B * (kb * lam) - detail::external_force(cj, loads);
    double total = 0.0;
    for (double f : st.bolt_forces_N) total += std::abs(f);
    return r.norm() / detail::residual_scale(cj, total, loads);
}

/// Full two-step analysis.
inline AnalysisState solve_joint(const CondensedJoint& cj, const std::vector<double>& preloads_N,
                                 const ExternalLoads& loads, const SolverOptions& opt = {}) {
    auto pre = apply_pretension(cj, preloads_N, opt);
    if (loads.axial_load_N == 0.0 && loads.bending_moment_Nm == 0.0) return pre;
    return apply_external(cj, pre, loads, opt);
}

}  // namespace flange
