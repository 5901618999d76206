#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "flange_balance/joint_model.hpp"
#include "flange_balance/stiffness_system.hpp"

namespace flange {

/// Assembled curved-ring idealization of the flange: n_sectors circumferential
/// stations on the bolt circle, each carrying a gasket-interface axial
/// translation and a meridional rotation; bolt axial springs to clamped
/// bolt_top anchors; the remote load node coupled through the pipe wall at the
/// pipe attachment radius.
///
/// Station axial translations are carried by the gasket_contact DOFs: under
/// rigid cross-section kinematics the interface displacement and the ring
/// centroid displacement differ only by the rotation lever arm, so retaining
/// both would be linearly dependent.
struct RingModel {
    StiffnessSystem system;
    JointModel model;

    std::vector<double> station_angles_rad;   // length n_sectors
    std::vector<double> tributary_area_m2;    // gasket area share per station
    std::vector<int> bolt_station;            // station index of each bolt

    // DOF indices into system.dof_map
    int dof_remote_w = 0;
    int dof_remote_rx = 1;
    int dof_remote_ry = 2;
    std::vector<int> dof_bolt_top;  // per bolt (constrained)
    std::vector<int> dof_gasket;    // per station
    std::vector<int> dof_phi;       // per station

    int n_stations() const { return static_cast<int>(station_angles_rad.size()); }

    /// Lever arm from the ring centroid circle (bolt circle) to a gasket
    /// radius r: axial displacement at r is u_g + (r - r_reaction) * phi.
    double gasket_lever(double r) const {
        return r - model.geometry.gasket_reaction_radius_m;
    }

    /// Master DOFs for the optimization pipeline: remote node, every gasket
    /// interface DOF and the meridional rotations at the bolt stations (where
    /// pretension loads enter). Everything else is interior.
    std::vector<int> pipeline_masters() const {
        std::vector<int> m{dof_remote_w, dof_remote_rx, dof_remote_ry};
        m.insert(m.end(), dof_gasket.begin(), dof_gasket.end());
        for (int b : bolt_station) m.push_back(dof_phi[static_cast<std::size_t>(b)]);
        return m;
    }
};

namespace detail {

/// 4x4 Euler-Bernoulli bending stiffness over [w1, theta1, w2, theta2] with
/// theta the slope dw/dx.
inline Eigen::Matrix4d beam_bending(double EI, double L) {
    Eigen::Matrix4d k;
    const double L2 = L * L;
    k << 12, 6 * L, -12, 6 * L,
         6 * L, 4 * L2, -6 * L, 2 * L2,
         -12, -6 * L, 12, -6 * L,
         6 * L, 2 * L2, -6 * L, 4 * L2;
    return k * (EI / (L2 * L));
}

}  // namespace detail

/// Builds the ring stiffness model. Gasket springs are not included; they are
/// the nonlinear residual elements handled by the solver.
inline RingModel assemble_ring_model(const JointModel& model) {
    {
        auto v = validate(model);
        if (!v.empty()) {
            std::string msg = "assemble_ring_model: invalid model:";
            for (auto& s : v) msg += "\n  " + s;
            throw std::invalid_argument(msg);
        }
    }
    const auto& g = model.geometry;
    const int nb = g.n_bolts;
    const int ns = g.n_sectors;
    const int m_per = ns / nb;
    const double two_pi = 2.0 * std::numbers::pi;

    RingModel rm;
    rm.model = model;

    // Station grid: each inter-bolt arc subdivided uniformly, stations
    // starting exactly at the bolt angles so rigid modes are exact.
    rm.station_angles_rad.resize(static_cast<std::size_t>(ns));
    rm.bolt_station.resize(static_cast<std::size_t>(nb));
    for (int i = 0; i < nb; ++i) {
        const double a0 = g.bolt_angles_rad[static_cast<std::size_t>(i)];
        const double a1 = (i + 1 < nb) ? g.bolt_angles_rad[static_cast<std::size_t>(i + 1)]
                                       : g.bolt_angles_rad[0] + two_pi;
        const double gap = a1 - a0;
        rm.bolt_station[static_cast<std::size_t>(i)] = i * m_per;
        for (int k = 0; k < m_per; ++k) {
            double a = a0 + gap * k / m_per;
            if (a >= two_pi) a -= two_pi;
            rm.station_angles_rad[static_cast<std::size_t>(i * m_per + k)] = a;
        }
    }

    // Tributary gasket area proportional to the station arc.
    rm.tributary_area_m2.resize(static_cast<std::size_t>(ns));
    const double area = model.gasket_area_m2();
    for (int j = 0; j < ns; ++j) {
        const double prev = rm.station_angles_rad[static_cast<std::size_t>((j + ns - 1) % ns)];
        const double next = rm.station_angles_rad[static_cast<std::size_t>((j + 1) % ns)];
        double span = next - prev;
        while (span <= 0.0) span += two_pi;
        rm.tributary_area_m2[static_cast<std::size_t>(j)] = area * 0.5 * span / two_pi;
    }

    // DOF layout: remote(3), bolt_top(nb), per station (u_g, phi); the
    // bending-slope DOFs are internal and condensed below.
    std::vector<DofEntry> entries;
    entries.push_back({NodeKind::remote_load, 0, DofKind::axial_translation});
    entries.push_back({NodeKind::remote_load, 0, DofKind::rotation_x});
    entries.push_back({NodeKind::remote_load, 0, DofKind::rotation_y});
    rm.dof_bolt_top.resize(static_cast<std::size_t>(nb));
    for (int i = 0; i < nb; ++i) {
        rm.dof_bolt_top[static_cast<std::size_t>(i)] = static_cast<int>(entries.size());
        entries.push_back({NodeKind::bolt_top, i, DofKind::axial_translation});
    }
    rm.dof_gasket.resize(static_cast<std::size_t>(ns));
    rm.dof_phi.resize(static_cast<std::size_t>(ns));
    for (int j = 0; j < ns; ++j) {
        rm.dof_gasket[static_cast<std::size_t>(j)] = static_cast<int>(entries.size());
        entries.push_back({NodeKind::gasket_contact, j, DofKind::axial_translation});
        rm.dof_phi[static_cast<std::size_t>(j)] = static_cast<int>(entries.size());
        entries.push_back({NodeKind::ring_station, j, DofKind::meridional_rotation});
    }
    const int n_pub = static_cast<int>(entries.size());
    const int n_int = n_pub + ns;  // trailing block: slope DOF psi per station

    const double R = g.bolt_circle_radius_m;
    const double rg = g.gasket_reaction_radius_m;
    const double rp = g.pipe_attachment_radius_m;
    const double Lg = R - rg;  // rotation lever arm to the gasket reaction circle

    const double b = g.flange_ring_section.radial_width_m;
    const double t = g.flange_ring_section.axial_thickness_m;
    if (b <= 0.0) throw std::invalid_argument("assemble_ring_model: flange_ring_section.radial_width is zero");
    if (t <= 0.0) throw std::invalid_argument("assemble_ring_model: flange_ring_section.axial_thickness is zero");
    const double E = model.flange.youngs_modulus_Pa;
    const double G = E / (2.0 * (1.0 + model.flange.poisson_ratio));
    const double EI = E * b * t * t * t / 12.0;  // out-of-plane bending
    const double GJ = G * b * t * t * t / 3.0;   // thin-strip torsion

    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n_int, n_int);
    auto psi_dof = [&](int j) { return n_pub + j; };

    // Ring arc elements: straight chords with bending + torsion, internal
    // station rotations expressed as (phi about the tangent, psi about the
    // radial direction).
    for (int j = 0; j < ns; ++j) {
        const int j2 = (j + 1) % ns;
        const double a1 = rm.station_angles_rad[static_cast<std::size_t>(j)];
        const double a2 = rm.station_angles_rad[static_cast<std::size_t>(j2)];
        const Eigen::Vector2d p1(R * std::cos(a1), R * std::sin(a1));
        const Eigen::Vector2d p2(R * std::cos(a2), R * std::sin(a2));
        const Eigen::Vector2d d = p2 - p1;
        const double L = d.norm();
        const Eigen::Vector2d dh = d / L;
        const Eigen::Vector2d bh(dh.y(), -dh.x());  // d x z

        Eigen::Matrix<double, 6, 6> kloc = Eigen::Matrix<double, 6, 6>::Zero();
        kloc.topLeftCorner<4, 4>() = detail::beam_bending(EI, L);
        kloc(4, 4) = kloc(5, 5) = GJ / L;
        kloc(4, 5) = kloc(5, 4) = -GJ / L;

        // Local [w1, tb1, w2, tb2, tt1, tt2] from [u_g1, phi1, psi1, u_g2, phi2, psi2].
        Eigen::Matrix<double, 6, 6> T = Eigen::Matrix<double, 6, 6>::Zero();
        for (int node = 0; node < 2; ++node) {
            const double a = node == 0 ? a1 : a2;
            const Eigen::Vector2d er(std::cos(a), std::sin(a));
            const Eigen::Vector2d et(-std::sin(a), std::cos(a));
            const int c = 3 * node;  // local column block
            const int rw = node == 0 ? 0 : 2;
            const int rb = node == 0 ? 1 : 3;
            const int rt = node == 0 ? 4 : 5;
            T(rw, c + 0) = 1.0;       // w = u_g + Lg*phi
            T(rw, c + 1) = Lg;
            T(rb, c + 1) = -et.dot(bh);  // theta_b = psi er.b - phi et.b
            T(rb, c + 2) = er.dot(bh);
            T(rt, c + 1) = -et.dot(dh);  // theta_t = psi er.d - phi et.d
            T(rt, c + 2) = er.dot(dh);
        }
        const Eigen::Matrix<double, 6, 6> ke = T.transpose() * kloc * T;

        const int idx[6] = {rm.dof_gasket[static_cast<std::size_t>(j)],
                            rm.dof_phi[static_cast<std::size_t>(j)], psi_dof(j),
                            rm.dof_gasket[static_cast<std::size_t>(j2)],
                            rm.dof_phi[static_cast<std::size_t>(j2)], psi_dof(j2)};
        for (int a = 0; a < 6; ++a)
            for (int bcol = 0; bcol < 6; ++bcol) K(idx[a], idx[bcol]) += ke(a, bcol);
    }

    // Bolt axial springs: bolt_top anchor to the ring at the bolt circle.
    const double kb = model.bolt.stiffness_N_per_m;
    for (int i = 0; i < nb; ++i) {
        const int s = rm.bolt_station[static_cast<std::size_t>(i)];
        const int idx[3] = {rm.dof_bolt_top[static_cast<std::size_t>(i)],
                            rm.dof_gasket[static_cast<std::size_t>(s)],
                            rm.dof_phi[static_cast<std::size_t>(s)]};
        const double v[3] = {1.0, -1.0, -Lg};  // stretch = u_b - w(bolt circle)
        for (int a = 0; a < 3; ++a)
            for (int c = 0; c < 3; ++c) K(idx[a], idx[c]) += kb * v[a] * v[c];
    }

    // Pipe wall: per-station axial springs between the ring at the pipe
    // attachment radius and the remote node's rigid-body field.
    const double kp = model.pipe_axial_stiffness_N_per_m / ns;
    for (int j = 0; j < ns; ++j) {
        const double a = rm.station_angles_rad[static_cast<std::size_t>(j)];
        const int idx[5] = {rm.dof_gasket[static_cast<std::size_t>(j)],
                            rm.dof_phi[static_cast<std::size_t>(j)], 0, 1, 2};
        const double v[5] = {1.0, rp - rg, -1.0, -rp * std::sin(a), rp * std::cos(a)};
        for (int aa = 0; aa < 5; ++aa)
            for (int c = 0; c < 5; ++c) K(idx[aa], idx[c]) += kp * v[aa] * v[c];
    }

    // Far-end pipe anchorage: rotational ground springs at the remote node.
    if (model.remote_rotation_stiffness_Nm_per_rad > 0.0) {
        K(1, 1) += model.remote_rotation_stiffness_Nm_per_rad;
        K(2, 2) += model.remote_rotation_stiffness_Nm_per_rad;
    }

    // Condense the slope DOFs (exact for statics; no loads are ever applied
    // to them).
    Eigen::MatrixXd Kkk = K.topLeftCorner(n_pub, n_pub);
    Eigen::MatrixXd Kks = K.topRightCorner(n_pub, ns);
    Eigen::MatrixXd Kss = K.bottomRightCorner(ns, ns);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(Kss);
    if (ldlt.info() != Eigen::Success ||
        ldlt.vectorD().minCoeff() <= 1e-14 * ldlt.vectorD().maxCoeff())
        throw std::runtime_error("assemble_ring_model: singular slope block");
    Eigen::MatrixXd Kpub = Kkk - Kks * ldlt.solve(Kks.transpose());
    Kpub = 0.5 * (Kpub + Kpub.transpose());

    rm.system.K = std::move(Kpub);
    rm.system.dof_map = DofMap(std::move(entries));
    for (int i : rm.dof_bolt_top) rm.system.constrained_dofs.insert(i);
    return rm;
}

}  // namespace flange
