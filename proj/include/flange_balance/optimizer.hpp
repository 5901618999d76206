#pragma once

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "flange_balance/solver.hpp"

namespace flange {

struct OptimizerConfig {
    double tolerance = 0.03;              // relative, on the external-radius stress
    int max_iterations = 50;              // secant iterations
    double initial_overload_factor = 1.5; // bootstrap analysis A
    RigidityFactor rigidity_factor;       // F_m
    SolverOptions solver;
};

/// Per-bolt preload compensation for the external loads:
/// dP_i = F_A/n + 2*F_m*M*cos(theta_i - plane_angle)/(n*R).
inline std::vector<double> eq1_compensation(const JointModel& model, double axial_load_N,
                                            double bending_moment_Nm, double rigidity_factor,
                                            double plane_angle_rad = 0.0) {
    const auto& g = model.geometry;
    const int n = g.n_bolts;
    std::vector<double> dp(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double th = g.bolt_angles_rad[static_cast<std::size_t>(i)];
        dp[static_cast<std::size_t>(i)] =
            axial_load_N / n + 2.0 * rigidity_factor * bending_moment_Nm *
                                   std::cos(th - plane_angle_rad) / (n * g.bolt_circle_radius_m);
    }
    return dp;
}

/// Ideal-assembly target stress: uniform preload, no external loads. The
/// external-radius stress must be uniform by symmetry; returns its mean.
inline double compute_target(const CondensedJoint& cj, double uniform_preload_N,
                             const SolverOptions& opt = {}, AnalysisState* state_out = nullptr) {
    if (!(uniform_preload_N > 0.0))
        throw std::invalid_argument("compute_target: uniform preload must be > 0");
    const int nb = cj.ring.model.geometry.n_bolts;
    std::vector<double> preloads(static_cast<std::size_t>(nb), uniform_preload_N);
    AnalysisState st = apply_pretension(cj, preloads, opt);

    const auto& gs = st.field.stress_at_external_radius_Pa;
    double mean = 0.0;
    for (double s : gs) mean += s;
    mean /= static_cast<double>(gs.size());
    double var = 0.0;
    for (double s : gs) var += (s - mean) * (s - mean);
    const double cov = mean > 0.0 ? std::sqrt(var / static_cast<double>(gs.size())) / mean : 1.0;
    if (cov > 1e-6) {
        std::ostringstream os;
        os << "compute_target: ideal-case stress not uniform (coefficient of variation " << cov << ")";
        throw std::runtime_error(os.str());
    }
    if (state_out) *state_out = std::move(st);
    return mean;
}

/// One per-bolt secant step toward the target stress. Degenerate denominators
/// fall back to a 5% nudge toward the target side; negative results clamp to
/// zero. Events are appended to `events`.
inline std::vector<double> secant_update(const std::vector<double>& P_prev2,
                                         const std::vector<double>& P_prev1,
                                         const std::vector<double>& GS_prev2,
                                         const std::vector<double>& GS_prev1, double GS_target,
                                         std::vector<std::string>* events = nullptr) {
    const std::size_t n = P_prev1.size();
    if (P_prev2.size() != n || GS_prev1.size() != n || GS_prev2.size() != n)
        throw std::invalid_argument("secant_update: inconsistent group sizes");
    std::vector<double> next(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double dgs = GS_prev1[i] - GS_prev2[i];
        double p;
        if (std::abs(dgs) < 1e-6 * GS_target) {
            const double sign = GS_target > GS_prev1[i] ? 1.0 : (GS_target < GS_prev1[i] ? -1.0 : 0.0);
            p = P_prev1[i] * (1.0 + 0.05 * sign);
            if (events)
                events->push_back("bolt " + std::to_string(i + 1) +
                                  ": degenerate secant denominator, 5% fallback step");
        } else {
            p = P_prev1[i] - (P_prev1[i] - P_prev2[i]) / dgs * (GS_prev1[i] - GS_target);
        }
        if (p < 0.0) {
            p = 0.0;
            if (events)
                events->push_back("bolt " + std::to_string(i + 1) + ": negative preload clamped to zero");
        }
        next[i] = p;
    }
    return next;
}

namespace detail {

inline double max_relative_error(const std::vector<double>& gs, double target) {
    double e = 0.0;
    for (double s : gs) e = std::max(e, std::abs(s - target) / target);
    return e;
}

}  // namespace detail

/// The full iterative pipeline: ideal-case target, overload and compensation
/// bootstrap analyses, then per-bolt secant iterations until the
/// external-radius stress is within tolerance of the target everywhere.
inline OptimizationResult optimize(const CondensedJoint& cj, const LoadCase& loadcase,
                                   const OptimizerConfig& config = {}) {
    const auto& model = cj.ring.model;
    const int nb = model.geometry.n_bolts;
    {
        auto v = validate(model, loadcase);
        if (!v.empty()) {
            std::string msg = "optimize: invalid inputs:";
            for (auto& s : v) msg += "\n  " + s;
            throw std::invalid_argument(msg);
        }
    }
    if (!(config.tolerance > 0.0 && config.tolerance < 1.0))
        throw std::invalid_argument("optimize: tolerance must lie in (0, 1)");
    if (!(config.initial_overload_factor > 1.0))
        throw std::invalid_argument("optimize: initial_overload_factor must exceed 1");

    std::vector<double> P0(static_cast<std::size_t>(nb));
    for (int i = 0; i < nb; ++i)
        P0[static_cast<std::size_t>(i)] = model.preload_force_from_io(loadcase.preloads[static_cast<std::size_t>(i)]);
    for (double p : P0)
        if (std::abs(p - P0[0]) > 1e-9 * std::max(P0[0], 1.0))
            throw std::invalid_argument("optimize: nominal bolt-up preloads must be uniform");

    const ExternalLoads loads{loadcase.axial_load_N, loadcase.bending_moment_Nm,
                              loadcase.moment_plane_angle_rad};
    OptimizationResult result;

    auto record = [&](const std::string& label, const std::vector<double>& P,
                      const AnalysisState& st) -> double {
        const double err = detail::max_relative_error(st.field.stress_at_external_radius_Pa,
                                                      result.target_stress_Pa);
        result.history.push_back({label, P, st.field, err});
        return err;
    };

    // Step 1: ideal assembly defines the target.
    AnalysisState ideal;
    result.target_stress_Pa = compute_target(cj, P0[0], config.solver, &ideal);
    record("ideal", P0, ideal);

    // Bootstrap A: overloaded preloads under the external loads.
    std::vector<double> P_A(static_cast<std::size_t>(nb));
    for (int i = 0; i < nb; ++i)
        P_A[static_cast<std::size_t>(i)] = P0[static_cast<std::size_t>(i)] * config.initial_overload_factor;
    AnalysisState st_A = solve_joint(cj, P_A, loads, config.solver);
    record("bootstrap_overload", P_A, st_A);

    // Bootstrap B: Eq.-based compensation of the external loads.
    const auto dP = eq1_compensation(model, loadcase.axial_load_N, loadcase.bending_moment_Nm,
                                     config.rigidity_factor.value, loadcase.moment_plane_angle_rad);
    std::vector<double> P_B(static_cast<std::size_t>(nb));
    for (int i = 0; i < nb; ++i) {
        double p = P0[static_cast<std::size_t>(i)] + dP[static_cast<std::size_t>(i)];
        if (p < 0.0) {
            p = 0.0;
            result.events.push_back("bolt " + std::to_string(i + 1) +
                                    ": compensated bootstrap preload clamped to zero");
        }
        P_B[static_cast<std::size_t>(i)] = p;
    }
    AnalysisState st_B = solve_joint(cj, P_B, loads, config.solver);
    double err = record("bootstrap_eq1", P_B, st_B);

    std::vector<double> P_prev2 = P_A, P_prev1 = P_B;
    std::vector<double> GS_prev2 = st_A.field.stress_at_external_radius_Pa;
    std::vector<double> GS_prev1 = st_B.field.stress_at_external_radius_Pa;

    result.converged = err <= config.tolerance;
    std::vector<double> P_final = P_B;
    for (int j = 1; j <= config.max_iterations && !result.converged; ++j) {
        const auto P_next = secant_update(P_prev2, P_prev1, GS_prev2, GS_prev1,
                                          result.target_stress_Pa, &result.events);
        AnalysisState st = solve_joint(cj, P_next, loads, config.solver);
        err = record("secant_" + std::to_string(j), P_next, st);
        result.iterations = j;
        P_prev2 = std::move(P_prev1);
        GS_prev2 = std::move(GS_prev1);
        P_prev1 = P_next;
        GS_prev1 = st.field.stress_at_external_radius_Pa;
        P_final = P_next;
        result.converged = err <= config.tolerance;
    }

    result.final_preloads_N = P_final;
    result.variation_percent.resize(static_cast<std::size_t>(nb));
    for (int i = 0; i < nb; ++i)
        result.variation_percent[static_cast<std::size_t>(i)] =
            100.0 * (P_final[static_cast<std::size_t>(i)] - P0[static_cast<std::size_t>(i)]) /
            P0[static_cast<std::size_t>(i)];

    // Convergence certificate: recompute the final error from the recorded
    // stress field rather than trusting loop state.
    if (result.converged) {
        const double final_err = detail::max_relative_error(
            result.history.back().field.stress_at_external_radius_Pa, result.target_stress_Pa);
        result.converged = final_err <= config.tolerance;
    }
    return result;
}

}  // namespace flange
