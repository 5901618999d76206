#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

namespace flange {

/// Tabulated compressive stress vs. closure curve of a gasket.
/// Compression-only: closures below zero carry no stress.
struct GasketCurvePoint {
    double closure_m = 0.0;
    double stress_Pa = 0.0;
};

struct GasketStressInfo {
    double stress_Pa = 0.0;
    bool extrapolated = false;
};

class GasketCurve {
public:
    GasketCurve() = default;
    explicit GasketCurve(std::vector<GasketCurvePoint> points) : points_(std::move(points)) {}

    const std::vector<GasketCurvePoint>& points() const { return points_; }

    /// Piecewise-linear stress at the given closure. Zero for closure <= 0,
    /// last segment extrapolated beyond the final point.
    GasketStressInfo stress_info(double closure_m) const {
        GasketStressInfo out;
        if (closure_m <= 0.0 || points_.size() < 2) return out;
        const std::size_t n = points_.size();
        if (closure_m > points_.back().closure_m) {
            out.extrapolated = true;
            const auto& a = points_[n - 2];
            const auto& b = points_[n - 1];
            out.stress_Pa = b.stress_Pa + segment_slope(a, b) * (closure_m - b.closure_m);
            return out;
        }
        // Find the active segment; upper_bound gives the right-segment tie-break.
        auto it = std::upper_bound(points_.begin(), points_.end(), closure_m,
                                   [](double c, const GasketCurvePoint& p) { return c < p.closure_m; });
        if (it == points_.begin()) return out;
        const auto& b = (it == points_.end()) ? points_.back() : *it;
        const auto& a = (it == points_.end()) ? points_[n - 2] : *(it - 1);
        out.stress_Pa = a.stress_Pa + segment_slope(a, b) * (closure_m - a.closure_m);
        return out;
    }

    double stress(double closure_m) const { return stress_info(closure_m).stress_Pa; }

    /// Slope of the active segment [Pa/m]. Zero for closure < 0; at a breakpoint
    /// the right segment governs.
    double tangent(double closure_m) const {
        if (closure_m < 0.0 || points_.size() < 2) return 0.0;
        const std::size_t n = points_.size();
        if (closure_m >= points_[n - 1].closure_m)
            return segment_slope(points_[n - 2], points_[n - 1]);
        auto it = std::upper_bound(points_.begin(), points_.end(), closure_m,
                                   [](double c, const GasketCurvePoint& p) { return c < p.closure_m; });
        if (it == points_.begin()) it = points_.begin() + 1;
        return segment_slope(*(it - 1), *it);
    }

    std::vector<std::string> validate() const {
        std::vector<std::string> v;
        if (points_.size() < 2) {
            v.push_back("GasketCurve.points: at least 2 points required");
            return v;
        }
        if (points_.front().closure_m != 0.0 || points_.front().stress_Pa != 0.0)
            v.push_back("GasketCurve.points: first point must be (0, 0)");
        for (std::size_t i = 1; i < points_.size(); ++i) {
            if (!(points_[i].closure_m > points_[i - 1].closure_m)) {
                v.push_back("GasketCurve.points: closures must be strictly increasing");
                break;
            }
        }
        for (std::size_t i = 1; i < points_.size(); ++i) {
            if (points_[i].stress_Pa < points_[i - 1].stress_Pa) {
                v.push_back("GasketCurve.points: stresses must be non-decreasing");
                break;
            }
        }
        return v;
    }

private:
    static double segment_slope(const GasketCurvePoint& a, const GasketCurvePoint& b) {
        return (b.stress_Pa - a.stress_Pa) / (b.closure_m - a.closure_m);
    }

    std::vector<GasketCurvePoint> points_;
};

struct RingSection {
    double radial_width_m = 0.0;
    double axial_thickness_m = 0.0;
};

struct JointGeometry {
    int n_bolts = 0;
    double bolt_circle_radius_m = 0.0;
    std::vector<double> bolt_angles_rad;  // strictly increasing in [0, 2*pi)
    double gasket_inner_radius_m = 0.0;
    double gasket_outer_radius_m = 0.0;
    double gasket_reaction_radius_m = 0.0;
    RingSection flange_ring_section;
    double pipe_attachment_radius_m = 0.0;
    int n_sectors = 0;  // multiple of n_bolts

    /// Default bolt pattern (2i-1)*pi/n: 22.5deg, 67.5deg, ... for n = 8.
    static std::vector<double> default_bolt_angles(int n_bolts) {
        std::vector<double> a(static_cast<std::size_t>(n_bolts));
        for (int i = 0; i < n_bolts; ++i)
            a[static_cast<std::size_t>(i)] = (2.0 * i + 1.0) * std::numbers::pi / n_bolts;
        return a;
    }
};

struct BoltSpec {
    double nominal_area_m2 = 0.0;
    double stiffness_N_per_m = 0.0;
    bool preload_as_stress = true;  // IO convention; internally preloads are forces [N]
};

struct FlangeMaterial {
    double youngs_modulus_Pa = 0.0;
    double poisson_ratio = 0.3;
};

/// Geometry + materials of flange, bolts and gasket; the single source of
/// truth for a joint.
struct JointModel {
    JointGeometry geometry;
    FlangeMaterial flange;
    BoltSpec bolt;
    GasketCurve gasket;
    double pipe_axial_stiffness_N_per_m = 0.0;  // total, distributed over the stations

    // Optional rotational ground support at the remote load node (far-end
    // pipe anchorage). Zero means a free pipe end. Joints with fewer than
    // three bolts cannot equilibrate the bolt-to-gasket lever moment through
    // the gasket alone and need this support to be statically determinate.
    double remote_rotation_stiffness_Nm_per_rad = 0.0;

    double gasket_area_m2() const {
        const double ro = geometry.gasket_outer_radius_m;
        const double ri = geometry.gasket_inner_radius_m;
        return std::numbers::pi * (ro * ro - ri * ri);
    }

    double preload_force_from_io(double value) const {
        return bolt.preload_as_stress ? value * bolt.nominal_area_m2 : value;
    }
    double preload_force_to_io(double force_N) const {
        return bolt.preload_as_stress ? force_N / bolt.nominal_area_m2 : force_N;
    }
};

struct LoadCase {
    std::vector<double> preloads;  // per bolt, stress [Pa] or force [N] per BoltSpec
    double axial_load_N = 0.0;
    double bending_moment_Nm = 0.0;
    double moment_plane_angle_rad = 0.0;
};

struct RigidityFactor {
    double value = 1.0;  // no closed form in scope; user-supplied
};

/// Per-analysis gasket contact stress field at the external radius.
struct GasketStressField {
    std::vector<double> sector_angles_rad;       // station angles, length n_sectors
    std::vector<double> stress_per_sector_Pa;    // per station, at the external radius
    std::vector<bool> contact_flags;             // per station
    std::vector<double> stress_at_external_radius_Pa;  // per bolt sector (aggregated)
    bool any_extrapolated = false;
};

struct IterationRecord {
    std::string label;                     // "ideal", "bootstrap_overload", "bootstrap_eq1", "secant_<j>"
    std::vector<double> preloads_N;       // per bolt
    GasketStressField field;
    double max_relative_error = 0.0;      // vs. GS_target (external-radius per-bolt values)
};

struct OptimizationResult {
    double target_stress_Pa = 0.0;
    std::vector<double> final_preloads_N;
    std::vector<double> variation_percent;  // vs. the uniform bolt-up
    int iterations = 0;                      // secant iterations performed
    std::vector<IterationRecord> history;
    std::vector<std::string> events;         // degenerate-secant fallbacks, clamps
    bool converged = false;
};

namespace detail {

inline void check(bool ok, std::vector<std::string>& out, const std::string& msg) {
    if (!ok) out.push_back(msg);
}

}  // namespace detail

/// Collects one entry per violated invariant; never throws.
inline std::vector<std::string> validate(const JointModel& m) {
    using detail::check;
    std::vector<std::string> v;
    const auto& g = m.geometry;
    check(g.n_bolts >= 1, v, "geometry.n_bolts: must be >= 1");
    check(static_cast<int>(g.bolt_angles_rad.size()) == g.n_bolts, v,
          "geometry.bolt_angles: length must equal n_bolts");
    if (static_cast<int>(g.bolt_angles_rad.size()) == g.n_bolts && g.n_bolts >= 1) {
        bool inc = true, range = true;
        for (std::size_t i = 0; i < g.bolt_angles_rad.size(); ++i) {
            const double a = g.bolt_angles_rad[i];
            if (a < 0.0 || a >= 2.0 * std::numbers::pi) range = false;
            if (i > 0 && !(a > g.bolt_angles_rad[i - 1])) inc = false;
        }
        check(inc, v, "geometry.bolt_angles: must be strictly increasing");
        check(range, v, "geometry.bolt_angles: must lie in [0, 2*pi)");
    }
    check(g.gasket_inner_radius_m > 0.0, v, "geometry.gasket_inner_radius: must be > 0");
    check(g.gasket_inner_radius_m < g.gasket_reaction_radius_m, v,
          "geometry.gasket_reaction_radius: must exceed gasket_inner_radius");
    check(g.gasket_reaction_radius_m <= g.gasket_outer_radius_m, v,
          "geometry.gasket_reaction_radius: must not exceed gasket_outer_radius");
    check(g.gasket_outer_radius_m < g.bolt_circle_radius_m, v,
          "geometry.gasket_outer_radius: must be below bolt_circle_radius");
    check(g.n_sectors > 0 && g.n_bolts > 0 && g.n_sectors % g.n_bolts == 0, v,
          "geometry.n_sectors: must be a positive multiple of n_bolts");
    check(g.flange_ring_section.radial_width_m > 0.0, v,
          "geometry.flange_ring_section.radial_width: must be > 0");
    check(g.flange_ring_section.axial_thickness_m > 0.0, v,
          "geometry.flange_ring_section.axial_thickness: must be > 0");
    check(g.pipe_attachment_radius_m > 0.0, v, "geometry.pipe_attachment_radius: must be > 0");
    check(std::abs(g.pipe_attachment_radius_m - g.gasket_reaction_radius_m) > 1e-12, v,
          "geometry.pipe_attachment_radius: must differ from gasket_reaction_radius");
    check(m.bolt.nominal_area_m2 > 0.0, v, "bolt.nominal_area: must be > 0");
    check(m.bolt.stiffness_N_per_m > 0.0, v, "bolt.stiffness: must be > 0");
    check(m.flange.youngs_modulus_Pa > 0.0, v, "flange.youngs_modulus: must be > 0");
    check(m.flange.poisson_ratio > -1.0 && m.flange.poisson_ratio < 0.5, v,
          "flange.poisson_ratio: must lie in (-1, 0.5)");
    check(m.pipe_axial_stiffness_N_per_m > 0.0, v, "pipe_axial_stiffness: must be > 0");
    check(m.remote_rotation_stiffness_Nm_per_rad >= 0.0, v,
          "remote_rotation_stiffness: must be >= 0");
    for (auto& msg : m.gasket.validate()) v.push_back(msg);
    return v;
}

inline std::vector<std::string> validate(const JointModel& m, const LoadCase& lc) {
    auto v = validate(m);
    if (static_cast<int>(lc.preloads.size()) != m.geometry.n_bolts)
        v.push_back("loadcase.preloads: length must equal n_bolts");
    for (double p : lc.preloads)
        if (p < 0.0) {
            v.push_back("loadcase.preloads: must be >= 0");
            break;
        }
    return v;
}

}  // namespace flange
