#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "flange_balance/joint_model.hpp"
#include "flange_balance/optimizer.hpp"

namespace flange {

/// Two-column CSV, header `closure_m,stress_Pa`, rows sorted by closure.
inline GasketCurve read_gasket_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("gasket csv: empty file");
    // Tolerate a UTF-8 BOM and trailing whitespace in the header.
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (line.size() >= 3 && line.compare(0, 3, "\xef\xbb\xbf") == 0) line.erase(0, 3);
    if (line != "closure_m,stress_Pa")
        throw std::runtime_error("gasket csv: expected header 'closure_m,stress_Pa'");
    std::vector<GasketCurvePoint> pts;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string a, b;
        if (!std::getline(row, a, ',') || !std::getline(row, b))
            throw std::runtime_error("gasket csv: malformed row: " + line);
        pts.push_back({std::stod(a), std::stod(b)});
    }
    return GasketCurve(std::move(pts));
}

inline GasketCurve read_gasket_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("gasket csv: cannot open " + path);
    return read_gasket_csv(in);
}

inline void write_gasket_csv(std::ostream& out, const GasketCurve& curve) {
    out << "closure_m,stress_Pa\n";
    char buf[80];
    for (const auto& p : curve.points()) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g", p.closure_m, p.stress_Pa);
        out << buf << "\n";
    }
}

inline JointModel joint_model_from_json(const nlohmann::json& j) {
    JointModel m;
    const auto& g = j.at("geometry");
    m.geometry.n_bolts = g.at("n_bolts").get<int>();
    m.geometry.bolt_circle_radius_m = g.at("bolt_circle_radius_m").get<double>();
    if (g.contains("bolt_angles_rad"))
        m.geometry.bolt_angles_rad = g.at("bolt_angles_rad").get<std::vector<double>>();
    else
        m.geometry.bolt_angles_rad = JointGeometry::default_bolt_angles(m.geometry.n_bolts);
    m.geometry.gasket_inner_radius_m = g.at("gasket_inner_radius_m").get<double>();
    m.geometry.gasket_outer_radius_m = g.at("gasket_outer_radius_m").get<double>();
    m.geometry.gasket_reaction_radius_m = g.at("gasket_reaction_radius_m").get<double>();
    m.geometry.flange_ring_section.radial_width_m =
        g.at("flange_ring_section").at("radial_width_m").get<double>();
    m.geometry.flange_ring_section.axial_thickness_m =
        g.at("flange_ring_section").at("axial_thickness_m").get<double>();
    m.geometry.pipe_attachment_radius_m = g.at("pipe_attachment_radius_m").get<double>();
    m.geometry.n_sectors = g.at("n_sectors").get<int>();
    m.flange.youngs_modulus_Pa = j.at("flange").at("youngs_modulus_Pa").get<double>();
    m.flange.poisson_ratio = j.at("flange").at("poisson_ratio").get<double>();
    m.bolt.nominal_area_m2 = j.at("bolt").at("nominal_area_m2").get<double>();
    m.bolt.stiffness_N_per_m = j.at("bolt").at("stiffness_N_per_m").get<double>();
    m.bolt.preload_as_stress = j.at("bolt").value("preload_as_stress", true);
    m.pipe_axial_stiffness_N_per_m = j.at("pipe_axial_stiffness_N_per_m").get<double>();
    m.remote_rotation_stiffness_Nm_per_rad = j.value("remote_rotation_stiffness_Nm_per_rad", 0.0);
    if (j.contains("gasket_curve")) {
        std::vector<GasketCurvePoint> pts;
        for (const auto& p : j.at("gasket_curve"))
            pts.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
        m.gasket = GasketCurve(std::move(pts));
    }
    return m;
}

inline nlohmann::json joint_model_to_json(const JointModel& m) {
    nlohmann::json j;
    j["geometry"] = {
        {"n_bolts", m.geometry.n_bolts},
        {"bolt_circle_radius_m", m.geometry.bolt_circle_radius_m},
        {"bolt_angles_rad", m.geometry.bolt_angles_rad},
        {"gasket_inner_radius_m", m.geometry.gasket_inner_radius_m},
        {"gasket_outer_radius_m", m.geometry.gasket_outer_radius_m},
        {"gasket_reaction_radius_m", m.geometry.gasket_reaction_radius_m},
        {"flange_ring_section",
         {{"radial_width_m", m.geometry.flange_ring_section.radial_width_m},
          {"axial_thickness_m", m.geometry.flange_ring_section.axial_thickness_m}}},
        {"pipe_attachment_radius_m", m.geometry.pipe_attachment_radius_m},
        {"n_sectors", m.geometry.n_sectors}};
    j["flange"] = {{"youngs_modulus_Pa", m.flange.youngs_modulus_Pa},
                   {"poisson_ratio", m.flange.poisson_ratio}};
    j["bolt"] = {{"nominal_area_m2", m.bolt.nominal_area_m2},
                 {"stiffness_N_per_m", m.bolt.stiffness_N_per_m},
                 {"preload_as_stress", m.bolt.preload_as_stress}};
    j["pipe_axial_stiffness_N_per_m"] = m.pipe_axial_stiffness_N_per_m;
    if (m.remote_rotation_stiffness_Nm_per_rad > 0.0)
        j["remote_rotation_stiffness_Nm_per_rad"] = m.remote_rotation_stiffness_Nm_per_rad;
    nlohmann::json curve = nlohmann::json::array();
    for (const auto& p : m.gasket.points()) curve.push_back({p.closure_m, p.stress_Pa});
    j["gasket_curve"] = curve;
    return j;
}

inline JointModel read_joint_model_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("model json: cannot open " + path);
    return joint_model_from_json(nlohmann::json::parse(in));
}

/// Load case: a uniform "preload" scalar or a per-bolt "preloads" list, in
/// the unit selected by BoltSpec.preload_as_stress (Pa or N).
inline LoadCase load_case_from_json(const nlohmann::json& j, int n_bolts) {
    LoadCase lc;
    if (j.contains("preloads"))
        lc.preloads = j.at("preloads").get<std::vector<double>>();
    else
        lc.preloads.assign(static_cast<std::size_t>(n_bolts), j.at("preload").get<double>());
    lc.axial_load_N = j.value("axial_load_N", 0.0);
    lc.bending_moment_Nm = j.value("bending_moment_Nm", 0.0);
    lc.moment_plane_angle_rad = j.value("moment_plane_angle_rad", 0.0);
    return lc;
}

inline LoadCase read_load_case_file(const std::string& path, int n_bolts) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("loads json: cannot open " + path);
    return load_case_from_json(nlohmann::json::parse(in), n_bolts);
}

inline OptimizerConfig optimizer_config_from_json(const nlohmann::json& j) {
    OptimizerConfig c;
    c.tolerance = j.value("tolerance", c.tolerance);
    c.max_iterations = j.value("max_iterations", c.max_iterations);
    c.initial_overload_factor = j.value("initial_overload_factor", c.initial_overload_factor);
    c.rigidity_factor.value = j.value("rigidity_factor", c.rigidity_factor.value);
    return c;
}

}  // namespace flange
