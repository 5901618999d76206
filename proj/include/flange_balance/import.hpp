#pragma once

#include <fstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "flange_balance/dof_map.hpp"
#include "flange_balance/matrix_market.hpp"
#include "flange_balance/stiffness_system.hpp"

namespace flange {

inline nlohmann::json dof_map_to_json(const DofMap& map) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& e : map.entries())
        arr.push_back({{"node_kind", to_string(e.node_kind)},
                       {"station_index", e.station_index},
                       {"dof_kind", to_string(e.dof_kind)}});
    return arr;
}

inline DofMap dof_map_from_json(const nlohmann::json& arr) {
    std::vector<DofEntry> entries;
    for (const auto& e : arr)
        entries.push_back({node_kind_from_string(e.at("node_kind").get<std::string>()),
                           e.at("station_index").get<int>(),
                           dof_kind_from_string(e.at("dof_kind").get<std::string>())});
    return DofMap(std::move(entries));
}

/// Loads an externally condensed stiffness matrix (MatrixMarket coordinate,
/// symmetric qualifier honored) and its DOF map. The file may be a plain JSON
/// array of entries or an object {"entries": [...], "constrained_dofs": [...]}.
inline StiffnessSystem import_condensed(const std::string& matrix_file, const std::string& dof_map_file) {
    StiffnessSystem sys;
    sys.K = mm::read_matrix_file(matrix_file);

    std::ifstream in(dof_map_file);
    if (!in) throw std::runtime_error("import_condensed: cannot open " + dof_map_file);
    nlohmann::json j = nlohmann::json::parse(in);
    if (j.is_array()) {
        sys.dof_map = dof_map_from_json(j);
    } else {
        sys.dof_map = dof_map_from_json(j.at("entries"));
        if (j.contains("constrained_dofs"))
            for (const auto& c : j.at("constrained_dofs")) sys.constrained_dofs.insert(c.get<int>());
    }

    if (static_cast<std::size_t>(sys.K.rows()) != sys.dof_map.size())
        throw std::runtime_error("import_condensed: matrix dimension " + std::to_string(sys.K.rows()) +
                                 " does not match dof map length " + std::to_string(sys.dof_map.size()));

    const double scale = sys.K.norm();
    if (scale > 0.0 && (sys.K - sys.K.transpose()).norm() > 1e-9 * scale)
        throw std::runtime_error("import_condensed: matrix asymmetric beyond 1e-9 relative");
    sys.K = Eigen::MatrixXd(0.5 * (sys.K + sys.K.transpose().eval()));

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sys.K, Eigen::EigenvaluesOnly);
    const double emax = es.eigenvalues().cwiseAbs().maxCoeff();
    if (emax > 0.0 && es.eigenvalues().minCoeff() < -1e-9 * emax)
        throw std::runtime_error("import_condensed: matrix has a negative eigenvalue beyond tolerance");
    return sys;
}

}  // namespace flange
