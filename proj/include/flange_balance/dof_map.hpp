#pragma once

#include <cstddef>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace flange {

enum class NodeKind { bolt_top, gasket_contact, remote_load, ring_station };
enum class DofKind { axial_translation, rotation_x, rotation_y, meridional_rotation };

inline std::string to_string(NodeKind k) {
    switch (k) {
        case NodeKind::bolt_top: return "bolt_top";
        case NodeKind::gasket_contact: return "gasket_contact";
        case NodeKind::remote_load: return "remote_load";
        case NodeKind::ring_station: return "ring_station";
    }
    return "?";
}

inline std::string to_string(DofKind k) {
    switch (k) {
        case DofKind::axial_translation: return "axial_translation";
        case DofKind::rotation_x: return "rotation_x";
        case DofKind::rotation_y: return "rotation_y";
        case DofKind::meridional_rotation: return "meridional_rotation";
    }
    return "?";
}

inline NodeKind node_kind_from_string(const std::string& s) {
    if (s == "bolt_top") return NodeKind::bolt_top;
    if (s == "gasket_contact") return NodeKind::gasket_contact;
    if (s == "remote_load") return NodeKind::remote_load;
    if (s == "ring_station") return NodeKind::ring_station;
    throw std::runtime_error("unknown node_kind: " + s);
}

inline DofKind dof_kind_from_string(const std::string& s) {
    if (s == "axial_translation") return DofKind::axial_translation;
    if (s == "rotation_x") return DofKind::rotation_x;
    if (s == "rotation_y") return DofKind::rotation_y;
    if (s == "meridional_rotation") return DofKind::meridional_rotation;
    throw std::runtime_error("unknown dof_kind: " + s);
}

struct DofEntry {
    NodeKind node_kind;
    int station_index;  // bolt index for bolt_top, station index otherwise, 0 for remote
    DofKind dof_kind;

    friend bool operator==(const DofEntry&, const DofEntry&) = default;
    friend auto operator<=>(const DofEntry&, const DofEntry&) = default;
};

/// Ordered list of DOFs; row/column i of a stiffness matrix corresponds to
/// entries()[i].
class DofMap {
public:
    DofMap() = default;
    explicit DofMap(std::vector<DofEntry> entries) : entries_(std::move(entries)) {
        std::set<DofEntry> seen(entries_.begin(), entries_.end());
        if (seen.size() != entries_.size())
            throw std::runtime_error("DofMap: duplicate entries");
    }

    const std::vector<DofEntry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }
    const DofEntry& operator[](std::size_t i) const { return entries_[i]; }

    /// Index of an entry; throws if absent.
    int index_of(NodeKind nk, int station, DofKind dk) const {
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            const auto& e = entries_[i];
            if (e.node_kind == nk && e.station_index == station && e.dof_kind == dk)
                return static_cast<int>(i);
        }
        throw std::runtime_error("DofMap: no entry " + to_string(nk) + "/" + std::to_string(station) +
                                 "/" + to_string(dk));
    }

private:
    std::vector<DofEntry> entries_;
};

}  // namespace flange
