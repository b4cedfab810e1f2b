#pragma once

#include <compare>
#include <cstdint>
#include <string>

namespace satsched {

/// Identifies one satellite: domain k, orbit i within the domain, index j
/// within the orbit. All three are 1-based, matching operator convention.
struct SatelliteId {
    int domain = 0;
    int orbit = 0;
    int index = 0;

    auto operator<=>(const SatelliteId&) const = default;

    bool valid() const { return domain > 0 && orbit > 0 && index > 0; }

    std::string str() const {
        return std::to_string(domain) + "-" + std::to_string(orbit) + "-" +
               std::to_string(index);
    }
};

enum class LinkKind { isl, idl, sgl };

inline const char* to_string(LinkKind k) {
    switch (k) {
        case LinkKind::isl: return "isl";
        case LinkKind::idl: return "idl";
        default: return "sgl";
    }
}

/// Satellite hardware class: ordinary node vs cross-domain node (larger
/// battery and storage, owns inter-domain links).
enum class SatClass { ncs, cs };

} // namespace satsched
