#pragma once

#include <stdexcept>

namespace stsqm {

// Natural units hbar = m = 1 by default; every public constructor accepts
// an override.
struct PhysicalConstants {
    double hbar = 1.0;
    double mass = 1.0;

    void validate() const {
        if (!(hbar > 0.0)) throw std::domain_error("PhysicalConstants: hbar must be > 0");
        if (!(mass > 0.0)) throw std::domain_error("PhysicalConstants: mass must be > 0");
    }
};

} // namespace stsqm
