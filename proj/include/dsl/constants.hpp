#pragma once

#include "dsl/errors.hpp"

#include <string>

namespace dsl {

// CODATA 2018 exact/recommended values.
namespace codata {
inline constexpr double hbar = 1.054571817e-34;      // J s
inline constexpr double G = 6.67430e-11;             // m^3 kg^-1 s^-2
inline constexpr double c = 299792458.0;             // m s^-1
inline constexpr double electron_mass = 9.1093837015e-31;  // kg
inline constexpr double neutron_mass = 1.67492749804e-27;  // kg
}  // namespace codata

struct PhysicalConstants {
    double hbar = 1.0;
    double mass = 1.0;
    double G = 1.0;
    double c = 1.0;

    /// hbar = m = 1 with G = c = 1; the default for dynamics runs.
    static constexpr PhysicalConstants natural() { return {}; }

    static constexpr PhysicalConstants si(double mass_kg) {
        return {codata::hbar, mass_kg, codata::G, codata::c};
    }

    void validate() const {
        if (!(hbar > 0.0)) throw InvalidArgument("constants.hbar must be > 0");
        if (!(mass > 0.0)) throw InvalidArgument("constants.mass must be > 0");
        if (!(G > 0.0)) throw InvalidArgument("constants.G must be > 0");
        if (!(c > 0.0)) throw InvalidArgument("constants.c must be > 0");
    }

    double hbar_over_mass() const { return hbar / mass; }

    friend bool operator==(const PhysicalConstants&, const PhysicalConstants&) = default;
};

}  // namespace dsl
