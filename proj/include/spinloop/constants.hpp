#pragma once

namespace spinloop::constants {

inline constexpr double two_pi = 6.283185307179586476925286766559;

// CODATA 2018 exact values
inline constexpr double hbar = 1.054571817e-34;        // J s
inline constexpr double k_boltzmann = 1.380649e-23;    // J/K
inline constexpr double speed_of_light = 299792458.0;  // m/s

inline constexpr double gauss_to_tesla = 1e-4;

}  // namespace spinloop::constants
