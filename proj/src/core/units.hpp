#ifndef TERRA_CORE_UNITS_HPP
#define TERRA_CORE_UNITS_HPP

#include <cstdint>

namespace terra {

// Internal units: volumes in bytes, rates in bytes/s, times in seconds.
// Documents speak gigabits per second; 1 Gbps == 1.25e8 bytes/s.
constexpr double kBytesPerGigabit = 1.25e8;

inline double gbps_to_bps(double gbps) { return gbps * kBytesPerGigabit; }
inline double bps_to_gbps(double bytes_per_s) { return bytes_per_s / kBytesPerGigabit; }
inline double gigabytes(double gb) { return gb * 1e9; }

// Relative tolerance on capacity bookkeeping (residuals may dip this far
// below zero before it counts as a violation).
constexpr double kCapEpsRel = 1e-9;

// Absolute feasibility tolerance for LP solutions on normalized rows.
constexpr double kLpTol = 1e-7;

// A transfer unit is considered finished once its remaining volume drops
// below this many bytes (volumes are >= 1 byte by construction).
constexpr double kFinishEpsBytes = 1e-3;

}  // namespace terra

#endif
