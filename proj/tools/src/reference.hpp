#pragma once

#include <array>
#include <cstddef>
#include <limits>

namespace sticky::cli::reference {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Published divergences for the exponential model, q = 0.5, k = 1..5, k' = 1..7.
inline constexpr std::array<std::array<double, 7>, 5> kExponentialTable{{
    {0, 0.223, 0.665, 1.123, 1.857, 2.512, 3.194},
    {0.193, 0, 0.234, 0.694, 1.270, 1.905, 2.568},
    {0.567, 0.220, 0, 0.233, 0.696, 1.274, 1.909},
    {1.054, 0.644, 0.227, 0, 0.232, 0.695, 1.273},
    {1.621, 1.181, 0.671, 0.229, 0, 0.232, 0.694},
}};
inline constexpr double kExponentialTolerance = 0.005;
inline constexpr double kExponentialQ = 0.5;

/// Published divergences for the independent-indel model, eps = 0.06.
inline constexpr std::array<std::array<double, 7>, 5> kIndelTable{{
    {0, 1.879, 4.247, 6.747, 9.319, 11.94, 14.58},
    {kInf, 0, 1.394, 3.473, 5.760, 8.160, 10.63},
    {kInf, kInf, 0, 1.091, 2.931, 5.032, 7.295},
    {kInf, kInf, kInf, 0, 0.886, 2.219, 4.024},
    {kInf, kInf, kInf, kInf, 0, 0.739, 2.220},
}};
inline constexpr double kIndelTolerance = 0.01;
inline constexpr double kIndelEps = 0.06;

/// Replica-count claims at n = 1e5 and a 1 nat threshold.
inline constexpr std::size_t kReplicaN = 100'000;
inline constexpr std::size_t kExponentialReplicaBound = 60;
inline constexpr double kReplicaIndelEps = 0.1;
inline constexpr std::size_t kIndelReplicaBound = 20;

}  // namespace sticky::cli::reference
