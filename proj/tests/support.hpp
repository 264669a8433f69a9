#pragma once

#include "anisostokes/diagnostics.hpp"

#include <map>
#include <random>

namespace anisostokes::fixtures {

inline MeshSpec small_spec(int dim, int level = 0, double radius = 4.0)
{
    MeshSpec s;
    s.dim = dim;
    s.level = level;
    s.radius = radius;
    return s;
}

/// Meshes are cached per (dim, level, radius) for the lifetime of the test binary.
inline std::shared_ptr<const FunctionSpaces> spaces(int dim, int level = 0, double radius = 4.0)
{
    static std::map<std::tuple<int, int, double>, std::shared_ptr<const FunctionSpaces>> cache;
    auto& sp = cache[{dim, level, radius}];
    if (!sp) sp = build_spaces(build_interface_mesh(small_spec(dim, level, radius)));
    return sp;
}

inline Vec random_vector(int n, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Vec v(n);
    for (int i = 0; i < n; ++i) v(i) = normal(rng);
    return v;
}

inline double rel_diff(double a, double b)
{
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

} // namespace anisostokes::fixtures
