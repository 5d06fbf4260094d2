#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace artai {

inline constexpr double kSimplexTolerance = 1e-9;

inline bool on_simplex(std::span<const double> v, double tol = kSimplexTolerance) {
    if (v.empty()) return false;
    double sum = 0.0;
    for (double x : v) {
        if (!(x >= -tol)) return false;
        sum += x;
    }
    return std::abs(sum - 1.0) <= tol;
}

// (1 - w) * v + w * onehot(target); caller validates ranges.
inline std::vector<double> convex_shift(std::span<const double> v, std::size_t target, double w) {
    std::vector<double> out(v.size());
    for (std::size_t c = 0; c < v.size(); ++c) out[c] = (1.0 - w) * v[c];
    out[target] += w;
    return out;
}

}  // namespace artai
