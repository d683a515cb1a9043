#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace ce2 {

using Vec = std::vector<double>;

inline double squared_distance(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("squared_distance: dimension mismatch");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

inline double euclidean_distance(const Vec& a, const Vec& b) {
    return std::sqrt(squared_distance(a, b));
}

inline double squared_norm(const Vec& a) {
    double acc = 0.0;
    for (double v : a) acc += v * v;
    return acc;
}

inline bool all_finite(const Vec& a) {
    for (double v : a) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

}  // namespace ce2
