#pragma once
// Small dense-vector helpers shared by scoring, optimizers, and initializers.

#include <cmath>
#include <span>
#include <vector>

namespace dynakge::vec {

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline double norm1(std::span<const double> a) {
    double s = 0;
    for (double x : a) s += std::fabs(x);
    return s;
}

// y += alpha * x
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline void scale(double alpha, std::span<double> x) {
    for (double& v : x) v *= alpha;
}

inline void fill(std::span<double> x, double value) {
    for (double& v : x) v = value;
}

inline void copy(std::span<const double> from, std::span<double> to) {
    for (std::size_t i = 0; i < from.size(); ++i) to[i] = from[i];
}

// Normalizes to unit L2 length; a zero vector becomes the first basis vector.
inline void normalize_unit(std::span<double> v) {
    double n = norm2(v);
    if (n == 0) {
        if (!v.empty()) v[0] = 1.0;
        return;
    }
    for (double& x : v) x /= n;
}

inline std::vector<double> to_vector(std::span<const double> s) {
    return std::vector<double>(s.begin(), s.end());
}

}  // namespace dynakge::vec
