#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <thread>
#include <vector>

namespace halftrace {

// Pairwise (cascade) summation. All energy and seminorm reductions go through
// this so that results are reproducible bit-for-bit under a fixed term order.
inline double pairwise_sum(std::span<const double> xs) {
    const std::size_t n = xs.size();
    if (n <= 32) {
        double s = 0.0;
        for (double x : xs) s += x;
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(xs.subspan(0, half)) + pairwise_sum(xs.subspan(half));
}

inline double pairwise_sum(const std::vector<double>& xs) {
    return pairwise_sum(std::span<const double>(xs));
}

inline double sup_norm(std::span<const double> x) {
    double m = 0.0;
    for (double v : x) m = std::max(m, std::abs(v));
    return m;
}

inline double euclid_norm(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

inline double dist2(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

// Deterministic parallel map: fn(i) for i in [0, n). Chunks are static so the
// work distribution does not depend on scheduling.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    const std::size_t nthreads = std::min<std::size_t>(hw, n == 0 ? 1 : n);
    if (nthreads <= 1 || n < 1024) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    const std::size_t chunk = (n + nthreads - 1) / nthreads;
    for (std::size_t t = 0; t < nthreads; ++t) {
        const std::size_t lo = t * chunk;
        const std::size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn] {
            for (std::size_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

// Volume of the unit ball in R^d.
inline double unit_ball_volume(int d) {
    if (d == 0) return 1.0;
    return std::pow(M_PI, 0.5 * d) / std::tgamma(0.5 * d + 1.0);
}

// Volume of the solid spherical cap {|x| < 1, x_m > eta} in R^m.
inline double unit_cap_volume(int m, double eta) {
    // slice at height t is an (m-1)-ball of radius sqrt(1-t^2)
    const double vball = unit_ball_volume(m - 1);
    const int n = 4096;
    std::vector<double> terms(static_cast<std::size_t>(n));
    const double h = (1.0 - eta) / n;
    for (int i = 0; i < n; ++i) {
        const double t = eta + (i + 0.5) * h;
        terms[static_cast<std::size_t>(i)] = std::pow(1.0 - t * t, 0.5 * (m - 1)) * h;
    }
    return vball * pairwise_sum(terms);
}

}  // namespace halftrace
