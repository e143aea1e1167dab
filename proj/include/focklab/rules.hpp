#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace focklab {

struct Rule {
    std::vector<double> x;
    std::vector<double> w;
};

namespace detail {

inline Rule compute_legendre(int n) {
    Rule r;
    r.x.resize(n);
    r.w.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p1 = 1.0, p2 = 0.0;
            for (int j = 1; j <= n; ++j) {
                double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
            }
            pp = n * (z * p1 - p2) / (z * z - 1.0);
            double dz = p1 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        r.x[i] = -z;
        r.x[n - 1 - i] = z;
        r.w[i] = r.w[n - 1 - i] = 2.0 / ((1.0 - z * z) * pp * pp);
    }
    return r;
}

// Newton iteration on orthonormal Hermite polynomials; weights stay
// accurate in relative terms even where e^{-x^2} is tiny.
inline Rule compute_hermite(int n) {
    Rule r;
    r.x.resize(n);
    r.w.resize(n);
    const double pim4 = std::pow(std::numbers::pi, -0.25);
    double z = 0.0;
    int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        if (i == 0)
            z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -0.16667);
        else if (i == 1)
            z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
        else if (i == 2)
            z = 1.86 * z - 0.86 * r.x[0];
        else if (i == 3)
            z = 1.91 * z - 0.91 * r.x[1];
        else
            z = 2.0 * z - r.x[i - 2];
        double pp = 0.0;
        for (int it = 0; it < 200; ++it) {
            double p1 = pim4, p2 = 0.0;
            for (int j = 0; j < n; ++j) {
                double p3 = p2;
                p2 = p1;
                p1 = z * std::sqrt(2.0 / (j + 1)) * p2 - std::sqrt(static_cast<double>(j) / (j + 1)) * p3;
            }
            pp = std::sqrt(2.0 * n) * p2;
            double dz = p1 / pp;
            z -= dz;
            if (std::abs(dz) <= 1e-15 * std::max(1.0, std::abs(z))) break;
        }
        r.x[i] = z;
        r.x[n - 1 - i] = -z;
        r.w[i] = r.w[n - 1 - i] = 2.0 / (pp * pp);
    }
    // ascending order
    std::vector<std::pair<double, double>> xw;
    for (int i = 0; i < n; ++i) xw.emplace_back(r.x[i], r.w[i]);
    std::sort(xw.begin(), xw.end());
    for (int i = 0; i < n; ++i) {
        r.x[i] = xw[i].first;
        r.w[i] = xw[i].second;
    }
    return r;
}

template <class F>
const Rule& cached_rule(std::map<int, Rule>& cache, int n, F make) {
    static std::mutex mu;
    std::lock_guard<std::mutex> lk(mu);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, make(n)).first;
    return it->second;
}

}  // namespace detail

/// Gauss-Legendre rule on [-1, 1].
inline const Rule& gauss_legendre(int n) {
    if (n < 1) throw ConfigError("Legendre order must be positive");
    static std::map<int, Rule> cache;
    return detail::cached_rule(cache, n, detail::compute_legendre);
}

/// Gauss-Hermite rule for the weight e^{-x^2} on the real line.
inline const Rule& gauss_hermite(int n) {
    if (n < 1) throw ConfigError("Hermite order must be positive");
    static std::map<int, Rule> cache;
    return detail::cached_rule(cache, n, detail::compute_hermite);
}

/// Nodes and weights of GL panels covering [a, b] with at most width h each.
inline void append_panels(Rule& out, double a, double b, int order, double h) {
    if (!(b > a)) return;
    const Rule& g = gauss_legendre(order);
    int np = std::max(1, static_cast<int>(std::ceil((b - a) / h - 1e-12)));
    double w = (b - a) / np;
    for (int p = 0; p < np; ++p) {
        double lo = a + p * w, mid = lo + 0.5 * w;
        for (std::size_t i = 0; i < g.x.size(); ++i) {
            out.x.push_back(mid + 0.5 * w * g.x[i]);
            out.w.push_back(0.5 * w * g.w[i]);
        }
    }
}

/// Composite rule on [a, b] split at the sorted breakpoints that fall inside.
inline Rule composite_rule(double a, double b, std::vector<double> breaks, int order, double h) {
    Rule r;
    breaks.push_back(a);
    breaks.push_back(b);
    std::sort(breaks.begin(), breaks.end());
    double prev = a;
    for (double t : breaks) {
        if (t <= prev) continue;
        if (t > b) break;
        append_panels(r, prev, t, order, h);
        prev = t;
    }
    return r;
}

/// Rule for [a, inf) via x = a + s t/(1-t).
inline Rule mapped_tail_rule(double a, double scale, int order) {
    Rule r;
    const Rule& g = gauss_legendre(order);
    for (std::size_t i = 0; i < g.x.size(); ++i) {
        double t = 0.5 * (g.x[i] + 1.0);
        double one_m = 1.0 - t;
        r.x.push_back(a + scale * t / one_m);
        r.w.push_back(0.5 * g.w[i] * scale / (one_m * one_m));
    }
    return r;
}

}  // namespace focklab
