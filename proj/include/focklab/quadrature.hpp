#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "cpoint.hpp"
#include "errors.hpp"
#include "log_complex.hpp"
#include "parallel.hpp"
#include "rules.hpp"

namespace focklab {

using Integrand = std::function<LogComplex(const CPoint&)>;

struct QuadratureConfig {
    int hermite_order = 40;
    int legendre_order = 12;
    std::vector<double> radius_ladder{4, 6, 8, 10, 12};
    double rel_tol = 1e-8;
    double divergence_growth_factor = 2.0;
    /// Width of one composite Gauss-Legendre panel.
    double panel_width = 1.0;

    void validate() const {
        if (radius_ladder.empty()) throw ConfigError("empty radius ladder");
        for (std::size_t i = 1; i < radius_ladder.size(); ++i)
            if (!(radius_ladder[i] > radius_ladder[i - 1])) throw ConfigError("radius ladder must be strictly increasing");
        if (radius_ladder.front() <= 0) throw ConfigError("radius ladder must be positive");
        if (hermite_order < 8 || legendre_order < 8) throw ConfigError("quadrature orders must be >= 8");
        if (!(rel_tol > 0)) throw ConfigError("rel_tol must be positive");
        if (!(divergence_growth_factor > 1)) throw ConfigError("growth factor must exceed 1");
        if (!(panel_width > 0)) throw ConfigError("panel width must be positive");
    }
    double max_radius() const { return radius_ladder.back(); }
};

enum class Classification { converged, divergent, inconclusive };

inline const char* to_string(Classification c) {
    switch (c) {
        case Classification::converged: return "converged";
        case Classification::divergent: return "divergent";
        default: return "inconclusive";
    }
}

struct IntegralVerdict {
    LogComplex result;
    double value = 0.0;  ///< real part of result; +inf when divergent
    bool infinite = false;
    Classification classification = Classification::inconclusive;
    std::vector<LogComplex> ladder;
    double error_estimate = 0.0;

    std::vector<double> ladder_values() const {
        std::vector<double> v;
        for (const auto& l : ladder) v.push_back(l.to_complex().real());
        return v;
    }
    cplx complex_value() const { return result.to_complex(); }
    bool converged() const { return classification == Classification::converged; }
};

namespace detail {

inline double diff_mag(const LogComplex& a, const LogComplex& b) { return (a - b).abs(); }

inline void check_sample(const LogComplex& v) {
    if (std::isnan(v.log_mag) || std::isnan(v.phase)) throw NonFiniteSample("integrand returned NaN");
}

// Ladder-based classification; extra_error is an independent error estimate
// of the final value (zero when unused).
inline Classification classify_ladder(const std::vector<LogComplex>& ladder, const LogComplex& value,
                                      double extra_error, const QuadratureConfig& cfg) {
    if (!value.is_finite()) return Classification::divergent;
    std::vector<double> inc;
    for (std::size_t k = 1; k < ladder.size(); ++k) inc.push_back(diff_mag(ladder[k], ladder[k - 1]));
    const double g = cfg.divergence_growth_factor;
    if (inc.size() >= 3) {
        double a = inc[inc.size() - 3], b = inc[inc.size() - 2], c = inc.back();
        if (a > 0 && b >= g * a && c >= g * b) return Classification::divergent;
    }
    double mag = value.abs();
    if (!std::isfinite(mag)) return Classification::divergent;
    double last = inc.empty() ? 0.0 : inc.back();
    double tol = cfg.rel_tol * std::max(mag, std::numeric_limits<double>::min());
    if (last <= tol && extra_error <= tol) return Classification::converged;
    if (mag == 0.0 && last == 0.0 && extra_error == 0.0) return Classification::converged;
    return Classification::inconclusive;
}

inline IntegralVerdict finish(const LogComplex& value, std::vector<LogComplex> ladder, double err,
                              const QuadratureConfig& cfg) {
    IntegralVerdict v;
    v.result = value;
    v.ladder = std::move(ladder);
    v.error_estimate = err;
    v.classification = classify_ladder(v.ladder, value, err, cfg);
    if (v.classification == Classification::divergent) {
        v.infinite = true;
        v.value = std::numeric_limits<double>::infinity();
    } else {
        v.value = value.to_complex().real();
    }
    return v;
}

}  // namespace detail

inline IntegralVerdict tail_integral(const Integrand& f, int n, const CPoint& center, double r,
                                     const QuadratureConfig& cfg);

/**
 * @brief Integral of f(w) e^{c|w-center|^2} dV(w) over C^n.
 *
 * Tensor Gauss-Hermite for c < 0 (and for c >= 0 when n >= 2, folding the
 * weight into f). For c >= 0 and n = 1 the plane rule of tail_integral is
 * used instead, since the integrand need not be Gaussian. The ladder entry for radius R uses the Hermite order
 * whose outermost node reaches R, so a Gaussian-type integrand settles while
 * a growing one keeps increasing. For n >= 2 the order is capped at
 * cfg.hermite_order.
 */
inline IntegralVerdict gauss_weighted_integral(const Integrand& f, int n, double c, const CPoint& center,
                                               const QuadratureConfig& cfg) {
    cfg.validate();
    if (n < 1 || n > kMaxDim || center.n != n) throw DimMismatch("dimension mismatch in gauss_weighted_integral");
    if (c >= 0 && n == 1) {
        return tail_integral(
            [&](const CPoint& w) { return f(w) * LogComplex(c * dist2(w, center), 0.0); }, 1, center, 0.0, cfg);
    }
    const double s = c < 0 ? -c : 1.0;
    const double rs = 1.0 / std::sqrt(s);
    const double extra = c / s + 1.0;  // residual exponent on |u|^2
    const int cap = n == 1 ? 4 * cfg.hermite_order : cfg.hermite_order;
    std::vector<LogComplex> ladder;
    int prev_order = -1;
    LogComplex prev_val;
    for (double R : cfg.radius_ladder) {
        int order = std::clamp(static_cast<int>(std::ceil(std::max(s, 1.0) * R * R / 2.0)), 8, cap);
        if (order == prev_order) {
            ladder.push_back(prev_val);
            continue;
        }
        const Rule& h = gauss_hermite(order);
        const int dims = 2 * n;
        std::size_t inner = 1;
        for (int d = 1; d < dims; ++d) inner *= static_cast<std::size_t>(order);
        auto rows = parallel_map<LogSum>(static_cast<std::size_t>(order), [&](std::size_t i0) {
            LogSum acc;
            std::vector<int> idx(dims, 0);
            idx[0] = static_cast<int>(i0);
            for (std::size_t t = 0; t < inner; ++t) {
                std::size_t rem = t;
                for (int d = 1; d < dims; ++d) {
                    idx[d] = static_cast<int>(rem % order);
                    rem /= order;
                }
                CPoint w = center;
                double wt = 1.0, u2 = 0.0;
                for (int j = 0; j < n; ++j) {
                    double a = h.x[idx[2 * j]], b = h.x[idx[2 * j + 1]];
                    wt *= h.w[idx[2 * j]] * h.w[idx[2 * j + 1]];
                    u2 += a * a + b * b;
                    w[j] += cplx(a, b) * rs;
                }
                LogComplex fv = f(w);
                detail::check_sample(fv);
                if (fv.is_zero()) continue;
                acc.add(fv * LogComplex(std::log(wt) + extra * u2, 0.0));
            }
            return acc;
        });
        LogSum total;
        for (auto& r : rows) total.add(r);
        prev_val = total.value() * LogComplex(-n * std::log(s), 0.0);
        prev_order = order;
        ladder.push_back(prev_val);
    }
    return detail::finish(ladder.back(), ladder, 0.0, cfg);
}

namespace detail {

struct AxisPiece {
    Rule rule;
    bool tail = false;
};

inline std::vector<double> ladder_breaks(const QuadratureConfig& cfg) { return cfg.radius_ladder; }

// Positive-half y rule for the exterior of the disc of radius r, box Y.
inline Rule positive_axis_rule(double r, double Y, const QuadratureConfig& cfg, Rule& tail_lo, Rule& tail_hi) {
    const int L = cfg.legendre_order;
    const double h = cfg.panel_width;
    Rule out;
    auto add = [&](const Rule& q) {
        out.x.insert(out.x.end(), q.x.begin(), q.x.end());
        out.w.insert(out.w.end(), q.w.begin(), q.w.end());
    };
    auto sqrt_panel = [&](double a, double b) {
        // y = b - (b-a) t^2 removes the sqrt(r - y) endpoint behaviour.
        const Rule& g = gauss_legendre(2 * L);
        Rule q;
        double d = b - a;
        for (std::size_t i = 0; i < g.x.size(); ++i) {
            double t = 0.5 * (g.x[i] + 1.0);
            q.x.push_back(b - d * t * t);
            q.w.push_back(0.5 * g.w[i] * 2.0 * d * t);
        }
        add(q);
    };
    if (r <= 0) {
        add(composite_rule(0.0, Y, ladder_breaks(cfg), L, h));
        tail_hi = mapped_tail_rule(Y, Y, 2 * L);
        tail_lo = mapped_tail_rule(Y, Y, L);
        return out;
    }
    double delta = std::min(h, 0.5 * r);
    if (r <= Y) {
        add(composite_rule(0.0, r - delta, ladder_breaks(cfg), L, h));
        sqrt_panel(r - delta, r);
        add(composite_rule(r, Y, ladder_breaks(cfg), L, h));
        tail_hi = mapped_tail_rule(Y, Y, 2 * L);
        tail_lo = mapped_tail_rule(Y, Y, L);
    } else {
        add(composite_rule(0.0, Y, ladder_breaks(cfg), L, h));
        // geometric panels from Y to r - delta
        double a = Y;
        while (a < r - delta - 1e-12) {
            double b = std::min(r - delta, std::max(a + h, 2.0 * a));
            Rule q;
            append_panels(q, a, b, L, b - a);
            add(q);
            a = b;
        }
        sqrt_panel(r - delta, r);
        add(composite_rule(r, r + Y, {}, L, h));
        tail_hi = mapped_tail_rule(r + Y, r + Y, 2 * L);
        tail_lo = mapped_tail_rule(r + Y, r + Y, L);
    }
    return out;
}

inline Rule x_half_rule(double a, double Y, const QuadratureConfig& cfg, Rule& tail_lo, Rule& tail_hi) {
    const int L = cfg.legendre_order;
    // Near panels resolve a Gaussian bump at the start; the mapped tail then
    // takes whatever decays slowly.
    double end = a < Y ? Y : a + Y;
    Rule out = composite_rule(a, end, ladder_breaks(cfg), L, cfg.panel_width);
    tail_hi = mapped_tail_rule(end, end, 2 * L);
    tail_lo = mapped_tail_rule(end, end, L);
    return out;
}

struct RowResult {
    LogSum main;                 // all nodes, high-order tails
    std::vector<LogSum> boxes;   // partial sums per ladder box
    LogSum xtail_hi, xtail_lo;
};

// Integral over {x : |x| >= a} for fixed y (relative coords), with ladder boxes.
inline RowResult integrate_row(const Integrand& f, const CPoint& center, double y, double r,
                               const QuadratureConfig& cfg) {
    const double Y = cfg.max_radius();
    const auto& lad = cfg.radius_ladder;
    RowResult res;
    res.boxes.resize(lad.size());
    double a = std::abs(y) < r ? std::sqrt(std::max(0.0, r * r - y * y)) : 0.0;
    Rule tlo, thi;
    Rule half = x_half_rule(a, Y, cfg, tlo, thi);
    auto eval = [&](double x) {
        CPoint w = center;
        w[0] += cplx(x, y);
        LogComplex v = f(w);
        check_sample(v);
        return v;
    };
    for (int sgn : {1, -1}) {
        for (std::size_t i = 0; i < half.x.size(); ++i) {
            double x = sgn * half.x[i];
            LogComplex v = eval(x) * LogComplex::from_real(half.w[i]);
            res.main.add(v);
            for (std::size_t k = 0; k < lad.size(); ++k)
                if (std::abs(x) <= lad[k] + 1e-12 && std::abs(y) <= lad[k] + 1e-12) res.boxes[k].add(v);
        }
        for (std::size_t i = 0; i < thi.x.size(); ++i) {
            LogComplex v = eval(sgn * thi.x[i]) * LogComplex::from_real(thi.w[i]);
            res.main.add(v);
            res.xtail_hi.add(v);
        }
        for (std::size_t i = 0; i < tlo.x.size(); ++i)
            res.xtail_lo.add(eval(sgn * tlo.x[i]) * LogComplex::from_real(tlo.w[i]));
    }
    return res;
}

inline IntegralVerdict exterior_integral_1d(const Integrand& f, const CPoint& center, double r,
                                            const QuadratureConfig& cfg) {
    const double Y = cfg.max_radius();
    const auto& lad = cfg.radius_ladder;
    Rule ytlo, ythi;
    Rule ypos = positive_axis_rule(r, Y, cfg, ytlo, ythi);
    struct YNode {
        double y, w;
        int kind;  // 0 main, 1 tail hi, 2 tail lo
    };
    std::vector<YNode> nodes;
    for (int sgn : {1, -1}) {
        for (std::size_t i = 0; i < ypos.x.size(); ++i) nodes.push_back({sgn * ypos.x[i], ypos.w[i], 0});
        for (std::size_t i = 0; i < ythi.x.size(); ++i) nodes.push_back({sgn * ythi.x[i], ythi.w[i], 1});
        for (std::size_t i = 0; i < ytlo.x.size(); ++i) nodes.push_back({sgn * ytlo.x[i], ytlo.w[i], 2});
    }
    auto rows = parallel_map<RowResult>(nodes.size(), [&](std::size_t i) {
        return integrate_row(f, center, nodes[i].y, r, cfg);
    });
    LogSum total, ytail_hi, ytail_lo;
    std::vector<LogSum> boxes(lad.size());
    double xtail_err = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        LogComplex wy = LogComplex::from_real(nodes[i].w);
        LogComplex rowv = rows[i].main.value() * wy;
        if (nodes[i].kind == 2) {
            ytail_lo.add(rowv);
            continue;
        }
        total.add(rowv);
        if (nodes[i].kind == 1) {
            ytail_hi.add(rowv);
            continue;
        }
        xtail_err += nodes[i].w * diff_mag(rows[i].xtail_hi.value(), rows[i].xtail_lo.value());
        for (std::size_t k = 0; k < lad.size(); ++k) boxes[k].add(rows[i].boxes[k].value() * wy);
    }
    double err = xtail_err + diff_mag(ytail_hi.value(), ytail_lo.value());
    std::vector<LogComplex> ladder;
    for (auto& b : boxes) ladder.push_back(b.value());
    LogComplex value = total.value();
    if (total.non_finite()) value = LogComplex(std::numeric_limits<double>::infinity(), 0.0);
    IntegralVerdict v = finish(value, ladder, std::isfinite(err) ? err : std::numeric_limits<double>::infinity(), cfg);
    // A converged value may carry a slowly decaying tail: the ladder keeps
    // moving while the mapped tail rule agrees with itself.
    if (v.classification == Classification::inconclusive && std::isfinite(err) &&
        err <= cfg.rel_tol * std::max(value.abs(), std::numeric_limits<double>::min())) {
        bool shrinking = true;
        for (std::size_t k = 2; k < ladder.size(); ++k)
            if (diff_mag(ladder[k], ladder[k - 1]) > diff_mag(ladder[k - 1], ladder[k - 2]) * (1 + 1e-9) + 1e-300)
                shrinking = false;
        if (shrinking) v.classification = Classification::converged;
    }
    return v;
}

// n = 2 exterior via Hopf coordinates.
inline IntegralVerdict exterior_integral_2d(const Integrand& f, const CPoint& center, double r,
                                            const QuadratureConfig& cfg) {
    const int L = cfg.legendre_order;
    const double Rmax = cfg.max_radius();
    const auto& lad = cfg.radius_ladder;
    Rule radial = r < Rmax ? composite_rule(r, Rmax, lad, L, cfg.panel_width) : Rule{};
    double t0 = std::max(r, Rmax);
    Rule thi = mapped_tail_rule(t0, t0, 2 * L), tlo = mapped_tail_rule(t0, t0, L);
    const Rule& eta = gauss_legendre(L);
    const int nxi = 4 * L;
    auto shell = [&](double rho) {
        LogSum acc;
        for (std::size_t a = 0; a < eta.x.size(); ++a) {
            double e = std::numbers::pi / 4.0 * (eta.x[a] + 1.0);
            double we = std::numbers::pi / 4.0 * eta.w[a] * std::cos(e) * std::sin(e);
            for (int i = 0; i < nxi; ++i) {
                double x1 = 2.0 * std::numbers::pi * i / nxi;
                for (int j = 0; j < nxi; ++j) {
                    double x2 = 2.0 * std::numbers::pi * j / nxi;
                    CPoint w = center;
                    w[0] += std::polar(rho * std::cos(e), x1);
                    w[1] += std::polar(rho * std::sin(e), x2);
                    LogComplex v = f(w);
                    check_sample(v);
                    acc.add(v * LogComplex::from_real(we));
                }
            }
        }
        double dxi = 2.0 * std::numbers::pi / nxi;
        return acc.value() * LogComplex::from_real(dxi * dxi * rho * rho * rho);
    };
    std::vector<double> rhos = radial.x;
    rhos.insert(rhos.end(), thi.x.begin(), thi.x.end());
    rhos.insert(rhos.end(), tlo.x.begin(), tlo.x.end());
    auto shells = parallel_map<LogComplex>(rhos.size(), [&](std::size_t i) { return shell(rhos[i]); });
    LogSum total, hi, lo;
    std::vector<LogSum> boxes(lad.size());
    std::size_t nr = radial.x.size();
    for (std::size_t i = 0; i < nr; ++i) {
        LogComplex v = shells[i] * LogComplex::from_real(radial.w[i]);
        total.add(v);
        for (std::size_t k = 0; k < lad.size(); ++k)
            if (radial.x[i] <= lad[k] + 1e-12) boxes[k].add(v);
    }
    for (std::size_t i = 0; i < thi.x.size(); ++i) {
        LogComplex v = shells[nr + i] * LogComplex::from_real(thi.w[i]);
        total.add(v);
        hi.add(v);
    }
    for (std::size_t i = 0; i < tlo.x.size(); ++i)
        lo.add(shells[nr + thi.x.size() + i] * LogComplex::from_real(tlo.w[i]));
    std::vector<LogComplex> ladder;
    for (auto& b : boxes) ladder.push_back(b.value());
    return finish(total.value(), ladder, diff_mag(hi.value(), lo.value()), cfg);
}

}  // namespace detail

/**
 * @brief Integral of f over {w : |w - center| >= r}.
 *
 * n = 1: product Gauss-Legendre in Cartesian coordinates with the circle as
 * an exact breakpoint and algebraic maps to infinity. n = 2: radial panels
 * times Hopf angles. ladder_values hold the integral restricted to the box
 * (n = 1) or ball (n = 2) of each ladder radius.
 */
inline IntegralVerdict tail_integral(const Integrand& f, int n, const CPoint& center, double r,
                                     const QuadratureConfig& cfg) {
    cfg.validate();
    if (!(r >= 0)) throw ConfigError("tail radius must be non-negative");
    if (center.n != n) throw DimMismatch("dimension mismatch in tail_integral");
    if (n == 1) return detail::exterior_integral_1d(f, center, r, cfg);
    if (n == 2) return detail::exterior_integral_2d(f, center, r, cfg);
    throw ConfigError("tail_integral supports n = 1, 2");
}

/// Whole-space integral of f dV (tail_integral at r = 0).
inline IntegralVerdict plane_integral(const Integrand& f, const CPoint& center, const QuadratureConfig& cfg) {
    return tail_integral(f, center.n, center, 0.0, cfg);
}

/// Composite Gauss-Legendre integral of a complex function over [a, b].
template <class G>
cplx line_integral(G&& g, double a, double b, const std::vector<double>& breaks, int order, double h) {
    Rule q = composite_rule(a, b, breaks, order, h);
    cplx s{0.0, 0.0};
    for (std::size_t i = 0; i < q.x.size(); ++i) s += q.w[i] * g(q.x[i]);
    return s;
}

// ---------------------------------------------------------------------------
// Suprema over rays

enum class SupKind { bounded, divergent, inconclusive };

inline const char* to_string(SupKind k) {
    switch (k) {
        case SupKind::bounded: return "bounded";
        case SupKind::divergent: return "divergent";
        default: return "inconclusive";
    }
}

struct RaySample {
    int ray = 0;
    double radius = 0.0;
    double log_q = 0.0;
};

struct SupVerdict {
    SupKind kind = SupKind::inconclusive;
    double log_estimate = -std::numeric_limits<double>::infinity();
    int witness_ray = -1;
    std::vector<RaySample> samples;

    double estimate() const { return std::exp(log_estimate); }
};

/// Unit directions: angles for n = 1; for n >= 2 the axes e_j, i e_j and
/// seeded Gaussian directions up to count.
inline std::vector<CPoint> ray_directions(int n, int count, std::uint64_t seed = 20240611ULL) {
    std::vector<CPoint> dirs;
    if (n == 1) {
        for (int k = 0; k < count; ++k)
            dirs.push_back(CPoint::scalar(std::polar(1.0, 2.0 * std::numbers::pi * k / count)));
        return dirs;
    }
    for (int j = 0; j < n && static_cast<int>(dirs.size()) < count; ++j) {
        CPoint e(n);
        e[j] = 1.0;
        dirs.push_back(e);
        CPoint ie(n);
        ie[j] = cplx(0.0, 1.0);
        if (static_cast<int>(dirs.size()) < count) dirs.push_back(ie);
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    while (static_cast<int>(dirs.size()) < count) {
        CPoint v(n);
        for (int j = 0; j < n; ++j) v[j] = cplx(nd(rng), nd(rng));
        double nv = v.norm();
        if (nv < 1e-12) continue;
        dirs.push_back((1.0 / nv) * v);
    }
    return dirs;
}

inline std::vector<CPoint> default_rays(int n) { return ray_directions(n, n == 1 ? 16 : 32); }

/**
 * @brief Heuristic classification of sup_z q(z) from samples along rays.
 *
 * log_q returns log q(z). Divergent when on some ray log q rises over the last
 * three radii with growing slope and gains at least min_gain nats there;
 * bounded when no ray gains more than bounded_tol at its last radius.
 */
inline SupVerdict classify_sup_over_rays(const std::function<double(const CPoint&)>& log_q, int n,
                                         const std::vector<CPoint>& rays, const std::vector<double>& ladder,
                                         double min_gain = 0.1, double bounded_tol = 1e-3) {
    if (rays.empty()) throw ConfigError("no ray directions");
    if (ladder.size() < 3) throw ConfigError("ladder needs at least three radii");
    SupVerdict out;
    std::vector<double> radii{0.0};
    radii.insert(radii.end(), ladder.begin(), ladder.end());
    const std::size_t m = radii.size();
    auto vals = parallel_map<double>(rays.size() * m, [&](std::size_t k) {
        const CPoint& d = rays[k / m];
        if (d.n != n) throw DimMismatch("ray dimension mismatch");
        double v = log_q(radii[k % m] * d);
        if (std::isnan(v)) throw NonFiniteSample("sup sample is NaN");
        return v;
    });
    bool any_div = false, all_bounded = true;
    for (std::size_t rj = 0; rj < rays.size(); ++rj) {
        const double* L = &vals[rj * m];
        for (std::size_t i = 0; i < m; ++i) {
            out.samples.push_back({static_cast<int>(rj), radii[i], L[i]});
            if (L[i] > out.log_estimate) out.log_estimate = L[i];
        }
        double l3 = L[m - 3], l2 = L[m - 2], l1 = L[m - 1];
        double s1 = (l2 - l3) / (radii[m - 2] - radii[m - 3]);
        double s2 = (l1 - l2) / (radii[m - 1] - radii[m - 2]);
        bool rising = l2 > l3 && l1 > l2 && s2 > s1 && (l1 - l3) >= min_gain;
        if (l1 == std::numeric_limits<double>::infinity()) rising = true;
        if (rising) {
            any_div = true;
            if (out.witness_ray < 0) out.witness_ray = static_cast<int>(rj);
        }
        double earlier = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i + 1 < m; ++i) earlier = std::max(earlier, L[i]);
        if (l1 > earlier + bounded_tol) all_bounded = false;
    }
    if (any_div)
        out.kind = SupKind::divergent;
    else if (all_bounded)
        out.kind = SupKind::bounded;
    return out;
}

}  // namespace focklab
