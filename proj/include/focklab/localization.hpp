#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/non_central_chi_squared.hpp>

#include "operators.hpp"
#include "parallel.hpp"
#include "quadrature.hpp"

namespace focklab {

/// Sampling grid for the decay fits: M(d) = max over bases z and directions u of |<T k_z, k_{z + d u}>|.
struct FitGrid {
    std::vector<double> distances;
    std::vector<CPoint> directions;
    std::vector<CPoint> bases;

    static FitGrid standard(int n) {
        FitGrid g;
        for (double d = 1.0; d <= 12.0 + 1e-9; d += 0.5) g.distances.push_back(d);
        g.directions = default_rays(n);
        g.bases.push_back(CPoint::zero(n));
        for (double R : {2.0, 5.0})
            for (const auto& u : ray_directions(n, 8, 77)) g.bases.push_back(R * u);
        return g;
    }
};

struct LabConfig {
    QuadratureConfig quad;
    std::vector<double> p_grid{2.5, 3.0, 3.5, 4.0, 6.0, 8.0};
    std::vector<double> wl_r_ladder{0, 2, 4, 8, 16, 32, 64, 128, 256, 512, 1024};
    double xz_margin = 0.25;
    double sl_min = 0.02;
    double wl_vanish_ratio = 1e-3;
    double wl_persist_ratio = 0.1;
    std::optional<FitGrid> fit;

    FitGrid fit_grid(int n) const { return fit ? *fit : FitGrid::standard(n); }
    void validate() const {
        quad.validate();
        if (p_grid.empty() || wl_r_ladder.size() < 2) throw ConfigError("empty p grid or r ladder");
        for (double p : p_grid)
            if (!(p > 0)) throw ConfigError("p must be positive");
        if (!std::is_sorted(wl_r_ladder.begin(), wl_r_ladder.end())) throw ConfigError("r ladder must be increasing");
    }
};

// ---------------------------------------------------------------------------
// p-localization

namespace detail {

/// Strip rule for S_phi, n = 1, over u = w - z = s + it; one set of samples serves every p.
inline std::vector<IntegralVerdict> convolution_plocal(const OperatorSpec& op, const CPoint& z, const std::vector<double>& ps,
                                                       const QuadratureConfig& cfg) {
    const std::vector<double> s_ladder{8, 12, 16, 24, 32};
    const Rule& gt = gauss_legendre(12);
    const Rule& gs = gauss_legendre(8);
    const int panels = static_cast<int>(s_ladder.back());
    std::vector<std::pair<double, double>> tn;
    for (double t0 = -9.0; t0 < 9.0 - 1e-12; t0 += 3.0)
        for (std::size_t i = 0; i < gt.x.size(); ++i) tn.emplace_back(t0 + 1.5 + 1.5 * gt.x[i], 1.5 * gt.w[i]);
    // rows[k][j * P + q]: contribution of t node k, s panel j, exponent ps[q]
    const std::size_t P = ps.size();
    auto rows = parallel_map<std::vector<LogComplex>>(tn.size(), [&](std::size_t k) {
        const auto [t, wt] = tn[k];
        std::vector<LogSum> acc(static_cast<std::size_t>(panels) * P);
        for (int j = 0; j < panels; ++j)
            for (std::size_t i = 0; i < gs.x.size(); ++i) {
                const double s = j + 0.5 + 0.5 * gs.x[i];
                const double lw = std::log(wt * 0.5 * gs.w[i]);
                for (double sg : {1.0, -1.0}) {
                    CPoint w = z + CPoint::scalar({sg * s, t});
                    double lm = pairing(op, z, w, cfg).value.log_mag;
                    if (lm == -std::numeric_limits<double>::infinity()) continue;
                    for (std::size_t q = 0; q < P; ++q)
                        acc[j * P + q].add(LogComplex(ps[q] * lm + (ps[q] / 2 - 1) * (s * s + t * t) + lw, 0.0));
                }
            }
        std::vector<LogComplex> out;
        for (auto& a : acc) out.push_back(a.value());
        return out;
    });
    std::vector<IntegralVerdict> res;
    const LogComplex inv_pi(-std::log(std::numbers::pi), 0.0);
    for (std::size_t q = 0; q < P; ++q) {
        std::vector<LogComplex> ladder;
        LogSum run;
        std::size_t next = 0;
        for (int j = 0; j < panels; ++j) {
            for (const auto& r : rows) run.add(r[j * P + q]);
            while (next < s_ladder.size() && j + 1 == static_cast<int>(s_ladder[next])) {
                ladder.push_back(run.value() * inv_pi);
                ++next;
            }
        }
        res.push_back(finish(ladder.back(), ladder, 0.0, cfg));
    }
    return res;
}

}  // namespace detail

/**
 * @brief pi^{-n} int |<T k_z, k_w>|^p e^{(p/2 - 1)|z - w|^2} dV(w).
 *
 * Gaussian families use the closed form; other families integrate numerically.
 */
inline IntegralVerdict p_localization_integral(const OperatorSpec& op, const CPoint& z, double p, const QuadratureConfig& cfg = {}) {
    if (!(p > 0)) throw ConfigError("p must be positive");
    op.validate();
    const int n = op.n;
    if (auto env = gaussian_envelope(op, z)) {
        const double q = p / 2;
        CPoint c = q * env->m - (q - 1) * z;
        double e = p * env->log_amp + c.norm2() - q * env->m.norm2() + (q - 1) * z.norm2();
        IntegralVerdict v;
        v.result = LogComplex(e, 0.0);
        v.value = v.result.abs();
        v.classification = Classification::converged;
        v.ladder = {v.result};
        return v;
    }
    if (op.family == Family::convolution && n == 1) return detail::convolution_plocal(op, z, {p}, cfg).front();
    const double lpi = -n * std::log(std::numbers::pi);
    auto f = [&](const CPoint& w) {
        return LogComplex(p * pairing(op, z, w, cfg).value.log_mag + (p / 2 - 1) * dist2(z, w) + lpi, 0.0);
    };
    try {
        return tail_integral(f, n, z, 0.0, cfg);
    } catch (const QuadratureDiverged&) {
        IntegralVerdict v;
        v.classification = Classification::divergent;
        v.infinite = true;
        v.value = std::numeric_limits<double>::infinity();
        return v;
    }
}


/// p-localization integrals at several p for one z.
inline std::vector<IntegralVerdict> p_localization_profile(const OperatorSpec& op, const CPoint& z, const std::vector<double>& ps,
                                                           const QuadratureConfig& cfg = {}) {
    for (double p : ps)
        if (!(p > 0)) throw ConfigError("p must be positive");
    op.validate();
    if (op.family == Family::convolution && op.n == 1 && !gaussian_envelope(op, z))
        return detail::convolution_plocal(op, z, ps, cfg);
    std::vector<IntegralVerdict> out;
    for (double p : ps) out.push_back(p_localization_integral(op, z, p, cfg));
    return out;
}

/// Left side: int |U_z T U_z 1|^p dmu with U_z T U_z 1 (w) = k_z(w) (T k_z)(z - w).
inline IntegralVerdict p_localization_lhs(const OperatorSpec& op, const CPoint& z, double p, const QuadratureConfig& cfg = {}) {
    op.validate();
    const int n = op.n;
    CPoint center = CPoint::zero(n);
    if (auto env = gaussian_envelope(op, z)) {
        const double q = p / 2;
        center = z - (q * env->m - (q - 1) * z);
    }
    const double lpi = -n * std::log(std::numbers::pi);
    return gauss_weighted_integral(
        [&](const CPoint& w) {
            // (T^* k_z)(zeta) = <T^* k_z, k_zeta> e^{|zeta|^2 / 2}
            LogComplex tk = op.adjoint ? pairing(op, z, z - w, cfg).value * LogComplex(0.5 * dist2(z, w), 0.0)
                                       : apply_to_kernel(op, z, z - w, cfg);
            LogComplex u = normalized_kernel(z, w) * tk;
            // weight e^{-|w - center|^2} traded for the Gaussian of dmu
            return LogComplex(p * u.log_mag + lpi + dist2(w, center) - w.norm2(), 0.0);
        },
        n, -1.0, center, cfg);
}

/// Rays used for z-sweeps: S_phi depends on z only through Im z.
inline std::vector<CPoint> sweep_rays(const OperatorSpec& op) {
    if (op.family == Family::convolution && op.n == 1) return {CPoint::scalar({0, 1}), CPoint::scalar({0, -1})};
    return default_rays(op.n);
}

/// sup_z of the p-localization integral over rays x ladder.
inline SupVerdict p_localization_sup(const OperatorSpec& op, double p, std::vector<CPoint> rays = {},
                                     std::vector<double> ladder = {}, const QuadratureConfig& cfg = {}) {
    if (rays.empty()) rays = sweep_rays(op);
    if (ladder.empty()) ladder = cfg.radius_ladder;
    return classify_sup_over_rays(
        [&](const CPoint& z) {
            IntegralVerdict v = p_localization_integral(op, z, p, cfg);
            if (v.classification == Classification::divergent) return std::numeric_limits<double>::infinity();
            return v.result.log_mag;
        },
        op.n, rays, ladder);
}

// ---------------------------------------------------------------------------
// Weak localization

/// int_{|w - z| >= r} |<T k_z, k_w>| dV(w).
namespace detail {

inline double envelope_tail(const GaussianEnvelope& env, const CPoint& z, double r) {
    // amp (2 pi)^n P(noncentral chi^2_{2n}(lambda) >= r^2)
    const int n = z.n;
    double lambda = dist2(env.m, z);
    double q;
    if (r == 0.0)
        q = 1.0;
    else if (lambda < 1e-14)
        q = boost::math::cdf(boost::math::complement(boost::math::chi_squared_distribution<double>(2.0 * n), r * r));
    else
        q = boost::math::cdf(
            boost::math::complement(boost::math::non_central_chi_squared_distribution<double>(2.0 * n, lambda), r * r));
    return std::exp(env.log_amp + n * std::log(2.0 * std::numbers::pi)) * q;
}

/// Tail of int_{|s| >= a} h over a panel table with cumulative sums from the top.
struct CumulativeTail {
    std::vector<double> breaks;  // ascending
    std::vector<double> panel;   // panel[j] = int over [breaks[j], breaks[j+1]]
    std::vector<double> above;   // above[j] = int over [breaks[j], inf)

    void finish() {
        above.assign(breaks.size(), 0.0);
        for (std::size_t j = panel.size(); j-- > 0;) above[j] = above[j + 1] + panel[j];
    }
    double at(double a) const {
        if (a <= breaks.front()) return above.front();
        if (a >= breaks.back()) return 0.0;
        std::size_t j = std::upper_bound(breaks.begin(), breaks.end(), a) - breaks.begin() - 1;
        if (a == breaks[j]) return above[j];
        // log-linear in log s inside a geometric panel
        double lo = above[j], hi = above[j + 1];
        double f = std::log(a / breaks[j]) / std::log(breaks[j + 1] / breaks[j]);
        if (hi > 0 && lo > 0) return std::exp(std::log(lo) + f * (std::log(hi) - std::log(lo)));
        return lo + f * (hi - lo);
    }
};

/// Strip rule for S_phi, n = 1: |<T k_z, k_{z+u}>| depends on u = s + it and Im z only.
inline std::vector<double> convolution_tail_profile(const OperatorSpec& op, const CPoint& z, const std::vector<double>& radii,
                                                    const QuadratureConfig& cfg) {
    constexpr double T = 9.0, S_fine = 16.0, S_max = 1e6, ratio = 1.2;
    const Rule& gl = gauss_legendre(8);
    const Rule& gc = gauss_legendre(6);
    std::vector<double> tb;
    for (double t = -T; t <= T + 1e-12; t += 1.5) tb.push_back(t);
    for (double r : radii)
        if (r > 0 && r < T) {
            tb.push_back(r);
            tb.push_back(-r);
        }
    std::sort(tb.begin(), tb.end());
    tb.erase(std::unique(tb.begin(), tb.end(), [](double a, double b) { return std::abs(a - b) < 1e-12; }), tb.end());
    std::vector<std::pair<double, double>> tn;  // (t, weight)
    for (std::size_t j = 0; j + 1 < tb.size(); ++j) {
        double h = 0.5 * (tb[j + 1] - tb[j]), c = 0.5 * (tb[j + 1] + tb[j]);
        for (std::size_t i = 0; i < gc.x.size(); ++i) tn.emplace_back(c + h * gc.x[i], h * gc.w[i]);
    }
    std::vector<double> base;
    for (double s = 0; s < S_fine; s += 1.0) base.push_back(s);
    for (double s = S_fine; s < S_max; s *= ratio) base.push_back(s);
    base.push_back(S_max);

    auto rows = parallel_map<std::vector<double>>(tn.size(), [&](std::size_t k) {
        const double t = tn[k].first;
        CumulativeTail ct;
        ct.breaks = base;
        for (double r : radii) {
            double a = std::sqrt(std::max(r * r - t * t, 0.0));
            if (a > 0 && a < S_fine) ct.breaks.push_back(a);
        }
        std::sort(ct.breaks.begin(), ct.breaks.end());
        ct.breaks.erase(std::unique(ct.breaks.begin(), ct.breaks.end()), ct.breaks.end());
        for (std::size_t j = 0; j + 1 < ct.breaks.size(); ++j) {
            double h = 0.5 * (ct.breaks[j + 1] - ct.breaks[j]), c = 0.5 * (ct.breaks[j + 1] + ct.breaks[j]);
            const Rule& g = ct.breaks[j] < S_fine ? gl : gc;
            double acc = 0.0;
            for (std::size_t i = 0; i < g.x.size(); ++i) {
                double s = c + h * g.x[i];
                for (double sg : {1.0, -1.0}) {
                    CPoint w = z + CPoint::scalar({sg * s, t});
                    acc += h * g.w[i] * std::exp(pairing(op, z, w, cfg).value.log_mag);
                }
            }
            ct.panel.push_back(acc);
        }
        ct.finish();
        std::vector<double> out;
        for (double r : radii) out.push_back(ct.at(std::sqrt(std::max(r * r - t * t, 0.0))));
        return out;
    });
    std::vector<double> tails(radii.size(), 0.0);
    for (std::size_t k = 0; k < tn.size(); ++k)
        for (std::size_t i = 0; i < radii.size(); ++i) tails[i] += tn[k].second * rows[k][i];
    return tails;
}

/// Polar rule about z (n = 1): radial Gauss-Legendre panels, periodic trapezoid in angle.
inline std::vector<double> polar_tail_profile(const OperatorSpec& op, const CPoint& z, const std::vector<double>& radii,
                                              const QuadratureConfig& cfg) {
    const Rule& gl = gauss_legendre(8);
    const double s_cap = 1e4;
    std::vector<double> shell_breaks{0.0};
    std::vector<double> shells;
    double total = 0.0, s = 0.0;
    int quiet = 0;
    auto next_break = [&](double from) {
        double b = std::floor(from) + 1.0;
        for (double r : radii)
            if (r > from + 1e-12 && r < b) b = r;
        return b;
    };
    while (s < s_cap) {
        double b = next_break(s);
        double h = 0.5 * (b - s), c = 0.5 * (b + s);
        std::vector<double> nodes(gl.x.size());
        for (std::size_t i = 0; i < gl.x.size(); ++i) nodes[i] = c + h * gl.x[i];
        auto vals = parallel_map<double>(nodes.size(), [&](std::size_t i) {
            double rho = nodes[i];
            int M = std::max(64, static_cast<int>(std::ceil(16.0 * rho)));
            double acc = 0.0;
            for (int k = 0; k < M; ++k) {
                CPoint w = z + CPoint::scalar(std::polar(rho, 2.0 * std::numbers::pi * k / M));
                acc += std::exp(pairing(op, z, w, cfg).value.log_mag);
            }
            return acc * 2.0 * std::numbers::pi / M * rho;
        });
        double shell = 0.0;
        for (std::size_t i = 0; i < nodes.size(); ++i) shell += h * gl.w[i] * vals[i];
        shells.push_back(shell);
        shell_breaks.push_back(b);
        total += shell;
        s = b;
        quiet = shell <= 1e-17 * total ? quiet + 1 : 0;
        if (s >= 8.0 && quiet >= 3) break;
    }
    std::vector<double> tails;
    for (double r : radii) {
        double acc = 0.0;
        for (std::size_t j = 0; j < shells.size(); ++j)
            if (shell_breaks[j] >= r - 1e-12) acc += shells[j];
        tails.push_back(acc);
    }
    return tails;
}

}  // namespace detail

/// int_{|w - z| >= r} |<T k_z, k_w>| dV(w) at every radius in radii.
inline std::vector<double> wl_tail_profile(const OperatorSpec& op, const CPoint& z, const std::vector<double>& radii,
                                           const QuadratureConfig& cfg = {}) {
    for (double r : radii)
        if (!(r >= 0)) throw ConfigError("tail radius must be non-negative");
    op.validate();
    CPoint::check(z, CPoint::zero(op.n));
    std::vector<double> out;
    if (auto env = gaussian_envelope(op, z)) {
        for (double r : radii) out.push_back(detail::envelope_tail(*env, z, r));
        return out;
    }
    if (op.n == 1 && op.family == Family::convolution) return detail::convolution_tail_profile(op, z, radii, cfg);
    if (op.n == 1) return detail::polar_tail_profile(op, z, radii, cfg);
    for (double r : radii) {
        IntegralVerdict v = tail_integral(
            [&](const CPoint& w) { return LogComplex(pairing(op, z, w, cfg).value.log_mag, 0.0); }, op.n, z, r, cfg);
        out.push_back(v.classification == Classification::divergent ? std::numeric_limits<double>::infinity() : v.value);
    }
    return out;
}

inline double wl_tail(const OperatorSpec& op, const CPoint& z, double r, const QuadratureConfig& cfg = {}) {
    return wl_tail_profile(op, z, {r}, cfg).front();
}

enum class WLVerdict { WL, not_WL, inconclusive };

inline const char* to_string(WLVerdict v) {
    switch (v) {
        case WLVerdict::WL: return "WL";
        case WLVerdict::not_WL: return "not_WL";
        default: return "inconclusive";
    }
}

struct WLCurve {
    std::vector<double> r;
    std::vector<double> sup_tail;
    std::vector<CPoint> argmax;
};

struct WLProbe {
    WLVerdict verdict = WLVerdict::inconclusive;
    WLCurve forward, adjoint;
};

namespace detail {

/// z samples at tail radius r: {0} and rays x (ladder, 2 max ladder); closed-form families
/// also get r + max ladder and 2r + max ladder so that far tails are seen.
inline std::vector<CPoint> wl_samples(const OperatorSpec& op, double r, const std::vector<CPoint>& rays,
                                      const std::vector<double>& ladder) {
    // S_phi depends on z through Im z only; a short set keeps the strip rule affordable
    std::vector<double> radii = op.family == Family::convolution && op.n == 1 ? std::vector<double>{2, 6} : ladder;
    const double rmax = ladder.empty() ? 0.0 : ladder.back();
    if (!(op.family == Family::convolution && op.n == 1)) radii.push_back(2 * rmax);
    if (gaussian_envelope(op, CPoint::zero(op.n))) {
        radii.push_back(r + rmax);
        radii.push_back(2 * r + rmax);
    }
    std::vector<CPoint> zs{CPoint::zero(op.n)};
    for (const auto& d : rays)
        for (double R : radii) zs.push_back(R * d);
    return zs;
}

inline WLVerdict classify_curve(const WLCurve& c, const LabConfig& cfg, bool& vanish, bool& persist) {
    const double first = c.sup_tail.front(), last = c.sup_tail.back();
    bool mono = true;
    for (std::size_t i = 1; i < c.sup_tail.size(); ++i)
        mono = mono && c.sup_tail[i] <= c.sup_tail[i - 1] * (1 + 1e-9) + 1e-300;
    vanish = std::isfinite(first) && mono && last < cfg.wl_vanish_ratio * first;
    persist = !std::isfinite(last) || last >= cfg.wl_persist_ratio * first;
    return vanish ? WLVerdict::WL : persist ? WLVerdict::not_WL : WLVerdict::inconclusive;
}

}  // namespace detail

inline WLCurve wl_curve(const OperatorSpec& op, const LabConfig& cfg, std::vector<CPoint> rays = {}) {
    if (rays.empty()) rays = sweep_rays(op);
    WLCurve c;
    c.r = cfg.wl_r_ladder;
    if (gaussian_envelope(op, CPoint::zero(op.n))) {
        for (double r : c.r) {
            auto zs = detail::wl_samples(op, r, rays, cfg.quad.radius_ladder);
            auto vals = parallel_map<double>(zs.size(), [&](std::size_t k) { return wl_tail(op, zs[k], r, cfg.quad); });
            std::size_t best = std::max_element(vals.begin(), vals.end()) - vals.begin();
            c.sup_tail.push_back(vals[best]);
            c.argmax.push_back(zs[best]);
        }
        return c;
    }
    auto zs = detail::wl_samples(op, 0.0, rays, cfg.quad.radius_ladder);
    std::vector<std::vector<double>> prof;
    for (const auto& z : zs) prof.push_back(wl_tail_profile(op, z, c.r, cfg.quad));
    for (std::size_t i = 0; i < c.r.size(); ++i) {
        std::size_t best = 0;
        for (std::size_t k = 1; k < zs.size(); ++k)
            if (prof[k][i] > prof[best][i]) best = k;
        c.sup_tail.push_back(prof[best][i]);
        c.argmax.push_back(zs[best]);
    }
    return c;
}

/// WL needs both T and T^* curves to vanish; not_WL if either stays above the persist ratio.
inline WLProbe wl_probe(const OperatorSpec& op, const LabConfig& cfg = {}, std::vector<CPoint> rays = {}) {
    cfg.validate();
    WLProbe out;
    out.forward = wl_curve(op, cfg, rays);
    out.adjoint = wl_curve(adjoint_spec(op), cfg, rays);
    bool v1, p1, v2, p2;
    detail::classify_curve(out.forward, cfg, v1, p1);
    detail::classify_curve(out.adjoint, cfg, v2, p2);
    if (v1 && v2)
        out.verdict = WLVerdict::WL;
    else if (p1 || p2)
        out.verdict = WLVerdict::not_WL;
    return out;
}

// ---------------------------------------------------------------------------
// Decay fits

struct DecayFit {
    double rate = 0.0;  ///< beta-hat or epsilon-hat
    double log_C = 0.0;
    double residual = 0.0;
    bool pass = false;
    std::vector<double> d;
    std::vector<double> log_M;
    double C() const { return std::exp(log_C); }
};

namespace detail {

/// sup over z of log |<T k_z, k_{z+v}>| = log_amp(z) - |z + v - m(z)|^2 / 2, a real quadratic in z.
/// +inf when unbounded above; nullopt without a Gaussian envelope.
inline std::optional<double> envelope_sup_log(const OperatorSpec& op, const CPoint& v) {
    const int n = op.n, d = 2 * n;
    if (!gaussian_envelope(op, CPoint::zero(n))) return std::nullopt;
    auto phi = [&](const Eigen::VectorXd& x) {
        CPoint z(n);
        for (int j = 0; j < n; ++j) z[j] = cplx(x(2 * j), x(2 * j + 1));
        GaussianEnvelope e = *gaussian_envelope(op, z);
        return e.log_amp - 0.5 * dist2(z + v, e.m);
    };
    // central differences are exact for quadratics up to rounding
    const Eigen::VectorXd o = Eigen::VectorXd::Zero(d);
    const double c = phi(o);
    Eigen::VectorXd g(d);
    Eigen::MatrixXd H(d, d);
    auto e = [&](int i) { return Eigen::VectorXd::Unit(d, i); };
    for (int i = 0; i < d; ++i) {
        g(i) = 0.5 * (phi(e(i)) - phi(-e(i)));
        H(i, i) = phi(e(i)) + phi(-e(i)) - 2 * c;
        for (int j = 0; j < i; ++j)
            H(i, j) = H(j, i) = 0.25 * (phi(e(i) + e(j)) - phi(e(i) - e(j)) - phi(e(j) - e(i)) + phi(-e(i) - e(j)));
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
    const double tol = 1e-9 * std::max(1.0, H.cwiseAbs().maxCoeff());
    const Eigen::VectorXd gt = es.eigenvectors().transpose() * g;
    double best = c;
    for (int k = 0; k < d; ++k) {
        const double lam = es.eigenvalues()(k);
        if (lam < -tol)
            best += gt(k) * gt(k) / (-2 * lam);
        else if (lam > tol || std::abs(gt(k)) > 1e-9 * std::max(1.0, g.cwiseAbs().maxCoeff()))
            return std::numeric_limits<double>::infinity();
    }
    return best;
}

}  // namespace detail

/// log M(d) over the grid; Gaussian-envelope families also take the exact sup over all z.
inline std::vector<double> decay_profile(const OperatorSpec& op, const FitGrid& g, const QuadratureConfig& cfg = {}) {
    op.validate();
    const std::size_t nb = g.bases.size(), nu = g.directions.size();
    return parallel_map<double>(g.distances.size(), [&](std::size_t i) {
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t u = 0; u < nu; ++u)
            if (auto s = detail::envelope_sup_log(op, g.distances[i] * g.directions[u])) best = std::max(best, *s);
        for (std::size_t b = 0; b < nb; ++b)
            for (std::size_t u = 0; u < nu; ++u) {
                const CPoint& z = g.bases[b];
                double v = pairing(op, z, z + g.distances[i] * g.directions[u], cfg).value.log_mag;
                if (std::isnan(v)) throw NonFiniteSample("pairing magnitude is NaN");
                best = std::max(best, v);
            }
        return best;
    });
}

namespace detail {

/// Least-squares slope and RMS residual of y on x over [lo, hi).
inline std::pair<double, double> ls_slope(const std::vector<double>& x, const std::vector<double>& y, std::size_t lo,
                                          std::size_t hi) {
    const double m = static_cast<double>(hi - lo);
    double sx = 0, sy = 0;
    for (std::size_t i = lo; i < hi; ++i) {
        sx += x[i];
        sy += y[i];
    }
    sx /= m;
    sy /= m;
    double sxx = 0, sxy = 0;
    for (std::size_t i = lo; i < hi; ++i) {
        sxx += (x[i] - sx) * (x[i] - sx);
        sxy += (x[i] - sx) * (y[i] - sy);
    }
    double s = sxy / sxx, res = 0;
    for (std::size_t i = lo; i < hi; ++i) res += std::pow(y[i] - sy - s * (x[i] - sx), 2);
    return {s, std::sqrt(res / m)};
}

inline void check_profile(const std::vector<double>& d, const std::vector<double>& logM) {
    if (d.size() < 4 || d.size() != logM.size()) throw ConfigError("decay fit needs at least four distances");
    for (double v : d)
        if (!(v > 0)) throw ConfigError("decay fit distances must be positive");
}

/// Unbounded pairing at some distance: no decay, infinite constant.
inline bool unbounded_profile(const std::vector<double>& logM, DecayFit& f) {
    for (double v : logM)
        if (v == std::numeric_limits<double>::infinity()) {
            f.rate = 0.0;
            f.log_C = v;
            f.pass = false;
            return true;
        }
    return false;
}

}  // namespace detail

/// Polynomial decay: beta-hat = -slope of log M against log(1 + d) over the top half of the grid.
inline DecayFit xz_fit_profile(const std::vector<double>& d, const std::vector<double>& logM, int n, double margin) {
    detail::check_profile(d, logM);
    DecayFit f{.d = d, .log_M = logM};
    if (detail::unbounded_profile(logM, f)) return f;
    // slope against log d (unbiased for power tails); the bound itself uses log(1 + d)
    std::vector<double> x, lx;
    for (double v : d) {
        x.push_back(std::log1p(v));
        lx.push_back(std::log(v));
    }
    const std::size_t lo = d.size() / 2;
    if (std::isinf(logM.back()) && logM.back() < 0) {
        f.rate = std::numeric_limits<double>::infinity();
    } else {
        auto [s, res] = detail::ls_slope(lx, logM, lo, d.size());
        f.rate = -s;
        f.residual = res;
    }
    f.log_C = -std::numeric_limits<double>::infinity();
    const double b = std::isfinite(f.rate) ? f.rate : 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) f.log_C = std::max(f.log_C, logM[i] + b * x[i]);
    f.pass = f.rate > 2 * n + margin && std::isfinite(f.log_C);
    return f;
}

/// Gaussian decay: epsilon-hat = min over the two quarters of the top half of -slope of log M against d^2.
inline DecayFit sl_fit_profile(const std::vector<double>& d, const std::vector<double>& logM, double min_eps) {
    detail::check_profile(d, logM);
    DecayFit f{.d = d, .log_M = logM};
    if (detail::unbounded_profile(logM, f)) return f;
    std::vector<double> x;
    for (double v : d) x.push_back(v * v);
    const std::size_t lo = d.size() / 2, mid = lo + (d.size() - lo) / 2;
    if (std::isinf(logM.back()) && logM.back() < 0) {
        f.rate = std::numeric_limits<double>::infinity();
    } else {
        auto [s1, r1] = detail::ls_slope(x, logM, lo, mid);
        auto [s2, r2] = detail::ls_slope(x, logM, mid, d.size());
        f.rate = std::min(-s1, -s2);
        f.residual = std::max(r1, r2);
    }
    f.log_C = -std::numeric_limits<double>::infinity();
    const double e = std::isfinite(f.rate) ? f.rate : 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) f.log_C = std::max(f.log_C, logM[i] + e * x[i]);
    f.pass = f.rate >= min_eps && std::isfinite(f.log_C);
    return f;
}

inline DecayFit xz_decay_fit(const OperatorSpec& op, const FitGrid& g, double margin = 0.25, const QuadratureConfig& cfg = {}) {
    return xz_fit_profile(g.distances, decay_profile(op, g, cfg), op.n, margin);
}

inline DecayFit sl_gaussian_fit(const OperatorSpec& op, const FitGrid& g, double min_eps = 0.02,
                                const QuadratureConfig& cfg = {}) {
    return sl_fit_profile(g.distances, decay_profile(op, g, cfg), min_eps);
}

// ---------------------------------------------------------------------------
// Report

struct PResult {
    double p = 0.0;
    SupKind kind = SupKind::inconclusive;
    SupVerdict evidence;
};

/// p_localization_sup over a p grid, sampling each z once for all p.
inline std::vector<PResult> p_localization_sweep(const OperatorSpec& op, const std::vector<double>& ps,
                                                 const QuadratureConfig& cfg = {}, std::vector<std::string>* notes = nullptr) {
    const auto rays = sweep_rays(op);
    const auto& ladder = cfg.radius_ladder;
    std::vector<CPoint> zs;
    for (const auto& d : rays) {
        zs.push_back(CPoint::zero(op.n));
        for (double R : ladder) zs.push_back(R * d);
    }
    std::vector<PResult> out;
    std::vector<std::vector<IntegralVerdict>> prof;
    try {
        prof = parallel_map<std::vector<IntegralVerdict>>(zs.size(), [&](std::size_t k) { return p_localization_profile(op, zs[k], ps, cfg); });
    } catch (const LabError& e) {
        if (notes) notes->push_back(std::string("p-localization sweep: ") + e.what());
        for (double p : ps) out.push_back({p, SupKind::inconclusive, {}});
        return out;
    }
    for (std::size_t q = 0; q < ps.size(); ++q) {
        auto log_q = [&](const CPoint& z) {
            for (std::size_t k = 0; k < zs.size(); ++k)
                if (dist2(zs[k], z) == 0.0) {
                    const IntegralVerdict& v = prof[k][q];
                    if (v.classification == Classification::divergent) return std::numeric_limits<double>::infinity();
                    return v.result.log_mag;
                }
            throw ConfigError("sweep sample missing");
        };
        SupVerdict s = classify_sup_over_rays(log_q, op.n, rays, ladder);
        out.push_back({ps[q], s.kind, std::move(s)});
    }
    return out;
}

struct LocalizationReport {
    OperatorSpec op;
    std::vector<PResult> p_results;
    WLProbe wl;
    DecayFit xz, sl;
    VanishProbe berezin_probe;
    std::vector<std::string> notes;
    bool invariants_ok = true;
};

/// SL => XZ => WL on a finished report.
inline bool inclusion_chain_holds(const LocalizationReport& r) {
    if (r.sl.pass && !r.xz.pass) return false;
    if (r.xz.pass && r.wl.verdict == WLVerdict::not_WL) return false;
    return true;
}

/// wl: a probe already computed for op with cfg, reused instead of recomputed.
inline LocalizationReport build_report(const OperatorSpec& op, const LabConfig& cfg = {}, const WLProbe* wl = nullptr) {
    cfg.validate();
    op.validate();
    if (op.family == Family::toeplitz && op.measure.kind == "density" && op.measure.density != "constant") {
        CarlesonReport c = carleson_check(op.measure, 1.0, cfg.quad);
        if (c.verdict == Tri::fail) throw UnboundedOperator("measure fails the Fock-Carleson check");
    }
    LocalizationReport rep;
    rep.op = op;
    rep.notes = {"p-localization integral is taken in w over C^n",
                 "p-localization identity used without an extra factor 2",
                 "dilation closed form used without a 1/pi prefactor"};
    rep.p_results = p_localization_sweep(op, cfg.p_grid, cfg.quad, &rep.notes);
    rep.wl = wl ? *wl : wl_probe(op, cfg);
    FitGrid g = cfg.fit_grid(op.n);
    std::vector<double> logM = decay_profile(op, g, cfg.quad);
    rep.xz = xz_fit_profile(g.distances, logM, op.n, cfg.xz_margin);
    rep.sl = sl_fit_profile(g.distances, logM, cfg.sl_min);
    try {
        rep.berezin_probe = berezin_vanish_probe(op, {}, {}, cfg.quad);
    } catch (const LabError& e) {
        rep.notes.push_back(std::string("berezin probe: ") + e.what());
    }
    rep.invariants_ok = inclusion_chain_holds(rep);
    if (!rep.invariants_ok) rep.notes.push_back("inclusion chain SL => XZ => WL violated");
    return rep;
}

}  // namespace focklab
