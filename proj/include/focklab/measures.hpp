#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include "cpoint.hpp"
#include "errors.hpp"
#include "fock.hpp"
#include "log_complex.hpp"
#include "quadrature.hpp"

namespace focklab {

/**
 * @brief Measure nu on C (n = 1) or C^n for point masses.
 *
 * discrete: weighted point masses.
 * lattice: unit masses times weight on spacing * (Z + iZ).
 * density: d nu = h pi^{-n} dV; h is constant (value) or value e^{kappa |w|}.
 */
struct MeasureSpec {
    std::string kind = "density";
    std::vector<CPoint> points;
    std::vector<cplx> weights;
    double spacing = 1.0;
    cplx value{1.0, 0.0};
    std::string density = "constant";  ///< constant | exp_abs
    double kappa = 0.0;
    int n = 1;

    static MeasureSpec dirac(const CPoint& at, cplx w = 1.0) {
        MeasureSpec m;
        m.kind = "discrete";
        m.points = {at};
        m.weights = {w};
        m.n = at.n;
        return m;
    }
    static MeasureSpec lattice(double h = 1.0, cplx w = 1.0) {
        MeasureSpec m;
        m.kind = "lattice";
        m.spacing = h;
        m.value = w;
        return m;
    }
    static MeasureSpec lebesgue(int dim = 1, cplx c = 1.0) {
        MeasureSpec m;
        m.value = c;
        m.n = dim;
        return m;
    }
    static MeasureSpec exp_abs(double k, cplx c = 1.0) {
        MeasureSpec m;
        m.density = "exp_abs";
        m.kappa = k;
        m.value = c;
        return m;
    }

    void validate() const {
        if (kind == "discrete") {
            if (points.size() != weights.size()) throw SpecError("points and weights differ in length");
            for (const auto& p : points)
                if (p.n != n) throw DimMismatch("point mass dimension mismatch");
        } else if (kind == "lattice") {
            if (!(spacing > 0)) throw SpecError("lattice spacing must be positive");
            if (n != 1) throw DimMismatch("lattice measures are one-dimensional");
        } else if (kind == "density") {
            if (density != "constant" && density != "exp_abs") throw SpecError("unknown density: " + density);
            if (density == "exp_abs" && n != 1) throw DimMismatch("exp_abs density is one-dimensional");
        } else {
            throw SpecError("unknown measure kind: " + kind);
        }
    }

    /// h(w) for densities.
    cplx h(const CPoint& w) const { return density == "constant" ? value : value * std::exp(kappa * w.norm()); }

    /// Lattice points within distance rad of c.
    std::vector<CPoint> lattice_points(cplx c, double rad) const {
        std::vector<CPoint> out;
        long i0 = static_cast<long>(std::floor((c.real() - rad) / spacing));
        long i1 = static_cast<long>(std::ceil((c.real() + rad) / spacing));
        long j0 = static_cast<long>(std::floor((c.imag() - rad) / spacing));
        long j1 = static_cast<long>(std::ceil((c.imag() + rad) / spacing));
        for (long i = i0; i <= i1; ++i)
            for (long j = j0; j <= j1; ++j) {
                cplx p(i * spacing, j * spacing);
                if (std::abs(p - c) <= rad) out.push_back(CPoint::scalar(p));
            }
        return out;
    }
};

/// int F(x) e^{-|x|^2} d nu(x) where F is supplied as log-magnitude-friendly LogComplex.
/// center: point where |F(x)| e^{-|x|^2} peaks (Gaussian profile of unit width).
inline LogComplex measure_gauss_integral(const MeasureSpec& nu, const std::function<LogComplex(const CPoint&)>& F,
                                         const CPoint& center, const QuadratureConfig& cfg = {},
                                         double* rel_err = nullptr) {
    if (rel_err) *rel_err = 0.0;
    nu.validate();
    if (center.n != nu.n) throw DimMismatch("measure dimension mismatch");
    auto weight = [](const CPoint& x) { return LogComplex(-x.norm2(), 0.0); };
    if (nu.kind == "discrete") {
        LogSum s;
        for (std::size_t i = 0; i < nu.points.size(); ++i)
            s.add(F(nu.points[i]) * weight(nu.points[i]) * LogComplex::from(nu.weights[i]));
        return s.value();
    }
    if (nu.kind == "lattice") {
        LogSum s;
        for (const auto& p : nu.lattice_points(center[0], 6.2)) s.add(F(p) * weight(p));
        return s.value() * LogComplex::from(nu.value);
    }
    const double lpi = -nu.n * std::log(std::numbers::pi);
    IntegralVerdict v = gauss_weighted_integral(
        [&](const CPoint& x) {
            return F(x) * LogComplex(-x.norm2() + dist2(x, center) + lpi, 0.0) * LogComplex::from(nu.h(x));
        },
        nu.n, -1.0, center, cfg);
    if (v.classification == Classification::divergent) throw QuadratureDiverged("measure integral diverged");
    if (rel_err) *rel_err = v.error_estimate / std::max(v.result.abs(), 1e-300);
    return v.result;
}

/// <T_nu k_u, k_v> = int k_u(w) conj(k_v(w)) e^{-|w|^2} d nu(w).
inline LogComplex toeplitz_pairing(const MeasureSpec& nu, const CPoint& u, const CPoint& v, const QuadratureConfig& cfg = {},
                                   double* rel_err = nullptr) {
    CPoint::check(u, v);
    if (nu.kind == "lattice") {
        // plain double sum after pulling out the peak exponent -|u-v|^2/4
        if (rel_err) *rel_err = 0.0;
        nu.validate();
        const CPoint c = 0.5 * (u + v);
        const double shift = -0.25 * dist2(u, v);
        const double base = -0.5 * (u.norm2() + v.norm2()) - shift;
        cplx acc = 0.0;
        for (const auto& x : nu.lattice_points(c[0], 6.2))
            acc += std::exp(inner(x, u) + std::conj(inner(x, v)) + base - x.norm2());
        return LogComplex(shift, 0.0) * LogComplex::from(acc * nu.value);
    }
    return measure_gauss_integral(
        nu, [&](const CPoint& w) { return normalized_kernel(u, w) * normalized_kernel(v, w).conj(); }, 0.5 * (u + v), cfg,
        rel_err);
}

/// (T_nu f)(zeta) for f = k_z.
inline LogComplex toeplitz_apply_kernel(const MeasureSpec& nu, const CPoint& z, const CPoint& zeta,
                                        const QuadratureConfig& cfg = {}) {
    return measure_gauss_integral(
        nu, [&](const CPoint& x) { return kernel(zeta, x).conj() * normalized_kernel(z, x); }, 0.5 * (zeta + z), cfg);
}

// ---------------------------------------------------------------------------

struct CovarianceReport {
    double max_abs_deviation = 0.0;
    std::vector<CPoint> w_samples;
};

/**
 * @brief Compares U_z T_nu U_z 1 (w) with T_{nu o phi_z} 1 (w), phi_z(x) = z - x.
 *
 * Left: k_z(w) (T_nu k_z)(z - w). Right: int conj(K_w(z - x)) e^{-|z - x|^2} d nu(x).
 */
inline CovarianceReport toeplitz_covariance_check(const MeasureSpec& nu, const CPoint& z, const std::vector<CPoint>& ws,
                                                  const QuadratureConfig& cfg = {}) {
    CovarianceReport rep;
    rep.w_samples = ws;
    for (const auto& w : ws) {
        LogComplex lhs = normalized_kernel(z, w) * toeplitz_apply_kernel(nu, z, z - w, cfg);
        // e^{-|z-x|^2} = e^{-|x|^2} e^{2 Re<x,z> - |z|^2}
        LogComplex rhs = measure_gauss_integral(
            nu,
            [&](const CPoint& x) {
                return kernel(w, z - x).conj() * LogComplex(2.0 * inner(x, z).real() - z.norm2(), 0.0);
            },
            z - 0.5 * w, cfg);
        rep.max_abs_deviation = std::max(rep.max_abs_deviation, (lhs - rhs).abs());
    }
    return rep;
}

// ---------------------------------------------------------------------------

enum class Tri { pass, fail, inconclusive };

inline const char* to_string(Tri t) {
    switch (t) {
        case Tri::pass: return "pass";
        case Tri::fail: return "fail";
        default: return "inconclusive";
    }
}

/// |nu|(B(c, r)), with densities measured against |h| dV.
inline double ball_mass(const MeasureSpec& nu, const CPoint& c, double r) {
    nu.validate();
    if (nu.kind == "discrete") {
        double s = 0.0;
        for (std::size_t i = 0; i < nu.points.size(); ++i)
            if (std::sqrt(dist2(nu.points[i], c)) <= r) s += std::abs(nu.weights[i]);
        return s;
    }
    if (nu.kind == "lattice") return std::abs(nu.value) * static_cast<double>(nu.lattice_points(c[0], r).size());
    if (nu.density == "constant") {
        // volume of the ball of radius r in R^{2n}
        double vol = std::pow(std::numbers::pi, nu.n) * std::pow(r, 2 * nu.n) / std::tgamma(nu.n + 1.0);
        return std::abs(nu.value) * vol;
    }
    // polar Gauss-Legendre over the disc
    const Rule& gr = gauss_legendre(24);
    const int nth = 64;
    double s = 0.0;
    for (std::size_t i = 0; i < gr.x.size(); ++i) {
        double rho = 0.5 * r * (gr.x[i] + 1.0), wr = 0.5 * r * gr.w[i];
        for (int k = 0; k < nth; ++k) {
            cplx p = c[0] + std::polar(rho, 2.0 * std::numbers::pi * k / nth);
            s += wr * rho * (2.0 * std::numbers::pi / nth) * std::abs(nu.h(CPoint::scalar(p)));
        }
    }
    return s;
}

struct CarlesonReport {
    Tri verdict = Tri::inconclusive;
    double sup_estimate = 0.0;
    CPoint witness;
    std::vector<std::pair<CPoint, double>> samples;
};

/**
 * @brief Samples |nu|(B(z, r)) over rays x radii.
 *
 * fail: on some ray the mass rises at each of the last three radii by a total
 * factor of at least growth. pass: the outer-half maximum is within growth of
 * the inner-half maximum.
 */
inline CarlesonReport carleson_check(const MeasureSpec& nu, double r, const QuadratureConfig& cfg = {},
                                     std::vector<CPoint> rays = {}) {
    if (!(r > 0)) throw ConfigError("Carleson radius must be positive");
    cfg.validate();
    if (rays.empty()) rays = default_rays(nu.n);
    std::vector<double> radii{0.0};
    radii.insert(radii.end(), cfg.radius_ladder.begin(), cfg.radius_ladder.end());
    const std::size_t m = radii.size();
    const double growth = cfg.divergence_growth_factor;
    CarlesonReport rep;
    double inner_max = 0.0, outer_max = 0.0;
    bool fail = false;
    for (const auto& d : rays) {
        std::vector<double> L(m);
        for (std::size_t i = 0; i < m; ++i) {
            CPoint z = radii[i] * d;
            L[i] = ball_mass(nu, z, r);
            rep.samples.emplace_back(z, L[i]);
            if (L[i] > rep.sup_estimate) {
                rep.sup_estimate = L[i];
                rep.witness = z;
            }
            (2 * i < m ? inner_max : outer_max) = std::max(2 * i < m ? inner_max : outer_max, L[i]);
        }
        if (m >= 4 && L[m - 1] > L[m - 2] && L[m - 2] > L[m - 3] && L[m - 3] > L[m - 4] && L[m - 1] >= growth * L[m - 4])
            fail = true;
    }
    if (fail)
        rep.verdict = Tri::fail;
    else if (outer_max <= growth * inner_max)
        rep.verdict = Tri::pass;
    return rep;
}

}  // namespace focklab
